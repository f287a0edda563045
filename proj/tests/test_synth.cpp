#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ctf/synth.hpp"

#include <cmath>

using namespace ctf;

namespace {

// integer-lag cross-correlation between two channels, mean over the overlap
// so shorter windows are not penalized
Index best_lag(const TimeSeriesMatrix& field, Index ch_a, Index ch_b, Index max_lag) {
    double best = -1e300;
    Index arg = 0;
    for (Index lag = 0; lag <= max_lag; ++lag) {
        double acc = 0.0;
        Index count = 0;
        for (Index t = 0; t + lag < field.rows(); ++t, ++count)
            acc += field.values(t, ch_a) * field.values(t + lag, ch_b);
        acc /= static_cast<double>(count);
        if (acc > best) {
            best = acc;
            arg = lag;
        }
    }
    return arg;
}

}  // namespace

TEST_CASE("dispersion relation scalar values") {
    // omega = sqrt(9.81 * 0.1 * tanh(0.1 * 30))
    CHECK(swell_omega(0.1, 9.81, 30.0) == doctest::Approx(0.98800).epsilon(1e-5));
    // deep-water limit: omega^2 -> g*k
    const double k = 1.0, h = 20.0;  // kh = 20
    const double omega2 = std::pow(swell_omega(k, 9.81, h), 2.0);
    CHECK(std::abs(omega2 - 9.81 * k) / (9.81 * k) < 1e-6);
}

TEST_CASE("gen_swell output is normalized and deterministic") {
    SwellConfig cfg;
    cfg.channels = 64;
    cfg.channel_spacing = 40.0;
    cfg.dt = 0.5;
    cfg.steps = 128;
    cfg.modes = {{2.0 * M_PI * 3.0 / (64.0 * 40.0), 1.0, 0.3},
                 {2.0 * M_PI * 7.0 / (64.0 * 40.0), 0.5, 1.1}};
    const TimeSeriesMatrix a = gen_swell(cfg);
    const TimeSeriesMatrix b = gen_swell(cfg);
    CHECK(std::abs(matrix_mean(a)) < 1e-12);
    CHECK(matrix_population_std(a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((a.values - b.values).norm() == 0.0);
}

TEST_CASE("gen_swell rejects Nyquist violations") {
    SwellConfig cfg;
    cfg.channels = 32;
    cfg.steps = 32;
    cfg.dt = 0.5;
    cfg.modes = {{5.0, 1.0, 0.0}};  // omega ~ 7 rad/s, omega*dt > pi
    CHECK_THROWS_WITH_AS(gen_swell(cfg), doctest::Contains("Nyquist"), std::runtime_error);
}

TEST_CASE("single-mode phase speed matches omega/k within two percent") {
    SwellConfig cfg;
    cfg.channels = 128;
    cfg.channel_spacing = 10.0;
    cfg.dt = 0.1;
    cfg.steps = 512;
    cfg.depth = 30.0;
    const double k = 0.1;
    cfg.modes = {{k, 1.0, 0.0}};
    const TimeSeriesMatrix field = gen_swell(cfg);

    const double omega = swell_omega(k, cfg.gravity, cfg.depth);
    // keep the search inside one temporal period; later correlation peaks alias
    const Index max_lag = static_cast<Index>(2.0 * M_PI / (omega * cfg.dt)) - 1;
    const Index span = 6;  // channels apart; true lag must stay below max_lag
    const Index lag = best_lag(field, 0, span, max_lag);
    REQUIRE(lag > 0);
    const double measured_speed =
        (static_cast<double>(span) * cfg.channel_spacing) / (static_cast<double>(lag) * cfg.dt);
    const double expected_speed = omega / k;
    CHECK(std::abs(measured_speed - expected_speed) / expected_speed < 0.02);
}

TEST_CASE("desk swell conserves row variance after normalization") {
    const Preset preset = make_preset("swell-small", 0);
    const TimeSeriesMatrix& field = preset.sources.main;
    Eigen::VectorXd row_var(field.rows());
    for (Index t = 0; t < field.rows(); ++t) {
        const auto row = field.values.row(t);
        const double mu = row.mean();
        row_var(t) = (row.array() - mu).square().mean();
    }
    const double ref = row_var.mean();
    CHECK((row_var.array() - ref).abs().maxCoeff() / ref < 0.01);
}

TEST_CASE("gen_linear_system plants a consistent operator") {
    LinearSystemConfig cfg;
    cfg.dimension = 12;
    cfg.rank = 3;
    cfg.steps = 100;
    cfg.seed = 4;
    cfg.spectrum = {std::polar(0.95, 0.3), std::polar(0.95, -0.3), {0.9, 0.0}};
    const LinearSystem sys = gen_linear_system(cfg);
    REQUIRE(sys.trajectory.rows() == 100);
    REQUIRE(sys.op.rows() == 12);

    // one-step self-consistency
    double worst = 0.0;
    for (Index t = 0; t + 1 < sys.trajectory.rows(); ++t) {
        const Eigen::VectorXd next = sys.op * sys.trajectory.values.row(t).transpose();
        worst = std::max(worst,
                         (next.transpose() - sys.trajectory.values.row(t + 1)).norm());
    }
    CHECK(worst < 1e-12);

    // spectral decay ~ 0.95^t
    const double r0 = sys.trajectory.values.row(0).norm();
    const double r60 = sys.trajectory.values.row(60).norm();
    CHECK(r60 / r0 < std::pow(0.95, 40));
    CHECK(r60 / r0 > std::pow(0.95, 80));
}

TEST_CASE("gen_linear_system validates its spectrum") {
    LinearSystemConfig cfg;
    cfg.dimension = 4;
    cfg.rank = 2;
    cfg.steps = 10;
    cfg.spectrum = {std::polar(0.9, 0.5), {0.8, 0.0}};  // missing conjugate
    CHECK_THROWS_WITH_AS(gen_linear_system(cfg), doctest::Contains("conjugate"), std::runtime_error);
    cfg.spectrum = {std::polar(1.5, 0.5), std::polar(1.5, -0.5)};
    CHECK_THROWS_WITH_AS(gen_linear_system(cfg), doctest::Contains("<= 1"), std::runtime_error);
}

TEST_CASE("pulse arrival time at the antipode halves when the parameter doubles") {
    PulseConfig cfg;
    cfg.sensors = 64;
    cfg.speed = 0.5;
    cfg.width = 3.0;
    cfg.steps = 200;
    cfg.seed = 8;

    auto arrival = [&cfg](double param) {
        const TimeSeriesMatrix field = gen_pulse(cfg, param);
        // the start sensor is seed-derived; find it from the first row
        Index start = 0;
        field.values.row(0).maxCoeff(&start);
        const Index antipode = (start + cfg.sensors / 2) % cfg.sensors;
        Index t_arrive = 0;
        field.values.col(antipode).maxCoeff(&t_arrive);
        return t_arrive;
    };
    const Index t1 = arrival(1.0);
    const Index t2 = arrival(2.0);
    CHECK(t1 == doctest::Approx(64).epsilon(0.05));  // (n/2) / speed
    CHECK(std::abs(static_cast<double>(t2) - static_cast<double>(t1) / 2.0) <= 1.0);
}

TEST_CASE("pulse wraps around the ring without distortion") {
    PulseConfig cfg;
    cfg.sensors = 48;
    cfg.speed = 1.0;
    cfg.width = 4.0;
    cfg.steps = 120;  // several laps
    cfg.seed = 9;
    const TimeSeriesMatrix field = gen_pulse(cfg, 1.0);
    // a clean wrap keeps the per-row peak amplitude constant
    Eigen::VectorXd row_max(field.rows());
    for (Index t = 0; t < field.rows(); ++t) row_max(t) = field.values.row(t).maxCoeff();
    CHECK((row_max.array() - row_max(0)).abs().maxCoeff() < 1e-6);
}

TEST_CASE("pulse family enforces the interpolation/extrapolation ordering") {
    PulseConfig cfg;
    cfg.sensors = 32;
    cfg.steps = 40;
    CHECK_THROWS_WITH_AS(gen_pulse_family(cfg, {1.0, 2.0, 3.0, 5.0, 9.0}),
                         doctest::Contains("interpolation"), std::runtime_error);
    CHECK_THROWS_WITH_AS(gen_pulse_family(cfg, {1.0, 2.0, 3.0, 2.5, 2.9}),
                         doctest::Contains("extrapolation"), std::runtime_error);
    CHECK_THROWS_WITH_AS(gen_pulse_family(cfg, {1.0, 2.0, 3.0, 2.5}),
                         doctest::Contains(">= 5"), std::runtime_error);
    CHECK_NOTHROW(gen_pulse_family(cfg, {1.0, 2.0, 3.0, 2.5, 4.0}));
}

TEST_CASE("presets regenerate bit-identically and carry hidden parameters") {
    for (const std::string name : {"swell-small", "pulse-small", "linear-small"}) {
        const Preset a = make_preset(name, 7);
        const Preset b = make_preset(name, 7);
        CHECK((a.sources.main.values - b.sources.main.values).norm() == 0.0);
        REQUIRE(a.sources.family.size() == 5);
        for (std::size_t i = 0; i < 5; ++i)
            CHECK((a.sources.family[i].values - b.sources.family[i].values).norm() == 0.0);
        CHECK(a.hidden.contains("interpolation"));
        CHECK(a.hidden.contains("extrapolation"));
        CHECK(a.hidden.at("train").size() == 3);
        // a different seed must change the data
        const Preset c = make_preset(name, 8);
        CHECK((a.sources.main.values - c.sources.main.values).norm() > 0.0);
    }
}
