#include "ctf/synth.hpp"

#include <cmath>
#include <stdexcept>

namespace ctf {

namespace {

constexpr double kPi = 3.14159265358979323846;

}  // namespace

double swell_omega(double wavenumber, double gravity, double depth) {
    return std::sqrt(gravity * wavenumber * std::tanh(wavenumber * depth));
}

TimeSeriesMatrix gen_swell(const SwellConfig& cfg) {
    if (cfg.channels < 1 || cfg.steps < 1) throw std::runtime_error("gen_swell: empty shape");
    if (cfg.depth <= 0 || cfg.gravity <= 0)
        throw std::runtime_error("gen_swell: depth and gravity must be positive");
    if (cfg.modes.empty()) throw std::runtime_error("gen_swell: no modes");

    std::vector<double> omega(cfg.modes.size());
    for (std::size_t i = 0; i < cfg.modes.size(); ++i) {
        const SwellMode& mode = cfg.modes[i];
        if (mode.wavenumber <= 0) throw std::runtime_error("gen_swell: wavenumber must be > 0");
        omega[i] = swell_omega(mode.wavenumber, cfg.gravity, cfg.depth);
        if (!(omega[i] * cfg.dt < kPi))
            throw std::runtime_error("gen_swell: mode violates the Nyquist limit (omega*dt >= pi)");
    }

    TimeSeriesMatrix field = TimeSeriesMatrix::zeros(cfg.steps, cfg.channels, cfg.dt);
    for (Index t = 0; t < cfg.steps; ++t) {
        const double time = static_cast<double>(t) * cfg.dt;
        for (Index c = 0; c < cfg.channels; ++c) {
            const double x = static_cast<double>(c) * cfg.channel_spacing;
            double u = 0.0;
            for (std::size_t i = 0; i < cfg.modes.size(); ++i) {
                const SwellMode& mode = cfg.modes[i];
                u += mode.amplitude * std::cos(mode.wavenumber * x - omega[i] * time + mode.phase);
            }
            field.values(t, c) = u;
        }
    }
    auto [normalized, stats] = normalize(field);
    (void)stats;
    return normalized;
}

LinearSystem gen_linear_system(const LinearSystemConfig& cfg) {
    if (cfg.dimension < 1 || cfg.steps < 1) throw std::runtime_error("gen_linear_system: empty shape");
    if (cfg.rank < 1 || cfg.rank > cfg.dimension)
        throw std::runtime_error("gen_linear_system: rank out of range");
    if (static_cast<Index>(cfg.spectrum.size()) != cfg.rank)
        throw std::runtime_error("gen_linear_system: spectrum size must equal rank");

    // Real block-diagonal form: 2x2 rotation-scaling blocks for conjugate
    // pairs, 1x1 blocks for real eigenvalues.
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(cfg.rank, cfg.rank);
    std::vector<bool> used(cfg.spectrum.size(), false);
    Index pos = 0;
    for (std::size_t i = 0; i < cfg.spectrum.size(); ++i) {
        if (used[i]) continue;
        const std::complex<double> lam = cfg.spectrum[i];
        if (std::abs(lam) > 1.0 + 1e-12)
            throw std::runtime_error("gen_linear_system: |lambda| must be <= 1");
        if (std::abs(lam.imag()) < 1e-15) {
            block(pos, pos) = lam.real();
            used[i] = true;
            pos += 1;
            continue;
        }
        std::size_t match = cfg.spectrum.size();
        for (std::size_t j = i + 1; j < cfg.spectrum.size(); ++j)
            if (!used[j] && std::abs(cfg.spectrum[j] - std::conj(lam)) < 1e-12) {
                match = j;
                break;
            }
        if (match == cfg.spectrum.size())
            throw std::runtime_error("gen_linear_system: spectrum is not conjugate-closed");
        block(pos, pos) = lam.real();
        block(pos, pos + 1) = -lam.imag();
        block(pos + 1, pos) = lam.imag();
        block(pos + 1, pos + 1) = lam.real();
        used[i] = used[match] = true;
        pos += 2;
    }

    Rng rng(derive_seed(cfg.seed, "linear-system"));
    Eigen::MatrixXd gauss(cfg.dimension, cfg.dimension);
    for (Index r = 0; r < cfg.dimension; ++r)
        for (Index c = 0; c < cfg.dimension; ++c) gauss(r, c) = rng.gaussian();
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(gauss).householderQ();

    Eigen::MatrixXd lifted = Eigen::MatrixXd::Zero(cfg.dimension, cfg.dimension);
    lifted.topLeftCorner(cfg.rank, cfg.rank) = block;
    LinearSystem sys;
    sys.op = q * lifted * q.transpose();

    // Start in the active subspace with every mode excited.
    Eigen::VectorXd v = Eigen::VectorXd::Zero(cfg.dimension);
    for (Index i = 0; i < cfg.rank; ++i) {
        const double mag = rng.uniform(0.5, 1.0);
        v(i) = rng.uniform01() < 0.5 ? -mag : mag;
    }
    Eigen::VectorXd x = q * v;

    sys.trajectory = TimeSeriesMatrix::zeros(cfg.steps, cfg.dimension, 1.0);
    for (Index t = 0; t < cfg.steps; ++t) {
        sys.trajectory.values.row(t) = x.transpose();
        x = sys.op * x;
    }
    return sys;
}

TimeSeriesMatrix gen_pulse(const PulseConfig& cfg, double param) {
    if (cfg.sensors < 2 || cfg.steps < 1) throw std::runtime_error("gen_pulse: empty shape");
    if (cfg.speed <= 0 || cfg.width <= 0 || param <= 0)
        throw std::runtime_error("gen_pulse: speed, width and param must be positive");

    Rng rng(derive_seed(cfg.seed, "pulse-start"));
    const double start = std::floor(rng.uniform01() * static_cast<double>(cfg.sensors));
    const double n = static_cast<double>(cfg.sensors);
    const double velocity = cfg.speed * param;

    TimeSeriesMatrix field = TimeSeriesMatrix::zeros(cfg.steps, cfg.sensors, 1.0);
    for (Index t = 0; t < cfg.steps; ++t) {
        const double center = start + velocity * static_cast<double>(t);
        for (Index s = 0; s < cfg.sensors; ++s) {
            // circular distance on the ring
            double d = std::fmod(static_cast<double>(s) - center, n);
            if (d < -n / 2) d += n;
            if (d >= n / 2) d -= n;
            field.values(t, s) = std::exp(-d * d / (2.0 * cfg.width * cfg.width));
        }
    }
    auto [normalized, stats] = normalize(field);
    (void)stats;
    return normalized;
}

std::vector<TimeSeriesMatrix> gen_pulse_family(const PulseConfig& cfg,
                                               const std::vector<double>& params) {
    if (params.size() < 5)
        throw std::runtime_error(
            "gen_pulse_family: need >= 5 params (3 train, interpolation, extrapolation)");
    const double lo = std::min({params[0], params[1], params[2]});
    const double hi = std::max({params[0], params[1], params[2]});
    if (!(params[3] > lo && params[3] < hi))
        throw std::runtime_error("gen_pulse_family: interpolation param must lie strictly inside "
                                 "the training range");
    if (params[4] >= lo && params[4] <= hi)
        throw std::runtime_error("gen_pulse_family: extrapolation param must lie strictly outside "
                                 "the training range");
    std::vector<TimeSeriesMatrix> family;
    family.reserve(params.size());
    for (double p : params) family.push_back(gen_pulse(cfg, p));
    return family;
}

namespace {

// Wavenumbers commensurate with the ring aperture keep the spatial spectrum
// on integer bins and the row variance constant in time.
std::vector<SwellMode> desk_swell_modes(Index channels, double spacing, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "swell-phases"));
    const double aperture = static_cast<double>(channels) * spacing;
    const std::vector<int> cycles = {3, 5, 9, 17};
    const std::vector<double> amps = {1.0, 0.7, 0.5, 0.3};
    std::vector<SwellMode> modes;
    for (std::size_t i = 0; i < cycles.size(); ++i)
        modes.push_back({2.0 * kPi * cycles[i] / aperture, amps[i], rng.uniform(0.0, 2.0 * kPi)});
    return modes;
}

TimeSeriesMatrix desk_swell(std::uint64_t seed, double depth) {
    SwellConfig cfg;
    cfg.channels = 256;
    cfg.channel_spacing = 40.0;
    cfg.dt = 0.5;
    cfg.steps = 384;
    cfg.depth = depth;
    cfg.seed = seed;
    cfg.modes = desk_swell_modes(cfg.channels, cfg.channel_spacing, seed);
    return gen_swell(cfg);
}

Preset swell_preset(std::uint64_t seed) {
    Preset preset;
    preset.config = builtin_config("swell-small");
    preset.config.seed = seed;
    preset.sources.main = desk_swell(seed, 30.0);
    const std::vector<double> depths = {12.0, 30.0, 60.0};
    const double interp = 20.0, extrap = 100.0;
    for (double h : depths) preset.sources.family.push_back(desk_swell(seed, h));
    preset.sources.family.push_back(desk_swell(seed, interp));
    preset.sources.family.push_back(desk_swell(seed, extrap));
    preset.hidden = {{"parameter", "depth_m"},
                     {"train", depths},
                     {"interpolation", interp},
                     {"extrapolation", extrap}};
    return preset;
}

Preset pulse_preset(std::uint64_t seed) {
    Preset preset;
    preset.config = builtin_config("pulse-small");
    preset.config.seed = seed;
    PulseConfig cfg;
    cfg.sensors = 256;
    cfg.speed = 0.5;
    cfg.width = 6.0;
    cfg.steps = 384;
    cfg.seed = seed;
    preset.sources.main = gen_pulse(cfg, 1.0);
    const std::vector<double> params = {0.8, 1.0, 1.25, 0.9, 1.6};
    preset.sources.family = gen_pulse_family(cfg, params);
    preset.hidden = {{"parameter", "speed_scale"},
                     {"train", {params[0], params[1], params[2]}},
                     {"interpolation", params[3]},
                     {"extrapolation", params[4]}};
    return preset;
}

TimeSeriesMatrix desk_linear(std::uint64_t seed, double angle, std::uint64_t salt) {
    LinearSystemConfig cfg;
    cfg.dimension = 20;
    cfg.rank = 3;
    cfg.steps = 384;
    cfg.seed = derive_seed(seed, "linear-" + std::to_string(salt));
    cfg.spectrum = {std::polar(1.0, angle), std::polar(1.0, -angle), {1.0, 0.0}};
    return gen_linear_system(cfg).trajectory;
}

Preset linear_preset(std::uint64_t seed) {
    Preset preset;
    preset.config = builtin_config("linear-small");
    preset.config.seed = seed;
    // Clean planted dynamics: every requested rank above the true one
    // truncates back to the exact rank-3 model, so the planted rank is
    // recoverable from the fitted model itself.
    preset.sources.main = desk_linear(seed, 0.3, 0);
    const std::vector<double> angles = {0.2, 0.3, 0.4};
    const double interp = 0.25, extrap = 0.5;
    std::uint64_t salt = 1;
    for (double a : angles) preset.sources.family.push_back(desk_linear(seed, a, salt++));
    preset.sources.family.push_back(desk_linear(seed, interp, salt++));
    preset.sources.family.push_back(desk_linear(seed, extrap, salt++));
    preset.hidden = {{"parameter", "rotation_angle"},
                     {"train", angles},
                     {"interpolation", interp},
                     {"extrapolation", extrap}};
    return preset;
}

}  // namespace

Preset make_preset(const std::string& name, std::uint64_t seed) {
    if (name == "swell-small") return swell_preset(seed);
    if (name == "pulse-small") return pulse_preset(seed);
    if (name == "linear-small") return linear_preset(seed);
    throw std::runtime_error("make_preset: unknown preset " + name);
}

}  // namespace ctf
