#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ctf/dataset.hpp"
#include "ctf/synth.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

using namespace ctf;
namespace fs = std::filesystem;

namespace {

TimeSeriesMatrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
    Rng rng(seed);
    TimeSeriesMatrix m = TimeSeriesMatrix::zeros(rows, cols);
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c) m.values(r, c) = rng.gaussian();
    return m;
}

struct ExpectedRow {
    const char* name;
    Index rows, cols, start, end;
};

void check_table(const DatasetConfig& cfg, const std::vector<ExpectedRow>& table) {
    for (const auto& row : table) {
        INFO(cfg.name, " ", row.name);
        const Shape shape = cfg.shape_for(row.name);
        const IndexRange& range = cfg.range_for(row.name);
        CHECK(shape.rows == row.rows);
        CHECK(shape.cols == row.cols);
        CHECK(range.start == row.start);
        CHECK(range.end == row.end);
    }
}

bool same_bits(const TimeSeriesMatrix& a, const TimeSeriesMatrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::memcmp(a.values.data(), b.values.data(),
                       sizeof(double) * static_cast<std::size_t>(a.values.size())) == 0;
}

}  // namespace

TEST_CASE("global wavefields config reproduces its shape/index table") {
    const DatasetConfig cfg = builtin_config("global-wavefields");
    cfg.validate();
    check_table(cfg, {
        {"X1train", 2000, 2048, 0, 2000},  {"X2train", 2000, 2048, 0, 2000},
        {"X3train", 2000, 2048, 0, 2000},  {"X4train", 500, 2048, 1500, 2000},
        {"X5train", 500, 2048, 1500, 2000},{"X6train", 2000, 2048, 0, 2000},
        {"X7train", 2000, 2048, 0, 2000},  {"X8train", 2000, 2048, 0, 2000},
        {"X9train", 500, 2048, 1500, 2000},{"X10train", 500, 2048, 1500, 2000},
        {"X1test", 1000, 2048, 2000, 3000},{"X2test", 2000, 2048, 0, 2000},
        {"X3test", 1000, 2048, 2000, 3000},{"X4test", 2000, 2048, 0, 2000},
        {"X5test", 1000, 2048, 2000, 3000},{"X6test", 1000, 2048, 2000, 3000},
        {"X7test", 1000, 2048, 2000, 3000},{"X8test", 1000, 2048, 2000, 3000},
        {"X9test", 1000, 2048, 2000, 3000},
    });
    CHECK(cfg.m == 500);
    CHECK(cfg.M == 500);
}

TEST_CASE("das config reproduces its shape/index table") {
    const DatasetConfig cfg = builtin_config("das");
    check_table(cfg, {
        {"X1train", 2000, 3000, 0, 2000},
        {"X4train", 500, 3000, 1500, 2000},
        {"X9train", 500, 3000, 1500, 2000},
        {"X1test", 1000, 3000, 2000, 3000},
        {"X2test", 2000, 3000, 0, 2000},
    });
}

TEST_CASE("crustal config carries the smaller parametric dimension") {
    const DatasetConfig cfg = builtin_config("crustal-wavefields");
    check_table(cfg, {
        {"X1train", 500, 62451, 0, 500},
        {"X4train", 200, 62451, 300, 500},
        {"X6train", 500, 26508, 0, 500},
        {"X9train", 200, 26508, 300, 500},
        {"X10train", 200, 26508, 300, 500},
        {"X1test", 100, 62451, 500, 600},
        {"X8test", 100, 26508, 500, 600},
        {"X9test", 100, 26508, 500, 600},
    });
    CHECK(cfg.m == 250);
    CHECK(cfg.M == 200);
}

TEST_CASE("task table wires predictions to scores per the protocol") {
    const DatasetConfig cfg = builtin_config("swell-small");
    const auto tasks = task_table(cfg);
    REQUIRE(tasks.size() == 12);
    const std::vector<std::pair<std::string, std::string>> wiring = {
        {"E1", "X1pred"}, {"E2", "X1pred"}, {"E3", "X2pred"}, {"E4", "X3pred"},
        {"E5", "X4pred"}, {"E6", "X5pred"}, {"E7", "X6pred"}, {"E8", "X6pred"},
        {"E9", "X7pred"}, {"E10", "X7pred"}, {"E11", "X8pred"}, {"E12", "X9pred"},
    };
    for (std::size_t i = 0; i < 12; ++i) {
        CHECK(tasks[i].score_id == wiring[i].first);
        CHECK(tasks[i].pred_key == wiring[i].second);
    }
    CHECK(tasks[0].truth_key == "X1test");
    CHECK(tasks[2].truth_key == "X2test");
    CHECK(tasks[2].kind == TaskKind::Reconstruction);
    CHECK(tasks[3].truth_key == "X3test");
    CHECK(tasks[3].metric == MetricKind::LongTerm);
    CHECK(tasks[10].burnin_key == "X9train");
    CHECK(tasks[11].burnin_key == "X10train");
    CHECK(tasks[10].train_keys == std::vector<std::string>{"X6train", "X7train", "X8train"});
}

TEST_CASE("every pred shape equals its test-matrix shape") {
    for (const std::string name : {"global-wavefields", "das", "crustal-wavefields", "swell-small"}) {
        const DatasetConfig cfg = builtin_config(name);
        for (const auto& task : task_table(cfg)) CHECK(task.pred_shape == cfg.shape_for(task.truth_key));
    }
}

TEST_CASE("forecast train/test windows are disjoint, reconstruction truths overlap") {
    for (const std::string name : {"global-wavefields", "das", "crustal-wavefields", "swell-small"}) {
        const DatasetConfig cfg = builtin_config(name);
        const IndexRange& train = cfg.range_for("X1train");
        const IndexRange& test = cfg.range_for("X1test");
        CHECK(train.end <= test.start);
        CHECK(cfg.range_for("X2test").start == cfg.range_for("X2train").start);
        CHECK(cfg.range_for("X2test").end == cfg.range_for("X2train").end);
        CHECK(cfg.range_for("X4test").start == cfg.range_for("X3train").start);
    }
}

TEST_CASE("make_splits emits the configured windows with seeded noise") {
    DatasetConfig cfg = builtin_config("swell-small");
    cfg.seed = 17;
    SourceData src;
    src.main = random_matrix(384, 256, 1);
    for (std::uint64_t i = 0; i < 5; ++i) src.family.push_back(random_matrix(384, 256, 10 + i));

    const Bundle bundle = make_splits(src, cfg);
    REQUIRE(bundle.matrices.size() == 19);

    // clean windows
    CHECK(same_bits(bundle.at("X1train"), TimeSeriesMatrix(src.main.values.topRows(256), cfg.dt)));
    CHECK(same_bits(bundle.at("X4train"),
                    TimeSeriesMatrix(src.main.values.middleRows(192, 64), cfg.dt)));
    CHECK(same_bits(bundle.at("X1test"),
                    TimeSeriesMatrix(src.main.values.middleRows(256, 128), cfg.dt)));
    CHECK(same_bits(bundle.at("X2test"), bundle.at("X1train")));
    CHECK(same_bits(bundle.at("X8test"),
                    TimeSeriesMatrix(src.family[3].values.middleRows(256, 128), cfg.dt)));
    CHECK(same_bits(bundle.at("X9train"),
                    TimeSeriesMatrix(src.family[3].values.middleRows(192, 64), cfg.dt)));

    // noisy copies at the configured amplitudes
    const TimeSeriesMatrix low(bundle.at("X2train").values - bundle.at("X1train").values);
    const TimeSeriesMatrix high(bundle.at("X3train").values - bundle.at("X1train").values);
    const double clean_std = matrix_population_std(bundle.at("X1train"));
    CHECK(matrix_population_std(low) == doctest::Approx(0.1 * clean_std).epsilon(0.02));
    CHECK(matrix_population_std(high) == doctest::Approx(1.0 * clean_std).epsilon(0.02));

    // limited-data noise realization independent of X3train's
    const TimeSeriesMatrix x5_noise(bundle.at("X5train").values - bundle.at("X4train").values);
    const TimeSeriesMatrix x2_tail(low.values.bottomRows(64));
    CHECK(!same_bits(x5_noise, x2_tail));

    // regeneration is bit-identical
    const Bundle again = make_splits(src, cfg);
    for (const auto& [name, mat] : bundle.matrices) CHECK(same_bits(mat, again.at(name)));
}

TEST_CASE("make_splits rejects short sources and missing trajectories") {
    DatasetConfig cfg = builtin_config("swell-small");
    SourceData src;
    src.main = random_matrix(300, 256, 1);  // shorter than the 384-row table
    for (std::uint64_t i = 0; i < 5; ++i) src.family.push_back(random_matrix(384, 256, 10 + i));
    CHECK_THROWS_WITH_AS(make_splits(src, cfg), doctest::Contains("too short"), std::runtime_error);

    src.main = random_matrix(384, 256, 1);
    src.family.resize(4);
    CHECK_THROWS_WITH_AS(make_splits(src, cfg), doctest::Contains("parametric"), std::runtime_error);
}

TEST_CASE("tuning split follows the 80/20 protocol") {
    Bundle bundle;
    bundle.config = builtin_config("swell-small");
    bundle.config.index_table["X1train"] = {0, 2000};
    bundle.matrices["X1train"] = random_matrix(2000, 16, 3);
    const TrainView view(bundle);
    const TaskSpec e1 = find_task(bundle.config, "E1");
    const TuningSplit split = make_tuning_split(e1, view);
    REQUIRE(split.train.size() == 1);
    CHECK(split.train[0].rows() == 1600);  // rows 0..1599
    CHECK(split.validation.rows() == 400);  // rows 1600..1999
    CHECK(!split.burnin.has_value());
    CHECK(same_bits(split.train[0], TimeSeriesMatrix(bundle.at("X1train").values.topRows(1600), 0.5)));
    CHECK(same_bits(split.validation,
                    TimeSeriesMatrix(bundle.at("X1train").values.bottomRows(400), 0.5)));
}

TEST_CASE("tuning split for reconstruction partitions the noisy matrix") {
    Bundle bundle;
    bundle.config = builtin_config("swell-small");
    bundle.matrices["X2train"] = random_matrix(256, 16, 4);
    const TuningSplit split = make_tuning_split(find_task(bundle.config, "E3"), TrainView(bundle));
    CHECK(split.train[0].rows() == 204);
    CHECK(split.validation.rows() == 52);
}

TEST_CASE("parametric tuning splits hold one trajectory out") {
    Bundle bundle;
    bundle.config = builtin_config("swell-small");
    for (const std::string mn : {"X6train", "X7train", "X8train"})
        bundle.matrices[mn] = random_matrix(256, 16, fnv1a64(mn));
    const TrainView view(bundle);

    const TuningSplit e11 = make_tuning_split(find_task(bundle.config, "E11"), view);
    REQUIRE(e11.train.size() == 2);
    CHECK(same_bits(e11.train[0], bundle.at("X6train")));
    CHECK(same_bits(e11.train[1], bundle.at("X8train")));
    REQUIRE(e11.burnin.has_value());
    CHECK(e11.burnin->rows() == 64);
    CHECK(same_bits(*e11.burnin, TimeSeriesMatrix(bundle.at("X7train").values.topRows(64), 0.5)));
    CHECK(e11.validation.rows() == 192);

    const TuningSplit e12 = make_tuning_split(find_task(bundle.config, "E12"), view);
    CHECK(same_bits(e12.train[1], bundle.at("X7train")));
    CHECK(same_bits(*e12.burnin, TimeSeriesMatrix(bundle.at("X8train").values.topRows(64), 0.5)));
}

TEST_CASE("train view refuses test matrices") {
    Bundle bundle;
    bundle.config = builtin_config("swell-small");
    bundle.matrices["X1test"] = random_matrix(10, 10, 1);
    bundle.matrices["X1train"] = random_matrix(10, 10, 2);
    const TrainView view(bundle);
    CHECK_NOTHROW(view.train("X1train"));
    CHECK_THROWS_WITH_AS(view.train("X1test"), doctest::Contains("refusing"), std::runtime_error);
    CHECK_THROWS_AS(view.train("dataset"), std::runtime_error);
}

TEST_CASE("bundle io round trips and the public export hides tests") {
    const fs::path dir = fs::temp_directory_path() / "ctf-test-bundle";
    fs::remove_all(dir);

    DatasetConfig cfg = builtin_config("swell-small");
    cfg.seed = 3;
    SourceData src;
    src.main = random_matrix(384, 256, 1);
    for (std::uint64_t i = 0; i < 5; ++i) src.family.push_back(random_matrix(384, 256, 20 + i));
    const Bundle bundle = make_splits(src, cfg);
    save_bundle(bundle, dir);

    const Bundle loaded = load_bundle(dir);
    CHECK(loaded.config.name == cfg.name);
    CHECK(loaded.config.seed == cfg.seed);
    REQUIRE(loaded.matrices.size() == 19);
    for (const auto& [name, mat] : bundle.matrices) CHECK(same_bits(mat, loaded.at(name)));
    CHECK(loaded.has_all_tests());

    export_public(dir, dir / "public");
    const Bundle pub = load_bundle(dir / "public");
    CHECK(!pub.has_all_tests());
    for (const auto& entry : fs::directory_iterator(dir / "public"))
        CHECK(entry.path().filename().string().find("test") == std::string::npos);
    CHECK(pub.matrices.size() == 10);

    // fingerprint is sensitive to any byte change
    const std::uint64_t before = bundle_fingerprint(dir);
    CHECK(before == bundle_fingerprint(dir));
    {
        std::ofstream tweak(dir / "X1test.ctfw", std::ios::binary | std::ios::app);
        tweak << 'x';
    }
    CHECK(bundle_fingerprint(dir) != before);
    fs::remove_all(dir);
}

TEST_CASE("config json round trips") {
    DatasetConfig cfg = builtin_config("crustal-wavefields");
    cfg.seed = 99;
    const DatasetConfig back = config_from_json(nlohmann::json::parse(config_to_json(cfg).dump()));
    CHECK(back.name == cfg.name);
    CHECK(back.n == cfg.n);
    CHECK(back.n_param == cfg.n_param);
    CHECK(back.m == cfg.m);
    CHECK(back.M == cfg.M);
    CHECK(back.k_split == cfg.k_split);
    CHECK(back.kmax == cfg.kmax);
    CHECK(back.seed == cfg.seed);
    CHECK(back.noise_high.sigma_rel == cfg.noise_high.sigma_rel);
    for (const auto& mn : matrix_names()) {
        CHECK(back.range_for(mn).start == cfg.range_for(mn).start);
        CHECK(back.range_for(mn).end == cfg.range_for(mn).end);
    }
}

TEST_CASE("config validation catches bad invariants") {
    DatasetConfig cfg = builtin_config("swell-small");
    cfg.k_split = 0;
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("k_split"), std::runtime_error);
    cfg = builtin_config("swell-small");
    cfg.k_split = 2 * cfg.m + 1;
    CHECK_THROWS_AS(cfg.validate(), std::runtime_error);
    cfg = builtin_config("swell-small");
    cfg.M = cfg.m + 1;
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("M must be <= m"), std::runtime_error);
}
