#include "ctf/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ctf {

namespace {

const std::vector<std::string> kMatrixNames = {
    "X1train", "X2train", "X3train", "X4train", "X5train",
    "X6train", "X7train", "X8train", "X9train", "X10train",
    "X1test",  "X2test",  "X3test",  "X4test",  "X5test",
    "X6test",  "X7test",  "X8test",  "X9test",
};

// Matrices drawn from the parametric trajectory family; they may carry a
// different spatial dimension than the main trajectory.
const std::set<std::string> kParametricNames = {
    "X6train", "X7train", "X8train", "X9train", "X10train", "X8test", "X9test",
};

std::map<std::string, IndexRange> index_table_from(
    std::initializer_list<std::pair<const char*, IndexRange>> items) {
    std::map<std::string, IndexRange> t;
    for (const auto& [k, v] : items) t[k] = v;
    return t;
}

// Index layout shared by the full-size datasets: train block [0, 4m),
// limited block = its last M rows, test block [4m, 6m).
std::map<std::string, IndexRange> standard_index_table(Index train_end, Index test_end,
                                                       Index limited) {
    const IndexRange train{0, train_end};
    const IndexRange tail{train_end - limited, train_end};
    const IndexRange test{train_end, test_end};
    return index_table_from({
        {"X1train", train}, {"X2train", train}, {"X3train", train},
        {"X4train", tail},  {"X5train", tail},
        {"X6train", train}, {"X7train", train}, {"X8train", train},
        {"X9train", tail},  {"X10train", tail},
        {"X1test", test},   {"X2test", train},  {"X3test", test},
        {"X4test", train},  {"X5test", test},   {"X6test", test},
        {"X7test", test},   {"X8test", test},   {"X9test", test},
    });
}

DatasetConfig desk_config(const std::string& name, Index n, Index kmax, double dt) {
    DatasetConfig cfg;
    cfg.name = name;
    cfg.n = n;
    cfg.n_param = n;
    cfg.m = 64;
    cfg.M = 64;
    cfg.dt = dt;
    cfg.k_split = 64;
    cfg.kmax = kmax;
    cfg.index_table = standard_index_table(256, 384, 64);
    return cfg;
}

}  // namespace

const std::vector<std::string>& matrix_names() { return kMatrixNames; }

Index DatasetConfig::cols_for(const std::string& matrix_name) const {
    if (kParametricNames.count(matrix_name)) return n_param > 0 ? n_param : n;
    return n;
}

const IndexRange& DatasetConfig::range_for(const std::string& matrix_name) const {
    auto it = index_table.find(matrix_name);
    if (it == index_table.end())
        throw std::runtime_error("DatasetConfig: no index range for " + matrix_name);
    return it->second;
}

Shape DatasetConfig::shape_for(const std::string& matrix_name) const {
    return Shape{range_for(matrix_name).rows(), cols_for(matrix_name)};
}

void DatasetConfig::validate() const {
    if (name.empty()) throw std::runtime_error("DatasetConfig: name must not be empty");
    if (n < 1) throw std::runtime_error("DatasetConfig: n must be >= 1");
    if (m < 1 || M < 1) throw std::runtime_error("DatasetConfig: m and M must be >= 1");
    if (M > m) throw std::runtime_error("DatasetConfig: M must be <= m");
    if (k_split < 1 || k_split > 2 * m)
        throw std::runtime_error("DatasetConfig: k_split must satisfy 0 < k <= 2m");
    if (kmax < 1) throw std::runtime_error("DatasetConfig: kmax must be >= 1");
    if (noise_low.sigma_rel < 0 || noise_high.sigma_rel < 0)
        throw std::runtime_error("DatasetConfig: noise sigma_rel must be >= 0");
    for (const auto& mn : kMatrixNames) {
        const IndexRange& r = range_for(mn);
        if (r.start < 0 || r.end <= r.start)
            throw std::runtime_error("DatasetConfig: bad index range for " + mn);
    }
}

nlohmann::ordered_json config_to_json(const DatasetConfig& cfg) {
    nlohmann::ordered_json j;
    j["name"] = cfg.name;
    j["n"] = cfg.n;
    j["n_param"] = cfg.n_param > 0 ? cfg.n_param : cfg.n;
    j["m"] = cfg.m;
    j["M"] = cfg.M;
    j["dt"] = cfg.dt;
    j["k_split"] = cfg.k_split;
    j["kmax"] = cfg.kmax;
    j["seed"] = cfg.seed;
    j["noise"] = {{"low", {{"sigma_rel", cfg.noise_low.sigma_rel}, {"seed", cfg.noise_low.seed}}},
                  {"high", {{"sigma_rel", cfg.noise_high.sigma_rel}, {"seed", cfg.noise_high.seed}}}};
    nlohmann::ordered_json table;
    for (const auto& mn : kMatrixNames) {
        const IndexRange& r = cfg.range_for(mn);
        table[mn] = {r.start, r.end};
    }
    j["index_table"] = std::move(table);
    return j;
}

DatasetConfig config_from_json(const nlohmann::json& j) {
    DatasetConfig cfg;
    cfg.name = j.at("name").get<std::string>();
    cfg.n = j.at("n").get<Index>();
    cfg.n_param = j.value("n_param", cfg.n);
    cfg.m = j.at("m").get<Index>();
    cfg.M = j.at("M").get<Index>();
    cfg.dt = j.at("dt").get<double>();
    cfg.k_split = j.at("k_split").get<Index>();
    cfg.kmax = j.value("kmax", Index{100});
    cfg.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("noise")) {
        const auto& noise = j.at("noise");
        cfg.noise_low = {noise.at("low").at("sigma_rel").get<double>(),
                         noise.at("low").value("seed", std::uint64_t{0})};
        cfg.noise_high = {noise.at("high").at("sigma_rel").get<double>(),
                          noise.at("high").value("seed", std::uint64_t{0})};
    }
    for (const auto& mn : kMatrixNames) {
        const auto& r = j.at("index_table").at(mn);
        cfg.index_table[mn] = IndexRange{r.at(0).get<Index>(), r.at(1).get<Index>()};
    }
    cfg.validate();
    return cfg;
}

DatasetConfig builtin_config(const std::string& name) {
    if (name == "global-wavefields") {
        DatasetConfig cfg;
        cfg.name = name;
        cfg.n = 2048;
        cfg.n_param = 2048;
        cfg.m = 500;
        cfg.M = 500;
        cfg.dt = 1.0;
        cfg.k_split = 500;
        cfg.index_table = standard_index_table(2000, 3000, 500);
        return cfg;
    }
    if (name == "das") {
        DatasetConfig cfg;
        cfg.name = name;
        cfg.n = 3000;
        cfg.n_param = 3000;
        cfg.m = 500;
        cfg.M = 500;
        cfg.dt = 0.2;
        cfg.k_split = 500;
        cfg.index_table = standard_index_table(2000, 3000, 500);
        return cfg;
    }
    if (name == "crustal-wavefields") {
        DatasetConfig cfg;
        cfg.name = name;
        cfg.n = 62451;
        cfg.n_param = 26508;
        cfg.m = 250;
        cfg.M = 200;
        cfg.dt = 0.02;
        cfg.k_split = 50;  // half the 100-row prediction block
        cfg.index_table = standard_index_table(500, 600, 200);
        return cfg;
    }
    if (name == "swell-small") return desk_config(name, 256, 100, 0.5);
    if (name == "pulse-small") return desk_config(name, 256, 100, 1.0);
    if (name == "linear-small") return desk_config(name, 20, 8, 1.0);
    throw std::runtime_error("builtin_config: unknown config " + name);
}

std::vector<TaskSpec> task_table(const DatasetConfig& cfg) {
    auto shape_of = [&cfg](const std::string& test_key) { return cfg.shape_for(test_key); };
    std::vector<TaskSpec> tasks;
    auto add = [&](const std::string& id, TaskKind kind, MetricKind metric,
                   std::vector<std::string> train_keys, std::string burnin,
                   std::string truth, std::string pred) {
        TaskSpec t;
        t.score_id = id;
        t.kind = kind;
        t.metric = metric;
        t.train_keys = std::move(train_keys);
        t.burnin_key = std::move(burnin);
        t.truth_key = std::move(truth);
        t.pred_key = std::move(pred);
        t.pred_shape = shape_of(t.truth_key);
        tasks.push_back(std::move(t));
    };
    const std::vector<std::string> param_train = {"X6train", "X7train", "X8train"};
    add("E1", TaskKind::Forecast, MetricKind::ShortTerm, {"X1train"}, "", "X1test", "X1pred");
    add("E2", TaskKind::Forecast, MetricKind::LongTerm, {"X1train"}, "", "X1test", "X1pred");
    add("E3", TaskKind::Reconstruction, MetricKind::ShortTerm, {"X2train"}, "", "X2test", "X2pred");
    add("E4", TaskKind::Forecast, MetricKind::LongTerm, {"X2train"}, "", "X3test", "X3pred");
    add("E5", TaskKind::Reconstruction, MetricKind::ShortTerm, {"X3train"}, "", "X4test", "X4pred");
    add("E6", TaskKind::Forecast, MetricKind::LongTerm, {"X3train"}, "", "X5test", "X5pred");
    add("E7", TaskKind::Forecast, MetricKind::ShortTerm, {"X4train"}, "", "X6test", "X6pred");
    add("E8", TaskKind::Forecast, MetricKind::LongTerm, {"X4train"}, "", "X6test", "X6pred");
    add("E9", TaskKind::Forecast, MetricKind::ShortTerm, {"X5train"}, "", "X7test", "X7pred");
    add("E10", TaskKind::Forecast, MetricKind::LongTerm, {"X5train"}, "", "X7test", "X7pred");
    add("E11", TaskKind::Parametric, MetricKind::ShortTerm, param_train, "X9train", "X8test", "X8pred");
    add("E12", TaskKind::Parametric, MetricKind::ShortTerm, param_train, "X10train", "X9test", "X9pred");
    return tasks;
}

TaskSpec find_task(const DatasetConfig& cfg, const std::string& score_id) {
    for (auto& t : task_table(cfg))
        if (t.score_id == score_id) return t;
    throw std::runtime_error("find_task: unknown score id " + score_id);
}

const TimeSeriesMatrix& Bundle::at(const std::string& key) const {
    auto it = matrices.find(key);
    if (it == matrices.end()) throw std::runtime_error("bundle: missing matrix " + key);
    return it->second;
}

bool Bundle::has_all_tests() const {
    for (const auto& mn : kMatrixNames)
        if (mn.ends_with("test") && !has(mn)) return false;
    return true;
}

namespace {

TimeSeriesMatrix window(const TimeSeriesMatrix& src, const IndexRange& r, Index expect_cols,
                        double dt, const std::string& what) {
    if (src.cols() != expect_cols)
        throw std::runtime_error("make_splits: " + what + " has " + std::to_string(src.cols()) +
                                 " channels, config expects " + std::to_string(expect_cols));
    if (r.end > src.rows())
        throw std::runtime_error("make_splits: source too short for " + what + " (needs " +
                                 std::to_string(r.end) + " rows, has " +
                                 std::to_string(src.rows()) + ")");
    TimeSeriesMatrix out = src.slice_rows(r.start, r.end);
    out.dt = dt;
    return out;
}

}  // namespace

Bundle make_splits(const SourceData& source, const DatasetConfig& cfg) {
    cfg.validate();
    if (source.family.size() < 5)
        throw std::runtime_error(
            "make_splits: missing parametric trajectories (need 3 train + interpolation + "
            "extrapolation)");

    Bundle bundle;
    bundle.config = cfg;
    auto& mats = bundle.matrices;
    auto noise_for = [&cfg](const NoiseSpec& spec, const std::string& mn) {
        return NoiseSpec{spec.sigma_rel, derive_seed(cfg.seed ^ spec.seed, mn)};
    };

    const auto& main = source.main;
    mats["X1train"] = window(main, cfg.range_for("X1train"), cfg.n, cfg.dt, "X1train");
    mats["X2train"] = add_noise(mats["X1train"], noise_for(cfg.noise_low, "X2train"));
    mats["X3train"] = add_noise(mats["X1train"], noise_for(cfg.noise_high, "X3train"));
    mats["X4train"] = window(main, cfg.range_for("X4train"), cfg.n, cfg.dt, "X4train");
    // Limited-data noise is drawn independently of X3train's realization.
    mats["X5train"] = add_noise(mats["X4train"], noise_for(cfg.noise_low, "X5train"));

    const Index npar = cfg.cols_for("X6train");
    const std::array<std::string, 3> ptrain = {"X6train", "X7train", "X8train"};
    for (std::size_t i = 0; i < 3; ++i)
        mats[ptrain[i]] = window(source.family[i], cfg.range_for(ptrain[i]), npar, cfg.dt, ptrain[i]);
    mats["X9train"] = window(source.family[3], cfg.range_for("X9train"), npar, cfg.dt, "X9train");
    mats["X10train"] = window(source.family[4], cfg.range_for("X10train"), npar, cfg.dt, "X10train");

    for (const std::string mn : {"X1test", "X2test", "X3test", "X4test", "X5test", "X6test", "X7test"})
        mats[mn] = window(main, cfg.range_for(mn), cfg.n, cfg.dt, mn);
    mats["X8test"] = window(source.family[3], cfg.range_for("X8test"), npar, cfg.dt, "X8test");
    mats["X9test"] = window(source.family[4], cfg.range_for("X9test"), npar, cfg.dt, "X9test");
    return bundle;
}

void save_bundle(const Bundle& bundle, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "dataset.json", std::ios::trunc);
        if (!out) throw std::runtime_error("save_bundle: cannot write dataset.json");
        out << config_to_json(bundle.config).dump(2) << '\n';
    }
    for (const auto& [name, mat] : bundle.matrices) write_matrix(mat, dir / (name + ".ctfw"));
}

Bundle load_bundle(const std::filesystem::path& dir) {
    std::ifstream in(dir / "dataset.json");
    if (!in) throw std::runtime_error("load_bundle: missing dataset.json in " + dir.string());
    nlohmann::json j;
    in >> j;
    Bundle bundle;
    bundle.config = config_from_json(j);
    for (const auto& mn : kMatrixNames) {
        const auto path = dir / (mn + ".ctfw");
        if (std::filesystem::exists(path)) bundle.matrices[mn] = read_matrix(path);
    }
    return bundle;
}

void export_public(const std::filesystem::path& bundle_dir, const std::filesystem::path& public_dir) {
    std::filesystem::create_directories(public_dir);
    for (const auto& mn : kMatrixNames) {
        if (!mn.ends_with("train")) continue;
        const auto src = bundle_dir / (mn + ".ctfw");
        if (std::filesystem::exists(src))
            std::filesystem::copy_file(src, public_dir / (mn + ".ctfw"),
                                       std::filesystem::copy_options::overwrite_existing);
    }
    std::filesystem::copy_file(bundle_dir / "dataset.json", public_dir / "dataset.json",
                               std::filesystem::copy_options::overwrite_existing);
    // Packaging check: the participant-facing directory must hold no test
    // matrix and no hidden parameter metadata.
    for (const auto& entry : std::filesystem::directory_iterator(public_dir)) {
        const std::string fname = entry.path().filename().string();
        if (fname.find("test") != std::string::npos || fname == "hidden.json")
            throw std::runtime_error("export_public: participant directory would expose " + fname);
    }
}

std::uint64_t bundle_fingerprint(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::uint64_t h = fnv1a64("ctf-bundle");
    for (const auto& f : files) {
        h = fnv1a64(f.filename().string(), h);
        std::ifstream in(f, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        h = fnv1a64(buf.str(), h);
    }
    return h;
}

const TimeSeriesMatrix& TrainView::train(const std::string& key) const {
    const bool known = std::find(kMatrixNames.begin(), kMatrixNames.end(), key) != kMatrixNames.end();
    if (!known || !key.ends_with("train"))
        throw std::runtime_error("TrainView: refusing non-train matrix " + key);
    return bundle_->at(key);
}

bool TrainView::has_train(const std::string& key) const {
    return key.ends_with("train") && bundle_->has(key);
}

TuningSplit make_tuning_split(const TaskSpec& task, const TrainView& view) {
    TuningSplit split;
    const Index M = view.config().M;
    if (task.score_id == "E11" || task.score_id == "E12") {
        const std::string holdout = task.score_id == "E11" ? "X7train" : "X8train";
        for (const auto& key : {std::string("X6train"),
                                task.score_id == "E11" ? std::string("X8train") : std::string("X7train")})
            split.train.push_back(view.train(key));
        const TimeSeriesMatrix& v = view.train(holdout);
        if (v.rows() <= M)
            throw std::runtime_error("make_tuning_split: " + holdout + " too short for burn-in");
        split.burnin = v.top_rows(M);
        split.validation = v.slice_rows(M, v.rows());
        return split;
    }
    const TimeSeriesMatrix& mat = view.train(task.train_keys.at(0));
    const Index cut = static_cast<Index>(0.8 * static_cast<double>(mat.rows()));
    if (cut < 1 || cut >= mat.rows())
        throw std::runtime_error("make_tuning_split: train matrix too short for an 80/20 split");
    split.train.push_back(mat.top_rows(cut));
    split.validation = mat.slice_rows(cut, mat.rows());
    return split;
}

}  // namespace ctf
