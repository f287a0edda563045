#pragma once

#include "ctf/matrix.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ctf {

struct IndexRange {
    Index start = 0;
    Index end = 0;
    Index rows() const { return end - start; }
};

struct Shape {
    Index rows = 0;
    Index cols = 0;
    bool operator==(const Shape&) const = default;
};

// Canonical matrix names, in serialization order:
// X1train..X10train then X1test..X9test.
const std::vector<std::string>& matrix_names();

// Wiring of one score to its files and metric.
enum class TaskKind { Forecast, Reconstruction, Parametric };
enum class MetricKind { ShortTerm, LongTerm };

struct TaskSpec {
    std::string score_id;  // E1..E12
    TaskKind kind = TaskKind::Forecast;
    MetricKind metric = MetricKind::ShortTerm;
    std::vector<std::string> train_keys;
    std::string burnin_key;  // empty when the task has none
    std::string truth_key;
    std::string pred_key;  // X1pred..X9pred
    Shape pred_shape;
};

struct DatasetConfig {
    std::string name;
    Index n = 0;        // spatial dimension
    Index n_param = 0;  // spatial dimension of the parametric matrices; 0 = same as n
    Index m = 0;        // forecast block length (prediction block is 2m unless indices say otherwise)
    Index M = 0;        // limited-data block length, M <= m
    double dt = 1.0;
    Index k_split = 0;  // short/long split row count
    Index kmax = 100;   // wavenumber truncation
    NoiseSpec noise_low{0.1, 0};
    NoiseSpec noise_high{1.0, 0};
    std::uint64_t seed = 0;
    std::map<std::string, IndexRange> index_table;

    Index cols_for(const std::string& matrix_name) const;
    Shape shape_for(const std::string& matrix_name) const;
    const IndexRange& range_for(const std::string& matrix_name) const;
    void validate() const;
};

nlohmann::ordered_json config_to_json(const DatasetConfig& cfg);
DatasetConfig config_from_json(const nlohmann::json& j);

// Shipped full-size configs ("global-wavefields", "das", "crustal-wavefields")
// and the desk-scale ones used by the generator presets.
DatasetConfig builtin_config(const std::string& name);

// The twelve score wirings for a config, E1..E12 in order.
std::vector<TaskSpec> task_table(const DatasetConfig& cfg);
TaskSpec find_task(const DatasetConfig& cfg, const std::string& score_id);

// --- bundles ------------------------------------------------------------

struct SourceData {
    TimeSeriesMatrix main;                  // drives E1-E10 splits
    std::vector<TimeSeriesMatrix> family;   // >= 5: 3 train, interpolation, extrapolation
};

struct Bundle {
    DatasetConfig config;
    std::map<std::string, TimeSeriesMatrix> matrices;

    bool has(const std::string& key) const { return matrices.count(key) != 0; }
    const TimeSeriesMatrix& at(const std::string& key) const;
    bool has_all_tests() const;
};

// Emits X1train..X10train and X1test..X9test per the config index table.
// Noise realizations are seeded per matrix name, so regeneration is
// bit-identical and independent matrices stay independent.
Bundle make_splits(const SourceData& source, const DatasetConfig& cfg);

void save_bundle(const Bundle& bundle, const std::filesystem::path& dir);
Bundle load_bundle(const std::filesystem::path& dir);

// Copies the participant-facing files (train matrices + dataset.json) and
// fails if the destination would expose a test matrix or hidden metadata.
void export_public(const std::filesystem::path& bundle_dir, const std::filesystem::path& public_dir);

// Content hash over every file in a bundle directory; the referee checks it
// before and after scoring.
std::uint64_t bundle_fingerprint(const std::filesystem::path& dir);

// Train-only window over a bundle. Tuning code sees bundles only through
// this, which refuses every non-train key.
class TrainView {
public:
    explicit TrainView(const Bundle& bundle) : bundle_(&bundle) {}
    const DatasetConfig& config() const { return bundle_->config; }
    const TimeSeriesMatrix& train(const std::string& key) const;
    bool has_train(const std::string& key) const;

private:
    const Bundle* bundle_;
};

struct TuningSplit {
    std::vector<TimeSeriesMatrix> train;
    TimeSeriesMatrix validation;
    std::optional<TimeSeriesMatrix> burnin;
};

// E1-E10: first 80% of the task's train matrix vs its last 20%.
// E11: train {X6train,X8train}, validation X7train (burn-in = its first M rows).
// E12: train {X6train,X7train}, validation X8train (burn-in = its first M rows).
TuningSplit make_tuning_split(const TaskSpec& task, const TrainView& view);

}  // namespace ctf
