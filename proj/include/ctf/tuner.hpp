#pragma once

#include "ctf/baselines.hpp"
#include "ctf/dataset.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace ctf {

struct ParamSpec {
    enum class Kind { Uniform, LogUniform, RandInt, Choice };
    std::string name;
    Kind kind = Kind::Uniform;
    double lo = 0.0;  // randint: inclusive lower, exclusive upper
    double hi = 0.0;
    std::vector<nlohmann::json> options;
};

struct HyperParamSpace {
    std::vector<ParamSpec> params;

    void validate() const;
    // {"params": {"rank": {"kind": "randint", "lo": 3, "hi": 51}, ...}} or the
    // same thing from a YAML file.
    static HyperParamSpace from_json(const nlohmann::json& j);
};

// One config draw; deterministic per (seed, trial_id).
nlohmann::json sample(const HyperParamSpace& space, std::uint64_t seed, std::uint64_t trial_id);

struct TrialRecord {
    std::uint64_t trial_id = 0;
    nlohmann::json config;
    double score = -100.0;  // validation E metric
    Index rung_reached = -1;
    double wall_time_s = 0.0;
    bool failed = false;
    std::string failure;
};

std::string trial_to_json(const TrialRecord& r);

struct TuneBudget {
    Index max_trials = 32;
    double max_seconds = 600.0;
    Index rungs = 1;
    double keep_fraction = 0.5;
    Index workers = 1;
};

struct TuneResult {
    nlohmann::json best_config;
    double best_score = 0.0;
    std::uint64_t best_trial = 0;
    std::vector<TrialRecord> trials;
    Index trainings_executed = 0;
};

// Random search with successive-halving promotion. Rung j trains on the
// trailing keep_fraction^(rungs-1-j) of the tuning-train rows; the top
// keep_fraction of each rung (score desc, trial id asc) is promoted. Only
// train matrices are reachable: the bundle comes in as a TrainView and the
// validation part is carved out of them.
TuneResult tune(const std::string& method, const TaskSpec& task, const TrainView& view,
                const HyperParamSpace& space, const TuneBudget& budget, std::uint64_t seed);

}  // namespace ctf
