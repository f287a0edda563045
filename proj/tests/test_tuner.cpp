#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ctf/synth.hpp"
#include "ctf/tuner.hpp"

#include <cmath>
#include <map>

using namespace ctf;

namespace {

HyperParamSpace rank_space(Index lo, Index hi) {
    return HyperParamSpace::from_json(nlohmann::json{
        {"params", {{"rank", {{"kind", "randint"}, {"lo", lo}, {"hi", hi}}},
                    {"delay", {{"kind", "choice"}, {"options", {0}}}}}}});
}

// planted rank-3 unitary system with mild observation noise
Bundle linear_bundle(std::uint64_t seed) {
    const Preset preset = make_preset("linear-small", seed);
    return make_splits(preset.sources, preset.config);
}

Bundle train_only(Bundle bundle) {
    for (auto it = bundle.matrices.begin(); it != bundle.matrices.end();)
        it = it->first.ends_with("test") ? bundle.matrices.erase(it) : std::next(it);
    return bundle;
}

}  // namespace

TEST_CASE("samples respect bounds and distributions") {
    const HyperParamSpace space = HyperParamSpace::from_json(nlohmann::json{
        {"params",
         {{"lr", {{"kind", "loguniform"}, {"lo", 1e-5}, {"hi", 1e-2}}},
          {"g", {{"kind", "choice"}, {"options", {16, 32, 64, 128}}}},
          {"rank", {{"kind", "randint"}, {"lo", 3}, {"hi", 51}}},
          {"rho", {{"kind", "uniform"}, {"lo", 0.02}, {"hi", 1.0}}}}}});

    std::map<int, int> choice_counts;
    Index rank_min = 1000, rank_max = -1;
    for (std::uint64_t trial = 0; trial < 10000; ++trial) {
        const nlohmann::json config = sample(space, 1, trial);
        const double lr = config.at("lr").get<double>();
        CHECK(lr >= 1e-5);
        CHECK(lr <= 1e-2);
        const double rho = config.at("rho").get<double>();
        CHECK(rho >= 0.02);
        CHECK(rho <= 1.0);
        const Index rank = config.at("rank").get<Index>();
        rank_min = std::min(rank_min, rank);
        rank_max = std::max(rank_max, rank);
        choice_counts[config.at("g").get<int>()] += 1;
    }
    // randint is inclusive-lower / exclusive-upper
    CHECK(rank_min == 3);
    CHECK(rank_max == 50);
    for (int option : {16, 32, 64, 128}) {
        const double freq = choice_counts[option] / 10000.0;
        CHECK(freq > 0.22);
        CHECK(freq < 0.28);
    }
}

TEST_CASE("sampling is deterministic per (seed, trial)") {
    const HyperParamSpace space = rank_space(1, 11);
    CHECK(sample(space, 5, 3) == sample(space, 5, 3));
    CHECK(sample(space, 5, 3) != sample(space, 5, 4));
    CHECK(sample(space, 6, 3) != sample(space, 5, 3));
}

TEST_CASE("space validation rejects bad specs") {
    CHECK_THROWS_WITH_AS(HyperParamSpace::from_json(nlohmann::json{
                             {"params", {{"x", {{"kind", "loguniform"}, {"lo", 0.0}, {"hi", 1.0}}}}}}),
                         doctest::Contains("loguniform"), std::runtime_error);
    CHECK_THROWS_WITH_AS(
        HyperParamSpace::from_json(nlohmann::json{
            {"params", {{"x", {{"kind", "choice"}, {"options", nlohmann::json::array()}}}}}}),
        doctest::Contains("choice"), std::runtime_error);
    CHECK_THROWS_WITH_AS(HyperParamSpace::from_json(nlohmann::json{
                             {"params", {{"x", {{"kind", "wat"}, {"lo", 0.0}, {"hi", 1.0}}}}}}),
                         doctest::Contains("unknown kind"), std::runtime_error);
}

TEST_CASE("single rung degenerates to pure random search") {
    const Bundle bundle = train_only(linear_bundle(3));
    const TrainView view(bundle);
    const TaskSpec e1 = find_task(bundle.config, "E1");
    TuneBudget budget;
    budget.max_trials = 8;
    budget.rungs = 1;
    budget.max_seconds = 1e9;
    const TuneResult result = tune("dmd", e1, view, rank_space(1, 11), budget, 0);
    CHECK(result.trainings_executed == 8);
    CHECK(result.trials.size() == 8);
    double best = -1e300;
    for (const auto& trial : result.trials) best = std::max(best, trial.score);
    CHECK(result.best_score == best);
}

TEST_CASE("successive halving respects the training bound") {
    const Bundle bundle = train_only(linear_bundle(4));
    const TrainView view(bundle);
    const TaskSpec e1 = find_task(bundle.config, "E1");
    TuneBudget budget;
    budget.max_trials = 16;
    budget.rungs = 3;
    budget.keep_fraction = 0.5;
    budget.max_seconds = 1e9;
    const TuneResult result = tune("dmd", e1, view, rank_space(1, 11), budget, 1);
    CHECK(result.trainings_executed <= 16 + 8 + 4);
    CHECK(result.trainings_executed == 28);  // nothing failed
    Index top_rung = 0;
    for (const auto& trial : result.trials) top_rung = std::max(top_rung, trial.rung_reached);
    CHECK(top_rung == 2);
}

TEST_CASE("identical budgets replay identical trial records") {
    const Bundle bundle = train_only(linear_bundle(5));
    const TrainView view(bundle);
    const TaskSpec e1 = find_task(bundle.config, "E1");
    TuneBudget budget;
    budget.max_trials = 10;
    budget.rungs = 2;
    budget.max_seconds = 1e9;

    const TuneResult a = tune("dmd", e1, view, rank_space(1, 11), budget, 7);
    const TuneResult b = tune("dmd", e1, view, rank_space(1, 11), budget, 7);
    REQUIRE(a.trials.size() == b.trials.size());
    for (std::size_t i = 0; i < a.trials.size(); ++i) {
        CHECK(a.trials[i].trial_id == b.trials[i].trial_id);
        CHECK(a.trials[i].config == b.trials[i].config);
        CHECK(a.trials[i].score == b.trials[i].score);
        CHECK(a.trials[i].rung_reached == b.trials[i].rung_reached);
    }
    CHECK(a.best_trial == b.best_trial);

    // workers must not change outcomes
    budget.workers = 4;
    const TuneResult c = tune("dmd", e1, view, rank_space(1, 11), budget, 7);
    CHECK(c.best_trial == a.best_trial);
    for (std::size_t i = 0; i < a.trials.size(); ++i) CHECK(c.trials[i].score == a.trials[i].score);
}

TEST_CASE("the tuner never needs test matrices") {
    // every X*test entry has been deleted; tuning must still work
    const Bundle bundle = train_only(linear_bundle(6));
    CHECK(!bundle.has("X1test"));
    const TrainView view(bundle);
    TuneBudget budget;
    budget.max_trials = 4;
    budget.max_seconds = 1e9;
    for (const std::string id : {"E1", "E3", "E11"}) {
        const TuneResult result = tune("dmd", find_task(bundle.config, id), view,
                                       rank_space(1, 8), budget, 2);
        CHECK(result.trials.size() == 4);
    }
}

TEST_CASE("planted-rank task is solved with a high validation score") {
    const Bundle bundle = train_only(linear_bundle(0));
    const TrainView view(bundle);
    const TaskSpec e1 = find_task(bundle.config, "E1");
    TuneBudget budget;
    budget.max_trials = 16;
    budget.rungs = 1;
    budget.max_seconds = 1e9;
    const TuneResult result = tune("dmd", e1, view, rank_space(1, 11), budget, 3);
    CHECK(result.best_score > 99.0);

    // exact-rank oracle: requested ranks above the planted one truncate back,
    // so the winning model's effective rank is the true rank
    const TuningSplit split = make_tuning_split(e1, view);
    const DMDModel best = dmd_fit(split.train[0], dmd_config_from_json(result.best_config));
    CHECK(best.effective_rank == 3);
    CHECK(result.best_config.at("rank").get<Index>() >= 3);

    std::vector<double> scores;
    for (const auto& trial : result.trials) scores.push_back(trial.score);
    std::sort(scores.begin(), scores.end());
    CHECK(result.best_score >= scores[scores.size() / 2]);
}

TEST_CASE("all-failing trials raise an error carrying the log") {
    const Bundle bundle = train_only(linear_bundle(7));
    const TrainView view(bundle);
    const TaskSpec e1 = find_task(bundle.config, "E1");
    // spinup larger than the train split kills every esn trial
    const HyperParamSpace space = HyperParamSpace::from_json(nlohmann::json{
        {"params", {{"N_spin", {{"kind", "choice"}, {"options", {100000}}}},
                    {"N_h", {{"kind", "choice"}, {"options", {20}}}},
                    {"L", {{"kind", "choice"}, {"options", {0}}}}}}});
    TuneBudget budget;
    budget.max_trials = 3;
    budget.max_seconds = 1e9;
    CHECK_THROWS_WITH_AS(tune("esn", e1, view, space, budget, 0),
                         doctest::Contains("all trials failed"), std::runtime_error);
}

TEST_CASE("trial records serialize one json line each") {
    TrialRecord rec;
    rec.trial_id = 3;
    rec.config = {{"rank", 5}};
    rec.score = 91.25;
    rec.rung_reached = 1;
    rec.wall_time_s = 0.125;
    const std::string line = trial_to_json(rec);
    const nlohmann::json j = nlohmann::json::parse(line);
    CHECK(j.at("trial_id") == 3);
    CHECK(j.at("config").at("rank") == 5);
    CHECK(j.at("score") == 91.25);
    CHECK(j.at("failed") == false);
}
