#include "ctf/tuner.hpp"

#include "ctf/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace ctf {

void HyperParamSpace::validate() const {
    if (params.empty()) throw std::runtime_error("HyperParamSpace: no parameters");
    for (const auto& p : params) {
        if (p.name.empty()) throw std::runtime_error("HyperParamSpace: unnamed parameter");
        switch (p.kind) {
            case ParamSpec::Kind::Uniform:
            case ParamSpec::Kind::RandInt:
                if (!std::isfinite(p.lo) || !std::isfinite(p.hi) || !(p.lo < p.hi))
                    throw std::runtime_error("HyperParamSpace: bad bounds for " + p.name);
                break;
            case ParamSpec::Kind::LogUniform:
                if (!(p.lo > 0.0) || !(p.hi > p.lo) || !std::isfinite(p.hi))
                    throw std::runtime_error(
                        "HyperParamSpace: loguniform bounds must be finite and > 0 for " + p.name);
                break;
            case ParamSpec::Kind::Choice:
                if (p.options.empty())
                    throw std::runtime_error("HyperParamSpace: empty choice list for " + p.name);
                break;
        }
    }
}

HyperParamSpace HyperParamSpace::from_json(const nlohmann::json& j) {
    const nlohmann::json& params = j.contains("params") ? j.at("params") : j;
    if (!params.is_object()) throw std::runtime_error("HyperParamSpace: expected a params object");
    HyperParamSpace space;
    for (const auto& [name, body] : params.items()) {
        ParamSpec spec;
        spec.name = name;
        const std::string kind = body.at("kind").get<std::string>();
        if (kind == "uniform") {
            spec.kind = ParamSpec::Kind::Uniform;
        } else if (kind == "loguniform" || kind == "log_uniform") {
            spec.kind = ParamSpec::Kind::LogUniform;
        } else if (kind == "randint" || kind == "rand_int") {
            spec.kind = ParamSpec::Kind::RandInt;
        } else if (kind == "choice") {
            spec.kind = ParamSpec::Kind::Choice;
        } else {
            throw std::runtime_error("HyperParamSpace: unknown kind " + kind + " for " + name);
        }
        if (spec.kind == ParamSpec::Kind::Choice) {
            for (const auto& opt : body.at("options")) spec.options.push_back(opt);
        } else {
            spec.lo = body.at("lo").get<double>();
            spec.hi = body.at("hi").get<double>();
        }
        space.params.push_back(std::move(spec));
    }
    space.validate();
    return space;
}

nlohmann::json sample(const HyperParamSpace& space, std::uint64_t seed, std::uint64_t trial_id) {
    Rng rng(derive_seed(seed, "sample-" + std::to_string(trial_id)));
    nlohmann::json config = nlohmann::json::object();
    for (const auto& p : space.params) {
        switch (p.kind) {
            case ParamSpec::Kind::Uniform:
                config[p.name] = rng.uniform(p.lo, p.hi);
                break;
            case ParamSpec::Kind::LogUniform:
                config[p.name] = std::exp(rng.uniform(std::log(p.lo), std::log(p.hi)));
                break;
            case ParamSpec::Kind::RandInt:
                config[p.name] = rng.randint(static_cast<std::int64_t>(p.lo),
                                             static_cast<std::int64_t>(p.hi));
                break;
            case ParamSpec::Kind::Choice:
                config[p.name] =
                    p.options[static_cast<std::size_t>(rng.randint(0, static_cast<std::int64_t>(p.options.size())))];
                break;
        }
    }
    return config;
}

std::string trial_to_json(const TrialRecord& r) {
    std::ostringstream out;
    out << "{\"trial_id\":" << r.trial_id << ",\"config\":" << r.config.dump()
        << ",\"score\":" << format_double(r.score)
        << ",\"rung_reached\":" << r.rung_reached
        << ",\"wall_time_s\":" << format_double(r.wall_time_s)
        << ",\"failed\":" << (r.failed ? "true" : "false") << ",\"failure\":\"" << r.failure
        << "\"}";
    return out.str();
}

namespace {

// Rung budgets scale the training data: plain row fraction for most methods,
// rows-after-spinup for reservoirs (the spin-up transient is always paid).
TimeSeriesMatrix trailing_fraction(const TimeSeriesMatrix& mat, double fraction,
                                   const std::string& method, const nlohmann::json& config) {
    if (fraction >= 1.0) return mat;
    Index rows;
    if (method == "esn") {
        const Index spinup = config.contains("N_spin") ? config.at("N_spin").get<Index>()
                                                       : ESNConfig{}.spinup;
        const Index usable = mat.rows() - spinup - 1;
        rows = spinup + 2 + static_cast<Index>(std::floor(fraction * static_cast<double>(usable)));
    } else {
        rows = static_cast<Index>(std::floor(fraction * static_cast<double>(mat.rows())));
    }
    return mat.bottom_rows(std::clamp<Index>(rows, std::min<Index>(2, mat.rows()), mat.rows()));
}

double validation_score(const Forecaster& model, const TuningSplit& split, const TaskSpec& task,
                        const DatasetConfig& cfg) {
    const TimeSeriesMatrix& val = split.validation;
    const TimeSeriesMatrix pred = split.burnin ? model.forecast_from(*split.burnin, val.rows())
                                               : model.forecast(val.rows());
    const Index k = std::min(cfg.k_split, val.rows());
    double s;
    if (task.kind == TaskKind::Reconstruction) {
        s = short_term_error(pred, val, val.rows());
    } else if (task.metric == MetricKind::ShortTerm) {
        s = short_term_error(pred, val, k);
    } else {
        s = long_term_error(pred, val, k, cfg.kmax);
    }
    return to_score(s);
}

}  // namespace

TuneResult tune(const std::string& method, const TaskSpec& task, const TrainView& view,
                const HyperParamSpace& space, const TuneBudget& budget, std::uint64_t seed) {
    space.validate();
    if (budget.max_trials < 1) throw std::runtime_error("tune: max_trials must be >= 1");
    if (budget.rungs < 1) throw std::runtime_error("tune: rungs must be >= 1");
    if (!(budget.keep_fraction > 0.0 && budget.keep_fraction <= 1.0))
        throw std::runtime_error("tune: keep_fraction must be in (0, 1]");

    const TuningSplit split = make_tuning_split(task, view);
    const DatasetConfig& cfg = view.config();

    std::vector<TrialRecord> records(static_cast<std::size_t>(budget.max_trials));
    for (std::size_t i = 0; i < records.size(); ++i) {
        records[i].trial_id = i;
        records[i].config = sample(space, seed, i);
        if (!records[i].config.contains("seed"))
            records[i].config["seed"] = derive_seed(seed, "trial-" + std::to_string(i));
    }

    std::vector<std::uint64_t> active(static_cast<std::size_t>(budget.max_trials));
    for (std::size_t i = 0; i < active.size(); ++i) active[i] = i;

    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&start] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    std::atomic<Index> trainings{0};
    for (Index rung = 0; rung < budget.rungs; ++rung) {
        const double fraction =
            std::pow(budget.keep_fraction, static_cast<double>(budget.rungs - 1 - rung));
        std::vector<char> ran(active.size(), 0);

        auto run_trial = [&](std::size_t slot) {
            if (elapsed() > budget.max_seconds) return;
            TrialRecord& rec = records[static_cast<std::size_t>(active[slot])];
            const auto t0 = std::chrono::steady_clock::now();
            try {
                std::vector<TimeSeriesMatrix> trains;
                trains.reserve(split.train.size());
                for (const auto& t : split.train)
                    trains.push_back(trailing_fraction(t, fraction, method, rec.config));
                auto model = make_forecaster(method, rec.config);
                model->fit(trains);
                rec.score = validation_score(*model, split, task, cfg);
                rec.failed = false;
                rec.failure.clear();
            } catch (const std::exception& e) {
                rec.failed = true;
                rec.failure = e.what();
                rec.score = -100.0;
            }
            rec.rung_reached = rung;
            rec.wall_time_s +=
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            trainings.fetch_add(1, std::memory_order_relaxed);
            ran[slot] = 1;
        };

        if (budget.workers <= 1) {
            for (std::size_t slot = 0; slot < active.size(); ++slot) run_trial(slot);
        } else {
            std::atomic<std::size_t> next{0};
            const auto worker_count =
                std::min<std::size_t>(static_cast<std::size_t>(budget.workers), active.size());
            std::vector<std::thread> workers;
            workers.reserve(worker_count);
            for (std::size_t w = 0; w < worker_count; ++w)
                workers.emplace_back([&] {
                    for (std::size_t slot = next.fetch_add(1); slot < active.size();
                         slot = next.fetch_add(1))
                        run_trial(slot);
                });
            for (auto& t : workers) t.join();
        }

        if (rung + 1 == budget.rungs) break;
        // Promotion is decided after the whole rung completes, ordered by
        // (score desc, trial id asc), so worker scheduling cannot change it.
        std::vector<std::uint64_t> survivors;
        for (std::size_t slot = 0; slot < active.size(); ++slot) {
            const TrialRecord& rec = records[static_cast<std::size_t>(active[slot])];
            if (ran[slot] && !rec.failed) survivors.push_back(active[slot]);
        }
        std::sort(survivors.begin(), survivors.end(), [&records](std::uint64_t a, std::uint64_t b) {
            const TrialRecord& ra = records[static_cast<std::size_t>(a)];
            const TrialRecord& rb = records[static_cast<std::size_t>(b)];
            if (ra.score != rb.score) return ra.score > rb.score;
            return a < b;
        });
        const auto keep = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::floor(budget.keep_fraction *
                                                   static_cast<double>(survivors.size()))));
        if (survivors.empty()) break;
        survivors.resize(std::min(keep, survivors.size()));
        active = std::move(survivors);
    }

    TuneResult result;
    result.trainings_executed = trainings.load();
    bool any_ok = false;
    std::ostringstream failure_log;
    for (const auto& rec : records) {
        if (rec.rung_reached < 0) continue;  // never scheduled (time budget)
        result.trials.push_back(rec);
        if (!rec.failed) any_ok = true;
        else failure_log << "trial " << rec.trial_id << ": " << rec.failure << '\n';
    }
    if (result.trials.empty()) throw std::runtime_error("tune: time budget exhausted before any trial ran");
    if (!any_ok)
        throw std::runtime_error("tune: all trials failed\n" + failure_log.str());

    const TrialRecord* best = nullptr;
    for (const auto& rec : result.trials) {
        if (rec.failed) continue;
        if (!best || rec.score > best->score ||
            (rec.score == best->score && rec.rung_reached > best->rung_reached) ||
            (rec.score == best->score && rec.rung_reached == best->rung_reached &&
             rec.trial_id < best->trial_id))
            best = &rec;
    }
    result.best_config = best->config;
    result.best_score = best->score;
    result.best_trial = best->trial_id;
    return result;
}

}  // namespace ctf
