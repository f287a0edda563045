// ctf: generate bundles, run baselines, tune, score, and serve the referee.

#include "ctf/baselines.hpp"
#include "ctf/dataset.hpp"
#include "ctf/metrics.hpp"
#include "ctf/referee.hpp"
#include "ctf/synth.hpp"
#include "ctf/tuner.hpp"
#include "ctf/yaml.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace {

namespace fs = std::filesystem;

// CTF_DATA_DIR acts as a fallback root for relative bundle paths.
fs::path resolve_bundle_dir(const fs::path& given) {
    if (fs::exists(given)) return given;
    if (given.is_relative()) {
        if (const char* root = std::getenv("CTF_DATA_DIR")) {
            const fs::path candidate = fs::path(root) / given;
            if (fs::exists(candidate)) return candidate;
        }
    }
    return given;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

int cmd_gen(const std::string& preset, const fs::path& out, std::uint64_t seed, bool json_out) {
    const ctf::Preset p = ctf::make_preset(preset, seed);
    const ctf::Bundle bundle = ctf::make_splits(p.sources, p.config);
    ctf::save_bundle(bundle, out);
    write_text(out / "hidden.json", p.hidden.dump(2) + "\n");
    ctf::export_public(out, out / "public");
    if (json_out) {
        nlohmann::ordered_json doc;
        doc["preset"] = preset;
        doc["seed"] = seed;
        doc["bundle"] = out.string();
        doc["public"] = (out / "public").string();
        doc["matrices"] = bundle.matrices.size();
        std::cout << doc.dump() << '\n';
    } else {
        std::cerr << "wrote bundle " << out.string() << " (" << bundle.matrices.size()
                  << " matrices) and participant copy " << (out / "public").string() << '\n';
    }
    return 0;
}

ctf::TimeSeriesMatrix read_any(const fs::path& path) {
    return path.extension() == ".csv" ? ctf::read_csv(path) : ctf::read_matrix(path);
}

int cmd_split(const fs::path& source, const std::vector<fs::path>& family, const fs::path& config,
              const fs::path& out, bool json_out) {
    ctf::SourceData sources;
    sources.main = read_any(source);
    for (const auto& f : family) sources.family.push_back(read_any(f));
    const ctf::DatasetConfig cfg = ctf::config_from_json(ctf::load_config(config));
    const ctf::Bundle bundle = ctf::make_splits(sources, cfg);
    ctf::save_bundle(bundle, out);
    ctf::export_public(out, out / "public");
    if (json_out) {
        nlohmann::ordered_json doc;
        doc["bundle"] = out.string();
        doc["matrices"] = bundle.matrices.size();
        std::cout << doc.dump() << '\n';
    } else {
        std::cerr << "wrote bundle " << out.string() << '\n';
    }
    return 0;
}

int cmd_baseline(const fs::path& bundle_dir, const std::string& method, const fs::path& config_path,
                 const fs::path& out, bool json_out) {
    const ctf::Bundle bundle = ctf::load_bundle(resolve_bundle_dir(bundle_dir));
    nlohmann::json config = nlohmann::json::object();
    if (!config_path.empty()) config = ctf::load_config(config_path);
    const auto preds = ctf::run_baseline(bundle, method, config);

    fs::create_directories(out);
    nlohmann::ordered_json manifest;
    manifest["dataset"] = bundle.config.name;
    manifest["method"] = method;
    nlohmann::ordered_json files = nlohmann::ordered_json::object();
    for (const auto& [key, mat] : preds) {
        const std::string fname = key + ".ctfw";
        ctf::write_matrix(mat, out / fname);
        files[key] = fname;
    }
    manifest["predictions"] = std::move(files);
    write_text(out / "manifest.json", manifest.dump(2) + "\n");
    if (json_out) {
        nlohmann::ordered_json doc;
        doc["manifest"] = (out / "manifest.json").string();
        doc["predictions"] = preds.size();
        std::cout << doc.dump() << '\n';
    } else {
        std::cerr << "wrote " << preds.size() << " predictions and " << (out / "manifest.json").string()
                  << '\n';
    }
    return 0;
}

int cmd_score(const fs::path& bundle_dir, const fs::path& manifest, const fs::path& ledger,
              ctf::Index workers, bool json_out) {
    const fs::path dir = resolve_bundle_dir(bundle_dir);
    // the ledger path is only touched when --ledger was given
    const fs::path ledger_path = ledger.empty() ? dir / "scores.jsonl" : ledger;
    ctf::Referee referee(dir, ledger_path);
    referee.set_workers(workers);
    const ctf::Submission sub = referee.ingest(manifest);
    const ctf::ScoreReport report =
        ledger.empty() ? referee.score_only(sub) : referee.score_and_record(sub).report;
    if (json_out) {
        std::cout << ctf::report_to_json(report) << '\n';
    } else {
        for (std::size_t i = 0; i < 12; ++i) {
            std::cout << ctf::score_ids()[i] << ' ' << ctf::format_double(report.scores[i]);
            if (!report.failures[i].empty()) std::cout << "  [" << report.failures[i] << ']';
            std::cout << '\n';
        }
        std::cout << "composite " << ctf::format_double(report.composite) << '\n';
    }
    return 0;
}

int cmd_board(const fs::path& ledger, const std::string& dataset, bool latest, bool json_out) {
    const auto entries = ctf::read_ledger(ledger);
    const auto rows = ctf::leaderboard(entries, dataset, latest);
    if (json_out)
        std::cout << ctf::leaderboard_to_json(dataset, rows) << '\n';
    else
        std::cout << ctf::leaderboard_to_text(rows);
    return 0;
}

int cmd_tune(const fs::path& bundle_dir, const std::string& score_id, const std::string& method,
             const fs::path& space_path, const ctf::TuneBudget& budget, std::uint64_t seed,
             const fs::path& trials_out, bool json_out) {
    const ctf::Bundle bundle = ctf::load_bundle(resolve_bundle_dir(bundle_dir));
    const ctf::TrainView view(bundle);
    const ctf::TaskSpec task = ctf::find_task(bundle.config, score_id);
    const ctf::HyperParamSpace space = ctf::HyperParamSpace::from_json(ctf::load_config(space_path));
    const ctf::TuneResult result = ctf::tune(method, task, view, space, budget, seed);

    if (!trials_out.empty()) {
        std::ofstream out(trials_out, std::ios::app);
        if (!out) throw std::runtime_error("cannot write " + trials_out.string());
        for (const auto& trial : result.trials) out << ctf::trial_to_json(trial) << '\n';
    }
    if (json_out) {
        nlohmann::ordered_json doc;
        doc["task"] = score_id;
        doc["method"] = method;
        doc["best_config"] = result.best_config;
        doc["best_score"] = result.best_score;
        doc["best_trial"] = result.best_trial;
        doc["trials"] = result.trials.size();
        doc["trainings_executed"] = result.trainings_executed;
        std::cout << doc.dump() << '\n';
    } else {
        std::cout << "best trial " << result.best_trial << " score "
                  << ctf::format_double(result.best_score) << " config "
                  << result.best_config.dump() << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"common-task benchmark harness for spatio-temporal wavefield forecasting"};
    app.require_subcommand(1);
    app.fallthrough();  // lets --json sit after the subcommand

    bool json_out = false;
    app.add_flag("--json", json_out, "emit exactly one JSON document on stdout");

    // gen
    auto* gen = app.add_subcommand("gen", "synthesize a dataset and write a full task bundle");
    std::string gen_preset = "swell-small";
    fs::path gen_out;
    std::uint64_t gen_seed = 0;
    gen->add_option("--preset", gen_preset, "swell-small | pulse-small | linear-small");
    gen->add_option("--out", gen_out, "bundle directory")->required();
    gen->add_option("--seed", gen_seed, "generation seed (default 0)");

    // split
    auto* split = app.add_subcommand("split", "build a task bundle from existing matrices");
    fs::path split_source, split_config, split_out;
    std::vector<fs::path> split_family;
    split->add_option("--source", split_source, "main trajectory (.ctfw)")->required();
    split->add_option("--family", split_family,
                      "parametric trajectories: 3 train, interpolation, extrapolation")
        ->expected(5);
    split->add_option("--config", split_config, "dataset config (JSON or YAML)")->required();
    split->add_option("--out", split_out, "bundle directory")->required();

    // baseline
    auto* baseline = app.add_subcommand("baseline", "run a reference predictor over all tasks");
    fs::path bl_bundle, bl_config, bl_out;
    std::string bl_method = "zeros";
    baseline->add_option("--bundle", bl_bundle, "bundle directory (train matrices suffice)")
        ->required();
    baseline->add_option("--method", bl_method, "zeros | average | dmd | esn");
    baseline->add_option("--config", bl_config, "method hyperparameters (JSON or YAML)");
    baseline->add_option("--out", bl_out, "submission directory")->required();

    // tune
    auto* tune = app.add_subcommand("tune", "random search with successive halving");
    fs::path tu_bundle, tu_space, tu_trials;
    std::string tu_task = "E1", tu_method = "dmd";
    ctf::TuneBudget budget;
    std::uint64_t tu_seed = 0;
    tune->add_option("--bundle", tu_bundle, "bundle directory")->required();
    tune->add_option("--task", tu_task, "score id E1..E12");
    tune->add_option("--method", tu_method, "zeros | average | dmd | esn");
    tune->add_option("--space", tu_space, "search space (JSON or YAML)")->required();
    tune->add_option("--trials", budget.max_trials, "trial count (default 32)");
    tune->add_option("--seconds", budget.max_seconds, "time budget (default 600)");
    tune->add_option("--rungs", budget.rungs, "successive-halving rungs (default 1)");
    tune->add_option("--keep", budget.keep_fraction, "promotion fraction (default 0.5)");
    tune->add_option("--workers", budget.workers, "parallel trial workers (default 1)");
    tune->add_option("--seed", tu_seed, "sampling seed (default 0)");
    tune->add_option("--out", tu_trials, "append TrialRecords to this JSONL file");

    // score
    auto* score = app.add_subcommand("score", "score a submission manifest against a referee bundle");
    fs::path sc_bundle, sc_manifest, sc_ledger;
    ctf::Index sc_workers = 1;
    score->add_option("--bundle", sc_bundle, "referee bundle directory")->required();
    score->add_option("--manifest", sc_manifest, "submission manifest JSON")->required();
    score->add_option("--ledger", sc_ledger, "append the result to this ledger (jsonl)");
    score->add_option("--workers", sc_workers, "parallel task scoring (default 1)");

    // board
    auto* board = app.add_subcommand("board", "render the leaderboard from a ledger");
    fs::path bo_ledger;
    std::string bo_dataset;
    bool bo_latest = false;
    board->add_option("--ledger", bo_ledger, "scores.jsonl")->required();
    board->add_option("--dataset", bo_dataset, "dataset name")->required();
    board->add_flag("--latest", bo_latest, "rank by latest submission instead of best");

    // serve
    auto* serve = app.add_subcommand("serve", "run the referee HTTP service");
    ctf::ServerConfig server;
    serve->add_option("--bundle", server.bundle_dir, "referee bundle directory")->required();
    serve->add_option("--ledger", server.ledger_path, "ledger path")->required();
    serve->add_option("--inbox", server.inbox_dir, "directory holding submitted prediction files")
        ->required();
    serve->add_option("--port", server.port, "listen port (default 8080)");
    serve->add_option("--host", server.host, "bind address (default 127.0.0.1)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) return cmd_gen(gen_preset, gen_out, gen_seed, json_out);
        if (split->parsed())
            return cmd_split(split_source, split_family, split_config, split_out, json_out);
        if (baseline->parsed()) return cmd_baseline(bl_bundle, bl_method, bl_config, bl_out, json_out);
        if (tune->parsed())
            return cmd_tune(tu_bundle, tu_task, tu_method, tu_space, budget, tu_seed, tu_trials,
                            json_out);
        if (score->parsed())
            return cmd_score(sc_bundle, sc_manifest, sc_ledger, sc_workers, json_out);
        if (board->parsed()) return cmd_board(bo_ledger, bo_dataset, bo_latest, json_out);
        if (serve->parsed()) {
            server.bundle_dir = resolve_bundle_dir(server.bundle_dir);
            std::cerr << "serving " << server.bundle_dir.string() << " on " << server.host << ':'
                      << server.port << '\n';
            ctf::run_server(server);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
