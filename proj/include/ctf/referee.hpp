#pragma once

#include "ctf/dataset.hpp"
#include "ctf/metrics.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace ctf {

struct Submission {
    std::string dataset;
    std::string method;
    std::string submitted_at;  // ISO-8601 UTC
    std::string id;            // content hash over manifest + prediction bytes
    std::map<std::string, std::filesystem::path> predictions;  // X1pred..X9pred
    std::map<std::string, std::string> notes;  // per-key ingest findings (missing file, bad shape)
};

struct LedgerEntry {
    std::string id;
    std::string submitted_at;
    ScoreReport report;
};

std::string ledger_entry_to_json(const LedgerEntry& entry);
LedgerEntry ledger_entry_from_json(const nlohmann::json& j);

std::vector<LedgerEntry> read_ledger(const std::filesystem::path& path);

struct LeaderboardRow {
    std::string method;
    std::string id;
    std::string submitted_at;
    double composite = 0.0;
    std::array<double, 12> scores{};
};

// One row per method: best composite (or the latest entry with
// latest=true), ties broken by earlier submission then line order. Sorted by
// composite desc, then submitted_at, then method name.
std::vector<LeaderboardRow> leaderboard(const std::vector<LedgerEntry>& entries,
                                        const std::string& dataset, bool latest = false);

// Canonical JSON; the CLI and the HTTP endpoint emit exactly these bytes.
std::string leaderboard_to_json(const std::string& dataset,
                                const std::vector<LeaderboardRow>& rows);

// Text table: method, Avg Score, E1..E12.
std::string leaderboard_to_text(const std::vector<LeaderboardRow>& rows);

// Hidden-test-set scoring authority. Holds the referee bundle in memory and
// appends crash-safe, advisory-locked JSONL lines to the ledger.
class Referee {
public:
    Referee(std::filesystem::path bundle_dir, std::filesystem::path ledger_path);

    const Bundle& bundle() const { return bundle_; }
    const std::filesystem::path& ledger_path() const { return ledger_path_; }

    // parallelism bound for the twelve tasks of one submission
    void set_workers(Index workers) { workers_ = workers < 1 ? 1 : workers; }

    // Parses and validates a manifest; reads prediction headers only, never
    // test data. Unknown prediction keys are rejected.
    Submission ingest(const std::filesystem::path& manifest_path) const;
    Submission ingest_json(const nlohmann::json& manifest,
                           const std::filesystem::path& base_dir) const;

    // Scores, appends one ledger line (fsync'd), returns the entry. The
    // bundle directory fingerprint is checked before and after scoring.
    LedgerEntry score_and_record(const Submission& submission);

    // Scores without touching the ledger.
    ScoreReport score_only(const Submission& submission) const;

private:
    std::filesystem::path bundle_dir_;
    std::filesystem::path ledger_path_;
    Bundle bundle_;
    Scorer scorer_;
    Index workers_ = 1;
};

struct ServerConfig {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 = pick any free port
    std::filesystem::path bundle_dir;
    std::filesystem::path ledger_path;
    std::filesystem::path inbox_dir;  // prediction paths in POSTed manifests resolve here
};

// HTTP/1.1 referee service: POST /v1/submissions, GET /v1/leaderboard?dataset=,
// GET /v1/scores/{id}. start() serves on a background thread and returns the
// bound port; the destructor stops it.
class RefereeServer {
public:
    explicit RefereeServer(const ServerConfig& config);
    ~RefereeServer();
    RefereeServer(const RefereeServer&) = delete;
    RefereeServer& operator=(const RefereeServer&) = delete;

    int start();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Blocking convenience wrapper around RefereeServer.
void run_server(const ServerConfig& config);

}  // namespace ctf
