#include "ctf/referee.hpp"

#include <httplib.h>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace ctf {

namespace {

std::string now_utc() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

const std::set<std::string>& prediction_keys() {
    static const std::set<std::string> keys = {"X1pred", "X2pred", "X3pred", "X4pred", "X5pred",
                                               "X6pred", "X7pred", "X8pred", "X9pred"};
    return keys;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

std::string ledger_entry_to_json(const LedgerEntry& entry) {
    std::ostringstream out;
    out << "{\"id\":\"" << entry.id << "\",\"submitted_at\":\"" << entry.submitted_at
        << "\",\"report\":" << report_to_json(entry.report) << "}";
    return out.str();
}

LedgerEntry ledger_entry_from_json(const nlohmann::json& j) {
    LedgerEntry entry;
    entry.id = j.at("id").get<std::string>();
    entry.submitted_at = j.at("submitted_at").get<std::string>();
    entry.report = report_from_json(j.at("report"));
    return entry;
}

std::vector<LedgerEntry> read_ledger(const std::filesystem::path& path) {
    std::vector<LedgerEntry> entries;
    std::ifstream in(path);
    if (!in) return entries;  // an absent ledger is an empty ledger
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            entries.push_back(ledger_entry_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw std::runtime_error("read_ledger: bad line " + std::to_string(lineno) + " in " +
                                     path.string() + ": " + e.what());
        }
    }
    return entries;
}

std::vector<LeaderboardRow> leaderboard(const std::vector<LedgerEntry>& entries,
                                        const std::string& dataset, bool latest) {
    // line order breaks exact ties, so replaying a ledger is reproducible
    std::map<std::string, std::pair<std::size_t, const LedgerEntry*>> chosen;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const LedgerEntry& e = entries[i];
        if (e.report.dataset != dataset) continue;
        auto it = chosen.find(e.report.method);
        if (it == chosen.end()) {
            chosen.emplace(e.report.method, std::make_pair(i, &e));
            continue;
        }
        const LedgerEntry& cur = *it->second.second;
        bool replace;
        if (latest) {
            replace = true;  // later line wins
        } else if (e.report.composite != cur.report.composite) {
            replace = e.report.composite > cur.report.composite;
        } else {
            replace = e.submitted_at < cur.submitted_at;
        }
        if (replace) it->second = std::make_pair(i, &e);
    }

    std::vector<LeaderboardRow> rows;
    for (const auto& [method, picked] : chosen) {
        const LedgerEntry& e = *picked.second;
        LeaderboardRow row;
        row.method = method;
        row.id = e.id;
        row.submitted_at = e.submitted_at;
        row.composite = e.report.composite;
        row.scores = e.report.scores;
        rows.push_back(std::move(row));
    }
    std::sort(rows.begin(), rows.end(), [](const LeaderboardRow& a, const LeaderboardRow& b) {
        if (a.composite != b.composite) return a.composite > b.composite;
        if (a.submitted_at != b.submitted_at) return a.submitted_at < b.submitted_at;
        return a.method < b.method;
    });
    return rows;
}

std::string leaderboard_to_json(const std::string& dataset,
                                const std::vector<LeaderboardRow>& rows) {
    std::ostringstream out;
    out << "{\"dataset\":\"" << dataset << "\",\"rows\":[";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const LeaderboardRow& row = rows[i];
        if (i) out << ',';
        out << "{\"method\":\"" << row.method << "\",\"id\":\"" << row.id
            << "\",\"submitted_at\":\"" << row.submitted_at
            << "\",\"composite\":" << format_double(row.composite) << ",\"scores\":{";
        for (std::size_t s = 0; s < 12; ++s) {
            if (s) out << ',';
            out << '"' << score_ids()[s] << "\":" << format_double(row.scores[s]);
        }
        out << "}}";
    }
    out << "]}";
    return out.str();
}

std::string leaderboard_to_text(const std::vector<LeaderboardRow>& rows) {
    std::ostringstream out;
    char buf[64];
    out << "Model                     Avg Score";
    for (const auto& id : score_ids()) {
        std::snprintf(buf, sizeof(buf), "%9s", id.c_str());
        out << buf;
    }
    out << '\n';
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%-24s %9.2f", row.method.c_str(), row.composite);
        out << buf;
        for (double v : row.scores) {
            std::snprintf(buf, sizeof(buf), "%9.2f", v);
            out << buf;
        }
        out << '\n';
    }
    return out.str();
}

Referee::Referee(std::filesystem::path bundle_dir, std::filesystem::path ledger_path)
    : bundle_dir_(std::move(bundle_dir)),
      ledger_path_(std::move(ledger_path)),
      bundle_(load_bundle(bundle_dir_)),
      scorer_(bundle_) {
    if (!bundle_.has_all_tests())
        throw std::runtime_error("referee bundle required: " + bundle_dir_.string() +
                                 " is missing test matrices");
}

Submission Referee::ingest_json(const nlohmann::json& manifest,
                                const std::filesystem::path& base_dir) const {
    Submission sub;
    sub.dataset = manifest.at("dataset").get<std::string>();
    sub.method = manifest.at("method").get<std::string>();
    sub.submitted_at = manifest.value("submitted_at", now_utc());

    const auto& preds = manifest.at("predictions");
    if (!preds.is_object()) throw std::runtime_error("ingest: predictions must be an object");
    std::map<std::string, Shape> expected;
    for (const auto& task : task_table(bundle_.config)) expected[task.pred_key] = task.pred_shape;

    for (const auto& [key, value] : preds.items()) {
        if (!prediction_keys().count(key))
            throw std::runtime_error("ingest: unknown prediction key " + key);
        std::filesystem::path p = value.get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        sub.predictions[key] = p;
        if (!std::filesystem::exists(p)) {
            sub.notes[key] = "file not found: " + p.string();
            continue;
        }
        try {
            const MatrixShape shape = read_matrix_shape(p);
            const Shape want = expected.at(key);
            if (static_cast<Index>(shape.rows) != want.rows ||
                static_cast<Index>(shape.cols) != want.cols)
                sub.notes[key] = "shape [" + std::to_string(shape.rows) + "," +
                                 std::to_string(shape.cols) + "] does not match expected [" +
                                 std::to_string(want.rows) + "," + std::to_string(want.cols) + "]";
        } catch (const std::exception& e) {
            sub.notes[key] = e.what();
        }
    }

    std::uint64_t h = fnv1a64(sub.dataset);
    h = fnv1a64(sub.method, h);
    for (const auto& [key, path] : sub.predictions) {
        h = fnv1a64(key, h);
        h = std::filesystem::exists(path) ? fnv1a64(read_file_bytes(path), h)
                                          : fnv1a64("missing", h);
    }
    sub.id = hex64(h);
    return sub;
}

Submission Referee::ingest(const std::filesystem::path& manifest_path) const {
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("ingest: cannot open manifest " + manifest_path.string());
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const std::exception& e) {
        throw std::runtime_error("ingest: malformed manifest " + manifest_path.string() + ": " +
                                 e.what());
    }
    return ingest_json(manifest, manifest_path.parent_path());
}

ScoreReport Referee::score_only(const Submission& submission) const {
    return scorer_.score_files(submission.method, submission.predictions, workers_);
}

LedgerEntry Referee::score_and_record(const Submission& submission) {
    const std::uint64_t before = bundle_fingerprint(bundle_dir_);
    LedgerEntry entry;
    entry.id = submission.id;
    entry.submitted_at = submission.submitted_at;
    entry.report = score_only(submission);
    if (bundle_fingerprint(bundle_dir_) != before)
        throw std::runtime_error("referee: hidden bundle changed during scoring");

    const std::string line = ledger_entry_to_json(entry) + "\n";
    const int fd = ::open(ledger_path_.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd < 0) throw std::runtime_error("referee: cannot open ledger " + ledger_path_.string());
    if (::flock(fd, LOCK_EX) != 0) {
        ::close(fd);
        throw std::runtime_error("referee: cannot lock ledger");
    }
    const ssize_t written = ::write(fd, line.data(), line.size());
    const bool ok = written == static_cast<ssize_t>(line.size()) && ::fsync(fd) == 0;
    ::flock(fd, LOCK_UN);
    ::close(fd);
    if (!ok) throw std::runtime_error("referee: ledger append failed, submission not recorded");
    return entry;
}

struct RefereeServer::Impl {
    ServerConfig config;
    std::shared_ptr<Referee> referee;
    std::shared_ptr<std::mutex> write_mutex = std::make_shared<std::mutex>();
    httplib::Server server;
    std::thread thread;
    int port = 0;
};

namespace {

void configure_routes(httplib::Server& server, const std::shared_ptr<Referee>& referee,
                      const std::shared_ptr<std::mutex>& write_mutex,
                      const std::filesystem::path& inbox) {
    server.Post("/v1/submissions", [referee, write_mutex, inbox](const httplib::Request& req,
                                                                 httplib::Response& res) {
        try {
            const nlohmann::json manifest = nlohmann::json::parse(req.body);
            const Submission sub = referee->ingest_json(manifest, inbox);
            std::lock_guard<std::mutex> lock(*write_mutex);
            const LedgerEntry entry = referee->score_and_record(sub);
            res.set_content(report_to_json(entry.report) + "\n", "application/json");
        } catch (const std::exception& e) {
            res.status = 400;
            res.set_content(std::string("{\"error\":\"") + e.what() + "\"}\n", "application/json");
        }
    });
    server.Get("/v1/leaderboard", [referee](const httplib::Request& req, httplib::Response& res) {
        try {
            if (!req.has_param("dataset")) {
                res.status = 400;
                res.set_content("{\"error\":\"missing dataset parameter\"}\n", "application/json");
                return;
            }
            const std::string dataset = req.get_param_value("dataset");
            const auto entries = read_ledger(referee->ledger_path());
            res.set_content(leaderboard_to_json(dataset, leaderboard(entries, dataset)) + "\n",
                            "application/json");
        } catch (const std::exception& e) {
            res.status = 500;
            res.set_content(std::string("{\"error\":\"") + e.what() + "\"}\n", "application/json");
        }
    });
    server.Get(R"(/v1/scores/([0-9a-f]+))", [referee](const httplib::Request& req,
                                                      httplib::Response& res) {
        try {
            const std::string id = req.matches[1];
            const auto entries = read_ledger(referee->ledger_path());
            for (auto it = entries.rbegin(); it != entries.rend(); ++it)
                if (it->id == id) {
                    res.set_content(ledger_entry_to_json(*it) + "\n", "application/json");
                    return;
                }
            res.status = 404;
            res.set_content("{\"error\":\"unknown submission id\"}\n", "application/json");
        } catch (const std::exception& e) {
            res.status = 500;
            res.set_content(std::string("{\"error\":\"") + e.what() + "\"}\n", "application/json");
        }
    });
}

}  // namespace

RefereeServer::RefereeServer(const ServerConfig& config) : impl_(std::make_unique<Impl>()) {
    impl_->config = config;
    impl_->referee = std::make_shared<Referee>(config.bundle_dir, config.ledger_path);
    configure_routes(impl_->server, impl_->referee, impl_->write_mutex, config.inbox_dir);
}

RefereeServer::~RefereeServer() { stop(); }

int RefereeServer::start() {
    if (impl_->thread.joinable()) return impl_->port;
    if (impl_->config.port == 0) {
        impl_->port = impl_->server.bind_to_any_port(impl_->config.host);
        if (impl_->port <= 0) throw std::runtime_error("RefereeServer: cannot bind");
        impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    } else {
        if (!impl_->server.bind_to_port(impl_->config.host, impl_->config.port))
            throw std::runtime_error("RefereeServer: cannot bind " + impl_->config.host + ":" +
                                     std::to_string(impl_->config.port));
        impl_->port = impl_->config.port;
        impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    }
    impl_->server.wait_until_ready();
    return impl_->port;
}

void RefereeServer::stop() {
    if (!impl_ || !impl_->thread.joinable()) return;
    impl_->server.stop();
    impl_->thread.join();
}

void run_server(const ServerConfig& config) {
    RefereeServer server(config);
    const int port = server.start();
    std::fprintf(stderr, "listening on %s:%d\n", config.host.c_str(), port);
    // block until the process is terminated
    while (true) std::this_thread::sleep_for(std::chrono::seconds(3600));
}

}  // namespace ctf
