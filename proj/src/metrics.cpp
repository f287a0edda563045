#include "ctf/metrics.hpp"

#include "ctf/fft.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace ctf {

namespace {

constexpr double kLogFloor = 1e-30;

int score_index(const std::string& id) {
    for (int i = 0; i < 12; ++i)
        if (score_ids()[static_cast<std::size_t>(i)] == id) return i;
    throw std::runtime_error("unknown score id " + id);
}

std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

}  // namespace

const std::array<std::string, 12>& score_ids() {
    static const std::array<std::string, 12> ids = {"E1", "E2", "E3", "E4",  "E5",  "E6",
                                                    "E7", "E8", "E9", "E10", "E11", "E12"};
    return ids;
}

double short_term_error(const TimeSeriesMatrix& pred, const TimeSeriesMatrix& truth, Index k) {
    if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
        throw std::runtime_error("short_term_error: shape mismatch");
    if (k < 1 || k > truth.rows()) throw std::runtime_error("short_term_error: k out of range");
    const double den = truth.values.topRows(k).norm();
    if (den == 0.0) throw std::runtime_error("short_term_error: zero-norm truth window");
    return (truth.values.topRows(k) - pred.values.topRows(k)).norm() / den;
}

SpectralMatrix power_spectrum(const TimeSeriesMatrix& mat, Index k, Index kmax) {
    if (kmax < 1) throw std::runtime_error("power_spectrum: kmax must be >= 1");
    const Index n = mat.cols();
    if (n < 2 * kmax + 2) throw std::runtime_error("power_spectrum: too few columns for kmax");
    if (k < 1 || k > mat.rows()) throw std::runtime_error("power_spectrum: k out of range");

    const Index bins = 2 * kmax + 1;
    const auto block = mat.values.bottomRows(k);
    SpectralMatrix out;
    if ((block.array() == 0.0).all()) {
        out.log_power = Matrix::Zero(k, bins);
        return out;
    }
    out.log_power.resize(k, bins);

    const detail::Dft plan(static_cast<std::size_t>(n));
    // fftshift: coefficient 0 lands at column n/2.
    const Index shift = (n + 1) / 2;
    const Index center = n / 2;
    const Index first_row = mat.rows() - k;
    std::vector<std::complex<double>> coef(static_cast<std::size_t>(n));
    for (Index r = 0; r < k; ++r) {
        // rows are contiguous in the row-major store
        plan.forward(mat.values.data() + (first_row + r) * n, coef.data());
        for (Index w = 0; w < bins; ++w) {
            const Index pos = (center - kmax + w + shift) % n;
            const double p = std::norm(coef[static_cast<std::size_t>(pos)]);
            out.log_power(r, w) = std::log(std::max(p, kLogFloor));
        }
    }
    return out;
}

double long_term_error(const TimeSeriesMatrix& pred, const TimeSeriesMatrix& truth, Index k,
                       Index kmax) {
    if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
        throw std::runtime_error("long_term_error: shape mismatch");
    const SpectralMatrix pt = power_spectrum(truth, k, kmax);
    const SpectralMatrix pp = power_spectrum(pred, k, kmax);
    const double den = pt.log_power.norm();
    if (den == 0.0) throw std::runtime_error("long_term_error: zero-norm truth spectrum");
    return (pt.log_power - pp.log_power).norm() / den;
}

double to_score(double s) {
    if (!std::isfinite(s)) return kScoreFloor;
    const double raw = 100.0 * (1.0 - s);
    return std::clamp(raw, -100.0, 100.0);
}

double ScoreReport::score(const std::string& id) const {
    return scores[static_cast<std::size_t>(score_index(id))];
}

std::string report_to_json(const ScoreReport& report) {
    std::ostringstream out;
    out << "{\"dataset\":\"" << json_escape(report.dataset) << "\",\"method\":\""
        << json_escape(report.method) << "\",\"scores\":{";
    for (std::size_t i = 0; i < 12; ++i) {
        if (i) out << ',';
        out << '"' << score_ids()[i] << "\":" << format_double(report.scores[i]);
    }
    out << "},\"composite\":" << format_double(report.composite) << ",\"raw\":{";
    bool first = true;
    for (std::size_t i = 0; i < 12; ++i) {
        if (!report.raw[i]) continue;
        if (!first) out << ',';
        first = false;
        out << '"' << score_ids()[i] << "\":" << format_double(*report.raw[i]);
    }
    out << "},\"failures\":{";
    first = true;
    for (std::size_t i = 0; i < 12; ++i) {
        if (report.failures[i].empty()) continue;
        if (!first) out << ',';
        first = false;
        out << '"' << score_ids()[i] << "\":\"" << json_escape(report.failures[i]) << '"';
    }
    out << "}}";
    return out.str();
}

ScoreReport report_from_json(const nlohmann::json& j) {
    ScoreReport report;
    report.dataset = j.at("dataset").get<std::string>();
    report.method = j.at("method").get<std::string>();
    for (std::size_t i = 0; i < 12; ++i)
        report.scores[i] = j.at("scores").at(score_ids()[i]).get<double>();
    report.composite = j.at("composite").get<double>();
    if (j.contains("raw"))
        for (std::size_t i = 0; i < 12; ++i)
            if (j.at("raw").contains(score_ids()[i]))
                report.raw[i] = j.at("raw").at(score_ids()[i]).get<double>();
    if (j.contains("failures"))
        for (std::size_t i = 0; i < 12; ++i)
            if (j.at("failures").contains(score_ids()[i]))
                report.failures[i] = j.at("failures").at(score_ids()[i]).get<std::string>();
    return report;
}

Scorer::Scorer(const Bundle& bundle) : bundle_(&bundle), tasks_(task_table(bundle.config)) {}

const SpectralMatrix& Scorer::truth_spectrum(const std::string& truth_key, Index k,
                                             Index kmax) const {
    const std::string cache_key =
        truth_key + "/" + std::to_string(k) + "/" + std::to_string(kmax);
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto it = truth_spectra_.find(cache_key);
    if (it == truth_spectra_.end())
        it = truth_spectra_.emplace(cache_key, power_spectrum(bundle_->at(truth_key), k, kmax)).first;
    return it->second;
}

void Scorer::score_task(const TaskSpec& task,
                        const std::map<std::string, TimeSeriesMatrix>& predictions,
                        ScoreReport& report) const {
    const Index k_split = bundle_->config.k_split;
    const Index kmax = bundle_->config.kmax;
    const auto i = static_cast<std::size_t>(score_index(task.score_id));
    const auto pred_it = predictions.find(task.pred_key);
    if (pred_it == predictions.end()) {
        report.scores[i] = kScoreFloor;
        report.failures[i] = "missing prediction " + task.pred_key;
        return;
    }
    const TimeSeriesMatrix& pred = pred_it->second;
    if (Shape{pred.rows(), pred.cols()} != task.pred_shape) {
        report.scores[i] = kScoreFloor;
        report.failures[i] = task.pred_key + " has shape [" + std::to_string(pred.rows()) + "," +
                             std::to_string(pred.cols()) + "], expected [" +
                             std::to_string(task.pred_shape.rows) + "," +
                             std::to_string(task.pred_shape.cols) + "]";
        return;
    }
    try {
        const TimeSeriesMatrix& truth = bundle_->at(task.truth_key);
        double s = 0.0;
        if (task.kind == TaskKind::Reconstruction) {
            s = short_term_error(pred, truth, truth.rows());
        } else if (task.metric == MetricKind::ShortTerm) {
            s = short_term_error(pred, truth, k_split);
        } else {
            const SpectralMatrix& pt = truth_spectrum(task.truth_key, k_split, kmax);
            const SpectralMatrix pp = power_spectrum(pred, k_split, kmax);
            const double den = pt.log_power.norm();
            if (den == 0.0) throw std::runtime_error("zero-norm truth spectrum");
            s = (pt.log_power - pp.log_power).norm() / den;
        }
        if (std::isfinite(s)) {
            report.raw[i] = s;
            report.scores[i] = to_score(s);
        } else {
            report.scores[i] = kScoreFloor;
            report.failures[i] = "non-finite error value";
        }
    } catch (const std::exception& e) {
        report.scores[i] = kScoreFloor;
        report.failures[i] = e.what();
    }
}

ScoreReport Scorer::score(const std::string& method,
                          const std::map<std::string, TimeSeriesMatrix>& predictions,
                          Index workers) const {
    ScoreReport report;
    report.dataset = bundle_->config.name;
    report.method = method;

    if (workers <= 1) {
        for (const TaskSpec& task : tasks_) score_task(task, predictions, report);
    } else {
        // each task writes only its own report slot
        std::atomic<std::size_t> next{0};
        auto runner = [&] {
            for (std::size_t t = next.fetch_add(1); t < tasks_.size(); t = next.fetch_add(1))
                score_task(tasks_[t], predictions, report);
        };
        std::vector<std::thread> pool;
        const auto count = std::min<std::size_t>(static_cast<std::size_t>(workers), tasks_.size());
        pool.reserve(count);
        for (std::size_t w = 0; w < count; ++w) pool.emplace_back(runner);
        for (auto& th : pool) th.join();
    }

    double sum = 0.0;
    for (double v : report.scores) sum += v;
    report.composite = sum / 12.0;
    return report;
}

ScoreReport Scorer::score_files(const std::string& method,
                                const std::map<std::string, std::filesystem::path>& predictions,
                                Index workers) const {
    std::map<std::string, TimeSeriesMatrix> loaded;
    std::map<std::string, std::string> load_failures;
    for (const auto& [key, path] : predictions) {
        try {
            loaded[key] = read_matrix(path);
        } catch (const std::exception& e) {
            load_failures[key] = e.what();
        }
    }
    ScoreReport report = score(method, loaded, workers);
    // A file that failed to parse is a failed task, not a missing one.
    for (const TaskSpec& task : tasks_) {
        auto it = load_failures.find(task.pred_key);
        if (it == load_failures.end()) continue;
        const auto i = static_cast<std::size_t>(score_index(task.score_id));
        report.failures[i] = it->second;
        report.scores[i] = kScoreFloor;
        report.raw[i].reset();
    }
    double sum = 0.0;
    for (double v : report.scores) sum += v;
    report.composite = sum / 12.0;
    return report;
}

ScoreReport evaluate_submission(const Bundle& bundle, const std::string& method,
                                const std::map<std::string, std::filesystem::path>& predictions) {
    return Scorer(bundle).score_files(method, predictions);
}

}  // namespace ctf
