#pragma once

#include "ctf/dataset.hpp"
#include "ctf/matrix.hpp"

#include <array>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace ctf {

// Relative Frobenius error over the first k rows.
double short_term_error(const TimeSeriesMatrix& pred, const TimeSeriesMatrix& truth, Index k);

// Log power of the spatial DFT of the last k rows, fftshifted and windowed
// to the 2*kmax+1 central wavenumber bins.
struct SpectralMatrix {
    Matrix log_power;  // k x (2*kmax+1)
};

SpectralMatrix power_spectrum(const TimeSeriesMatrix& mat, Index k, Index kmax);

// Relative Frobenius error between the two log-power matrices.
double long_term_error(const TimeSeriesMatrix& pred, const TimeSeriesMatrix& truth, Index k,
                       Index kmax);

// E = clip(100*(1-S), -100, 100); non-finite S counts as task failure (-100).
double to_score(double s);

constexpr double kScoreFloor = -100.0;

const std::array<std::string, 12>& score_ids();

struct ScoreReport {
    std::string dataset;
    std::string method;
    std::array<double, 12> scores{};                 // E1..E12, clipped
    std::array<std::optional<double>, 12> raw;       // S values where computed
    std::array<std::string, 12> failures;            // reason text, empty = ok
    double composite = 0.0;

    double score(const std::string& id) const;
};

// Canonical serialization: fixed key order, %.17g floats. The ledger and the
// HTTP API both emit exactly these bytes.
std::string report_to_json(const ScoreReport& report);
ScoreReport report_from_json(const nlohmann::json& j);

// Scores submissions against one bundle's hidden test matrices. Truth
// spectra are cached per (truth, k, kmax), so scoring many submissions stays
// cheap; the cache never depends on the predictions.
class Scorer {
public:
    explicit Scorer(const Bundle& bundle);

    // In-memory predictions keyed X1pred..X9pred. Missing or malformed
    // entries score -100 with a recorded reason; nothing throws per task.
    // workers > 1 scores the twelve tasks in parallel; results are
    // bit-identical to the sequential run.
    ScoreReport score(const std::string& method,
                      const std::map<std::string, TimeSeriesMatrix>& predictions,
                      Index workers = 1) const;

    // File-backed predictions; unreadable files score -100 for their tasks.
    ScoreReport score_files(const std::string& method,
                            const std::map<std::string, std::filesystem::path>& predictions,
                            Index workers = 1) const;

private:
    const Bundle* bundle_;
    std::vector<TaskSpec> tasks_;
    mutable std::map<std::string, SpectralMatrix> truth_spectra_;
    mutable std::mutex cache_mutex_;

    const SpectralMatrix& truth_spectrum(const std::string& truth_key, Index k, Index kmax) const;
    void score_task(const TaskSpec& task, const std::map<std::string, TimeSeriesMatrix>& predictions,
                    ScoreReport& report) const;
};

ScoreReport evaluate_submission(const Bundle& bundle, const std::string& method,
                                const std::map<std::string, std::filesystem::path>& predictions);

}  // namespace ctf
