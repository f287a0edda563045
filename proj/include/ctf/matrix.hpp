#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <utility>

namespace ctf {

// Row index = time step, column index = spatial channel.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

struct TimeSeriesMatrix {
    Matrix values;
    double dt = 0.0;  // seconds per row; 0 = unspecified

    TimeSeriesMatrix() = default;
    explicit TimeSeriesMatrix(Matrix v, double dt_ = 0.0) : values(std::move(v)), dt(dt_) {}

    Index rows() const { return values.rows(); }
    Index cols() const { return values.cols(); }

    static TimeSeriesMatrix zeros(Index rows, Index cols, double dt = 0.0) {
        return TimeSeriesMatrix(Matrix::Zero(rows, cols), dt);
    }

    TimeSeriesMatrix top_rows(Index n) const { return TimeSeriesMatrix(values.topRows(n), dt); }
    TimeSeriesMatrix bottom_rows(Index n) const { return TimeSeriesMatrix(values.bottomRows(n), dt); }
    TimeSeriesMatrix slice_rows(Index start, Index end) const {
        return TimeSeriesMatrix(values.middleRows(start, end - start), dt);
    }
};

// Per-event scalar normalization statistics.
struct NormStats {
    double mean = 0.0;
    double std = 1.0;  // population std, > 0
};

struct NoiseSpec {
    double sigma_rel = 0.0;  // noise std relative to signal std, >= 0
    std::uint64_t seed = 0;
};

double matrix_mean(const TimeSeriesMatrix& mat);
double matrix_population_std(const TimeSeriesMatrix& mat);

// Zero mean / unit population std over all entries jointly. Throws on a
// constant matrix (std = 0).
std::pair<TimeSeriesMatrix, NormStats> normalize(const TimeSeriesMatrix& mat);
TimeSeriesMatrix denormalize(const TimeSeriesMatrix& mat, const NormStats& stats);

// out = mat + g, g i.i.d. Gaussian with std = sigma_rel * std(mat).
// Deterministic given the seed; sigma_rel = 0 returns the input bitwise.
TimeSeriesMatrix add_noise(const TimeSeriesMatrix& mat, const NoiseSpec& spec);

// --- container IO ------------------------------------------------------
//
// CTFW binary container, little-endian:
//   bytes 0-3   magic "CTFW"
//   byte  4     version = 1
//   byte  5     dtype code 1 (f64 LE)
//   bytes 6-7   reserved (0)
//   bytes 8-15  rows (u64)
//   bytes 16-23 cols (u64)
//   then rows*cols f64 values, row-major.

void write_matrix(const TimeSeriesMatrix& mat, const std::filesystem::path& path);
TimeSeriesMatrix read_matrix(const std::filesystem::path& path);

struct MatrixShape {
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
};

// Header-only read; validates magic/version/dtype without touching the payload.
MatrixShape read_matrix_shape(const std::filesystem::path& path);

// Header-free comma-separated interchange adapter.
void write_csv(const TimeSeriesMatrix& mat, const std::filesystem::path& path);
TimeSeriesMatrix read_csv(const std::filesystem::path& path);

// --- deterministic randomness ------------------------------------------

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 1469598103934665603ULL);

// Stable per-name seed derivation, so parallel generation cannot reorder draws.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name);

// mt19937_64 plus explicit bit-to-double mappings; the standard distributions
// are implementation-defined, these are not.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Box-Muller; one spare kept across calls.
    double gaussian();

    // [lo, hi) integer draw.
    std::int64_t randint(std::int64_t lo, std::int64_t hi);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// %.17g formatting used by every canonical JSON/CSV writer.
std::string format_double(double v);

}  // namespace ctf
