#include "ctf/matrix.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

static_assert(std::endian::native == std::endian::little, "CTFW IO assumes a little-endian host");
static_assert(sizeof(double) == 8 && std::numeric_limits<double>::is_iec559);

namespace ctf {

namespace {

constexpr char kMagic[4] = {'C', 'T', 'F', 'W'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kDtypeF64 = 1;
constexpr std::size_t kHeaderSize = 24;
// Rejects absurd headers before allocating the payload.
constexpr std::uint64_t kMaxElements = 1ull << 31;

void put_u64(unsigned char* p, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}

std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

[[noreturn]] void fail(const std::string& what, const std::filesystem::path& path) {
    throw std::runtime_error(what + ": " + path.string());
}

}  // namespace

double matrix_mean(const TimeSeriesMatrix& mat) { return mat.values.mean(); }

double matrix_population_std(const TimeSeriesMatrix& mat) {
    const double mean = mat.values.mean();
    const double var = (mat.values.array() - mean).square().sum() /
                       static_cast<double>(mat.values.size());
    return std::sqrt(var);
}

std::pair<TimeSeriesMatrix, NormStats> normalize(const TimeSeriesMatrix& mat) {
    if (mat.values.size() == 0) throw std::runtime_error("normalize: empty matrix");
    NormStats stats;
    stats.mean = matrix_mean(mat);
    stats.std = matrix_population_std(mat);
    if (!(stats.std > 0.0))
        throw std::runtime_error("normalize: degenerate input (constant matrix, std = 0)");
    TimeSeriesMatrix out(((mat.values.array() - stats.mean) / stats.std).matrix(), mat.dt);
    return {std::move(out), stats};
}

TimeSeriesMatrix denormalize(const TimeSeriesMatrix& mat, const NormStats& stats) {
    if (!(stats.std > 0.0)) throw std::runtime_error("denormalize: NormStats.std must be > 0");
    return TimeSeriesMatrix((mat.values.array() * stats.std + stats.mean).matrix(), mat.dt);
}

TimeSeriesMatrix add_noise(const TimeSeriesMatrix& mat, const NoiseSpec& spec) {
    if (spec.sigma_rel < 0.0) throw std::runtime_error("add_noise: sigma_rel must be >= 0");
    if (spec.sigma_rel == 0.0) return mat;
    const double sigma = spec.sigma_rel * matrix_population_std(mat);
    Rng rng(spec.seed);
    TimeSeriesMatrix out = mat;
    double* p = out.values.data();
    const Index size = out.values.size();
    for (Index i = 0; i < size; ++i) p[i] += sigma * rng.gaussian();
    return out;
}

void write_matrix(const TimeSeriesMatrix& mat, const std::filesystem::path& path) {
    if (mat.rows() < 1 || mat.cols() < 1)
        throw std::runtime_error("write_matrix: matrix must have rows >= 1 and cols >= 1");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail("write_matrix: cannot open", path);

    unsigned char header[kHeaderSize] = {};
    std::memcpy(header, kMagic, 4);
    header[4] = kVersion;
    header[5] = kDtypeF64;
    put_u64(header + 8, static_cast<std::uint64_t>(mat.rows()));
    put_u64(header + 16, static_cast<std::uint64_t>(mat.cols()));
    out.write(reinterpret_cast<const char*>(header), kHeaderSize);
    // values is row-major and contiguous; doubles are IEEE-754 LE here.
    out.write(reinterpret_cast<const char*>(mat.values.data()),
              static_cast<std::streamsize>(mat.values.size() * sizeof(double)));
    out.flush();
    if (!out) fail("write_matrix: IO failure", path);
}

namespace {

MatrixShape read_validated_header(std::ifstream& in, const std::filesystem::path& path) {
    unsigned char header[kHeaderSize];
    in.read(reinterpret_cast<char*>(header), kHeaderSize);
    if (in.gcount() != static_cast<std::streamsize>(kHeaderSize))
        fail("read_matrix: file too short for header", path);
    if (std::memcmp(header, kMagic, 4) != 0) fail("read_matrix: bad magic", path);
    if (header[4] != kVersion) fail("read_matrix: unsupported version", path);
    if (header[5] != kDtypeF64) fail("read_matrix: unsupported dtype", path);
    MatrixShape shape{get_u64(header + 8), get_u64(header + 16)};
    if (shape.rows < 1 || shape.cols < 1) fail("read_matrix: empty shape in header", path);
    if (shape.rows > kMaxElements || shape.cols > kMaxElements ||
        shape.rows * shape.cols > kMaxElements)
        fail("read_matrix: implausible shape in header", path);
    return shape;
}

}  // namespace

MatrixShape read_matrix_shape(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("read_matrix: cannot open", path);
    return read_validated_header(in, path);
}

TimeSeriesMatrix read_matrix(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("read_matrix: cannot open", path);
    const MatrixShape shape = read_validated_header(in, path);

    TimeSeriesMatrix mat;
    mat.values.resize(static_cast<Index>(shape.rows), static_cast<Index>(shape.cols));
    const std::streamsize payload =
        static_cast<std::streamsize>(shape.rows * shape.cols * sizeof(double));
    in.read(reinterpret_cast<char*>(mat.values.data()), payload);
    if (in.gcount() != payload) fail("read_matrix: truncated payload", path);
    in.peek();
    if (!in.eof()) fail("read_matrix: trailing bytes after payload", path);
    if (!mat.values.allFinite()) fail("read_matrix: non-finite values", path);
    return mat;
}

void write_csv(const TimeSeriesMatrix& mat, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail("write_csv: cannot open", path);
    for (Index r = 0; r < mat.rows(); ++r) {
        for (Index c = 0; c < mat.cols(); ++c) {
            if (c) out << ',';
            out << format_double(mat.values(r, c));
        }
        out << '\n';
    }
    if (!out) fail("write_csv: IO failure", path);
}

TimeSeriesMatrix read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail("read_csv: cannot open", path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() && in.eof()) break;
        std::vector<double> row;
        const char* p = line.c_str();
        while (true) {
            char* end = nullptr;
            const double v = std::strtod(p, &end);
            if (end == p) fail("read_csv: malformed number", path);
            row.push_back(v);
            p = end;
            while (*p == ' ' || *p == '\t') ++p;
            if (*p == ',') {
                ++p;
            } else if (*p == '\0' || *p == '\r') {
                break;
            } else {
                fail("read_csv: unexpected character", path);
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            fail("read_csv: ragged rows", path);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) fail("read_csv: empty file", path);
    TimeSeriesMatrix mat;
    mat.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index r = 0; r < mat.rows(); ++r)
        for (Index c = 0; c < mat.cols(); ++c) mat.values(r, c) = rows[r][c];
    if (!mat.values.allFinite()) fail("read_csv: non-finite values", path);
    return mat;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view name) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>(seed >> (8 * i));
    return fnv1a64(name, fnv1a64(std::string_view(buf, 8)));
}

double Rng::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // u1 in (0,1] keeps the log finite.
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

std::int64_t Rng::randint(std::int64_t lo, std::int64_t hi) {
    if (hi <= lo) throw std::runtime_error("Rng::randint: empty range");
    const auto span = static_cast<std::uint64_t>(hi - lo);
    auto draw = static_cast<std::uint64_t>(uniform01() * static_cast<double>(span));
    if (draw >= span) draw = span - 1;
    return lo + static_cast<std::int64_t>(draw);
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace ctf
