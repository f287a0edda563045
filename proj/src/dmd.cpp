#include "ctf/dmd.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <atomic>
#include <cstdio>
#include <stdexcept>

namespace ctf {

namespace {

constexpr double kRankTolerance = 1e-12;

// Embedded snapshot y_j = [x_j; x_{j+1}; ...; x_{j+d}], columns j = 0..rows-d-1.
Eigen::MatrixXd embed(const TimeSeriesMatrix& train, Index delay) {
    const Index rows = train.rows();
    const Index n = train.cols();
    const Index steps = rows - delay;
    Eigen::MatrixXd y(n * (delay + 1), steps);
    for (Index j = 0; j < steps; ++j)
        for (Index q = 0; q <= delay; ++q)
            y.block(q * n, j, n, 1) = train.values.row(j + q).transpose();
    return y;
}

Eigen::VectorXcd solve_amplitudes(const Eigen::MatrixXcd& modes, const Eigen::VectorXd& snapshot) {
    return modes.completeOrthogonalDecomposition().solve(snapshot.cast<std::complex<double>>());
}

}  // namespace

DMDModel dmd_fit_multi(const std::vector<TimeSeriesMatrix>& trains, const DMDConfig& cfg) {
    if (trains.empty()) throw std::runtime_error("dmd_fit: no training data");
    if (cfg.rank < 1) throw std::runtime_error("dmd_fit: rank must be >= 1");
    if (cfg.delay < 0) throw std::runtime_error("dmd_fit: delay must be >= 0");

    const Index n = trains.front().cols();
    Index pair_count = 0;
    for (const auto& t : trains) {
        if (t.cols() != n) throw std::runtime_error("dmd_fit: trajectories disagree on channels");
        if (t.rows() <= cfg.delay + 1)
            throw std::runtime_error("dmd_fit: need more than delay+1 snapshots");
        pair_count += t.rows() - cfg.delay - 1;
    }

    const Index dim = n * (cfg.delay + 1);
    Eigen::MatrixXd x1(dim, pair_count);
    Eigen::MatrixXd x2(dim, pair_count);
    Eigen::VectorXd first_snapshot;
    Eigen::VectorXd last_snapshot;
    Index col = 0;
    for (const auto& t : trains) {
        const Eigen::MatrixXd y = embed(t, cfg.delay);
        const Index steps = y.cols();
        x1.middleCols(col, steps - 1) = y.leftCols(steps - 1);
        x2.middleCols(col, steps - 1) = y.rightCols(steps - 1);
        col += steps - 1;
        if (first_snapshot.size() == 0) first_snapshot = y.col(0);
        last_snapshot = y.col(steps - 1);
    }

    Eigen::BDCSVD<Eigen::MatrixXd> svd(x1, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sigma = svd.singularValues();
    if (sigma.size() == 0 || sigma(0) <= 0.0)
        throw std::runtime_error("dmd_fit: degenerate snapshot matrix (all singular values zero)");

    Index numerical_rank = 0;
    while (numerical_rank < sigma.size() && sigma(numerical_rank) > kRankTolerance * sigma(0))
        ++numerical_rank;
    const Index r = std::min(cfg.rank, numerical_rank);
    if (r < cfg.rank) {
        static std::atomic<int> warnings{0};
        if (warnings.fetch_add(1) < 3)
            std::fprintf(stderr,
                         "dmd_fit: requested rank %lld exceeds numerical rank %lld; truncating\n",
                         static_cast<long long>(cfg.rank), static_cast<long long>(numerical_rank));
    }

    const Eigen::MatrixXd u = svd.matrixU().leftCols(r);
    const Eigen::MatrixXd v = svd.matrixV().leftCols(r);
    const Eigen::VectorXd sigma_inv = sigma.head(r).cwiseInverse();

    const Eigen::MatrixXd x2_v_sinv = x2 * v * sigma_inv.asDiagonal();
    const Eigen::MatrixXd a_tilde = u.transpose() * x2_v_sinv;

    Eigen::EigenSolver<Eigen::MatrixXd> eig(a_tilde);
    if (eig.info() != Eigen::Success) throw std::runtime_error("dmd_fit: eigendecomposition failed");

    DMDModel model;
    model.eigenvalues = eig.eigenvalues();
    model.modes = x2_v_sinv.cast<std::complex<double>>() * eig.eigenvectors();
    model.amplitudes = solve_amplitudes(model.modes, first_snapshot);
    model.dt = trains.back().dt;
    model.channels = n;
    model.delay = cfg.delay;
    model.effective_rank = r;
    model.train_rows = trains.back().rows();
    model.last_snapshot = last_snapshot;
    return model;
}

DMDModel dmd_fit(const TimeSeriesMatrix& train, const DMDConfig& cfg) {
    return dmd_fit_multi({train}, cfg);
}

namespace {

// rows t = 1..steps of the de-embedded trailing block of Phi*diag(lambda^t)*b.
TimeSeriesMatrix advance(const DMDModel& model, const Eigen::VectorXcd& amplitudes, Index steps) {
    TimeSeriesMatrix out = TimeSeriesMatrix::zeros(steps, model.channels, model.dt);
    const Index n = model.channels;
    Eigen::VectorXcd state = amplitudes;
    for (Index t = 0; t < steps; ++t) {
        state = state.cwiseProduct(model.eigenvalues);
        const Eigen::VectorXcd y = model.modes * state;
        out.values.row(t) = y.tail(n).real().transpose();
    }
    return out;
}

}  // namespace

TimeSeriesMatrix dmd_forecast(const DMDModel& model, Index steps) {
    if (steps < 0) throw std::runtime_error("dmd_forecast: steps must be >= 0");
    if (steps == 0) return TimeSeriesMatrix(Matrix(0, model.channels), model.dt);
    return advance(model, solve_amplitudes(model.modes, model.last_snapshot), steps);
}

TimeSeriesMatrix dmd_forecast_from(const DMDModel& model, const TimeSeriesMatrix& burnin,
                                   Index steps) {
    if (burnin.cols() != model.channels)
        throw std::runtime_error("dmd_forecast_from: burn-in channel mismatch");
    if (burnin.rows() < model.delay + 1)
        throw std::runtime_error("dmd_forecast_from: burn-in shorter than the embedding depth");
    if (steps == 0) return TimeSeriesMatrix(Matrix(0, model.channels), model.dt);
    const Eigen::MatrixXd y = embed(burnin, model.delay);
    return advance(model, solve_amplitudes(model.modes, y.rightCols(1)), steps);
}

TimeSeriesMatrix dmd_reconstruct(const DMDModel& model) {
    const Index rows = model.train_rows;
    const Index n = model.channels;
    const Index last_embedded = rows - model.delay - 1;
    TimeSeriesMatrix out = TimeSeriesMatrix::zeros(rows, n, model.dt);
    Eigen::VectorXcd state = model.amplitudes;
    for (Index j = 0; j <= last_embedded; ++j) {
        const Eigen::VectorXcd y = model.modes * state;
        out.values.row(j) = y.head(n).real().transpose();
        if (j == last_embedded)
            for (Index q = 1; q <= model.delay; ++q)
                out.values.row(j + q) = y.segment(q * n, n).real().transpose();
        state = state.cwiseProduct(model.eigenvalues);
    }
    return out;
}

}  // namespace ctf
