#pragma once

#include "ctf/matrix.hpp"

#include <vector>

namespace ctf {

struct DMDConfig {
    Index rank = 10;
    Index delay = 0;  // time-delay embedding depth; 0 = exact DMD
};

struct DMDModel {
    Eigen::VectorXcd eigenvalues;  // lambda, discrete-time
    Eigen::MatrixXcd modes;        // Phi, embedded_dim x r
    Eigen::VectorXcd amplitudes;   // b, least squares against the first embedded snapshot
    double dt = 0.0;
    Index channels = 0;      // original spatial dimension n
    Index delay = 0;         // embedding depth d; embedded_dim = n*(d+1)
    Index effective_rank = 0;
    Index train_rows = 0;    // rows of the (last) training trajectory

    // Last embedded snapshot of the training data; forecasts are anchored here.
    Eigen::VectorXd last_snapshot;
};

// Best-fit linear one-step operator via truncated SVD of the embedded
// snapshot pairs. Singular values below 1e-12 * sigma_1 are truncated (with
// a stderr note when that shrinks the requested rank).
DMDModel dmd_fit(const TimeSeriesMatrix& train, const DMDConfig& cfg);

// Fit on several trajectories: snapshot pairs are built per trajectory so
// the operator never sees a cross-trajectory transition.
DMDModel dmd_fit_multi(const std::vector<TimeSeriesMatrix>& trains, const DMDConfig& cfg);

// steps rows continuing past the training data: amplitudes are re-anchored
// on the last embedded snapshot, then rows are Re(Phi * diag(lambda^t) * b).
TimeSeriesMatrix dmd_forecast(const DMDModel& model, Index steps);

// Forecast re-initialized from a burn-in window (needs >= delay+1 rows).
TimeSeriesMatrix dmd_forecast_from(const DMDModel& model, const TimeSeriesMatrix& burnin,
                                   Index steps);

// Re(Phi * diag(lambda^t) * b) over the training window, de-embedded back to
// the original channels.
TimeSeriesMatrix dmd_reconstruct(const DMDModel& model);

}  // namespace ctf
