#pragma once

#include "ctf/matrix.hpp"

#include <Eigen/Sparse>

#include <vector>

namespace ctf {

struct ESNConfig {
    Index reservoir_size = 500;   // N_h
    double leak = 1.0;            // alpha; 1 and bias 0 follow the parallel-reservoir convention
    double input_scale = 0.1;     // sigma, W_hu entries ~ U(-sigma, sigma)
    double bias = 0.0;            // sigma_b
    double spectral_radius = 0.9; // rho
    double density = 0.02;        // W_hh sparsity
    double ridge = 1e-6;          // beta, Tikhonov term
    Index spinup = 100;           // N_spin discarded transient states
    Index groups = 1;             // g parallel reservoirs
    Index locality = 1;           // L overlap channels on each side, circular
    std::uint64_t seed = 0;

    void validate() const;
};

struct ESNGroup {
    Eigen::SparseMatrix<double> w_res;  // W_hh, rescaled to spectral radius rho
    Eigen::MatrixXd w_in;               // W_hu, N_h x n_in
    Eigen::MatrixXd w_out;              // W_uh readout, n_out x N_h
    Eigen::VectorXd state;              // h after the training drive
    std::vector<Index> input_channels;  // global channels feeding this group
    Index out_start = 0;                // output slice [out_start, out_start+out_count)
    Index out_count = 0;
};

struct ESNModel {
    ESNConfig config;
    Index channels = 0;
    double dt = 0.0;
    std::vector<ESNGroup> groups;
    double fit_residual = 0.0;  // relative readout error over the training pairs
};

// Largest |eigenvalue| estimate: power iteration with a two-step Krylov fit,
// which also converges when the dominant pair is complex. Fixed all-ones
// start vector; deterministic.
double spectral_radius_estimate(const Eigen::SparseMatrix<double>& m);

// Readout solve: argmin ||W g - targets||^2 + beta ||W||^2 via the normal
// equations (g: N_h x P features, targets: n_out x P).
Eigen::MatrixXd ridge_solve(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets,
                            double beta);

// Squares every odd-indexed entry (0-based), identity elsewhere.
Eigen::VectorXd esn_nonlinearity(const Eigen::VectorXd& state);

ESNModel esn_fit(const TimeSeriesMatrix& train, const ESNConfig& cfg);
ESNModel esn_fit_multi(const std::vector<TimeSeriesMatrix>& trains, const ESNConfig& cfg);

// Closed-loop continuation from the post-training reservoir states.
TimeSeriesMatrix esn_forecast(const ESNModel& model, Index steps);

// Reset, drive teacher-forced through the burn-in rows, then run closed-loop.
TimeSeriesMatrix esn_forecast_from(const ESNModel& model, const TimeSeriesMatrix& burnin,
                                   Index steps);

// Teacher-forced readout aligned to the training rows; the first N_spin rows
// are copied from the input.
TimeSeriesMatrix esn_reconstruct(const ESNModel& model, const TimeSeriesMatrix& train);

}  // namespace ctf
