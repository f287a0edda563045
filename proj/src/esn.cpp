#include "ctf/esn.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ctf {

void ESNConfig::validate() const {
    if (reservoir_size < 1) throw std::runtime_error("esn: reservoir_size must be >= 1");
    if (!(leak > 0.0 && leak <= 1.0)) throw std::runtime_error("esn: leak must be in (0, 1]");
    if (!(spectral_radius > 0.0)) throw std::runtime_error("esn: spectral_radius must be > 0");
    if (!(density > 0.0 && density <= 1.0)) throw std::runtime_error("esn: density out of range");
    if (ridge < 0.0) throw std::runtime_error("esn: ridge must be >= 0");
    if (spinup < 0) throw std::runtime_error("esn: spinup must be >= 0");
    if (groups < 1) throw std::runtime_error("esn: groups must be >= 1");
    if (locality < 0) throw std::runtime_error("esn: locality must be >= 0");
    if (input_scale < 0.0) throw std::runtime_error("esn: input_scale must be >= 0");
}

double spectral_radius_estimate(const Eigen::SparseMatrix<double>& m) {
    const Index n = m.rows();
    if (n != m.cols()) throw std::runtime_error("spectral_radius_estimate: matrix must be square");
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
    double estimate = 0.0;
    double previous = -1.0;
    for (int iter = 0; iter < 5000; ++iter) {
        const Eigen::VectorXd w1 = m * v;
        const double w1_norm = w1.norm();
        if (w1_norm == 0.0) return 0.0;
        if (iter >= 50 && iter % 10 == 0) {
            // Fit A^2 v = c1 A v + c0 v; the quadratic's roots are the dominant
            // eigenvalue(s), which handles a complex conjugate dominant pair.
            const Eigen::VectorXd w2 = m * w1;
            Eigen::MatrixXd basis(n, 2);
            basis.col(0) = v;
            basis.col(1) = w1;
            const Eigen::Vector2d c = basis.colPivHouseholderQr().solve(w2);
            const double disc = c(1) * c(1) + 4.0 * c(0);
            double mag;
            if (disc >= 0.0) {
                const double root = std::sqrt(disc);
                mag = std::max(std::abs((c(1) + root) / 2.0), std::abs((c(1) - root) / 2.0));
            } else {
                mag = std::hypot(c(1) / 2.0, std::sqrt(-disc) / 2.0);
            }
            estimate = mag;
            if (previous >= 0.0 && std::abs(estimate - previous) <= 1e-13 * std::max(estimate, 1e-300))
                return estimate;
            previous = estimate;
        }
        v = w1 / w1_norm;
    }
    return estimate;
}

Eigen::MatrixXd ridge_solve(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets,
                            double beta) {
    if (features.cols() != targets.cols())
        throw std::runtime_error("ridge_solve: feature/target column mismatch");
    Eigen::MatrixXd gram = features * features.transpose();
    gram.diagonal().array() += beta;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    const Eigen::VectorXd pivots = ldlt.vectorD();
    const double dmax = pivots.maxCoeff();
    const double dmin = pivots.minCoeff();
    // reservoir features are tanh-bounded, so a relative pivot floor is safe
    if (ldlt.info() != Eigen::Success || !(dmax > 0.0) ||
        dmin <= 4.0 * std::numeric_limits<double>::epsilon() * dmax)
        throw std::runtime_error("ridge_solve: singular normal equations (rank-deficient, beta=0?)");
    const Eigen::MatrixXd solution = ldlt.solve(features * targets.transpose());
    if (!solution.allFinite()) throw std::runtime_error("ridge_solve: non-finite readout solution");
    return solution.transpose();
}

Eigen::VectorXd esn_nonlinearity(const Eigen::VectorXd& state) {
    Eigen::VectorXd g = state;
    for (Index i = 1; i < g.size(); i += 2) g(i) = g(i) * g(i);
    return g;
}

namespace {

struct GroupLayout {
    Index out_start = 0;
    Index out_count = 0;
    std::vector<Index> input_channels;
};

// Contiguous chunks; the last group absorbs the remainder. Locality overlap
// wraps circularly.
std::vector<GroupLayout> make_layout(Index channels, Index groups, Index locality) {
    if (groups > channels) throw std::runtime_error("esn: more groups than channels");
    std::vector<GroupLayout> layout(static_cast<std::size_t>(groups));
    const Index base = channels / groups;
    for (Index gi = 0; gi < groups; ++gi) {
        GroupLayout& g = layout[static_cast<std::size_t>(gi)];
        g.out_start = gi * base;
        g.out_count = gi == groups - 1 ? channels - g.out_start : base;
        const Index in_count = g.out_count + 2 * locality;
        if (in_count > channels)
            throw std::runtime_error("esn: locality overlap exceeds the spatial dimension");
        for (Index j = 0; j < in_count; ++j) {
            Index c = (g.out_start - locality + j) % channels;
            if (c < 0) c += channels;
            g.input_channels.push_back(c);
        }
    }
    return layout;
}

Eigen::SparseMatrix<double> make_reservoir(Index nh, double density, double rho, Rng& rng) {
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(density * static_cast<double>(nh * nh) * 1.2) + 16);
    for (Index r = 0; r < nh; ++r)
        for (Index c = 0; c < nh; ++c) {
            const double keep = rng.uniform01();
            if (keep < density) triplets.emplace_back(r, c, rng.uniform(-1.0, 1.0));
        }
    Eigen::SparseMatrix<double> w(nh, nh);
    w.setFromTriplets(triplets.begin(), triplets.end());
    const double radius = spectral_radius_estimate(w);
    if (radius <= 0.0) throw std::runtime_error("esn: reservoir matrix has zero spectral radius");
    w *= rho / radius;
    return w;
}

Eigen::VectorXd gather(const Eigen::VectorXd& full, const std::vector<Index>& channels) {
    Eigen::VectorXd out(static_cast<Index>(channels.size()));
    for (std::size_t i = 0; i < channels.size(); ++i) out(static_cast<Index>(i)) = full(channels[i]);
    return out;
}

void advance_state(const ESNConfig& cfg, const ESNGroup& group, Eigen::VectorXd& h,
                   const Eigen::VectorXd& input) {
    Eigen::VectorXd pre = group.w_res * h + group.w_in * input;
    pre.array() += cfg.bias;
    h = (1.0 - cfg.leak) * h + cfg.leak * pre.array().tanh().matrix();
}

}  // namespace

ESNModel esn_fit_multi(const std::vector<TimeSeriesMatrix>& trains, const ESNConfig& cfg) {
    cfg.validate();
    if (trains.empty()) throw std::runtime_error("esn_fit: no training data");
    const Index channels = trains.front().cols();
    for (const auto& t : trains) {
        if (t.cols() != channels) throw std::runtime_error("esn_fit: trajectories disagree on channels");
        if (t.rows() <= cfg.spinup + 1)
            throw std::runtime_error("esn_fit: need rows > spinup+1");
    }

    ESNModel model;
    model.config = cfg;
    model.channels = channels;
    model.dt = trains.back().dt;

    const auto layout = make_layout(channels, cfg.groups, cfg.locality);
    double residual_num = 0.0;
    double residual_den = 0.0;

    for (Index gi = 0; gi < cfg.groups; ++gi) {
        const GroupLayout& lay = layout[static_cast<std::size_t>(gi)];
        ESNGroup group;
        group.out_start = lay.out_start;
        group.out_count = lay.out_count;
        group.input_channels = lay.input_channels;

        Rng rng(derive_seed(cfg.seed, "esn-group-" + std::to_string(gi)));
        group.w_res = make_reservoir(cfg.reservoir_size, cfg.density, cfg.spectral_radius, rng);
        group.w_in.resize(cfg.reservoir_size, static_cast<Index>(lay.input_channels.size()));
        for (Index r = 0; r < group.w_in.rows(); ++r)
            for (Index c = 0; c < group.w_in.cols(); ++c)
                group.w_in(r, c) = rng.uniform(-cfg.input_scale, cfg.input_scale);

        // Drive through every trajectory, collecting pairs (g(h_t), u_t) once
        // the first N_spin states have been discarded; h_t has seen inputs up
        // to u_{t-1}.
        const Index first_target = std::max(cfg.spinup, Index{1});
        Index pair_total = 0;
        for (const auto& t : trains) pair_total += t.rows() - first_target;
        Eigen::MatrixXd features(cfg.reservoir_size, pair_total);
        Eigen::MatrixXd targets(lay.out_count, pair_total);
        Index col = 0;
        Eigen::VectorXd h;
        for (const auto& t : trains) {
            h = Eigen::VectorXd::Zero(cfg.reservoir_size);
            for (Index row = 0; row + 1 < t.rows(); ++row) {
                const Eigen::VectorXd input = gather(t.values.row(row).transpose(), lay.input_channels);
                advance_state(cfg, group, h, input);
                const Index target_row = row + 1;
                if (target_row < first_target) continue;
                features.col(col) = esn_nonlinearity(h);
                targets.col(col) =
                    t.values.row(target_row).segment(lay.out_start, lay.out_count).transpose();
                ++col;
            }
            // include the final input so the stored state is ready to forecast
            const Eigen::VectorXd input =
                gather(t.values.row(t.rows() - 1).transpose(), lay.input_channels);
            advance_state(cfg, group, h, input);
        }
        group.w_out = ridge_solve(features, targets, cfg.ridge);
        group.state = h;
        residual_num += (group.w_out * features - targets).squaredNorm();
        residual_den += targets.squaredNorm();
        model.groups.push_back(std::move(group));
    }
    model.fit_residual = residual_den > 0.0 ? std::sqrt(residual_num / residual_den) : 0.0;
    return model;
}

ESNModel esn_fit(const TimeSeriesMatrix& train, const ESNConfig& cfg) {
    return esn_fit_multi({train}, cfg);
}

namespace {

Eigen::VectorXd readout_row(const ESNModel& model, const std::vector<Eigen::VectorXd>& states) {
    Eigen::VectorXd row(model.channels);
    for (std::size_t gi = 0; gi < model.groups.size(); ++gi) {
        const ESNGroup& group = model.groups[gi];
        row.segment(group.out_start, group.out_count) =
            group.w_out * esn_nonlinearity(states[gi]);
    }
    return row;
}

TimeSeriesMatrix run_closed_loop(const ESNModel& model, std::vector<Eigen::VectorXd> states,
                                 Index steps) {
    TimeSeriesMatrix out = TimeSeriesMatrix::zeros(steps, model.channels, model.dt);
    for (Index t = 0; t < steps; ++t) {
        const Eigen::VectorXd row = readout_row(model, states);
        out.values.row(t) = row.transpose();
        for (std::size_t gi = 0; gi < model.groups.size(); ++gi) {
            const ESNGroup& group = model.groups[gi];
            advance_state(model.config, group, states[gi], gather(row, group.input_channels));
        }
    }
    return out;
}

}  // namespace

TimeSeriesMatrix esn_forecast(const ESNModel& model, Index steps) {
    if (steps == 0) return TimeSeriesMatrix(Matrix(0, model.channels), model.dt);
    std::vector<Eigen::VectorXd> states;
    states.reserve(model.groups.size());
    for (const auto& group : model.groups) states.push_back(group.state);
    return run_closed_loop(model, std::move(states), steps);
}

TimeSeriesMatrix esn_forecast_from(const ESNModel& model, const TimeSeriesMatrix& burnin,
                                   Index steps) {
    if (burnin.cols() != model.channels)
        throw std::runtime_error("esn_forecast_from: burn-in channel mismatch");
    if (burnin.rows() < 1) throw std::runtime_error("esn_forecast_from: empty burn-in");
    std::vector<Eigen::VectorXd> states(model.groups.size(),
                                        Eigen::VectorXd::Zero(model.config.reservoir_size));
    for (Index row = 0; row < burnin.rows(); ++row)
        for (std::size_t gi = 0; gi < model.groups.size(); ++gi) {
            const ESNGroup& group = model.groups[gi];
            advance_state(model.config, group, states[gi],
                          gather(burnin.values.row(row).transpose(), group.input_channels));
        }
    if (steps == 0) return TimeSeriesMatrix(Matrix(0, model.channels), model.dt);
    return run_closed_loop(model, std::move(states), steps);
}

TimeSeriesMatrix esn_reconstruct(const ESNModel& model, const TimeSeriesMatrix& train) {
    if (train.cols() != model.channels)
        throw std::runtime_error("esn_reconstruct: channel mismatch");
    const Index spinup = model.config.spinup;
    if (train.rows() <= spinup + 1)
        throw std::runtime_error("esn_reconstruct: need rows > spinup+1");

    const Index copied = std::max(spinup, Index{1});
    TimeSeriesMatrix out = TimeSeriesMatrix::zeros(train.rows(), model.channels, model.dt);
    out.values.topRows(copied) = train.values.topRows(copied);
    std::vector<Eigen::VectorXd> states(model.groups.size(),
                                        Eigen::VectorXd::Zero(model.config.reservoir_size));
    for (Index row = 0; row + 1 < train.rows(); ++row) {
        for (std::size_t gi = 0; gi < model.groups.size(); ++gi) {
            const ESNGroup& group = model.groups[gi];
            advance_state(model.config, group, states[gi],
                          gather(train.values.row(row).transpose(), group.input_channels));
        }
        if (row + 1 < copied) continue;
        out.values.row(row + 1) = readout_row(model, states).transpose();
    }
    return out;
}

}  // namespace ctf
