#pragma once

#include "ctf/dataset.hpp"
#include "ctf/dmd.hpp"
#include "ctf/esn.hpp"
#include "ctf/matrix.hpp"

#include <json.hpp>

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace ctf {

TimeSeriesMatrix predict_zeros(Index rows, Index cols);

// Each output row is the per-column mean of the training data.
TimeSeriesMatrix predict_average(const TimeSeriesMatrix& train, Index horizon);

// Common face of the reference predictors. fit() takes one trajectory for
// E1-E10 style tasks and several for the parametric ones.
class Forecaster {
public:
    virtual ~Forecaster() = default;
    virtual void fit(const std::vector<TimeSeriesMatrix>& trajectories) = 0;
    virtual TimeSeriesMatrix forecast(Index steps) const = 0;
    virtual TimeSeriesMatrix forecast_from(const TimeSeriesMatrix& burnin, Index steps) const = 0;
    // Denoised estimate over the training window of the (single) fitted trajectory.
    virtual TimeSeriesMatrix reconstruct() const = 0;
};

// method: "zeros", "average", "dmd", "esn". Config keys mirror the search
// space tables (rank, delay, g, L, sigma, sigma_b, rho, beta, N_h, N_spin,
// alpha, seed); unknown keys are ignored so tuner-injected fields pass through.
std::unique_ptr<Forecaster> make_forecaster(const std::string& method,
                                            const nlohmann::json& config);

DMDConfig dmd_config_from_json(const nlohmann::json& config);
ESNConfig esn_config_from_json(const nlohmann::json& config);

// Produces the nine prediction matrices for a bundle's twelve tasks, reading
// train matrices only (works on a participant bundle).
std::map<std::string, TimeSeriesMatrix> run_baseline(const Bundle& bundle,
                                                     const std::string& method,
                                                     const nlohmann::json& config);

}  // namespace ctf
