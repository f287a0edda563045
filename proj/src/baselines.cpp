#include "ctf/baselines.hpp"

#include <stdexcept>

namespace ctf {

TimeSeriesMatrix predict_zeros(Index rows, Index cols) {
    return TimeSeriesMatrix::zeros(rows, cols);
}

TimeSeriesMatrix predict_average(const TimeSeriesMatrix& train, Index horizon) {
    if (train.rows() < 1) throw std::runtime_error("predict_average: empty training data");
    const Eigen::RowVectorXd mean = train.values.colwise().mean();
    TimeSeriesMatrix out = TimeSeriesMatrix::zeros(horizon, train.cols(), train.dt);
    for (Index r = 0; r < horizon; ++r) out.values.row(r) = mean;
    return out;
}

namespace {

class ZerosForecaster final : public Forecaster {
public:
    void fit(const std::vector<TimeSeriesMatrix>& trajectories) override {
        if (trajectories.empty()) throw std::runtime_error("zeros: no training data");
        cols_ = trajectories.back().cols();
        rows_ = trajectories.back().rows();
        dt_ = trajectories.back().dt;
    }
    TimeSeriesMatrix forecast(Index steps) const override {
        return TimeSeriesMatrix::zeros(steps, cols_, dt_);
    }
    TimeSeriesMatrix forecast_from(const TimeSeriesMatrix&, Index steps) const override {
        return TimeSeriesMatrix::zeros(steps, cols_, dt_);
    }
    TimeSeriesMatrix reconstruct() const override {
        return TimeSeriesMatrix::zeros(rows_, cols_, dt_);
    }

private:
    Index rows_ = 0, cols_ = 0;
    double dt_ = 0.0;
};

class AverageForecaster final : public Forecaster {
public:
    void fit(const std::vector<TimeSeriesMatrix>& trajectories) override {
        if (trajectories.empty()) throw std::runtime_error("average: no training data");
        cols_ = trajectories.front().cols();
        dt_ = trajectories.front().dt;
        rows_ = trajectories.back().rows();
        mean_ = Eigen::RowVectorXd::Zero(cols_);
        double total = 0.0;
        for (const auto& t : trajectories) {
            if (t.cols() != cols_) throw std::runtime_error("average: channel mismatch");
            mean_ += t.values.colwise().sum();
            total += static_cast<double>(t.rows());
        }
        mean_ /= total;
        total_rows_ = total;
        fitted_ = true;
    }
    TimeSeriesMatrix forecast(Index steps) const override { return replicate(mean_, steps); }
    TimeSeriesMatrix forecast_from(const TimeSeriesMatrix& burnin, Index steps) const override {
        // "the input" for a burn-in task includes the burn-in window
        const double fit_rows = mean_rows();
        Eigen::RowVectorXd mean =
            (mean_ * fit_rows + burnin.values.colwise().sum()) /
            (fit_rows + static_cast<double>(burnin.rows()));
        return replicate(mean, steps);
    }
    TimeSeriesMatrix reconstruct() const override { return replicate(mean_, rows_); }

private:
    TimeSeriesMatrix replicate(const Eigen::RowVectorXd& mean, Index steps) const {
        if (!fitted_) throw std::runtime_error("average: not fitted");
        TimeSeriesMatrix out = TimeSeriesMatrix::zeros(steps, cols_, dt_);
        for (Index r = 0; r < steps; ++r) out.values.row(r) = mean;
        return out;
    }
    double mean_rows() const { return total_rows_; }

    Eigen::RowVectorXd mean_;
    Index rows_ = 0, cols_ = 0;
    double dt_ = 0.0;
    double total_rows_ = 0.0;
    bool fitted_ = false;
};

class DMDForecaster final : public Forecaster {
public:
    explicit DMDForecaster(DMDConfig cfg) : cfg_(cfg) {}
    void fit(const std::vector<TimeSeriesMatrix>& trajectories) override {
        model_ = dmd_fit_multi(trajectories, cfg_);
        fitted_ = true;
    }
    TimeSeriesMatrix forecast(Index steps) const override {
        ensure_fitted();
        return dmd_forecast(model_, steps);
    }
    TimeSeriesMatrix forecast_from(const TimeSeriesMatrix& burnin, Index steps) const override {
        ensure_fitted();
        return dmd_forecast_from(model_, burnin, steps);
    }
    TimeSeriesMatrix reconstruct() const override {
        ensure_fitted();
        return dmd_reconstruct(model_);
    }
    const DMDModel& model() const { return model_; }

private:
    void ensure_fitted() const {
        if (!fitted_) throw std::runtime_error("dmd: not fitted");
    }
    DMDConfig cfg_;
    DMDModel model_;
    bool fitted_ = false;
};

class ESNForecaster final : public Forecaster {
public:
    explicit ESNForecaster(ESNConfig cfg) : cfg_(cfg) {}
    void fit(const std::vector<TimeSeriesMatrix>& trajectories) override {
        model_ = esn_fit_multi(trajectories, cfg_);
        last_train_ = trajectories.back();
        fitted_ = true;
    }
    TimeSeriesMatrix forecast(Index steps) const override {
        ensure_fitted();
        return esn_forecast(model_, steps);
    }
    TimeSeriesMatrix forecast_from(const TimeSeriesMatrix& burnin, Index steps) const override {
        ensure_fitted();
        return esn_forecast_from(model_, burnin, steps);
    }
    TimeSeriesMatrix reconstruct() const override {
        ensure_fitted();
        return esn_reconstruct(model_, last_train_);
    }

private:
    void ensure_fitted() const {
        if (!fitted_) throw std::runtime_error("esn: not fitted");
    }
    ESNConfig cfg_;
    ESNModel model_;
    TimeSeriesMatrix last_train_;
    bool fitted_ = false;
};

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

}  // namespace

DMDConfig dmd_config_from_json(const nlohmann::json& config) {
    DMDConfig cfg;
    cfg.rank = get_or<Index>(config, "rank", cfg.rank);
    cfg.delay = get_or<Index>(config, "delay", cfg.delay);
    return cfg;
}

ESNConfig esn_config_from_json(const nlohmann::json& config) {
    ESNConfig cfg;
    cfg.reservoir_size = get_or<Index>(config, "N_h", cfg.reservoir_size);
    cfg.leak = get_or<double>(config, "alpha", cfg.leak);
    cfg.input_scale = get_or<double>(config, "sigma", cfg.input_scale);
    cfg.bias = get_or<double>(config, "sigma_b", cfg.bias);
    cfg.spectral_radius = get_or<double>(config, "rho", cfg.spectral_radius);
    cfg.density = get_or<double>(config, "density", cfg.density);
    cfg.ridge = get_or<double>(config, "beta", cfg.ridge);
    cfg.spinup = get_or<Index>(config, "N_spin", cfg.spinup);
    cfg.groups = get_or<Index>(config, "g", cfg.groups);
    cfg.locality = get_or<Index>(config, "L", cfg.locality);
    cfg.seed = get_or<std::uint64_t>(config, "seed", cfg.seed);
    return cfg;
}

std::unique_ptr<Forecaster> make_forecaster(const std::string& method,
                                            const nlohmann::json& config) {
    if (method == "zeros") return std::make_unique<ZerosForecaster>();
    if (method == "average") return std::make_unique<AverageForecaster>();
    if (method == "dmd") return std::make_unique<DMDForecaster>(dmd_config_from_json(config));
    if (method == "esn") return std::make_unique<ESNForecaster>(esn_config_from_json(config));
    throw std::runtime_error("make_forecaster: unknown method " + method);
}

std::map<std::string, TimeSeriesMatrix> run_baseline(const Bundle& bundle,
                                                     const std::string& method,
                                                     const nlohmann::json& config) {
    const TrainView view(bundle);
    const DatasetConfig& cfg = bundle.config;
    std::map<std::string, TimeSeriesMatrix> preds;

    auto fit_on = [&](const std::vector<std::string>& keys) {
        std::vector<TimeSeriesMatrix> trains;
        trains.reserve(keys.size());
        for (const auto& k : keys) trains.push_back(view.train(k));
        auto f = make_forecaster(method, config);
        f->fit(trains);
        return f;
    };
    auto rows_of = [&cfg](const std::string& test_key) { return cfg.shape_for(test_key).rows; };
    // A failed task group yields no prediction; the referee floors those
    // scores at -100, which is the intended outcome for a method that cannot
    // produce a result.
    auto guarded = [&](const char* what, auto&& work) {
        try {
            work();
        } catch (const std::exception& e) {
            std::fprintf(stderr, "baseline %s: %s failed: %s\n", method.c_str(), what, e.what());
        }
    };

    guarded("X1pred", [&] {
        auto f = fit_on({"X1train"});
        preds["X1pred"] = f->forecast(rows_of("X1test"));
    });
    guarded("X2pred/X3pred", [&] {
        auto f = fit_on({"X2train"});
        preds["X2pred"] = f->reconstruct();
        preds["X3pred"] = f->forecast(rows_of("X3test"));
    });
    guarded("X4pred/X5pred", [&] {
        auto f = fit_on({"X3train"});
        preds["X4pred"] = f->reconstruct();
        preds["X5pred"] = f->forecast(rows_of("X5test"));
    });
    guarded("X6pred", [&] {
        auto f = fit_on({"X4train"});
        preds["X6pred"] = f->forecast(rows_of("X6test"));
    });
    guarded("X7pred", [&] {
        auto f = fit_on({"X5train"});
        preds["X7pred"] = f->forecast(rows_of("X7test"));
    });
    guarded("X8pred/X9pred", [&] {
        auto f = fit_on({"X6train", "X7train", "X8train"});
        preds["X8pred"] = f->forecast_from(view.train("X9train"), rows_of("X8test"));
        preds["X9pred"] = f->forecast_from(view.train("X10train"), rows_of("X9test"));
    });
    return preds;
}

}  // namespace ctf
