#pragma once

#include "ctf/dataset.hpp"
#include "ctf/matrix.hpp"

#include <complex>
#include <vector>

namespace ctf {

// --- ocean swell on a line of channels -----------------------------------

struct SwellMode {
    double wavenumber = 0.0;  // rad/m, > 0
    double amplitude = 1.0;
    double phase = 0.0;
};

struct SwellConfig {
    Index channels = 256;
    double channel_spacing = 10.0;  // meters
    double dt = 0.5;                // seconds
    Index steps = 384;
    double depth = 30.0;    // meters
    double gravity = 9.81;  // m/s^2
    std::vector<SwellMode> modes;
    std::uint64_t seed = 0;
};

// Surface-gravity-wave dispersion: omega = sqrt(g * k * tanh(k * h)).
double swell_omega(double wavenumber, double gravity, double depth);

// u(x, t) = sum_modes a * cos(k*x - omega(k)*t + phi), normalized to zero
// mean / unit variance. Rejects modes that violate the temporal Nyquist limit.
TimeSeriesMatrix gen_swell(const SwellConfig& cfg);

// --- planted linear dynamics ---------------------------------------------

struct LinearSystemConfig {
    Index dimension = 20;
    Index rank = 3;
    std::vector<std::complex<double>> spectrum;  // conjugate-closed, |lambda| <= 1, size = rank
    Index steps = 200;
    std::uint64_t seed = 0;
};

struct LinearSystem {
    TimeSeriesMatrix trajectory;  // steps x dimension, x_{t+1} = A x_t
    Eigen::MatrixXd op;           // the planted A
};

LinearSystem gen_linear_system(const LinearSystemConfig& cfg);

// --- advected pulse on a ring --------------------------------------------

struct PulseConfig {
    Index sensors = 256;
    double speed = 0.5;  // sensors per step at param = 1
    double width = 6.0;  // gaussian width in sensor units
    Index steps = 384;
    double param = 1.0;  // hidden parametric knob scaling the speed
    std::uint64_t seed = 0;
};

TimeSeriesMatrix gen_pulse(const PulseConfig& cfg, double param);

// params must list >= 5 values: 3 train, then one strictly inside the train
// range (interpolation) and one strictly outside (extrapolation).
std::vector<TimeSeriesMatrix> gen_pulse_family(const PulseConfig& cfg,
                                               const std::vector<double>& params);

// --- desk-scale presets ---------------------------------------------------

struct Preset {
    DatasetConfig config;
    SourceData sources;
    nlohmann::ordered_json hidden;  // referee-only parameter values
};

// "swell-small", "pulse-small", "linear-small".
Preset make_preset(const std::string& name, std::uint64_t seed);

}  // namespace ctf
