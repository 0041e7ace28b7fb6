#pragma once

#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "floquet/quantum_core.hpp"

namespace floquet {

enum class Detrend { mean, offset, none };

struct Spectrum {
    std::vector<double> freqs;   // MHz
    std::vector<double> power;
    double omega_s = 0.0;        // sampling rate, MHz
    double normalization = 0.0;  // total power
    Detrend detrend = Detrend::mean;
    double removed = 0.0;        // value subtracted before the transform
};

class FitError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

Spectrum power_spectrum(const std::vector<double>& times, const std::vector<double>& series,
                        Detrend mode = Detrend::mean, double offset = 0.0, bool hann = false);

inline constexpr double kAdiabaticCutoff = 0.167;  // MHz

double fractional_harmonic_content(const Spectrum& s, double cutoff = kAdiabaticCutoff);
// F of a following trace, with the long-time asymptote removed before the transform
double adiabaticity_metric(const std::vector<double>& times, const std::vector<double>& series,
                           double cutoff = kAdiabaticCutoff);

struct ExpFit {
    double amplitude = 0.0;
    double tau = 0.0;
    double offset = 0.0;
    double residual = 0.0;
    bool identifiable = true;
};

ExpFit fit_exponential(const std::vector<double>& times, const std::vector<double>& series);

struct GaussFit {
    double amplitude = 0.0;
    double tau_g = 0.0;
    double frequency = 0.0;
    double phase = 0.0;
    double offset = 0.0;
    double residual = 0.0;
    double relative_residual = 0.0;
    bool poor_fit = false;
};

GaussFit fit_gaussian_envelope(const std::vector<double>& times, const std::vector<double>& series);
int count_extrema(const std::vector<double>& series, double hysteresis = 0.02);

struct TorusGrid {
    int n1 = 0;
    int n2 = 0;
    std::vector<Eigen::Vector3d> d;

    const Eigen::Vector3d& at(int i, int j) const { return d[static_cast<std::size_t>(i) * n2 + j]; }
};

TorusGrid make_torus(int n1, int n2, const std::function<Eigen::Vector3d(double, double)>& field);
// d = (B0 (m + cos t1) + A cos t2, A sin t2, B0 sin t1)
TorusGrid pump_torus(double b0, double m, double a_c, int n1, int n2);

struct ChernResult {
    int chern = 0;
    double raw = 0.0;
    double min_gap = 0.0;
    double max_plaquette = 0.0;
};

ChernResult chern_analysis(const TorusGrid& grid, double gap_tol = 1e-9);
int chern_number(const TorusGrid& grid);

// amplitude: A_c = g sqrt(n); coherent: A_c = 2 g sqrt(n), the field a coherent state exerts
enum class CouplingConvention { amplitude, coherent };

double coupling_amplitude(double g, double n, CouplingConvention convention);

struct WindowVerdict {
    bool inside = false;
    double value = 0.0;   // A_c^2
    double lower = 0.0;   // B0^2 (1-m)^2
    double upper = 0.0;   // B0^2 (1+m)^2
    double margin_lower = 0.0;
    double margin_upper = 0.0;
};

WindowVerdict topological_window(const FieldParams& fp, double n, CouplingConvention convention = CouplingConvention::amplitude);

struct RateEstimate {
    double slope = 0.0;
    double stderr_slope = 0.0;
};

RateEstimate pump_rate_estimate(const std::vector<double>& times, const std::vector<double>& n_series,
                                std::pair<double, double> window, double t_mod);

// lag k (samples) maximizing sum x_i z_{i+k} over k in [0, max_lag]
int cross_correlation_lag(const std::vector<double>& x, const std::vector<double>& z, int max_lag);

// dominant frequency (MHz) inside [t1, t2]: Hann window, zero padding, parabolic peak
double local_frequency(const std::vector<double>& times, const std::vector<double>& series, double t1, double t2,
                       int pad_factor = 16);

}  // namespace floquet
