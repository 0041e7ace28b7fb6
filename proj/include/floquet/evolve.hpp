#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "floquet/quantum_core.hpp"
#include "floquet/schedules.hpp"

namespace floquet {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct NoiseModel {
    double t1 = kInf;                 // us
    double tphi = kInf;               // us
    double kappa_m = 0.0;             // kHz
    double kappa_r = 0.0;             // kHz
    double sigma_quasistatic = 0.0;   // MHz
    std::pair<double, double> readout_error{0.02, 0.05};  // P(e|g), P(g|e)

    void check() const;
    static NoiseModel off();
    static NoiseModel measured();
};

// Damping rates in 1/us for a linewidth quoted as kappa/(2 pi) in kHz
inline double kappa_rate(double khz) { return kTwoPi * khz * 1e-3; }

struct SimResult {
    std::vector<double> times;
    std::vector<std::string> names;
    std::vector<std::vector<double>> series;
    std::vector<Eigen::VectorXcd> states;
    nlohmann::json meta = nlohmann::json::object();

    bool has(const std::string& name) const;
    const std::vector<double>& operator[](const std::string& name) const;
    std::vector<double>& add(const std::string& name);
};

using Observables = std::vector<std::pair<std::string, Operator>>;
using CoefficientFn = std::function<void(double t, std::vector<double>& c)>;

// H(t) = sum_k c_k(t) H_k, or an arbitrary dense function of time
class HamiltonianSource {
  public:
    HamiltonianSource(HilbertSpace space, std::vector<Operator> terms, CoefficientFn coefficients,
                      bool piecewise_constant = false, std::vector<double> breakpoints = {});

    static HamiltonianSource constant(const HilbertSpace& space, const Operator& h);
    static HamiltonianSource from_function(const HilbertSpace& space, std::function<Operator(double)> h);

    const HilbertSpace& space() const { return space_; }
    int dim() const { return space_.dim(); }
    Operator at(double t) const;
    std::vector<double> breakpoints(double t0, double t1) const;
    bool piecewise_constant() const { return piecewise_constant_; }

    bool is_function() const { return static_cast<bool>(function_); }
    const std::vector<Operator>& terms() const { return terms_; }
    void coefficients(double t, std::vector<double>& c) const { coefficients_(t, c); }
    const std::function<Operator(double)>& function() const { return function_; }

  private:
    HilbertSpace space_;
    std::vector<Operator> terms_;
    CoefficientFn coefficients_;
    std::function<Operator(double)> function_;
    bool piecewise_constant_ = false;
    std::vector<double> breakpoints_;
};

// 1/2 * 2 pi (x(t) sigma_x + z(t) sigma_z) + static_part, stepped exactly per sample bin
HamiltonianSource schedule_source(const HilbertSpace& space, const Schedule& s, const Operator& static_part = Operator());

struct EvolveOptions {
    double norm_step = 0.05;
    int dense_max_dim = 16;
    double truncation_tol = 1e-4;
    bool check_truncation = true;
    bool keep_states = false;
};

class TruncationOverflow : public PhysicsError {
  public:
    using PhysicsError::PhysicsError;
};

Eigen::MatrixXcd expm_taylor(const Eigen::MatrixXcd& a);

SimResult propagate_unitary(const HamiltonianSource& h, const State& psi0, const std::vector<double>& t_grid,
                            const Observables& observables = {}, const EvolveOptions& opt = {});

SimResult propagate_lindblad(const HamiltonianSource& h, const Operator& rho0, const NoiseModel& noise,
                             const std::vector<double>& t_grid, const Observables& observables = {},
                             const EvolveOptions& opt = {});

std::vector<Operator> collapse_operators(const HilbertSpace& space, const NoiseModel& noise);
Operator density(const State& psi);
Operator unvec(const Eigen::VectorXcd& v, int dim);
double expectation(const Operator& o, const State& psi);
double expectation_rho(const Operator& o, const Operator& rho);
std::vector<double> linspace(double a, double b, int n);
std::vector<double> arange_grid(double a, double b, double step);

// readout layer
double apply_readout_error(double p_e, const std::pair<double, double>& error);
double sample_shots(double p, int shots, std::mt19937_64& rng);

using DetunedRun = std::function<SimResult(double offset_mhz)>;

std::vector<double> quasistatic_offsets(double sigma, int n_samples, std::uint64_t seed);
SimResult quasistatic_average(const DetunedRun& run, double sigma, int n_samples, std::uint64_t seed);
SimResult quasistatic_average_serial(const DetunedRun& run, double sigma, int n_samples, std::uint64_t seed);

using ParamPoint = std::map<std::string, double>;

struct SweepOutcome {
    ParamPoint point;
    std::optional<SimResult> result;
    std::string error;
};

using SweepJob = std::function<SimResult(const ParamPoint& point, std::uint64_t seed)>;

std::uint64_t point_seed(const ParamPoint& point, std::uint64_t seed);
std::vector<ParamPoint> grid_product(const std::vector<std::pair<std::string, std::vector<double>>>& axes);
std::vector<SweepOutcome> sweep(const std::vector<ParamPoint>& grid, const SweepJob& job, std::uint64_t seed);
std::vector<SweepOutcome> sweep_serial(const std::vector<ParamPoint>& grid, const SweepJob& job, std::uint64_t seed);

}  // namespace floquet
