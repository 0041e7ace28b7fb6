#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "floquet/analysis.hpp"
#include "floquet/evolve.hpp"
#include "floquet/schedules.hpp"

namespace floquet {

enum class Basis { bare, adiabatic };

struct ExperimentConfig {
    DeviceParams device;
    NoiseModel noise = NoiseModel::off();
    FieldParams field;
    Basis basis = Basis::bare;
    int shots = 1;
    std::uint64_t seed = 1;

    void check() const;
};

struct ServoConfig {
    double omega_target = 4.7;  // GHz
    double scale_a = 0.01;      // GHz per mA
    double i_cap = 0.5;         // mA
    double delta_freq = 4.0;    // MHz
    int n_min = 3;
    int n_max = 50;

    void check() const;
};

struct Grid2D {
    std::string row_name, col_name, value_name;
    std::vector<double> rows, cols;
    Eigen::MatrixXd values;
};

// probability estimate as seen by the shots layer (exact when shots == 1)
double measured_probability(double p_e, const ExperimentConfig& cfg, std::mt19937_64& rng);

// chevrons: rows are times, columns detunings
Grid2D rabi_chevron(const ExperimentConfig& cfg, double omega, const std::vector<double>& detuning_grid,
                    const std::vector<double>& t_grid);
Grid2D modulated_chevron(const ExperimentConfig& cfg, double omega0, double omega_mod, const std::vector<double>& t_grid,
                         const std::vector<double>& detuning_grid);

struct LzScan {
    std::vector<double> tau;
    std::vector<double> p_e;
    double up = 0.0;
    double down = 0.0;
    double midpoint = 0.0;
    double plateau = 0.0;
    bool flagged = false;
};

struct LzDelayResult {
    LzScan reference;
    LzScan scan;
    double estimate = 0.0;
    bool flagged = false;
};

LzScan lz_population_scan(const ExperimentConfig& cfg, double omega, double delta, const std::vector<double>& tau_grid,
                          double hidden_delay, const LzOptions& opt = {});
LzDelayResult lz_delay_scan(const ExperimentConfig& cfg, double omega, double delta, const std::vector<double>& tau_grid,
                            double hidden_delay, const LzOptions& opt = {});

struct FollowingOptions {
    double readout_step = 0.02;
    RampOptions ramp;
    ShutoffOptions shutoff;
    double buffer = -1.0;
};

// bare-basis measurement: series sigma_x, sigma_z via staged shutoff, plus the
// snapshot Bloch components bloch_x, bloch_z and the field angle error
SimResult adiabatic_following(const ExperimentConfig& cfg, double duration, const FollowingOptions& opt = {});
// adiabatic-basis measurement: series p_e after ramp-out, meta F
SimResult adiabatic_basis_following(const ExperimentConfig& cfg, double duration, const FollowingOptions& opt = {});

struct LagEstimate {
    int lag_samples = 0;
    double lag = 0.0;
    double expected = 0.0;
    double step = 0.0;
};

LagEstimate following_phase_lag(const SimResult& bare, double omega_mod);

struct FMapResult {
    Grid2D f;              // rows b0, cols omega_mod
    std::vector<std::string> failures;
};

FMapResult following_fmap(const ExperimentConfig& cfg, const std::vector<double>& b0_grid,
                          const std::vector<double>& omega_grid, double duration, const FollowingOptions& opt = {});

struct Breakdown {
    double plateau_good = 0.0;
    double plateau_bad = 0.0;
    double threshold = 0.0;
    std::vector<double> column_ratios;
    double ratio = 0.0;
};

Breakdown locate_breakdown(const Grid2D& fmap, double good_ratio = 16.0, double bad_ratio = 1.0);

struct CoherenceOptions {
    double t1_span = 50.0, t1_step = 0.5;
    double ramsey_span = 2.0, ramsey_step = 0.01, ramsey_virtual = 4.0;
    double echo_span = 12.0, echo_step = 0.1;
    double rabi_omega = 40.0, rabi_jitter = 0.01, rabi_span = 1.6, rabi_step = 0.0025;
    int quasistatic_samples = 64;
};

struct CoherenceFits {
    ExpFit t1;
    GaussFit ramsey;
    ExpFit echo;
    GaussFit rabi;
    double rabi_injected = 0.0;
    SimResult t1_trace, ramsey_trace, echo_trace, rabi_trace;
};

// noise model that reproduces the given T1, echo and Gaussian Ramsey constants
NoiseModel coherence_noise(double t1, double t_echo, double tau_ramsey);
SimResult ramsey_trace(const NoiseModel& noise, const std::vector<double>& times, double virtual_detuning, int samples,
                       std::uint64_t seed);
SimResult echo_trace(const NoiseModel& noise, const std::vector<double>& times, int samples, std::uint64_t seed);
CoherenceFits coherence_suite(const ExperimentConfig& cfg, const CoherenceOptions& opt = {});

struct ServoStep {
    double time = 0.0;     // hours
    double omega = 0.0;    // GHz, measured before the correction
    double current = 0.0;  // mA after the correction
    double step = 0.0;     // mA applied
};

struct ServoTrace {
    std::vector<ServoStep> steps;
    bool converged = false;
    double current = 0.0;
};

using FrequencyProbe = std::function<double(double current, double time_h)>;

ServoTrace servo_loop(const ServoConfig& servo, const FrequencyProbe& probe, double i0, double time_h = 0.0,
                      double step_h = 0.0);

struct ServoSession {
    std::vector<ServoTrace> loops;
    std::vector<double> times;          // hours, fine sampling of the session
    std::vector<double> held;           // GHz with servo
    std::vector<double> free_running;   // GHz without servo
    double max_error_after_lock = 0.0;  // MHz
    double max_step = 0.0;              // mA
    bool all_converged = true;
};

// drift returns the frequency offset in GHz at time t (hours)
ServoSession servo_session(const ServoConfig& servo, const std::function<double(double)>& drift, double base_ghz,
                           double hours, double interval_h, double noise_mhz, std::uint64_t seed);
double servo_drift_profile(double t_hours);

struct PumpOptions {
    int cavity_dim = 40;
    int n_periods = 10;
    int samples_per_period = 20;
    CouplingConvention convention = CouplingConvention::amplitude;
    EvolveOptions evolve;
};

State band_state(const FieldParams& fp, bool upper);
State fock_superposition(int dim, const std::map<int, cplx>& amplitudes);
// series n, sigma_x, sigma_z; states kept at every period boundary
SimResult pump_run(const ExperimentConfig& cfg, const State& qubit0, const State& cavity0, const PumpOptions& opt = {});
RateEstimate pump_slope(const SimResult& run, double omega_mod);
// fidelity of the boosted state at N = 1..n_max periods, in the free-cavity frame
std::vector<double> boost_fidelities(const ExperimentConfig& cfg, const std::map<int, cplx>& amplitudes, int n_max,
                                     const PumpOptions& opt = {});

struct ChernMap {
    Grid2D chern;    // rows b0, cols n
    Grid2D inside;   // window verdict as 0/1
};

ChernMap chern_map(const std::vector<double>& b0_grid, const std::vector<double>& n_grid, double g, double m,
                   CouplingConvention convention, int n_theta);

// max population of level 2 over one Rabi period for a lab-frame drive on a transmon
double transmon_leakage(double omega_q_ghz, double alpha, double rabi_mhz, int levels = 3);

}  // namespace floquet
