#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace floquet {

using cplx = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using State = Eigen::VectorXcd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// MHz (ordinary frequency) to rad/us
inline double angular(double mhz) { return kTwoPi * mhz; }

struct HilbertSpace {
    int qubit_levels = 2;
    std::vector<int> cavity_dims;

    HilbertSpace() = default;
    HilbertSpace(int levels, std::vector<int> cavities);

    int dim() const;
    int subsystems() const { return 1 + static_cast<int>(cavity_dims.size()); }
    int subsystem_dim(int index) const;
    void check() const;
};

enum class OpKind { identity, sigma_x, sigma_y, sigma_z, sigma_minus, sigma_plus, annihilate, create, number };

// subsystem 0 is the qubit, 1.. are cavities in order
Operator build_elementary(const HilbertSpace& space, OpKind which, int subsystem = 0);

// Index of transmon level j inside the qubit factor (|e> sits first for two levels)
int level_index(int qubit_levels, int j);

// Basis state |level> (x) |n_1> (x) ... ; fock may be shorter than the cavity count
State basis_state(const HilbertSpace& space, int qubit_level, const std::vector<int>& fock = {});
State product_state(const HilbertSpace& space, const State& qubit, const std::vector<State>& cavities);

struct DeviceParams {
    std::pair<double, double> omega_q_range{3.9, 7.4};  // GHz
    double alpha = 240.0;      // MHz
    double g_boost = 13.0;     // MHz
    double g_readout = 90.0;   // MHz
    double gamma_q = 13.9;     // kHz
    double omega_r = 7.492;    // GHz
    double kappa_r = 350.0;    // kHz
    double omega_m = 5.04;     // GHz
    double kappa_m = 84.0;     // kHz
    double ej_ratio = 3.0;
    double omega_q = 4.7;      // GHz, operating point of the measured device

    void check() const;
};

struct FieldParams {
    double b0 = 20.0;         // MHz
    double omega_mod = 1.0;   // MHz
    double m = 0.0;
    double delta = 0.0;       // MHz
    double g = 0.0;           // MHz

    double period() const { return 1.0 / omega_mod; }
    void check() const;
};

// Effective field components (B_x, B_z) in MHz at time t
std::pair<double, double> field_at(const FieldParams& fp, double t);

Operator pump_hamiltonian(const HilbertSpace& space, const FieldParams& fp, double t);
Operator jaynes_cummings_hamiltonian(const HilbertSpace& space, const DeviceParams& params,
                                     double omega_d, double omega_drive_amp, double t);
Operator rotating_frame_hamiltonian(const HilbertSpace& space, double delta, double small_delta,
                                    double g, double omega_x);
Operator transmon_hamiltonian(const HilbertSpace& space, double omega_q, double alpha);

double flux_to_frequency(const DeviceParams& params, double phi);

struct Eigenbasis {
    Eigen::VectorXd values;
    Operator vectors;
    double min_gap = 0.0;
    bool degenerate = false;
};

Eigenbasis instantaneous_eigenbasis(const Operator& h);

double hermiticity_error(const Operator& h);
double unitarity_error(const Operator& u);

class PhysicsError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace floquet
