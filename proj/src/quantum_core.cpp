#include "floquet/quantum_core.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include <unsupported/Eigen/KroneckerProduct>

namespace floquet {

HilbertSpace::HilbertSpace(int levels, std::vector<int> cavities)
    : qubit_levels(levels), cavity_dims(std::move(cavities)) {
    check();
}

int HilbertSpace::dim() const {
    return std::accumulate(cavity_dims.begin(), cavity_dims.end(), qubit_levels, std::multiplies<int>());
}

int HilbertSpace::subsystem_dim(int index) const {
    if (index < 0 || index >= subsystems())
        throw std::out_of_range("subsystem index " + std::to_string(index) + " out of range");
    return index == 0 ? qubit_levels : cavity_dims[index - 1];
}

void HilbertSpace::check() const {
    if (qubit_levels < 2) throw std::invalid_argument("qubit_levels must be >= 2");
    for (int d : cavity_dims)
        if (d < 2) throw std::invalid_argument("cavity dimension must be >= 2");
}

void DeviceParams::check() const {
    if (!(omega_q_range.first < omega_q_range.second))
        throw std::invalid_argument("omega_q_range: min must be below max");
    const double positives[] = {alpha, g_boost, g_readout, gamma_q, omega_r, kappa_r, omega_m, kappa_m, ej_ratio};
    for (double v : positives)
        if (!(v > 0.0)) throw std::invalid_argument("device rates and couplings must be positive");
}

void FieldParams::check() const {
    if (b0 < 0.0) throw std::invalid_argument("b0 must be nonnegative");
    if (!(omega_mod > 0.0)) throw std::invalid_argument("omega_mod must be positive");
}

int level_index(int qubit_levels, int j) {
    if (j < 0 || j >= qubit_levels) throw std::out_of_range("qubit level out of range");
    if (qubit_levels == 2) return 1 - j;
    return j;
}

namespace {

// lowering operator of a d-level ladder in its own ascending basis
Eigen::MatrixXcd ladder(int d) {
    Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(d, d);
    for (int n = 1; n < d; ++n) b(n - 1, n) = std::sqrt(static_cast<double>(n));
    return b;
}

Eigen::MatrixXcd qubit_factor(int levels, OpKind which) {
    const cplx I(0.0, 1.0);
    if (levels == 2) {
        // {|e>, |g>}
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2, 2);
        switch (which) {
            case OpKind::identity: return Eigen::MatrixXcd::Identity(2, 2);
            case OpKind::sigma_x: m(0, 1) = 1.0; m(1, 0) = 1.0; return m;
            case OpKind::sigma_y: m(0, 1) = -I; m(1, 0) = I; return m;
            case OpKind::sigma_z: m(0, 0) = 1.0; m(1, 1) = -1.0; return m;
            case OpKind::sigma_minus: m(1, 0) = 1.0; return m;
            case OpKind::sigma_plus: m(0, 1) = 1.0; return m;
            case OpKind::number: m(0, 0) = 1.0; return m;
            default: break;
        }
        throw std::invalid_argument("cavity operator requested on the qubit");
    }
    const Eigen::MatrixXcd b = ladder(levels);
    const Eigen::MatrixXcd bd = b.adjoint();
    switch (which) {
        case OpKind::identity: return Eigen::MatrixXcd::Identity(levels, levels);
        case OpKind::sigma_x: return b + bd;
        case OpKind::sigma_y: return -I * (bd - b);
        case OpKind::sigma_z: return 2.0 * bd * b - Eigen::MatrixXcd::Identity(levels, levels);
        case OpKind::sigma_minus: return b;
        case OpKind::sigma_plus: return bd;
        case OpKind::number: return bd * b;
        default: break;
    }
    throw std::invalid_argument("cavity operator requested on the qubit");
}

Eigen::MatrixXcd cavity_factor(int d, OpKind which) {
    switch (which) {
        case OpKind::identity: return Eigen::MatrixXcd::Identity(d, d);
        case OpKind::annihilate: return ladder(d);
        case OpKind::create: return ladder(d).adjoint();
        case OpKind::number: {
            Eigen::MatrixXcd n = Eigen::MatrixXcd::Zero(d, d);
            for (int k = 0; k < d; ++k) n(k, k) = k;
            return n;
        }
        default: break;
    }
    throw std::invalid_argument("Pauli operator requested on a cavity");
}

void require_single_cavity(const HilbertSpace& space) {
    if (space.cavity_dims.size() != 1)
        throw std::invalid_argument("Hamiltonian builder needs exactly one cavity, space has " +
                                    std::to_string(space.cavity_dims.size()));
}

Operator coupling(const HilbertSpace& space) {
    const Operator a = build_elementary(space, OpKind::annihilate, 1);
    const Operator sm = build_elementary(space, OpKind::sigma_minus, 0);
    return a.adjoint() * sm + a * sm.adjoint();
}

}  // namespace

Operator build_elementary(const HilbertSpace& space, OpKind which, int subsystem) {
    space.check();
    if (subsystem < 0 || subsystem >= space.subsystems())
        throw std::out_of_range("invalid subsystem index " + std::to_string(subsystem));
    Eigen::MatrixXcd result(1, 1);
    result(0, 0) = 1.0;
    for (int s = 0; s < space.subsystems(); ++s) {
        const int d = space.subsystem_dim(s);
        Eigen::MatrixXcd factor;
        if (s != subsystem)
            factor = Eigen::MatrixXcd::Identity(d, d);
        else if (s == 0)
            factor = qubit_factor(d, which);
        else
            factor = cavity_factor(d, which);
        Eigen::MatrixXcd next = Eigen::kroneckerProduct(result, factor).eval();
        result = std::move(next);
    }
    return result;
}

State basis_state(const HilbertSpace& space, int qubit_level, const std::vector<int>& fock) {
    std::vector<State> cavities;
    for (std::size_t c = 0; c < space.cavity_dims.size(); ++c) {
        const int n = c < fock.size() ? fock[c] : 0;
        if (n < 0 || n >= space.cavity_dims[c]) throw std::out_of_range("Fock index beyond truncation");
        State v = State::Zero(space.cavity_dims[c]);
        v(n) = 1.0;
        cavities.push_back(v);
    }
    State q = State::Zero(space.qubit_levels);
    q(level_index(space.qubit_levels, qubit_level)) = 1.0;
    return product_state(space, q, cavities);
}

State product_state(const HilbertSpace& space, const State& qubit, const std::vector<State>& cavities) {
    if (qubit.size() != space.qubit_levels || cavities.size() != space.cavity_dims.size())
        throw std::invalid_argument("product_state factors do not match the space");
    Eigen::VectorXcd v = qubit;
    for (std::size_t c = 0; c < cavities.size(); ++c) {
        if (cavities[c].size() != space.cavity_dims[c]) throw std::invalid_argument("cavity factor size mismatch");
        Eigen::VectorXcd next = Eigen::kroneckerProduct(v, cavities[c]).eval();
        v = std::move(next);
    }
    return v;
}

std::pair<double, double> field_at(const FieldParams& fp, double t) {
    const double ph = angular(fp.omega_mod) * t;
    return {fp.b0 * (fp.m + std::cos(ph)), fp.b0 * std::sin(ph)};
}

Operator pump_hamiltonian(const HilbertSpace& space, const FieldParams& fp, double t) {
    require_single_cavity(space);
    const auto [bx, bz] = field_at(fp, t);
    return rotating_frame_hamiltonian(space, fp.delta, bz, fp.g, bx);
}

Operator rotating_frame_hamiltonian(const HilbertSpace& space, double delta, double small_delta, double g,
                                    double omega_x) {
    require_single_cavity(space);
    Operator h = angular(delta) * build_elementary(space, OpKind::number, 1);
    h += 0.5 * angular(small_delta) * build_elementary(space, OpKind::sigma_z, 0);
    h += angular(g) * coupling(space);
    h += 0.5 * angular(omega_x) * build_elementary(space, OpKind::sigma_x, 0);
    return h;
}

Operator jaynes_cummings_hamiltonian(const HilbertSpace& space, const DeviceParams& params, double omega_d,
                                     double omega_drive_amp, double t) {
    require_single_cavity(space);
    const double wc = angular(1000.0 * params.omega_m);
    const double wq = angular(1000.0 * params.omega_q);
    const double wd = angular(1000.0 * omega_d);
    Operator h = wc * build_elementary(space, OpKind::number, 1);
    h += 0.5 * wq * build_elementary(space, OpKind::sigma_z, 0);
    h += angular(params.g_boost) * coupling(space);
    h += angular(omega_drive_amp) * std::cos(wd * t) * build_elementary(space, OpKind::sigma_x, 0);
    return h;
}

Operator transmon_hamiltonian(const HilbertSpace& space, double omega_q, double alpha) {
    space.check();
    const int levels = space.qubit_levels;
    Eigen::MatrixXcd q = Eigen::MatrixXcd::Zero(levels, levels);
    const double wq = angular(1000.0 * omega_q);
    const double a = angular(alpha);
    for (int j = 0; j < levels; ++j) {
        const int idx = level_index(levels, j);
        q(idx, idx) = wq * j - 0.5 * a * j * (j - 1);
    }
    Operator h(1, 1);
    h(0, 0) = 1.0;
    for (int s = 0; s < space.subsystems(); ++s) {
        const int d = space.subsystem_dim(s);
        Eigen::MatrixXcd f = s == 0 ? q : Eigen::MatrixXcd::Identity(d, d);
        Operator next = Eigen::kroneckerProduct(h, f).eval();
        h = std::move(next);
    }
    return h;
}

double flux_to_frequency(const DeviceParams& params, double phi) {
    if (params.ej_ratio < 1.0) throw std::invalid_argument("ej_ratio must be >= 1");
    const double d = (params.ej_ratio - 1.0) / (params.ej_ratio + 1.0);
    const double c = std::cos(kPi * phi);
    const double s = std::sin(kPi * phi);
    return params.omega_q_range.second * std::pow(c * c + d * d * s * s, 0.25);
}

Eigenbasis instantaneous_eigenbasis(const Operator& h) {
    if (h.rows() != h.cols()) throw std::invalid_argument("eigenbasis needs a square operator");
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    if (hermiticity_error(h) > 1e-10 * scale) throw std::invalid_argument("eigenbasis needs a Hermitian operator");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
    if (solver.info() != Eigen::Success) throw PhysicsError("eigen decomposition failed");
    Eigenbasis out;
    out.values = solver.eigenvalues();
    out.vectors = solver.eigenvectors();
    for (int k = 0; k < out.vectors.cols(); ++k) {
        auto col = out.vectors.col(k);
        const double peak = col.cwiseAbs().maxCoeff();
        int pick = 0;
        for (int i = 0; i < col.size(); ++i)
            if (std::abs(col(i)) >= peak * (1.0 - 1e-12)) {
                pick = i;
                break;
            }
        col *= std::conj(col(pick)) / std::abs(col(pick));
    }
    out.min_gap = std::numeric_limits<double>::infinity();
    for (int k = 1; k < out.values.size(); ++k) out.min_gap = std::min(out.min_gap, out.values(k) - out.values(k - 1));
    out.degenerate = out.values.size() > 1 && out.min_gap <= 1e-12 * scale;
    return out;
}

double hermiticity_error(const Operator& h) { return (h - h.adjoint()).cwiseAbs().maxCoeff(); }

double unitarity_error(const Operator& u) {
    return (u.adjoint() * u - Operator::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
}

}  // namespace floquet
