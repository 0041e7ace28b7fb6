#include "floquet/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Sparse>
#include <unsupported/Eigen/KroneckerProduct>

namespace floquet {

void NoiseModel::check() const {
    if (!(t1 > 0.0)) throw std::invalid_argument("NoiseModel.t1 must be positive (inf disables decay)");
    if (!(tphi > 0.0)) throw std::invalid_argument("NoiseModel.tphi must be positive (inf disables dephasing)");
    if (kappa_m < 0.0) throw std::invalid_argument("NoiseModel.kappa_m must be nonnegative");
    if (kappa_r < 0.0) throw std::invalid_argument("NoiseModel.kappa_r must be nonnegative");
    if (sigma_quasistatic < 0.0) throw std::invalid_argument("NoiseModel.sigma_quasistatic must be nonnegative");
    const auto [a, b] = readout_error;
    if (a < 0.0 || a > 1.0 || b < 0.0 || b > 1.0) throw std::invalid_argument("NoiseModel.readout_error must be probabilities");
}

NoiseModel NoiseModel::off() {
    NoiseModel n;
    n.readout_error = {0.0, 0.0};
    return n;
}

NoiseModel NoiseModel::measured() {
    NoiseModel n;
    n.t1 = 11.5;
    n.kappa_m = 84.0;
    n.kappa_r = 350.0;
    return n;
}

bool SimResult::has(const std::string& name) const {
    return std::find(names.begin(), names.end(), name) != names.end();
}

const std::vector<double>& SimResult::operator[](const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw std::out_of_range("SimResult has no series '" + name + "'");
    return series[it - names.begin()];
}

std::vector<double>& SimResult::add(const std::string& name) {
    if (has(name)) throw std::invalid_argument("duplicate series '" + name + "'");
    names.push_back(name);
    series.emplace_back();
    return series.back();
}

HamiltonianSource::HamiltonianSource(HilbertSpace space, std::vector<Operator> terms, CoefficientFn coefficients,
                                     bool piecewise_constant, std::vector<double> breakpoints)
    : space_(std::move(space)), terms_(std::move(terms)), coefficients_(std::move(coefficients)),
      piecewise_constant_(piecewise_constant), breakpoints_(std::move(breakpoints)) {
    space_.check();
    for (const auto& t : terms_)
        if (t.rows() != space_.dim() || t.cols() != space_.dim())
            throw std::invalid_argument("Hamiltonian term does not match the space dimension");
    std::sort(breakpoints_.begin(), breakpoints_.end());
}

HamiltonianSource HamiltonianSource::constant(const HilbertSpace& space, const Operator& h) {
    return HamiltonianSource(space, {h}, [](double, std::vector<double>& c) { c.assign(1, 1.0); }, true);
}

HamiltonianSource HamiltonianSource::from_function(const HilbertSpace& space, std::function<Operator(double)> h) {
    HamiltonianSource s(space, {}, [](double, std::vector<double>& c) { c.clear(); });
    s.function_ = std::move(h);
    return s;
}

Operator HamiltonianSource::at(double t) const {
    if (function_) return function_(t);
    std::vector<double> c;
    coefficients_(t, c);
    Operator h = Operator::Zero(dim(), dim());
    for (std::size_t k = 0; k < terms_.size(); ++k) h += c[k] * terms_[k];
    return h;
}

std::vector<double> HamiltonianSource::breakpoints(double t0, double t1) const {
    auto lo = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t0);
    auto hi = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), t1);
    return lo < hi ? std::vector<double>(lo, hi) : std::vector<double>{};
}

HamiltonianSource schedule_source(const HilbertSpace& space, const Schedule& s, const Operator& static_part) {
    s.check();
    std::vector<Operator> terms;
    const bool has_static = static_part.size() > 0;
    if (has_static) terms.push_back(static_part);
    terms.push_back(0.5 * kTwoPi * build_elementary(space, OpKind::sigma_x, 0));
    terms.push_back(0.5 * kTwoPi * build_elementary(space, OpKind::sigma_z, 0));
    std::vector<double> edges;
    for (std::size_t i = 0; i <= s.x.size(); ++i) edges.push_back(s.x.t0 + static_cast<double>(i) * s.x.dt);
    if (s.z.t0 != s.x.t0 || s.z.size() != s.x.size())
        for (std::size_t i = 0; i <= s.z.size(); ++i) edges.push_back(s.z.t0 + static_cast<double>(i) * s.z.dt);
    auto coeffs = [x = s.x, z = s.z, has_static](double t, std::vector<double>& c) {
        c.clear();
        if (has_static) c.push_back(1.0);
        c.push_back(x.value_at(t));
        c.push_back(z.value_at(t));
    };
    return HamiltonianSource(space, std::move(terms), coeffs, true, std::move(edges));
}

namespace {

using SpMat = Eigen::SparseMatrix<cplx>;

template <typename M>
M taylor_exp(const M& a, int n) {
    const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
    int s = 0;
    if (norm > 0.25) s = static_cast<int>(std::ceil(std::log2(norm / 0.25)));
    const M b = a / std::ldexp(1.0, s);
    M result = M::Identity(n, n);
    M term = M::Identity(n, n);
    for (int k = 1; k < 40; ++k) {
        term = (term * b / static_cast<double>(k)).eval();
        result += term;
        if (term.cwiseAbs().maxCoeff() < 1e-18) break;
    }
    for (int i = 0; i < s; ++i) result = (result * result).eval();
    return result;
}

// exp(-i K) for Hermitian 2x2 K, closed form
Eigen::MatrixXcd exp_herm2(const Eigen::MatrixXcd& k) {
    const double a0 = 0.5 * (k(0, 0).real() + k(1, 1).real());
    const double az = 0.5 * (k(0, 0).real() - k(1, 1).real());
    const cplx off = k(0, 1);
    const double r = std::sqrt(az * az + std::norm(off));
    const double sinc = r > 1e-300 ? std::sin(r) / r : 1.0;
    Eigen::MatrixXcd e(2, 2);
    const cplx I(0.0, 1.0);
    e(0, 0) = std::cos(r) - I * sinc * az;
    e(1, 1) = std::cos(r) + I * sinc * az;
    e(0, 1) = -I * sinc * off;
    e(1, 0) = -I * sinc * std::conj(off);
    return std::exp(-I * a0) * e;
}

Eigen::MatrixXcd superop_hamiltonian(const Eigen::MatrixXcd& h) {
    const int n = static_cast<int>(h.rows());
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
    const cplx I(0.0, 1.0);
    Eigen::MatrixXcd left = Eigen::kroneckerProduct(id, h).eval();
    Eigen::MatrixXcd right = Eigen::kroneckerProduct(h.transpose(), id).eval();
    return -I * (left - right);
}

Eigen::MatrixXcd dissipator(const std::vector<Operator>& collapse, int n) {
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(n * n, n * n);
    for (const auto& c : collapse) {
        const Eigen::MatrixXcd cdc = c.adjoint() * c;
        d += Eigen::kroneckerProduct(c.conjugate(), c).eval();
        d -= 0.5 * Eigen::kroneckerProduct(id, cdc).eval();
        d -= 0.5 * Eigen::kroneckerProduct(cdc.transpose(), id).eval();
    }
    return d;
}

double one_norm(const Eigen::MatrixXcd& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); }

double one_norm(const SpMat& m) {
    double best = 0.0;
    for (int k = 0; k < m.outerSize(); ++k) {
        double s = 0.0;
        for (SpMat::InnerIterator it(m, k); it; ++it) s += std::abs(it.value());
        best = std::max(best, s);
    }
    return best;
}

// y' = G(t) y with G = sum_k c_k(t) G_k (+ a static dissipator)
class Generator {
  public:
    Generator(const HamiltonianSource& src, bool lindblad, const std::vector<Operator>& collapse,
              const EvolveOptions& opt)
        : src_(src), lindblad_(lindblad), opt_(opt) {
        const int n = src.dim();
        size_ = lindblad ? n * n : n;
        dense_mode_ = size_ <= opt.dense_max_dim;
        if (lindblad && !collapse.empty()) diss_ = dissipator(collapse, n);
        if (!src.is_function()) {
            for (const auto& h : src.terms()) add_term(lindblad ? superop_hamiltonian(h) : Eigen::MatrixXcd(-cplx(0, 1) * h));
        }
        if (diss_.size() > 0) {
            add_term(diss_);
            has_extra_ = true;
        }
    }

    int size() const { return size_; }

    double norm_bound(double t) {
        if (src_.is_function()) return one_norm(function_generator(t));
        coefficients(t);
        double s = 0.0;
        for (std::size_t k = 0; k < norms_.size(); ++k) s += std::abs(c_[k]) * norms_[k];
        return s;
    }

    // y <- exp(h G(t)) y
    void step(double t, double h, Eigen::VectorXcd& y) {
        if (src_.is_function()) {
            const Eigen::MatrixXcd g = function_generator(t);
            if (dense_mode_) {
                y = dense_exp(h * g, !lindblad_) * y;
            } else {
                const SpMat sg = g.sparseView();
                taylor_action(h, y, [&](const Eigen::VectorXcd& v) { return Eigen::VectorXcd(sg * v); }, one_norm(sg) * h);
            }
            return;
        }
        coefficients(t);
        if (dense_mode_) {
            if (cache_valid_ && h == cache_h_ && c_ == cache_c_) {
                y = cache_e_ * y;
                return;
            }
            Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(size_, size_);
            for (std::size_t k = 0; k < dense_.size(); ++k)
                if (c_[k] != 0.0) a += (c_[k] * h) * dense_[k];
            cache_e_ = dense_exp(a, !lindblad_);
            cache_c_ = c_;
            cache_h_ = h;
            cache_valid_ = true;
            y = cache_e_ * y;
            return;
        }
        double norm = 0.0;
        for (std::size_t k = 0; k < norms_.size(); ++k) norm += std::abs(c_[k]) * norms_[k];
        taylor_action(
            h, y,
            [&](const Eigen::VectorXcd& v) {
                Eigen::VectorXcd out = Eigen::VectorXcd::Zero(v.size());
                for (std::size_t k = 0; k < sparse_.size(); ++k)
                    if (c_[k] != 0.0) out += c_[k] * (sparse_[k] * v);
                return out;
            },
            norm * h);
    }

  private:
    void add_term(const Eigen::MatrixXcd& g) {
        norms_.push_back(one_norm(g));
        if (dense_mode_)
            dense_.push_back(g);
        else
            sparse_.push_back(g.sparseView(1e-300, 1.0));
    }

    void coefficients(double t) {
        src_.coefficients(t, c_);
        if (has_extra_) c_.push_back(1.0);
    }

    Eigen::MatrixXcd function_generator(double t) const {
        const Operator h = src_.function()(t);
        Eigen::MatrixXcd g = lindblad_ ? superop_hamiltonian(h) : Eigen::MatrixXcd(-cplx(0, 1) * h);
        if (diss_.size() > 0) g += diss_;
        return g;
    }

    static Eigen::MatrixXcd dense_exp(const Eigen::MatrixXcd& a, bool anti_hermitian) {
        const int n = static_cast<int>(a.rows());
        if (n == 2 && anti_hermitian) return exp_herm2(cplx(0, 1) * a);
        if (n == 4) {
            const Eigen::Matrix4cd f = a;
            return taylor_exp<Eigen::Matrix4cd>(f, 4);
        }
        return taylor_exp<Eigen::MatrixXcd>(a, n);
    }

    template <typename Apply>
    static void taylor_action(double h, Eigen::VectorXcd& y, Apply&& apply, double scaled_norm) {
        const int sub = std::max(1, static_cast<int>(std::ceil(scaled_norm / 0.5)));
        const double hs = h / sub;
        for (int s = 0; s < sub; ++s) {
            Eigen::VectorXcd term = y;
            Eigen::VectorXcd acc = y;
            const double ref = std::max(y.cwiseAbs().maxCoeff(), 1e-300);
            for (int k = 1; k < 60; ++k) {
                term = apply(term) * (hs / k);
                acc += term;
                if (term.cwiseAbs().maxCoeff() < 1e-17 * ref) break;
            }
            y = std::move(acc);
        }
    }

    const HamiltonianSource& src_;
    bool lindblad_;
    EvolveOptions opt_;
    int size_ = 0;
    bool dense_mode_ = true;
    bool has_extra_ = false;
    Eigen::MatrixXcd diss_;
    std::vector<Eigen::MatrixXcd> dense_;
    std::vector<SpMat> sparse_;
    std::vector<double> norms_;
    std::vector<double> c_;
    bool cache_valid_ = false;
    double cache_h_ = 0.0;
    std::vector<double> cache_c_;
    Eigen::MatrixXcd cache_e_;
};

// indices of basis states whose cavity c sits in its top Fock level
std::vector<std::vector<int>> top_level_indices(const HilbertSpace& space) {
    std::vector<std::vector<int>> out;
    const int dim = space.dim();
    int stride = dim;
    stride /= space.qubit_levels;
    for (std::size_t c = 0; c < space.cavity_dims.size(); ++c) {
        const int d = space.cavity_dims[c];
        stride /= d;
        std::vector<int> idx;
        for (int i = 0; i < dim; ++i)
            if ((i / stride) % d == d - 1) idx.push_back(i);
        out.push_back(std::move(idx));
    }
    return out;
}

template <typename Record, typename Populations>
void run_engine(Generator& gen, const HamiltonianSource& src, Eigen::VectorXcd& y, const std::vector<double>& t_grid,
                const EvolveOptions& opt, Record&& record, Populations&& top_population) {
    if (t_grid.empty()) throw std::invalid_argument("empty time grid");
    for (std::size_t k = 1; k < t_grid.size(); ++k)
        if (t_grid[k] < t_grid[k - 1]) throw std::invalid_argument("time grid must be nondecreasing");
    auto check = [&](double t) {
        if (!opt.check_truncation) return;
        const double p = top_population(y);
        if (p > opt.truncation_tol)
            throw TruncationOverflow("cavity top Fock level population " + std::to_string(p) + " at t=" +
                                     std::to_string(t) + " us exceeds " + std::to_string(opt.truncation_tol));
    };
    check(t_grid[0]);
    record(0, y);
    for (std::size_t k = 1; k < t_grid.size(); ++k) {
        std::vector<double> cuts = src.breakpoints(t_grid[k - 1], t_grid[k]);
        cuts.insert(cuts.begin(), t_grid[k - 1]);
        cuts.push_back(t_grid[k]);
        for (std::size_t p = 1; p < cuts.size(); ++p) {
            const double a = cuts[p - 1], b = cuts[p];
            const double len = b - a;
            if (len <= 0.0) continue;
            if (src.piecewise_constant()) {
                gen.step(0.5 * (a + b), len, y);
                continue;
            }
            const double norm = std::max({gen.norm_bound(a), gen.norm_bound(0.5 * (a + b)), gen.norm_bound(b)});
            const int n = std::max(1, static_cast<int>(std::ceil(len * norm / opt.norm_step)));
            const double h = len / n;
            for (int i = 0; i < n; ++i) gen.step(a + (i + 0.5) * h, h, y);
        }
        check(t_grid[k]);
        record(k, y);
    }
}

}  // namespace

Eigen::MatrixXcd expm_taylor(const Eigen::MatrixXcd& a) { return taylor_exp<Eigen::MatrixXcd>(a, static_cast<int>(a.rows())); }

Operator density(const State& psi) { return psi * psi.adjoint(); }

Operator unvec(const Eigen::VectorXcd& v, int dim) { return Eigen::Map<const Eigen::MatrixXcd>(v.data(), dim, dim); }

double expectation(const Operator& o, const State& psi) { return psi.dot(o * psi).real(); }

double expectation_rho(const Operator& o, const Operator& rho) { return (o.cwiseProduct(rho.transpose())).sum().real(); }

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return v;
}

std::vector<double> arange_grid(double a, double b, double step) {
    const int n = static_cast<int>(std::floor((b - a) / step + 1e-9)) + 1;
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = a + i * step;
    return v;
}

std::vector<Operator> collapse_operators(const HilbertSpace& space, const NoiseModel& noise) {
    noise.check();
    std::vector<Operator> c;
    if (std::isfinite(noise.t1)) c.push_back(std::sqrt(1.0 / noise.t1) * build_elementary(space, OpKind::sigma_minus, 0));
    if (std::isfinite(noise.tphi))
        c.push_back(std::sqrt(1.0 / (2.0 * noise.tphi)) * build_elementary(space, OpKind::sigma_z, 0));
    if (noise.kappa_m > 0.0 && space.cavity_dims.size() >= 1)
        c.push_back(std::sqrt(kappa_rate(noise.kappa_m)) * build_elementary(space, OpKind::annihilate, 1));
    if (noise.kappa_r > 0.0 && space.cavity_dims.size() >= 2)
        c.push_back(std::sqrt(kappa_rate(noise.kappa_r)) * build_elementary(space, OpKind::annihilate, 2));
    return c;
}

SimResult propagate_unitary(const HamiltonianSource& h, const State& psi0, const std::vector<double>& t_grid,
                            const Observables& observables, const EvolveOptions& opt) {
    if (psi0.size() != h.dim()) throw std::invalid_argument("initial state does not match the space");
    if (std::abs(psi0.norm() - 1.0) > 1e-9) throw std::invalid_argument("initial state is not normalized");
    SimResult r;
    r.times = t_grid;
    for (const auto& [name, op] : observables) r.add(name).resize(t_grid.size());
    Generator gen(h, false, {}, opt);
    Eigen::VectorXcd y = psi0;
    const auto tops = top_level_indices(h.space());
    run_engine(
        gen, h, y, t_grid, opt,
        [&](std::size_t k, const Eigen::VectorXcd& v) {
            for (std::size_t o = 0; o < observables.size(); ++o) r.series[o][k] = expectation(observables[o].second, v);
            if (opt.keep_states) r.states.push_back(v);
        },
        [&](const Eigen::VectorXcd& v) {
            double worst = 0.0;
            for (const auto& idx : tops) {
                double p = 0.0;
                for (int i : idx) p += std::norm(v(i));
                worst = std::max(worst, p);
            }
            return worst;
        });
    r.meta["engine"] = "unitary";
    return r;
}

SimResult propagate_lindblad(const HamiltonianSource& h, const Operator& rho0, const NoiseModel& noise,
                             const std::vector<double>& t_grid, const Observables& observables,
                             const EvolveOptions& opt) {
    const int n = h.dim();
    if (rho0.rows() != n || rho0.cols() != n) throw std::invalid_argument("initial density matrix does not match the space");
    if (hermiticity_error(rho0) > 1e-9) throw std::invalid_argument("initial density matrix is not Hermitian");
    if (std::abs(rho0.trace() - 1.0) > 1e-9) throw std::invalid_argument("initial density matrix does not have unit trace");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho0, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9) throw std::invalid_argument("initial density matrix is not positive");
    SimResult r;
    r.times = t_grid;
    for (const auto& [name, op] : observables) r.add(name).resize(t_grid.size());
    Generator gen(h, true, collapse_operators(h.space(), noise), opt);
    Eigen::VectorXcd y = Eigen::Map<const Eigen::VectorXcd>(rho0.data(), n * n);
    const auto tops = top_level_indices(h.space());
    run_engine(
        gen, h, y, t_grid, opt,
        [&](std::size_t k, const Eigen::VectorXcd& v) {
            const Eigen::Map<const Eigen::MatrixXcd> rho(v.data(), n, n);
            for (std::size_t o = 0; o < observables.size(); ++o)
                r.series[o][k] = (observables[o].second.cwiseProduct(rho.transpose())).sum().real();
            if (opt.keep_states) r.states.push_back(v);
        },
        [&](const Eigen::VectorXcd& v) {
            double worst = 0.0;
            for (const auto& idx : tops) {
                double p = 0.0;
                for (int i : idx) p += v(i * n + i).real();
                worst = std::max(worst, p);
            }
            return worst;
        });
    r.meta["engine"] = "lindblad";
    return r;
}

double apply_readout_error(double p_e, const std::pair<double, double>& error) {
    const auto [e_given_g, g_given_e] = error;
    return p_e * (1.0 - g_given_e) + (1.0 - p_e) * e_given_g;
}

double sample_shots(double p, int shots, std::mt19937_64& rng) {
    if (shots < 1) throw std::invalid_argument("shots must be >= 1");
    std::binomial_distribution<int> dist(shots, std::clamp(p, 0.0, 1.0));
    return static_cast<double>(dist(rng)) / shots;
}

}  // namespace floquet
