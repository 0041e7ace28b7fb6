#include "floquet/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numeric>

#include <fftw3.h>
#include <unsupported/Eigen/LevenbergMarquardt>

namespace floquet {

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

// unnormalized forward DFT of a real sequence, bins 0..n/2
std::vector<cplx> rfft(const std::vector<double>& x) {
    const int n = static_cast<int>(x.size());
    std::vector<double> in(x);
    std::vector<cplx> out(n / 2 + 1);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_dft_r2c_1d(n, in.data(), reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}

double uniform_step(const std::vector<double>& times) {
    if (times.size() < 2) throw std::invalid_argument("series needs at least two samples");
    const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    for (std::size_t i = 1; i < times.size(); ++i)
        if (std::abs(times[i] - times[i - 1] - dt) > 1e-6 * dt) throw std::invalid_argument("time grid is not uniform");
    return dt;
}

double mean_of(const std::vector<double>& v, std::size_t from, std::size_t to) {
    return std::accumulate(v.begin() + from, v.begin() + to, 0.0) / static_cast<double>(to - from);
}

struct ExpFunctor : Eigen::DenseFunctor<double> {
    ExpFunctor(const Eigen::VectorXd& t, const Eigen::VectorXd& y)
        : Eigen::DenseFunctor<double>(3, static_cast<int>(t.size())), t(t), y(y) {}
    // p = (A, k, c), model A exp(-k t) + c
    int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& f) const {
        f = (p(0) * (-p(1) * t.array()).exp() + p(2)).matrix() - y;
        return 0;
    }
    int df(const Eigen::VectorXd& p, Eigen::MatrixXd& j) const {
        const Eigen::ArrayXd e = (-p(1) * t.array()).exp();
        j.col(0) = e.matrix();
        j.col(1) = (-p(0) * t.array() * e).matrix();
        j.col(2).setOnes();
        return 0;
    }
    Eigen::VectorXd t, y;
};

struct GaussFunctor : Eigen::DenseFunctor<double> {
    GaussFunctor(const Eigen::VectorXd& t, const Eigen::VectorXd& y)
        : Eigen::DenseFunctor<double>(5, static_cast<int>(t.size())), t(t), y(y) {}
    // p = (A, u, f, phi, c), model A exp(-(u t)^2) cos(2 pi f t + phi) + c
    int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& out) const {
        const Eigen::ArrayXd ut = p(1) * t.array();
        out = (p(0) * (-ut * ut).exp() * (kTwoPi * p(2) * t.array() + p(3)).cos() + p(4)).matrix() - y;
        return 0;
    }
    int df(const Eigen::VectorXd& p, Eigen::MatrixXd& j) const {
        const Eigen::ArrayXd ut = p(1) * t.array();
        const Eigen::ArrayXd e = (-ut * ut).exp();
        const Eigen::ArrayXd arg = kTwoPi * p(2) * t.array() + p(3);
        const Eigen::ArrayXd c = arg.cos(), s = arg.sin();
        j.col(0) = (e * c).matrix();
        j.col(1) = (-2.0 * p(0) * p(1) * t.array().square() * e * c).matrix();
        j.col(2) = (-p(0) * e * s * kTwoPi * t.array()).matrix();
        j.col(3) = (-p(0) * e * s).matrix();
        j.col(4).setOnes();
        return 0;
    }
    Eigen::VectorXd t, y;
};

Eigen::VectorXd to_eigen(const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); }

// peak of |X(f)| of the detrended series, parabolic refinement on a padded grid
double dominant_frequency(const std::vector<double>& x, double dt, int pad_factor, bool hann) {
    const std::size_t n = x.size();
    std::size_t m = 1;
    while (m < n * static_cast<std::size_t>(pad_factor)) m <<= 1;
    std::vector<double> buf(m, 0.0);
    const double mean = mean_of(x, 0, n);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = hann && n > 1 ? 0.5 * (1.0 - std::cos(kTwoPi * i / (n - 1))) : 1.0;
        buf[i] = (x[i] - mean) * w;
    }
    const auto spec = rfft(buf);
    std::size_t best = 1;
    for (std::size_t k = 1; k < spec.size(); ++k)
        if (std::abs(spec[k]) > std::abs(spec[best])) best = k;
    double shift = 0.0;
    if (best > 0 && best + 1 < spec.size()) {
        const double a = std::abs(spec[best - 1]), b = std::abs(spec[best]), c = std::abs(spec[best + 1]);
        const double den = a - 2.0 * b + c;
        if (den != 0.0) shift = 0.5 * (a - c) / den;
    }
    return (static_cast<double>(best) + shift) / (static_cast<double>(m) * dt);
}

}  // namespace

Spectrum power_spectrum(const std::vector<double>& times, const std::vector<double>& series, Detrend mode,
                        double offset, bool hann) {
    if (times.size() != series.size()) throw std::invalid_argument("times and series differ in length");
    const double dt = uniform_step(times);
    const std::size_t n = series.size();
    Spectrum s;
    s.detrend = mode;
    s.omega_s = 1.0 / dt;
    s.removed = mode == Detrend::mean ? mean_of(series, 0, n) : mode == Detrend::offset ? offset : 0.0;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = hann && n > 1 ? std::sqrt(8.0 / 3.0) * 0.5 * (1.0 - std::cos(kTwoPi * i / (n - 1))) : 1.0;
        x[i] = (series[i] - s.removed) * w;
    }
    const auto spec = rfft(x);
    const double nn = static_cast<double>(n) * static_cast<double>(n);
    s.freqs.resize(spec.size());
    s.power.resize(spec.size());
    for (std::size_t k = 0; k < spec.size(); ++k) {
        s.freqs[k] = static_cast<double>(k) / (static_cast<double>(n) * dt);
        const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
        s.power[k] = (edge ? 1.0 : 2.0) * std::norm(spec[k]) / nn;
    }
    s.normalization = std::accumulate(s.power.begin(), s.power.end(), 0.0);
    // rounding residue of a constant series counts as no power
    double scale = 0.0;
    for (double v : series) scale = std::max(scale, std::abs(v));
    if (s.normalization <= 1e-24 * scale * scale) {
        std::fill(s.power.begin(), s.power.end(), 0.0);
        s.normalization = 0.0;
    }
    return s;
}

double fractional_harmonic_content(const Spectrum& s, double cutoff) {
    const double nyquist = 0.5 * s.omega_s;
    if (!(cutoff < nyquist)) throw std::invalid_argument("cutoff must lie below the Nyquist frequency");
    if (!(s.normalization > 0.0)) throw std::invalid_argument("spectrum has zero total power");
    const double df = s.freqs.size() > 1 ? s.freqs[1] - s.freqs[0] : nyquist;
    double above = 0.0;
    for (std::size_t k = 0; k < s.freqs.size(); ++k) {
        const double lo = std::max(0.0, s.freqs[k] - 0.5 * df);
        const double hi = std::min(nyquist, s.freqs[k] + 0.5 * df);
        if (hi <= lo) continue;
        const double frac = std::clamp((hi - cutoff) / (hi - lo), 0.0, 1.0);
        above += frac * s.power[k];
    }
    return std::clamp(above / s.normalization, 0.0, 1.0);
}

double adiabaticity_metric(const std::vector<double>& times, const std::vector<double>& series, double cutoff) {
    double asymptote;
    try {
        const ExpFit fit = fit_exponential(times, series);
        if (!fit.identifiable || !std::isfinite(fit.offset)) throw FitError("offset not identifiable");
        asymptote = fit.offset;
    } catch (const std::exception&) {
        asymptote = mean_of(series, series.size() - series.size() / 4, series.size());
    }
    return fractional_harmonic_content(power_spectrum(times, series, Detrend::offset, asymptote), cutoff);
}

ExpFit fit_exponential(const std::vector<double>& times, const std::vector<double>& series) {
    if (times.size() != series.size()) throw std::invalid_argument("times and series differ in length");
    const std::size_t n = series.size();
    if (n < 10) throw std::invalid_argument("exponential fit needs at least 10 points");
    ExpFit out;
    const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
    const double scale = std::max({1.0, std::abs(*lo), std::abs(*hi)});
    if (*hi - *lo < 1e-12 * scale) {
        out.identifiable = false;
        out.offset = mean_of(series, 0, n);
        out.tau = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    const double t0 = times.front();
    const double span = times.back() - t0;
    const double c0 = mean_of(series, n - std::max<std::size_t>(1, n / 10), n);
    const double a0 = series.front() - c0;
    double tau0 = span / 3.0;
    for (std::size_t i = 1; i < n; ++i)
        if (std::abs(series[i] - c0) < std::abs(a0) / std::exp(1.0)) {
            tau0 = std::max(times[i] - t0, span / n);
            break;
        }
    Eigen::VectorXd t = to_eigen(times).array() - t0;
    ExpFunctor fn(t, to_eigen(series));
    Eigen::LevenbergMarquardt<ExpFunctor> lm(fn);
    lm.setMaxfev(4000);
    lm.setXtol(1e-14);
    lm.setFtol(1e-14);
    Eigen::VectorXd p(3);
    p << a0, 1.0 / tau0, c0;
    lm.minimize(p);
    if (!p.allFinite() || !(p(1) > 0.0)) throw FitError("exponential fit did not converge");
    Eigen::VectorXd r(n);
    fn(p, r);
    out.amplitude = p(0) * std::exp(p(1) * t0);
    out.tau = 1.0 / p(1);
    out.offset = p(2);
    out.residual = r.norm();
    return out;
}

int count_extrema(const std::vector<double>& series, double hysteresis) {
    if (series.size() < 3) return 0;
    const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
    const double h = hysteresis * (*hi - *lo);
    if (h <= 0.0) return 0;
    int count = 0;
    int dir = 0;
    double anchor = series.front();
    for (double v : series) {
        if (dir >= 0 && v < anchor - h) {
            if (dir > 0) ++count;
            dir = -1;
            anchor = v;
        } else if (dir <= 0 && v > anchor + h) {
            if (dir < 0) ++count;
            dir = 1;
            anchor = v;
        } else if ((dir > 0 && v > anchor) || (dir < 0 && v < anchor)) {
            anchor = v;
        }
    }
    return count;
}

GaussFit fit_gaussian_envelope(const std::vector<double>& times, const std::vector<double>& series) {
    if (times.size() != series.size()) throw std::invalid_argument("times and series differ in length");
    const std::size_t n = series.size();
    if (n < 10) throw std::invalid_argument("Gaussian envelope fit needs at least 10 points");
    if (count_extrema(series) < 3) throw FitError("series shows fewer than 3 extrema");
    const double dt = uniform_step(times);
    const double t0 = times.front();
    const double span = times.back() - t0;
    const double c0 = mean_of(series, 0, n);
    const double f0 = dominant_frequency(series, dt, 8, false);

    Eigen::VectorXd t = to_eigen(times).array() - t0;
    const Eigen::VectorXd y = to_eigen(series);
    // amplitude and phase from a linear fit at the trial frequency
    Eigen::MatrixXd basis(n, 3);
    basis.col(0) = (kTwoPi * f0 * t.array()).cos().matrix();
    basis.col(1) = (kTwoPi * f0 * t.array()).sin().matrix();
    basis.col(2).setOnes();
    const Eigen::Vector3d lin = basis.colPivHouseholderQr().solve(y);
    const double a0 = std::hypot(lin(0), lin(1));
    const double phi0 = std::atan2(-lin(1), lin(0));

    GaussFunctor fn(t, y);
    Eigen::VectorXd best;
    double best_res = std::numeric_limits<double>::infinity();
    for (double frac : {0.1, 0.25, 0.5, 1.0, 2.0}) {
        Eigen::LevenbergMarquardt<GaussFunctor> lm(fn);
        lm.setMaxfev(4000);
        lm.setXtol(1e-14);
        lm.setFtol(1e-14);
        Eigen::VectorXd p(5);
        p << 2.0 * a0, 1.0 / (frac * span), f0, phi0, c0;
        lm.minimize(p);
        if (!p.allFinite()) continue;
        Eigen::VectorXd r(n);
        fn(p, r);
        if (r.norm() < best_res) {
            best_res = r.norm();
            best = p;
        }
    }
    if (best.size() == 0 || std::abs(best(1)) < 1e-12) throw FitError("Gaussian envelope fit did not converge");
    GaussFit out;
    out.amplitude = best(0);
    out.tau_g = 1.0 / std::abs(best(1));
    out.frequency = best(2);
    out.phase = best(3) - kTwoPi * best(2) * t0;
    out.offset = best(4);
    if (out.amplitude < 0.0) {
        out.amplitude = -out.amplitude;
        out.phase += kPi;
    }
    if (out.frequency < 0.0) {
        out.frequency = -out.frequency;
        out.phase = -out.phase;
    }
    out.phase = std::remainder(out.phase, kTwoPi);
    out.residual = best_res;
    const double spread = (y.array() - y.mean()).matrix().norm();
    out.relative_residual = spread > 0.0 ? best_res / spread : 0.0;
    out.poor_fit = out.relative_residual > 0.1;
    return out;
}

TorusGrid make_torus(int n1, int n2, const std::function<Eigen::Vector3d(double, double)>& field) {
    if (n1 < 2 || n2 < 2) throw std::invalid_argument("torus grid needs at least 2x2 points");
    TorusGrid g{n1, n2, {}};
    g.d.reserve(static_cast<std::size_t>(n1) * n2);
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) g.d.push_back(field(kTwoPi * i / n1, kTwoPi * j / n2));
    return g;
}

TorusGrid pump_torus(double b0, double m, double a_c, int n1, int n2) {
    return make_torus(n1, n2, [=](double t1, double t2) {
        return Eigen::Vector3d(b0 * (m + std::cos(t1)) + a_c * std::cos(t2), a_c * std::sin(t2), b0 * std::sin(t1));
    });
}

ChernResult chern_analysis(const TorusGrid& grid, double gap_tol) {
    ChernResult out;
    double dmax = 0.0;
    out.min_gap = std::numeric_limits<double>::infinity();
    for (const auto& v : grid.d) {
        dmax = std::max(dmax, v.norm());
        out.min_gap = std::min(out.min_gap, v.norm());
    }
    if (!(out.min_gap > gap_tol * std::max(1.0, dmax)))
        throw PhysicsError("gap closes on the torus grid (min |d| = " + std::to_string(out.min_gap) + ")");

    const cplx I(0.0, 1.0);
    std::vector<Eigen::Vector2cd> u(grid.d.size());
    for (std::size_t k = 0; k < grid.d.size(); ++k) {
        const Eigen::Vector3d& d = grid.d[k];
        Eigen::Matrix2cd h;
        h << d.z(), d.x() - I * d.y(), d.x() + I * d.y(), -d.z();
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(h);
        u[k] = es.eigenvectors().col(0);
    }
    auto idx = [&](int i, int j) {
        return static_cast<std::size_t>((i + grid.n1) % grid.n1) * grid.n2 + static_cast<std::size_t>((j + grid.n2) % grid.n2);
    };
    auto link = [&](std::size_t a, std::size_t b) {
        const cplx z = u[a].dot(u[b]);
        return z / std::abs(z);
    };
    double total = 0.0;
    for (int i = 0; i < grid.n1; ++i)
        for (int j = 0; j < grid.n2; ++j) {
            const cplx w = link(idx(i, j), idx(i + 1, j)) * link(idx(i + 1, j), idx(i + 1, j + 1)) *
                           std::conj(link(idx(i, j + 1), idx(i + 1, j + 1))) * std::conj(link(idx(i, j), idx(i, j + 1)));
            const double f = std::arg(w);
            out.max_plaquette = std::max(out.max_plaquette, std::abs(f));
            total += f;
        }
    out.raw = total / kTwoPi;
    out.chern = static_cast<int>(std::lround(out.raw));
    if (std::abs(out.raw - out.chern) > 1e-6) throw PhysicsError("plaquette phases do not sum to an integer");
    return out;
}

int chern_number(const TorusGrid& grid) { return chern_analysis(grid).chern; }

double coupling_amplitude(double g, double n, CouplingConvention convention) {
    const double a = g * std::sqrt(std::max(0.0, n));
    return convention == CouplingConvention::amplitude ? a : 2.0 * a;
}

WindowVerdict topological_window(const FieldParams& fp, double n, CouplingConvention convention) {
    if (n < 0.0) throw std::invalid_argument("photon number must be nonnegative");
    WindowVerdict v;
    const double a = coupling_amplitude(fp.g, n, convention);
    v.value = a * a;
    v.lower = fp.b0 * fp.b0 * (1.0 - fp.m) * (1.0 - fp.m);
    v.upper = fp.b0 * fp.b0 * (1.0 + fp.m) * (1.0 + fp.m);
    v.margin_lower = v.value - v.lower;
    v.margin_upper = v.upper - v.value;
    v.inside = v.margin_lower > 0.0 && v.margin_upper > 0.0;
    return v;
}

RateEstimate pump_rate_estimate(const std::vector<double>& times, const std::vector<double>& n_series,
                                std::pair<double, double> window, double t_mod) {
    if (window.second - window.first < 5.0 * t_mod - 1e-9) throw std::invalid_argument("rate window shorter than 5 periods");
    std::vector<double> t, y;
    for (std::size_t i = 0; i < times.size(); ++i)
        if (times[i] >= window.first - 1e-12 && times[i] <= window.second + 1e-12) {
            t.push_back(times[i]);
            y.push_back(n_series[i]);
        }
    if (t.size() < 3) throw std::invalid_argument("rate window holds fewer than 3 samples");
    const double n = static_cast<double>(t.size());
    const double tm = std::accumulate(t.begin(), t.end(), 0.0) / n;
    const double ym = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        sxx += (t[i] - tm) * (t[i] - tm);
        sxy += (t[i] - tm) * (y[i] - ym);
    }
    RateEstimate r;
    r.slope = sxy / sxx;
    double ss = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double e = y[i] - ym - r.slope * (t[i] - tm);
        ss += e * e;
    }
    r.stderr_slope = std::sqrt(ss / (n - 2.0) / sxx);
    return r;
}

int cross_correlation_lag(const std::vector<double>& x, const std::vector<double>& z, int max_lag) {
    if (x.size() != z.size() || x.empty()) throw std::invalid_argument("correlation inputs differ in length");
    const std::size_t n = x.size();
    const double xm = mean_of(x, 0, n), zm = mean_of(z, 0, n);
    int best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (int k = 0; k <= max_lag && static_cast<std::size_t>(k) < n; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i + k < n; ++i) s += (x[i] - xm) * (z[i + k] - zm);
        s /= static_cast<double>(n - k);
        if (s > best_v) {
            best_v = s;
            best = k;
        }
    }
    return best;
}

double local_frequency(const std::vector<double>& times, const std::vector<double>& series, double t1, double t2,
                       int pad_factor) {
    std::vector<double> t, y;
    for (std::size_t i = 0; i < times.size(); ++i)
        if (times[i] >= t1 && times[i] <= t2) {
            t.push_back(times[i]);
            y.push_back(series[i]);
        }
    if (y.size() < 8) throw std::invalid_argument("frequency window holds fewer than 8 samples");
    return dominant_frequency(y, uniform_step(t), pad_factor, true);
}

}  // namespace floquet
