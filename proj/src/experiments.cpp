#include "floquet/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace floquet {

namespace {

constexpr int kQuasistaticSamples = 32;

const HilbertSpace& qubit_space() {
    static const HilbertSpace s(2, {});
    return s;
}

const Operator& qubit_op(OpKind k) {
    static const Operator sx = build_elementary(qubit_space(), OpKind::sigma_x);
    static const Operator sy = build_elementary(qubit_space(), OpKind::sigma_y);
    static const Operator sz = build_elementary(qubit_space(), OpKind::sigma_z);
    switch (k) {
        case OpKind::sigma_x: return sx;
        case OpKind::sigma_y: return sy;
        case OpKind::sigma_z: return sz;
        default: throw std::invalid_argument("unsupported qubit operator");
    }
}

struct QState {
    bool pure = true;
    State psi;
    Operator rho;

    static QState ket(State p) { return QState{true, std::move(p), {}}; }
    static QState mixed(Operator r) {
        r = 0.5 * (r + r.adjoint()).eval();
        r /= r.trace().real();
        return QState{false, {}, std::move(r)};
    }
    Operator dm() const { return pure ? density(psi) : rho; }
    double expect(const Operator& o) const { return pure ? expectation(o, psi) : expectation_rho(o, rho); }
    double p_e() const {
        const int e = level_index(2, 1);
        return pure ? std::norm(psi(e)) : rho(e, e).real();
    }
};

QState ground() { return QState::ket(basis_state(qubit_space(), 0)); }
QState excited() { return QState::ket(basis_state(qubit_space(), 1)); }

bool noiseless(const NoiseModel& n) { return collapse_operators(qubit_space(), n).empty(); }

Operator static_z(double offset_mhz) {
    if (offset_mhz == 0.0) return Operator();
    return 0.5 * angular(offset_mhz) * qubit_op(OpKind::sigma_z);
}

std::vector<QState> evolve_states(const HamiltonianSource& h, const QState& s0, const NoiseModel& noise,
                                  const std::vector<double>& grid) {
    EvolveOptions opt;
    opt.keep_states = true;
    opt.check_truncation = false;
    std::vector<QState> out;
    if (s0.pure && noiseless(noise)) {
        auto r = propagate_unitary(h, s0.psi, grid, {}, opt);
        for (auto& v : r.states) out.push_back(QState::ket(v / v.norm()));
    } else {
        auto r = propagate_lindblad(h, s0.dm(), noise, grid, {}, opt);
        for (auto& v : r.states) out.push_back(QState::mixed(unvec(v, h.dim())));
    }
    return out;
}

QState run_fragment(const Schedule& s, const QState& s0, const NoiseModel& noise, double offset, double t_end) {
    return evolve_states(schedule_source(qubit_space(), s, static_z(offset)), s0, noise, {0.0, t_end}).back();
}

// exp(-i theta/2 (cos phi sx + sin phi sy))
Operator rotation(double theta, double phi) {
    const Operator n = std::cos(phi) * qubit_op(OpKind::sigma_x) + std::sin(phi) * qubit_op(OpKind::sigma_y);
    return std::cos(theta / 2) * Operator::Identity(2, 2) - cplx(0.0, std::sin(theta / 2)) * n;
}

QState rotate(const QState& s, const Operator& r) {
    if (s.pure) return QState::ket(r * s.psi);
    return QState::mixed(r * s.rho * r.adjoint());
}

HamiltonianSource constant_qubit(double x_mhz, double z_mhz) {
    const Operator h = 0.5 * (angular(x_mhz) * qubit_op(OpKind::sigma_x) + angular(z_mhz) * qubit_op(OpKind::sigma_z));
    return HamiltonianSource::constant(qubit_space(), h);
}

double frozen(const Waveform& w, double t) { return w.value_at(t - 0.5 * w.dt); }

SimResult with_quasistatic(const ExperimentConfig& cfg, const DetunedRun& run) {
    if (cfg.noise.sigma_quasistatic > 0.0)
        return quasistatic_average(run, cfg.noise.sigma_quasistatic, kQuasistaticSamples, cfg.seed);
    return run(0.0);
}

double interpolate_crossing(double t0, double p0, double t1, double p1, double level) {
    if (p1 == p0) return 0.5 * (t0 + t1);
    return t0 + (level - p0) * (t1 - t0) / (p1 - p0);
}

}  // namespace

void ExperimentConfig::check() const {
    device.check();
    noise.check();
    field.check();
    if (shots < 1) throw std::invalid_argument("shots must be >= 1");
}

void ServoConfig::check() const {
    if (!(scale_a > 0.0)) throw std::invalid_argument("servo scale_a must be positive");
    if (!(i_cap > 0.0)) throw std::invalid_argument("servo i_cap must be positive");
    if (!(delta_freq > 0.0)) throw std::invalid_argument("servo delta_freq must be positive");
    if (n_min < 1 || n_max < n_min) throw std::invalid_argument("servo needs 1 <= n_min <= n_max");
}

double measured_probability(double p_e, const ExperimentConfig& cfg, std::mt19937_64& rng) {
    if (cfg.shots <= 1) return p_e;
    return sample_shots(apply_readout_error(p_e, cfg.noise.readout_error), cfg.shots, rng);
}

Grid2D rabi_chevron(const ExperimentConfig& cfg, double omega, const std::vector<double>& detuning_grid,
                    const std::vector<double>& t_grid) {
    cfg.check();
    Grid2D g{"t", "detuning", "p_e", t_grid, detuning_grid, Eigen::MatrixXd::Zero(t_grid.size(), detuning_grid.size())};
    const auto points = grid_product({{"detuning", detuning_grid}});
    auto job = [&](const ParamPoint& p, std::uint64_t seed) {
        const double det = p.at("detuning");
        auto run = [&](double offset) {
            auto states = evolve_states(constant_qubit(omega, det + offset), ground(), cfg.noise, t_grid);
            SimResult r;
            r.times = t_grid;
            auto& pe = r.add("p_e");
            for (const auto& s : states) pe.push_back(s.p_e());
            return r;
        };
        SimResult r = with_quasistatic(cfg, run);
        std::mt19937_64 rng(seed);
        for (double& v : r.series[0]) v = measured_probability(v, cfg, rng);
        return r;
    };
    const auto out = sweep(points, job, cfg.seed);
    for (std::size_t j = 0; j < out.size(); ++j) {
        if (!out[j].result) throw std::runtime_error("chevron column failed: " + out[j].error);
        const auto& pe = (*out[j].result)["p_e"];
        for (std::size_t i = 0; i < t_grid.size(); ++i) g.values(i, j) = pe[i];
    }
    return g;
}

Grid2D modulated_chevron(const ExperimentConfig& cfg, double omega0, double omega_mod, const std::vector<double>& t_grid,
                         const std::vector<double>& detuning_grid) {
    cfg.check();
    if (t_grid.empty()) throw std::invalid_argument("empty time grid");
    Grid2D g{"t", "detuning", "p_e", t_grid, detuning_grid, Eigen::MatrixXd::Zero(t_grid.size(), detuning_grid.size())};
    const double span = t_grid.back();
    auto job = [&](const ParamPoint& p, std::uint64_t seed) {
        Schedule s;
        s.x = sample_function([&](double t) { return omega0 * std::cos(kTwoPi * omega_mod * t); }, 0.0, span);
        s.z = sample_function([&](double) { return p.at("detuning"); }, 0.0, span);
        auto run = [&](double offset) {
            auto states = evolve_states(schedule_source(qubit_space(), s, static_z(offset)), ground(), cfg.noise, t_grid);
            SimResult r;
            r.times = t_grid;
            auto& pe = r.add("p_e");
            for (const auto& st : states) pe.push_back(st.p_e());
            return r;
        };
        SimResult r = with_quasistatic(cfg, run);
        std::mt19937_64 rng(seed);
        for (double& v : r.series[0]) v = measured_probability(v, cfg, rng);
        return r;
    };
    const auto out = sweep(grid_product({{"detuning", detuning_grid}}), job, cfg.seed);
    for (std::size_t j = 0; j < out.size(); ++j) {
        if (!out[j].result) throw std::runtime_error("chevron column failed: " + out[j].error);
        const auto& pe = (*out[j].result)["p_e"];
        for (std::size_t i = 0; i < t_grid.size(); ++i) g.values(i, j) = pe[i];
    }
    return g;
}

LzScan lz_population_scan(const ExperimentConfig& cfg, double omega, double delta, const std::vector<double>& tau_grid,
                          double hidden_delay, const LzOptions& opt) {
    cfg.check();
    if (tau_grid.size() < 3) throw std::invalid_argument("LZ scan needs at least three tau values");
    const double tau_del = 1.0;
    LzScan scan;
    scan.tau = tau_grid;
    auto points = grid_product({{"tau", tau_grid}});
    auto job = [&](const ParamPoint& p, std::uint64_t seed) {
        Schedule s = apply_delay(lz_delay_schedule(omega, delta, p.at("tau"), tau_del, opt), hidden_delay);
        auto run = [&](double offset) {
            SimResult r;
            r.times = {0.0};
            r.add("p_e").push_back(run_fragment(s, ground(), cfg.noise, offset, s.duration()).p_e());
            return r;
        };
        SimResult r = with_quasistatic(cfg, run);
        std::mt19937_64 rng(seed);
        r.series[0][0] = measured_probability(r.series[0][0], cfg, rng);
        return r;
    };
    for (const auto& o : sweep(points, job, cfg.seed)) {
        if (!o.result) throw std::runtime_error("LZ point failed: " + o.error);
        scan.p_e.push_back((*o.result)["p_e"][0]);
    }
    scan.plateau = *std::max_element(scan.p_e.begin(), scan.p_e.end());
    scan.flagged = scan.plateau < 0.9;

    const double level = 0.5;
    std::size_t i = 1;
    bool have_up = false, have_down = false;
    for (; i < scan.p_e.size(); ++i)
        if (scan.p_e[i - 1] < level && scan.p_e[i] >= level) {
            scan.up = interpolate_crossing(tau_grid[i - 1], scan.p_e[i - 1], tau_grid[i], scan.p_e[i], level);
            have_up = true;
            break;
        }
    for (++i; have_up && i < scan.p_e.size(); ++i)
        if (scan.p_e[i - 1] >= level && scan.p_e[i] < level) {
            scan.down = interpolate_crossing(tau_grid[i - 1], scan.p_e[i - 1], tau_grid[i], scan.p_e[i], level);
            have_down = true;
            break;
        }
    if (!have_up || !have_down) throw FitError("LZ population scan has no rise and fall through 0.5");
    scan.midpoint = 0.5 * (scan.up + scan.down);
    return scan;
}

LzDelayResult lz_delay_scan(const ExperimentConfig& cfg, double omega, double delta, const std::vector<double>& tau_grid,
                            double hidden_delay, const LzOptions& opt) {
    LzDelayResult r;
    r.reference = lz_population_scan(cfg, omega, delta, tau_grid, 0.0, opt);
    r.scan = lz_population_scan(cfg, omega, delta, tau_grid, hidden_delay, opt);
    r.estimate = r.scan.midpoint - r.reference.midpoint;
    r.flagged = r.reference.flagged || r.scan.flagged;
    return r;
}

namespace {

struct Snapshots {
    Schedule schedule;
    std::vector<double> offsets;  // relative to the start of the rotation
    std::vector<double> times;    // absolute
    std::vector<QState> states;
};

Snapshots rotate_and_snapshot(const ExperimentConfig& cfg, const FieldParams& fp, double duration,
                              const FollowingOptions& opt, double offset) {
    Snapshots s;
    s.schedule = ramp_in(fp, opt.ramp);
    append(s.schedule, circular_field(fp, duration, opt.ramp.dt));
    const double t_rot = s.schedule.marker("ramp_in_end");
    s.offsets = arange_grid(0.0, duration, opt.readout_step);
    std::vector<double> grid{0.0};
    for (double o : s.offsets) grid.push_back(t_rot + o);
    auto states = evolve_states(schedule_source(qubit_space(), s.schedule, static_z(offset)), ground(), cfg.noise, grid);
    s.times.assign(grid.begin() + 1, grid.end());
    s.states.assign(states.begin() + 1, states.end());
    return s;
}

}  // namespace

SimResult adiabatic_following(const ExperimentConfig& cfg, double duration, const FollowingOptions& opt) {
    cfg.check();
    FieldParams fp = cfg.field;
    fp.m = 0.0;
    auto run = [&](double offset) {
        Snapshots snap = rotate_and_snapshot(cfg, fp, duration, opt, offset);
        SimResult r;
        r.times = snap.offsets;
        for (const char* n : {"sigma_x", "sigma_z", "bloch_x", "bloch_z", "field_x", "field_z", "angle_error"})
            r.add(n).resize(snap.offsets.size());
        for (std::size_t k = 0; k < snap.states.size(); ++k) {
            const QState& st = snap.states[k];
            const double xf = frozen(snap.schedule.x, snap.times[k]);
            const double zf = frozen(snap.schedule.z, snap.times[k]);
            const double bx = st.expect(qubit_op(OpKind::sigma_x));
            const double bz = st.expect(qubit_op(OpKind::sigma_z));
            for (Axis axis : {Axis::x, Axis::z}) {
                Schedule off = staged_shutoff(axis, xf, zf, opt.shutoff);
                const QState end = run_fragment(off, st, cfg.noise, offset, off.marker("readout"));
                if (axis == Axis::z)
                    r.series[1][k] = end.expect(qubit_op(OpKind::sigma_z));
                else
                    r.series[0][k] = end.expect(qubit_op(OpKind::sigma_x));
            }
            r.series[2][k] = bx;
            r.series[3][k] = bz;
            r.series[4][k] = xf;
            r.series[5][k] = zf;
            r.series[6][k] = std::abs(std::atan2(bx * zf - bz * xf, bx * xf + bz * zf));
        }
        return r;
    };
    SimResult r = with_quasistatic(cfg, run);
    std::mt19937_64 rng(cfg.seed);
    for (int s = 0; s < 2; ++s)
        for (double& v : r.series[s]) v = 2.0 * measured_probability(0.5 * (1.0 + v), cfg, rng) - 1.0;
    r.meta["b0"] = fp.b0;
    r.meta["omega_mod"] = fp.omega_mod;
    r.meta["basis"] = "bare";
    return r;
}

SimResult adiabatic_basis_following(const ExperimentConfig& cfg, double duration, const FollowingOptions& opt) {
    cfg.check();
    FieldParams fp = cfg.field;
    fp.m = 0.0;
    auto run = [&](double offset) {
        Snapshots snap = rotate_and_snapshot(cfg, fp, duration, opt, offset);
        SimResult r;
        r.times = snap.offsets;
        auto& pe = r.add("p_e");
        for (std::size_t k = 0; k < snap.states.size(); ++k) {
            Schedule out = ramp_out(fp, frozen(snap.schedule.x, snap.times[k]), frozen(snap.schedule.z, snap.times[k]),
                                    opt.buffer, opt.ramp);
            pe.push_back(run_fragment(out, snap.states[k], cfg.noise, offset, out.marker("readout")).p_e());
        }
        return r;
    };
    SimResult r = with_quasistatic(cfg, run);
    std::mt19937_64 rng(cfg.seed);
    for (double& v : r.series[0]) v = measured_probability(v, cfg, rng);
    r.meta["b0"] = fp.b0;
    r.meta["omega_mod"] = fp.omega_mod;
    r.meta["basis"] = "adiabatic";
    r.meta["F"] = adiabaticity_metric(r.times, r.series[0]);
    return r;
}

LagEstimate following_phase_lag(const SimResult& bare, double omega_mod) {
    if (bare.times.size() < 3) throw std::invalid_argument("following trace too short for a lag estimate");
    LagEstimate e;
    e.step = bare.times[1] - bare.times[0];
    const int max_lag = static_cast<int>(std::lround(1.0 / omega_mod / e.step));
    e.lag_samples = cross_correlation_lag(bare["sigma_x"], bare["sigma_z"], max_lag);
    e.lag = e.lag_samples * e.step;
    e.expected = 0.25 / omega_mod;
    return e;
}

FMapResult following_fmap(const ExperimentConfig& cfg, const std::vector<double>& b0_grid,
                          const std::vector<double>& omega_grid, double duration, const FollowingOptions& opt) {
    FMapResult out;
    out.f = Grid2D{"b0", "omega_mod", "F", b0_grid, omega_grid,
                   Eigen::MatrixXd::Constant(b0_grid.size(), omega_grid.size(), std::nan(""))};
    auto job = [&](const ParamPoint& p, std::uint64_t seed) {
        ExperimentConfig c = cfg;
        c.field.b0 = p.at("b0");
        c.field.omega_mod = p.at("omega_mod");
        c.seed = seed;
        return adiabatic_basis_following(c, duration, opt);
    };
    const auto res = sweep(grid_product({{"b0", b0_grid}, {"omega_mod", omega_grid}}), job, cfg.seed);
    for (std::size_t k = 0; k < res.size(); ++k) {
        const std::size_t i = k / omega_grid.size(), j = k % omega_grid.size();
        if (res[k].result)
            out.f.values(i, j) = res[k].result->meta["F"].get<double>();
        else
            out.failures.push_back("b0=" + std::to_string(b0_grid[i]) + " omega_mod=" + std::to_string(omega_grid[j]) +
                                   ": " + res[k].error);
    }
    return out;
}

Breakdown locate_breakdown(const Grid2D& fmap, double good_ratio, double bad_ratio) {
    Breakdown b;
    double sg = 0.0, sb = 0.0;
    int ng = 0, nb = 0;
    for (std::size_t i = 0; i < fmap.rows.size(); ++i)
        for (std::size_t j = 0; j < fmap.cols.size(); ++j) {
            const double v = fmap.values(i, j);
            if (!std::isfinite(v)) continue;
            const double r = fmap.rows[i] / fmap.cols[j];
            if (r >= good_ratio) sg += v, ++ng;
            if (r <= bad_ratio) sb += v, ++nb;
        }
    if (ng == 0 || nb == 0) throw FitError("F map does not reach both plateaus");
    b.plateau_good = sg / ng;
    b.plateau_bad = sb / nb;
    b.threshold = 0.5 * (b.plateau_good + b.plateau_bad);
    for (std::size_t j = 0; j < fmap.cols.size(); ++j) {
        for (std::size_t i = 1; i < fmap.rows.size(); ++i) {
            const double f0 = fmap.values(i - 1, j), f1 = fmap.values(i, j);
            if (!std::isfinite(f0) || !std::isfinite(f1)) continue;
            if ((f0 - b.threshold) * (f1 - b.threshold) <= 0.0 && f0 != f1) {
                const double l = interpolate_crossing(std::log(fmap.rows[i - 1]), f0, std::log(fmap.rows[i]), f1,
                                                      b.threshold);
                b.column_ratios.push_back(std::exp(l) / fmap.cols[j]);
                break;
            }
        }
    }
    if (b.column_ratios.empty()) throw FitError("F map has no crossing of the plateau midpoint");
    std::vector<double> r = b.column_ratios;
    std::sort(r.begin(), r.end());
    const std::size_t n = r.size();
    b.ratio = n % 2 ? r[n / 2] : 0.5 * (r[n / 2 - 1] + r[n / 2]);
    return b;
}

NoiseModel coherence_noise(double t1, double t_echo, double tau_ramsey) {
    const double rate = 1.0 / t_echo - 1.0 / (2.0 * t1);
    if (!(rate > 0.0)) throw std::invalid_argument("echo time exceeds the 2 T1 limit");
    NoiseModel n = NoiseModel::off();
    n.t1 = t1;
    n.tphi = 1.0 / rate;
    n.sigma_quasistatic = 1.0 / (std::sqrt(2.0) * kPi * tau_ramsey);
    return n;
}

SimResult ramsey_trace(const NoiseModel& noise, const std::vector<double>& times, double virtual_detuning, int samples,
                       std::uint64_t seed) {
    auto run = [&](double offset) {
        const QState start = rotate(ground(), rotation(kPi / 2, 0.0));
        auto states = evolve_states(constant_qubit(0.0, offset), start, noise, times);
        SimResult r;
        r.times = times;
        auto& pe = r.add("p_e");
        for (std::size_t k = 0; k < times.size(); ++k)
            pe.push_back(rotate(states[k], rotation(kPi / 2, kTwoPi * virtual_detuning * times[k])).p_e());
        return r;
    };
    return quasistatic_average(run, noise.sigma_quasistatic, samples, seed);
}

SimResult echo_trace(const NoiseModel& noise, const std::vector<double>& times, int samples, std::uint64_t seed) {
    auto run = [&](double offset) {
        const QState start = rotate(ground(), rotation(kPi / 2, 0.0));
        const HamiltonianSource h = constant_qubit(0.0, offset);
        std::vector<double> halves;
        for (double t : times) halves.push_back(0.5 * t);
        auto mid = evolve_states(h, start, noise, halves);
        SimResult r;
        r.times = times;
        auto& pe = r.add("p_e");
        for (std::size_t k = 0; k < times.size(); ++k) {
            QState s = rotate(mid[k], rotation(kPi, 0.0));
            if (halves[k] > 0.0) s = evolve_states(h, s, noise, {0.0, halves[k]}).back();
            pe.push_back(rotate(s, rotation(kPi / 2, 0.0)).p_e());
        }
        return r;
    };
    return quasistatic_average(run, noise.sigma_quasistatic, samples, seed);
}

CoherenceFits coherence_suite(const ExperimentConfig& cfg, const CoherenceOptions& opt) {
    cfg.check();
    CoherenceFits f;
    const NoiseModel& noise = cfg.noise;

    const auto t1_times = arange_grid(0.0, opt.t1_span, opt.t1_step);
    {
        auto states = evolve_states(constant_qubit(0.0, 0.0), excited(), noise, t1_times);
        f.t1_trace.times = t1_times;
        auto& pe = f.t1_trace.add("p_e");
        for (const auto& s : states) pe.push_back(s.p_e());
        f.t1 = fit_exponential(t1_times, pe);
    }

    f.ramsey_trace = ramsey_trace(noise, arange_grid(0.0, opt.ramsey_span, opt.ramsey_step), opt.ramsey_virtual,
                                  opt.quasistatic_samples, cfg.seed);
    f.ramsey = fit_gaussian_envelope(f.ramsey_trace.times, f.ramsey_trace["p_e"]);

    f.echo_trace = echo_trace(noise, arange_grid(0.0, opt.echo_span, opt.echo_step), opt.quasistatic_samples, cfg.seed);
    f.echo = fit_exponential(f.echo_trace.times, f.echo_trace["p_e"]);

    // Rabi amplitude jitter enters as a static offset of the drive strength
    const double sigma_rabi = opt.rabi_jitter * opt.rabi_omega;
    const auto rabi_times = arange_grid(0.0, opt.rabi_span, opt.rabi_step);
    NoiseModel markov = noise;
    markov.sigma_quasistatic = 0.0;
    auto run = [&](double offset) {
        auto states = evolve_states(constant_qubit(opt.rabi_omega + offset, 0.0), ground(), markov, rabi_times);
        SimResult r;
        r.times = rabi_times;
        auto& pe = r.add("p_e");
        for (const auto& s : states) pe.push_back(s.p_e());
        return r;
    };
    f.rabi_trace = quasistatic_average(run, sigma_rabi, opt.quasistatic_samples, cfg.seed);
    f.rabi = fit_gaussian_envelope(rabi_times, f.rabi_trace["p_e"]);
    f.rabi_injected = sigma_rabi > 0.0 ? 1.0 / (std::sqrt(2.0) * kPi * sigma_rabi) : kInf;
    return f;
}

ServoTrace servo_loop(const ServoConfig& servo, const FrequencyProbe& probe, double i0, double time_h, double step_h) {
    servo.check();
    ServoTrace tr;
    tr.current = i0;
    double t = time_h;
    for (int k = 1; k <= servo.n_max; ++k) {
        const double omega = probe(tr.current, t);
        const double err = servo.omega_target - omega;
        ServoStep st{t, omega, tr.current, 0.0};
        if (k >= servo.n_min && std::abs(err) * 1e3 < servo.delta_freq) {
            tr.steps.push_back(st);
            tr.converged = true;
            break;
        }
        st.step = std::clamp(err / servo.scale_a, -servo.i_cap, servo.i_cap);
        tr.current += st.step;
        st.current = tr.current;
        tr.steps.push_back(st);
        t += step_h;
    }
    return tr;
}

double servo_drift_profile(double t_hours) { return 0.024 * t_hours + 0.001 * std::sin(kTwoPi * t_hours / 1.5); }

ServoSession servo_session(const ServoConfig& servo, const std::function<double(double)>& drift, double base_ghz,
                           double hours, double interval_h, double noise_mhz, std::uint64_t seed) {
    servo.check();
    if (!(interval_h > 0.0) || !(hours > 0.0)) throw std::invalid_argument("servo session needs positive durations");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> jitter(0.0, noise_mhz > 0.0 ? noise_mhz * 1e-3 : 1e-300);
    auto probe = [&](double current, double t) {
        return base_ghz + servo.scale_a * current + drift(t) + (noise_mhz > 0.0 ? jitter(rng) : 0.0);
    };
    ServoSession s;
    std::vector<std::pair<double, double>> currents;  // (time, current after the loop)
    double current = 0.0;
    const int n_loops = static_cast<int>(std::floor(hours / interval_h + 1e-9)) + 1;
    for (int l = 0; l < n_loops; ++l) {
        const double t = l * interval_h;
        ServoTrace tr = servo_loop(servo, probe, current, t);
        current = tr.current;
        s.all_converged = s.all_converged && tr.converged;
        for (const auto& st : tr.steps) s.max_step = std::max(s.max_step, std::abs(st.step));
        currents.emplace_back(t, current);
        s.loops.push_back(std::move(tr));
    }
    const int fine = 20 * n_loops;
    std::size_t idx = 0;
    for (int i = 0; i <= fine; ++i) {
        const double t = hours * i / fine;
        while (idx + 1 < currents.size() && currents[idx + 1].first <= t) ++idx;
        const double held = base_ghz + servo.scale_a * currents[idx].second + drift(t);
        s.times.push_back(t);
        s.held.push_back(held);
        s.free_running.push_back(base_ghz + drift(t));
        s.max_error_after_lock = std::max(s.max_error_after_lock, std::abs(held - servo.omega_target) * 1e3);
    }
    return s;
}

State band_state(const FieldParams& fp, bool upper) {
    const auto [bx, bz] = field_at(fp, 0.0);
    const Operator h = 0.5 * (bx * qubit_op(OpKind::sigma_x) + bz * qubit_op(OpKind::sigma_z));
    const Eigenbasis eb = instantaneous_eigenbasis(h);
    if (eb.degenerate) throw PhysicsError("field vanishes at t=0, band state undefined");
    return eb.vectors.col(upper ? 1 : 0);
}

State fock_superposition(int dim, const std::map<int, cplx>& amplitudes) {
    State s = State::Zero(dim);
    for (const auto& [n, c] : amplitudes) {
        if (n < 0 || n >= dim) throw std::out_of_range("Fock level outside the cavity truncation");
        s(n) = c;
    }
    const double norm = s.norm();
    if (norm == 0.0) throw std::invalid_argument("empty Fock superposition");
    return s / norm;
}

SimResult pump_run(const ExperimentConfig& cfg, const State& qubit0, const State& cavity0, const PumpOptions& opt) {
    cfg.check();
    if (cavity0.size() != opt.cavity_dim) throw std::invalid_argument("cavity state does not match the truncation");
    if (opt.n_periods < 1 || opt.samples_per_period < 1) throw std::invalid_argument("pump needs periods and samples");
    const FieldParams fp = cfg.field;
    const HilbertSpace space(2, {opt.cavity_dim});
    std::vector<Operator> terms{rotating_frame_hamiltonian(space, fp.delta, 0.0, fp.g, 0.0),
                                rotating_frame_hamiltonian(space, 0.0, 1.0, 0.0, 0.0),
                                rotating_frame_hamiltonian(space, 0.0, 0.0, 0.0, 1.0)};
    auto coeffs = [fp](double t, std::vector<double>& c) {
        const auto [bx, bz] = field_at(fp, t);
        c.assign({1.0, bz, bx});
    };
    const HamiltonianSource h(space, terms, coeffs);
    const State psi0 = product_state(space, qubit0 / qubit0.norm(), {cavity0 / cavity0.norm()});
    const Operator n_op = build_elementary(space, OpKind::number, 1);
    const Observables obs{{"n", n_op},
                          {"sigma_x", build_elementary(space, OpKind::sigma_x, 0)},
                          {"sigma_z", build_elementary(space, OpKind::sigma_z, 0)}};
    const double period = fp.period();
    const auto grid = arange_grid(0.0, opt.n_periods * period, period / opt.samples_per_period);
    EvolveOptions eo = opt.evolve;
    eo.keep_states = true;

    const double n0 = expectation(n_op, psi0);
    const WindowVerdict w = topological_window(fp, n0, opt.convention);
    SimResult r;
    if (noiseless(cfg.noise) && cfg.noise.kappa_m == 0.0) {
        r = propagate_unitary(h, psi0, grid, obs, eo);
    } else {
        r = propagate_lindblad(h, density(psi0), cfg.noise, grid, obs, eo);
    }
    std::vector<Eigen::VectorXcd> kept;
    for (std::size_t k = 0; k < r.states.size(); k += opt.samples_per_period) kept.push_back(r.states[k]);
    r.states = std::move(kept);
    r.meta["window_inside"] = w.inside;
    r.meta["window_value"] = w.value;
    r.meta["window_lower"] = w.lower;
    r.meta["window_upper"] = w.upper;
    r.meta["cavity_dim"] = opt.cavity_dim;
    r.meta["omega_mod"] = fp.omega_mod;
    r.meta["convention"] = opt.convention == CouplingConvention::amplitude ? "amplitude" : "coherent";
    if (!w.inside) r.meta["warning"] = "initial photon number lies outside the topological window";
    return r;
}

RateEstimate pump_slope(const SimResult& run, double omega_mod) {
    return pump_rate_estimate(run.times, run["n"], {run.times.front(), run.times.back()}, 1.0 / omega_mod);
}

std::vector<double> boost_fidelities(const ExperimentConfig& cfg, const std::map<int, cplx>& amplitudes, int n_max,
                                     const PumpOptions& opt) {
    if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
    PumpOptions po = opt;
    po.n_periods = n_max;
    const State qubit = band_state(cfg.field, true);
    const SimResult r = pump_run(cfg, qubit, fock_superposition(opt.cavity_dim, amplitudes), po);
    const HilbertSpace space(2, {opt.cavity_dim});
    const double period = cfg.field.period();
    std::vector<double> fid;
    for (int nn = 1; nn <= n_max; ++nn) {
        std::map<int, cplx> shifted;
        for (const auto& [n, c] : amplitudes) shifted[n + nn] = c;
        const State target = product_state(space, qubit, {fock_superposition(opt.cavity_dim, shifted)});
        const Eigen::VectorXcd& v = r.states.at(nn);
        // free-cavity frame: undo exp(-i 2 pi delta n t)
        Eigen::VectorXcd u = v;
        const double t = nn * period;
        for (int i = 0; i < space.dim(); ++i) {
            const int n = i % opt.cavity_dim;
            u(i) *= std::exp(cplx(0.0, angular(cfg.field.delta) * n * t));
        }
        fid.push_back(std::norm(target.dot(u)));
    }
    return fid;
}

ChernMap chern_map(const std::vector<double>& b0_grid, const std::vector<double>& n_grid, double g, double m,
                   CouplingConvention convention, int n_theta) {
    ChernMap cm;
    cm.chern = Grid2D{"b0", "n", "chern", b0_grid, n_grid, Eigen::MatrixXd::Zero(b0_grid.size(), n_grid.size())};
    cm.inside = Grid2D{"b0", "n", "inside", b0_grid, n_grid, Eigen::MatrixXd::Zero(b0_grid.size(), n_grid.size())};
    for (std::size_t i = 0; i < b0_grid.size(); ++i)
        for (std::size_t j = 0; j < n_grid.size(); ++j) {
            FieldParams fp;
            fp.b0 = b0_grid[i];
            fp.m = m;
            fp.g = g;
            const double a = coupling_amplitude(g, n_grid[j], convention);
            try {
                cm.chern.values(i, j) = chern_analysis(pump_torus(b0_grid[i], m, a, n_theta, n_theta)).chern;
            } catch (const PhysicsError&) {
                cm.chern.values(i, j) = std::nan("");
            }
            cm.inside.values(i, j) = topological_window(fp, n_grid[j], convention).inside ? 1.0 : 0.0;
        }
    return cm;
}

double transmon_leakage(double omega_q_ghz, double alpha, double rabi_mhz, int levels) {
    if (levels < 3) throw std::invalid_argument("leakage needs at least three levels");
    const HilbertSpace space(levels, {});
    const double w_drive = kTwoPi * 1e3 * omega_q_ghz;
    const double amp = angular(rabi_mhz);
    auto coeffs = [w_drive, amp](double t, std::vector<double>& c) { c.assign({1.0, amp * std::cos(w_drive * t)}); };
    const HamiltonianSource h(space,
                              {transmon_hamiltonian(space, omega_q_ghz, alpha), build_elementary(space, OpKind::sigma_x)},
                              coeffs);
    const auto grid = linspace(0.0, 1.0 / rabi_mhz, 400);
    const State p2 = basis_state(space, 2);
    EvolveOptions eo;
    eo.check_truncation = false;
    const auto r = propagate_unitary(h, basis_state(space, 0), grid, {{"p2", density(p2)}}, eo);
    const auto& v = r["p2"];
    return *std::max_element(v.begin(), v.end());
}

}  // namespace floquet
