#include "floquet/runner.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "floquet/filterlab.hpp"
#include "floquet/io.hpp"

namespace floquet {

namespace fs = std::filesystem;

namespace {

struct Emitter {
    const RunConfig& cfg;
    fs::path dir;
    RunSummary& summary;
    nlohmann::json meta = nlohmann::json::object();

    MetaLines lines(const MetaLines& extra = {}) const {
        MetaLines m{{"experiment", cfg.experiment},
                    {"seed", std::to_string(cfg.seed)},
                    {"fingerprint", config_fingerprint(cfg)}};
        m.insert(m.end(), extra.begin(), extra.end());
        return m;
    }
    std::string path(const std::string& name) {
        const std::string p = (dir / name).string();
        summary.files.push_back(p);
        return p;
    }
    void sidecar(const std::string& csv_name) {
        nlohmann::json j;
        j["config"] = resolved_config(cfg);
        j["fingerprint"] = config_fingerprint(cfg);
        j["csv"] = csv_name;
        j["meta"] = meta;
        j["failures"] = summary.failures;
        const std::string stem = fs::path(csv_name).stem().string();
        write_json(path(stem + ".json"), j);
    }
};

CouplingConvention convention_of(const RunConfig& c) {
    return c.text("convention") == "coherent" ? CouplingConvention::coherent : CouplingConvention::amplitude;
}

FollowingOptions following_options(const RunConfig& c) {
    FollowingOptions o;
    o.readout_step = c.param("readout_step");
    return o;
}

void run_chevron(Emitter& e, bool modulated) {
    const auto& c = e.cfg;
    const auto det = c.axis("detuning");
    const auto t = c.axis("t");
    const Grid2D g = modulated ? modulated_chevron(c.exp, c.param("omega"), c.param("omega_mod"), t, det)
                               : rabi_chevron(c.exp, c.param("omega"), det, t);
    const std::string name = c.experiment + ".csv";
    write_grid_csv(e.path(name), g, e.lines({{"omega", format_number(c.param("omega"))}}));
    write_heatmap_svg(e.path(c.experiment + ".svg"), g, c.experiment + ": P(e) vs time and detuning");
    e.sidecar(name);
}

void run_lz(Emitter& e) {
    const auto& c = e.cfg;
    const auto tau = c.axis("tau");
    const LzDelayResult r = lz_delay_scan(c.exp, c.param("omega"), c.param("delta"), tau, c.param("hidden_delay"));
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < tau.size(); ++i) rows.push_back({tau[i], r.reference.p_e[i], r.scan.p_e[i]});
    e.meta = {{"estimate", r.estimate},
              {"hidden_delay", c.param("hidden_delay")},
              {"flagged", r.flagged},
              {"reference_midpoint", r.reference.midpoint},
              {"scan_midpoint", r.scan.midpoint}};
    write_table_csv(e.path("lz_delay.csv"), {"tau", "p_e_reference", "p_e_delayed"}, rows,
                    e.lines({{"estimate", format_number(r.estimate)}, {"flagged", r.flagged ? "true" : "false"}}));
    write_line_svg(e.path("lz_delay.svg"), tau, {{"reference", r.reference.p_e}, {"delayed", r.scan.p_e}},
                   "LZ population vs pulse length");
    e.sidecar("lz_delay.csv");
}

void run_following_bare(Emitter& e) {
    const auto& c = e.cfg;
    const SimResult r = adiabatic_following(c.exp, c.param("duration"), following_options(c));
    const LagEstimate lag = following_phase_lag(r, c.exp.field.omega_mod);
    e.meta = {{"lag", lag.lag}, {"expected_lag", lag.expected}, {"lag_samples", lag.lag_samples}};
    write_series_csv(e.path("following_bare.csv"), r, e.lines({{"lag", format_number(lag.lag)}}));
    write_line_svg(e.path("following_bare.svg"), r.times, {{"<sigma_x>", r["sigma_x"]}, {"<sigma_z>", r["sigma_z"]}},
                   "bare-basis following");
    e.sidecar("following_bare.csv");
}

void run_following_adiabatic(Emitter& e) {
    const auto& c = e.cfg;
    if (c.sweep.at("b0").empty()) {
        const SimResult r = adiabatic_basis_following(c.exp, c.param("duration"), following_options(c));
        e.meta = {{"F", r.meta["F"]}};
        write_series_csv(e.path("following_adiabatic.csv"), r,
                         e.lines({{"F", format_number(r.meta["F"].get<double>())}}));
        write_line_svg(e.path("following_adiabatic.svg"), r.times, {{"P(e)", r["p_e"]}}, "adiabatic-basis following");
        e.sidecar("following_adiabatic.csv");
        return;
    }
    const FMapResult m = following_fmap(c.exp, c.axis("b0"), c.axis("omega_mod"), c.param("duration"),
                                        following_options(c));
    e.summary.failures = m.failures;
    const std::size_t total = m.f.rows.size() * m.f.cols.size();
    if (m.failures.size() == total) e.summary.total_failure = true;
    MetaLines extra{{"failed_points", std::to_string(m.failures.size())}};
    try {
        const Breakdown b = locate_breakdown(m.f);
        e.meta = {{"plateau_good", b.plateau_good}, {"plateau_bad", b.plateau_bad}, {"threshold", b.threshold},
                  {"breakdown_ratio", b.ratio}, {"column_ratios", b.column_ratios}};
        extra.push_back({"breakdown_ratio", format_number(b.ratio)});
    } catch (const FitError& err) {
        e.meta = {{"breakdown_error", err.what()}};
    }
    write_grid_csv(e.path("fmap.csv"), m.f, e.lines(extra));
    write_heatmap_svg(e.path("fmap.svg"), m.f, "F(B0, omega_mod)");
    e.sidecar("fmap.csv");
}

void run_coherence(Emitter& e) {
    const auto& c = e.cfg;
    CoherenceOptions o;
    o.quasistatic_samples = static_cast<int>(c.param("samples"));
    o.t1_span = c.param("t1_span");
    o.ramsey_span = c.param("ramsey_span");
    o.ramsey_virtual = c.param("ramsey_virtual");
    o.echo_span = c.param("echo_span");
    o.rabi_omega = c.param("rabi_omega");
    o.rabi_jitter = c.param("rabi_jitter");
    const CoherenceFits f = coherence_suite(c.exp, o);
    e.meta = {{"t1", f.t1.tau},           {"t_echo", f.echo.tau},           {"tau_ramsey", f.ramsey.tau_g},
              {"ramsey_poor_fit", f.ramsey.poor_fit}, {"tau_rabi", f.rabi.tau_g}, {"tau_rabi_injected", f.rabi_injected}};
    const std::pair<const char*, const SimResult*> traces[] = {
        {"coherence_t1.csv", &f.t1_trace}, {"coherence_ramsey.csv", &f.ramsey_trace},
        {"coherence_echo.csv", &f.echo_trace}, {"coherence_rabi.csv", &f.rabi_trace}};
    for (const auto& [name, tr] : traces) write_series_csv(e.path(name), *tr, e.lines());
    write_line_svg(e.path("coherence_ramsey.svg"), f.ramsey_trace.times, {{"P(e)", f.ramsey_trace["p_e"]}}, "Ramsey");
    e.sidecar("coherence_t1.csv");
}

void run_servo(Emitter& e) {
    const auto& c = e.cfg;
    const ServoSession s = servo_session(c.servo, servo_drift_profile, c.param("base"), c.param("hours"), c.param("interval"),
                                         c.param("noise_mhz"), c.seed);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < s.times.size(); ++i) rows.push_back({s.times[i], s.held[i], s.free_running[i]});
    e.meta = {{"max_error_after_lock_mhz", s.max_error_after_lock}, {"max_step_ma", s.max_step},
              {"all_converged", s.all_converged}, {"loops", s.loops.size()}};
    write_table_csv(e.path("servo.csv"), {"t_hours", "omega_held", "omega_free"}, rows,
                    e.lines({{"max_error_after_lock_mhz", format_number(s.max_error_after_lock)}}));
    std::vector<std::vector<double>> steps;
    for (std::size_t l = 0; l < s.loops.size(); ++l)
        for (const auto& st : s.loops[l].steps)
            steps.push_back({static_cast<double>(l), st.time, st.omega, st.current, st.step});
    write_table_csv(e.path("servo_steps.csv"), {"loop", "t_hours", "omega", "current", "step"}, steps, e.lines());
    write_line_svg(e.path("servo.svg"), s.times, {{"held", s.held}, {"free running", s.free_running}},
                   "qubit frequency (GHz) over the session");
    e.sidecar("servo.csv");
}

void run_pump(Emitter& e) {
    const auto& c = e.cfg;
    PumpOptions o;
    o.cavity_dim = static_cast<int>(c.param("cavity_dim"));
    o.n_periods = static_cast<int>(c.param("n_periods"));
    o.samples_per_period = static_cast<int>(c.param("samples_per_period"));
    o.convention = convention_of(c);
    const State q = band_state(c.exp.field, c.text("band") == "upper");
    const State cav = fock_superposition(o.cavity_dim, {{static_cast<int>(c.param("n0")), 1.0}});
    SimResult r = pump_run(c.exp, q, cav, o);
    const RateEstimate s = pump_slope(r, c.exp.field.omega_mod);
    e.meta = r.meta;
    e.meta["slope"] = s.slope;
    e.meta["slope_stderr"] = s.stderr_slope;
    r.states.clear();
    write_series_csv(e.path("pump.csv"), r, e.lines({{"slope", format_number(s.slope)}}));
    write_line_svg(e.path("pump.svg"), r.times, {{"<n>", r["n"]}}, "photon number");
    e.sidecar("pump.csv");
}

void run_chern(Emitter& e) {
    const auto& c = e.cfg;
    const ChernMap m = chern_map(c.axis("b0"), c.axis("n"), c.exp.field.g, c.exp.field.m, convention_of(c),
                                 static_cast<int>(c.param("n_theta")));
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < m.chern.rows.size(); ++i)
        for (std::size_t j = 0; j < m.chern.cols.size(); ++j)
            rows.push_back({m.chern.rows[i], m.chern.cols[j], m.chern.values(i, j), m.inside.values(i, j)});
    write_table_csv(e.path("chern_map.csv"), {"b0", "n", "chern", "window_inside"}, rows,
                    e.lines({{"convention", c.text("convention")}}));
    write_heatmap_svg(e.path("chern_map.svg"), m.chern, "Chern number");
    e.sidecar("chern_map.csv");
}

void run_filter(Emitter& e) {
    const auto& c = e.cfg;
    const Kernel k = synth_lowpass_kernel(c.param("cutoff"), static_cast<int>(c.param("order")));
    const Kernel pre = precompensation_kernel(k);
    const RingingReport rr = square_pulse_ringing(k, c.param("pulse_length"), c.param("margin"));
    std::vector<std::vector<double>> taps;
    for (std::size_t i = 0; i < k.taps.size(); ++i) taps.push_back({static_cast<double>(i), k.taps[i], pre.taps[i]});
    write_table_csv(e.path("filter_kernel.csv"), {"index", "kernel", "precompensation"}, taps, e.lines());
    std::vector<std::vector<double>> resp;
    std::vector<double> t, raw, comp;
    for (std::size_t i = 0; i < rr.raw.size(); ++i) {
        const double ti = rr.raw.sample_time(i);
        t.push_back(ti);
        raw.push_back(rr.raw.samples[i]);
        comp.push_back(rr.precompensated.value_at(ti));
        resp.push_back({ti, raw.back(), comp.back()});
    }
    e.meta = {{"raw_ripple", rr.raw_ripple}, {"precompensated_ripple", rr.precompensated_ripple}, {"ratio", rr.ratio},
              {"group_delay", group_delay(k)}};
    write_table_csv(e.path("filter_response.csv"), {"t", "raw", "precompensated"}, resp,
                    e.lines({{"ripple_ratio", format_number(rr.ratio)}}));
    write_line_svg(e.path("filter_response.svg"), t, {{"raw", raw}, {"precompensated", comp}}, "square pulse response");
    e.sidecar("filter_response.csv");
}

}  // namespace

std::string config_fingerprint(const RunConfig& c) {
    const std::string s = resolved_config(c).dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string describe_params(const RunConfig& c) {
    const auto& d = c.exp.device;
    const auto& n = c.exp.noise;
    const auto& f = c.exp.field;
    std::ostringstream os;
    os << "DeviceParams\n"
       << "  qubit frequency range      " << format_number(d.omega_q_range.first) << " - "
       << format_number(d.omega_q_range.second) << " GHz\n"
       << "  qubit operating point      " << format_number(d.omega_q) << " GHz\n"
       << "  anharmonicity alpha        " << format_number(d.alpha) << " MHz\n"
       << "  qubit-boost coupling g_m   " << format_number(d.g_boost) << " MHz\n"
       << "  qubit-readout coupling g_r " << format_number(d.g_readout) << " MHz\n"
       << "  qubit linewidth gamma_q    " << format_number(d.gamma_q) << " kHz\n"
       << "  readout frequency omega_r  " << format_number(d.omega_r) << " GHz\n"
       << "  readout linewidth kappa_r  " << format_number(d.kappa_r) << " kHz\n"
       << "  boost frequency omega_m    " << format_number(d.omega_m) << " GHz\n"
       << "  boost linewidth kappa_m    " << format_number(d.kappa_m) << " kHz\n"
       << "  E_J ratio                  " << format_number(d.ej_ratio) << "\n"
       << "NoiseModel\n"
       << "  T1                         " << format_number(n.t1) << " us\n"
       << "  Tphi                       " << format_number(n.tphi) << " us\n"
       << "  kappa_m                    " << format_number(n.kappa_m) << " kHz\n"
       << "  kappa_r                    " << format_number(n.kappa_r) << " kHz\n"
       << "  quasi-static sigma         " << format_number(n.sigma_quasistatic) << " MHz\n"
       << "  readout error P(e|g),P(g|e) " << format_number(n.readout_error.first) << ", "
       << format_number(n.readout_error.second) << "\n"
       << "FieldParams\n"
       << "  B0 " << format_number(f.b0) << " MHz, omega_mod " << format_number(f.omega_mod) << " MHz, m "
       << format_number(f.m) << ", Delta " << format_number(f.delta) << " MHz, g " << format_number(f.g) << " MHz\n";
    return os.str();
}

RunSummary run_experiment(const RunConfig& c, const std::string& out_dir, std::ostream& log) {
    RunSummary summary;
    fs::create_directories(out_dir);
    Emitter e{c, fs::path(out_dir), summary};
    const std::string& x = c.experiment;
    log << "running " << x << " (seed " << c.seed << ")\n";
    if (x == "chevron")
        run_chevron(e, false);
    else if (x == "modulated_chevron")
        run_chevron(e, true);
    else if (x == "lz_delay")
        run_lz(e);
    else if (x == "following_bare")
        run_following_bare(e);
    else if (x == "following_adiabatic")
        run_following_adiabatic(e);
    else if (x == "coherence")
        run_coherence(e);
    else if (x == "servo")
        run_servo(e);
    else if (x == "pump")
        run_pump(e);
    else if (x == "chern_map")
        run_chern(e);
    else if (x == "filter_demo")
        run_filter(e);
    else
        throw std::invalid_argument("unknown experiment " + x);
    for (const auto& f : summary.failures) log << "point failed: " << f << "\n";
    for (const auto& f : summary.files) log << "wrote " << f << "\n";
    return summary;
}

}  // namespace floquet
