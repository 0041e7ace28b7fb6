#include "floquet/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace floquet {

double Waveform::value_at(double t) const {
    if (samples.empty() || t < t0 || t >= end()) return 0.0;
    auto i = static_cast<std::size_t>(std::floor((t - t0) / dt));
    return samples[std::min(i, samples.size() - 1)];
}

void Waveform::check() const {
    if (!(dt > 0.0)) throw std::invalid_argument("waveform dt must be positive");
    for (double v : samples)
        if (!std::isfinite(v)) throw std::invalid_argument("waveform sample is not finite");
}

int sample_count(double duration, double dt) {
    if (duration < 0.0) throw std::invalid_argument("negative duration");
    return static_cast<int>(std::llround(duration / dt));
}

Waveform sample_function(const std::function<double(double)>& f, double t0, double duration, double dt) {
    Waveform w{dt, t0, {}};
    const int n = sample_count(duration, dt);
    w.samples.resize(n);
    for (int i = 0; i < n; ++i) w.samples[i] = f(w.sample_time(i));
    return w;
}

double Schedule::duration() const { return std::max(x.duration(), z.duration()); }

double Schedule::marker(const std::string& name) const {
    auto it = markers.find(name);
    if (it == markers.end()) throw std::out_of_range("schedule has no marker '" + name + "'");
    return it->second;
}

void Schedule::check() const {
    x.check();
    z.check();
    if (std::abs(x.dt - z.dt) > 1e-15) throw std::invalid_argument("schedule channels use different dt");
    if (z_delay < 0.0) throw std::invalid_argument("z_delay must be nonnegative");
    if (auto it = markers.find("readout"); it != markers.end())
        if (x.end() + 1e-12 < it->second || z.end() + 1e-12 < it->second)
            throw std::invalid_argument("channels do not cover the readout marker");
}

void append(Schedule& s, const Schedule& fragment) {
    if (s.x.samples.empty() && s.z.samples.empty()) {
        s.x.dt = fragment.x.dt;
        s.z.dt = fragment.z.dt;
    }
    if (std::abs(s.x.dt - fragment.x.dt) > 1e-15) throw std::invalid_argument("cannot append fragments with different dt");
    const double offset = s.duration();
    s.x.samples.resize(sample_count(offset, s.x.dt), s.x.samples.empty() ? 0.0 : s.x.samples.back());
    s.z.samples.resize(sample_count(offset, s.z.dt), s.z.samples.empty() ? 0.0 : s.z.samples.back());
    s.x.samples.insert(s.x.samples.end(), fragment.x.samples.begin(), fragment.x.samples.end());
    s.z.samples.insert(s.z.samples.end(), fragment.z.samples.begin(), fragment.z.samples.end());
    for (const auto& [name, t] : fragment.markers) s.markers[name] = t + offset;
}

Schedule concat(std::vector<Schedule> parts) {
    Schedule out;
    for (const auto& p : parts) append(out, p);
    return out;
}

Schedule elliptic_field(const FieldParams& fp, double duration, double dt) {
    if (!(duration > 0.0)) throw std::invalid_argument("field duration must be positive");
    Schedule s;
    s.x = sample_function([&](double t) { return field_at(fp, t).first; }, 0.0, duration, dt);
    s.z = sample_function([&](double t) { return field_at(fp, t).second; }, 0.0, duration, dt);
    s.markers["rotation_start"] = 0.0;
    s.markers["rotation_end"] = s.duration();
    return s;
}

Schedule circular_field(const FieldParams& fp, double duration, double dt) {
    FieldParams c = fp;
    c.m = 0.0;
    return elliptic_field(c, duration, dt);
}

double trapezoid_value(double amplitude, double t_start, double t_stop, double ramp, double t) {
    if (t <= t_start || t >= t_stop) return 0.0;
    if (ramp <= 0.0) return amplitude;
    const double edge = std::min(t - t_start, t_stop - t);
    return edge >= ramp ? amplitude : amplitude * edge / ramp;
}

Waveform trapezoid(double amplitude, double t_start, double t_stop, double ramp, double dt) {
    if (t_stop - t_start < 2.0 * ramp - 1e-12) throw std::invalid_argument("trapezoid window shorter than its two ramps");
    return sample_function([&](double t) { return trapezoid_value(amplitude, t_start, t_stop, ramp, t); }, t_start,
                           t_stop - t_start, dt);
}

Schedule lz_delay_schedule(double omega, double delta, double tau, double tau_del, const LzOptions& opt) {
    if (tau < 0.0 || tau_del < 0.0) throw std::invalid_argument("tau and tau_del must be nonnegative");
    const double x_ramp = std::min(opt.x_ramp, 0.5 * tau);
    const double total = std::max(tau, tau_del + opt.fbl_length) + opt.tail;
    Schedule s;
    s.x = sample_function([&](double t) { return trapezoid_value(omega, 0.0, tau, x_ramp, t); }, 0.0, total, opt.dt);
    s.z = sample_function(
        [&](double t) {
            return delta * (-1.0 + 2.0 * trapezoid_value(1.0, tau_del, tau_del + opt.fbl_length, opt.z_ramp, t));
        },
        0.0, total, opt.dt);
    s.markers["readout"] = s.duration();
    return s;
}

double smooth_step(double u) {
    u = std::clamp(u, 0.0, 1.0);
    return 0.5 * (1.0 - std::cos(kPi * u));
}

double ramp_in_offset(double b0) { return -std::min(200.0, 4.0 * b0); }

double ramp_stage_duration(double b0, const RampOptions& opt) {
    const double t = b0 > 0.0 ? std::max(opt.stage_min, opt.stage_scale / b0) : opt.stage_min;
    return opt.dt * std::ceil(t / opt.dt - 1e-9);
}

double default_buffer(double b0) { return b0 < 25.0 ? 0.15 : 0.0; }

namespace {

// one stage: both channels move from (x0, z0) to (x1, z1) along a raised cosine
void add_stage(Schedule& s, double duration, double x0, double x1, double z0, double z1) {
    const double dt = s.x.dt;
    const int n = sample_count(duration, dt);
    for (int i = 0; i < n; ++i) {
        const double u = smooth_step((i + 0.5) / n);
        s.x.samples.push_back(x0 + (x1 - x0) * u);
        s.z.samples.push_back(z0 + (z1 - z0) * u);
    }
}

Schedule empty_fragment(double dt) {
    Schedule s;
    s.x.dt = dt;
    s.z.dt = dt;
    return s;
}

}  // namespace

Schedule ramp_in(const FieldParams& fp, const RampOptions& opt) {
    if (!(fp.b0 > 0.0)) throw std::invalid_argument("ramp_in needs b0 > 0");
    const auto [x0, z0] = field_at(fp, 0.0);
    const double off = ramp_in_offset(fp.b0);
    const double t = ramp_stage_duration(fp.b0, opt);
    Schedule s = empty_fragment(opt.dt);
    add_stage(s, t, 0.0, 0.0, 0.0, off);
    add_stage(s, t, 0.0, x0, off, off);
    add_stage(s, t, x0, x0, off, z0);
    s.markers["ramp_in_end"] = s.duration();
    return s;
}

Schedule ramp_out(const FieldParams& fp, double x_f, double z_f, double buffer, const RampOptions& opt) {
    if (buffer < 0.0) buffer = default_buffer(fp.b0);
    const double x_big = (x_f < 0.0 ? -1.0 : 1.0) * std::max(25.0, fp.b0);
    const double z_low = ramp_in_offset(fp.b0);
    const double slow = ramp_stage_duration(fp.b0, opt);
    const double fast = opt.dt * std::ceil(opt.stage_min / opt.dt - 1e-9);
    Schedule s = empty_fragment(opt.dt);
    add_stage(s, buffer, x_f, x_f, z_f, z_f);
    add_stage(s, slow, x_f, x_big, z_f, z_f);
    add_stage(s, fast, x_big, x_big, z_f, z_low);
    add_stage(s, fast, x_big, 0.0, z_low, z_low);
    add_stage(s, fast, 0.0, 0.0, z_low, 0.0);
    s.markers["readout"] = s.duration();
    return s;
}

Schedule staged_shutoff(Axis axis, double x_f, double z_f, const ShutoffOptions& opt) {
    Schedule s = empty_fragment(opt.dt);
    const double held = axis == Axis::z ? z_f : x_f;
    const int n_hold = sample_count(opt.hold, opt.dt);
    const int n_ramp = sample_count(opt.ramp, opt.dt);
    std::vector<double> slow;
    for (int i = 0; i < n_hold; ++i) slow.push_back(held);
    for (int i = 0; i < n_ramp; ++i) slow.push_back(held * (1.0 - smooth_step((i + 0.5) / n_ramp)));
    std::vector<double> fast(slow.size(), 0.0);
    if (axis == Axis::z) {
        s.x.samples = fast;
        s.z.samples = slow;
    } else {
        s.x.samples = slow;
        s.z.samples = fast;
    }
    s.markers["fast_off"] = 0.0;
    s.markers["final_ramp"] = n_hold * opt.dt;
    s.markers["readout"] = s.duration();
    if (axis == Axis::x) s.markers["pi_half"] = s.duration();
    return s;
}

Schedule apply_delay(const Schedule& s, double delay) {
    if (delay < 0.0) throw std::invalid_argument("delay must be nonnegative");
    const int n = sample_count(delay, s.z.dt);
    if (n == 0) return s;
    Schedule out = s;
    const double pad = s.z.samples.empty() ? 0.0 : s.z.samples.front();
    out.z.samples.insert(out.z.samples.begin(), n, pad);
    out.x.samples.resize(out.x.samples.size() + n, 0.0);
    out.z_delay += n * s.z.dt;
    for (auto& [name, t] : out.markers) t += n * s.z.dt;
    return out;
}

}  // namespace floquet
