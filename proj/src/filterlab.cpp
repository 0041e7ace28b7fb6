#include "floquet/filterlab.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>

namespace floquet {

double Kernel::gain() const { return std::accumulate(taps.begin(), taps.end(), 0.0); }

std::size_t Kernel::peak_index() const {
    if (taps.empty()) throw std::invalid_argument("empty kernel");
    return static_cast<std::size_t>(std::max_element(taps.begin(), taps.end()) - taps.begin());
}

Kernel normalized(Kernel k) {
    const double g = k.gain();
    if (std::abs(g) < 1e-300) throw std::invalid_argument("kernel has zero gain");
    for (double& v : k.taps) v /= g;
    return k;
}

Kernel synth_lowpass_kernel(double cutoff, int order, double dt) {
    if (!(cutoff > 0.0)) throw std::invalid_argument("cutoff must be positive");
    if (order < 1) throw std::invalid_argument("filter order must be >= 1");
    if (dt > 1.0 / (20.0 * cutoff)) throw std::invalid_argument("dt does not resolve the cutoff");

    // analog Butterworth prototype, impulse response from the partial-fraction residues
    const double wc = angular(cutoff);
    std::vector<cplx> poles(order), residues(order);
    for (int k = 0; k < order; ++k)
        poles[k] = wc * std::exp(cplx(0.0, kPi * (2.0 * (k + 1) + order - 1) / (2.0 * order)));
    for (int k = 0; k < order; ++k) {
        cplx den = 1.0;
        for (int j = 0; j < order; ++j)
            if (j != k) den *= poles[k] - poles[j];
        residues[k] = std::pow(wc, order) / den;
    }
    auto h = [&](double t) {
        cplx s = 0.0;
        for (int k = 0; k < order; ++k) s += residues[k] * std::exp(poles[k] * t);
        return s.real();
    };

    // the slowest pole sets how long the tail needs to be followed
    const double decay = wc * std::sin(kPi / (2.0 * order));
    const int n_max = static_cast<int>(std::ceil(30.0 / decay / dt));
    Kernel k{dt, {}};
    k.taps.resize(n_max);
    for (int i = 0; i < n_max; ++i) k.taps[i] = h((i + 0.5) * dt);
    const double peak = *std::max_element(k.taps.begin(), k.taps.end());
    int last = n_max - 1;
    while (last > 0 && std::abs(k.taps[last]) < 1e-4 * peak) --last;
    k.taps.resize(last + 1);
    return normalized(std::move(k));
}

Kernel precompensation_kernel(const Kernel& k) {
    const std::size_t peak = k.peak_index();
    std::size_t i = peak;
    while (i < k.taps.size() && k.taps[i] > 0.0) ++i;
    if (i >= k.taps.size()) throw std::invalid_argument("kernel has no zero crossing after its peak");
    Kernel out = k;
    for (std::size_t j = i; j < out.taps.size(); ++j) out.taps[j] = -out.taps[j];
    return normalized(std::move(out));
}

Waveform convolve(const Waveform& w, const Kernel& k) {
    if (std::abs(w.dt - k.dt) > 1e-12 * std::max(w.dt, k.dt)) throw std::invalid_argument("waveform and kernel dt differ");
    Waveform out{w.dt, w.t0, {}};
    if (w.samples.empty() || k.taps.empty()) return out;
    out.samples.assign(w.samples.size() + k.taps.size() - 1, 0.0);
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
        const double v = w.samples[i];
        if (v == 0.0) continue;
        for (std::size_t j = 0; j < k.taps.size(); ++j) out.samples[i + j] += v * k.taps[j];
    }
    return out;
}

double group_delay(const Kernel& k) {
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t i = 0; i < k.taps.size(); ++i) {
        m0 += k.taps[i];
        m1 += static_cast<double>(i) * k.taps[i];
    }
    return k.dt * m1 / m0;
}

double frequency_response(const Kernel& k, double f) {
    cplx s = 0.0;
    const double w = angular(f) * k.dt;
    for (std::size_t i = 0; i < k.taps.size(); ++i) s += k.taps[i] * std::exp(cplx(0.0, -w * static_cast<double>(i)));
    return std::abs(s);
}

double droop_boost(const Kernel& k, double f) {
    const double r = frequency_response(k, f);
    if (r <= 0.0) throw std::invalid_argument("kernel blocks the modulation frequency");
    return 1.0 / r;
}

double ripple_metric(const Waveform& w, std::pair<double, double> flat_window) {
    std::vector<double> v;
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
        const double t = w.sample_time(i);
        if (t >= flat_window.first && t <= flat_window.second) v.push_back(w.samples[i]);
    }
    if (v.empty()) throw std::invalid_argument("ripple window contains no samples");
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (std::abs(mean) < 1e-300) throw std::invalid_argument("ripple window has zero mean amplitude");
    double worst = 0.0;
    for (double x : v) worst = std::max(worst, std::abs(x - mean));
    return worst / std::abs(mean);
}

RingingReport square_pulse_ringing(const Kernel& k, double length, double margin, double amplitude) {
    const Kernel pre = precompensation_kernel(k);
    Waveform square = sample_function([&](double t) { return t < length ? amplitude : 0.0; }, 0.0, length, k.dt);
    RingingReport r;
    r.raw = convolve(square, k);
    r.raw.t0 -= group_delay(k);
    r.precompensated = convolve(convolve(square, pre), k);
    r.precompensated.t0 -= group_delay(k) + group_delay(pre);
    const std::pair<double, double> window{margin * length, (1.0 - margin) * length};
    r.raw_ripple = ripple_metric(r.raw, window);
    r.precompensated_ripple = ripple_metric(r.precompensated, window);
    r.ratio = r.precompensated_ripple / r.raw_ripple;
    return r;
}

}  // namespace floquet
