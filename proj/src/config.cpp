#include "floquet/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "floquet/io.hpp"

namespace floquet {

namespace {

using Defaults = std::map<std::string, std::string>;

const std::map<std::string, Defaults>& protocol_defaults() {
    static const std::map<std::string, Defaults> d{
        {"chevron", {{"omega", "40"}}},
        {"modulated_chevron", {{"omega", "80"}, {"omega_mod", "1"}}},
        {"lz_delay", {{"omega", "20"}, {"delta", "50"}, {"hidden_delay", "0.137"}}},
        {"following_bare", {{"duration", "8"}, {"readout_step", "0.02"}}},
        {"following_adiabatic", {{"duration", "8"}, {"readout_step", "0.02"}}},
        {"coherence",
         {{"samples", "64"}, {"t1_span", "50"}, {"ramsey_span", "2"}, {"ramsey_virtual", "4"}, {"echo_span", "12"},
          {"rabi_omega", "40"}, {"rabi_jitter", "0.01"}}},
        {"servo", {{"hours", "2"}, {"interval", "0.0833333333333"}, {"noise_mhz", "0.5"}, {"base", "4.7"}}},
        {"pump",
         {{"cavity_dim", "40"}, {"n0", "4"}, {"n_periods", "10"}, {"samples_per_period", "20"}, {"band", "upper"},
          {"convention", "amplitude"}}},
        {"chern_map", {{"n_theta", "24"}, {"convention", "amplitude"}}},
        {"filter_demo", {{"cutoff", "6"}, {"order", "6"}, {"pulse_length", "1"}, {"margin", "0.1"}}},
    };
    return d;
}

const std::map<std::string, Defaults>& sweep_defaults() {
    static const std::map<std::string, Defaults> d{
        {"chevron", {{"detuning", "-20:20:2"}, {"t", "0:0.5:0.0025"}}},
        {"modulated_chevron", {{"detuning", "-20:20:2"}, {"t", "0:1:0.001"}}},
        {"lz_delay", {{"tau", "0:3.5:0.01"}}},
        {"following_bare", {}},
        {"following_adiabatic", {{"b0", ""}, {"omega_mod", ""}}},
        {"coherence", {}},
        {"servo", {}},
        {"pump", {}},
        {"chern_map", {{"b0", "5,10,20,40,80"}, {"n", "1,3,6,12,24"}}},
        {"filter_demo", {}},
    };
    return d;
}

const std::set<std::string> kTextProtocol{"band", "convention"};

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    const auto e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

bool parse_double(const std::string& text, double& v) {
    const std::string t = trim(text);
    if (t.empty()) return false;
    char* end = nullptr;
    v = std::strtod(t.c_str(), &end);
    return end && *end == '\0';
}

enum class Rule { any, positive, nonneg, probability, integer_pos };

class Reader {
  public:
    Reader(const Sections& s, ValidationReport& rep) : s_(s), rep_(rep) {}

    bool has_section(const std::string& sec) const { return s_.count(sec) > 0; }

    std::string text(const std::string& sec, const std::string& key, const std::string& def) {
        used_[sec].insert(key);
        auto it = s_.find(sec);
        if (it == s_.end()) return def;
        auto k = it->second.find(key);
        return k == it->second.end() ? def : trim(k->second);
    }

    double number(const std::string& sec, const std::string& key, double def, Rule rule = Rule::any) {
        const std::string raw = text(sec, key, "");
        double v = def;
        if (!raw.empty() && !parse_double(raw, v)) {
            rep_.errors.push_back(sec + "." + key + ": '" + raw + "' is not a number");
            return def;
        }
        const std::string name = sec + "." + key;
        switch (rule) {
            case Rule::positive:
                if (!(v > 0.0)) rep_.errors.push_back(name + ": must be positive (got " + format_number(v) + ")");
                break;
            case Rule::nonneg:
                if (!(v >= 0.0)) rep_.errors.push_back(name + ": must be nonnegative (got " + format_number(v) + ")");
                break;
            case Rule::probability:
                if (!(v >= 0.0 && v <= 1.0)) rep_.errors.push_back(name + ": must lie in [0, 1] (got " + format_number(v) + ")");
                break;
            case Rule::integer_pos:
                if (!(v >= 1.0) || v != std::floor(v))
                    rep_.errors.push_back(name + ": must be a positive integer (got " + format_number(v) + ")");
                break;
            case Rule::any: break;
        }
        return v;
    }

    void unknown_keys() {
        for (const auto& [sec, keys] : s_)
            for (const auto& [k, v] : keys)
                if (!used_[sec].count(k)) rep_.errors.push_back(sec + "." + k + ": unknown field");
    }

  private:
    const Sections& s_;
    ValidationReport& rep_;
    std::map<std::string, std::set<std::string>> used_;
};

void regime_warnings(const RunConfig& c, ValidationReport& rep) {
    const double alpha = c.exp.device.alpha;
    std::vector<double> b0s{c.exp.field.b0};
    if (c.sweep.count("b0") && !c.sweep.at("b0").empty()) b0s = c.axis("b0");
    const bool uses_field = c.experiment == "following_bare" || c.experiment == "following_adiabatic" ||
                            c.experiment == "pump" || c.experiment == "chern_map";
    if (!uses_field) return;
    for (double b0 : b0s)
        if (b0 >= alpha)
            rep.warnings.push_back("operating regime: B0 = " + format_number(b0) + " MHz is not << alpha = " +
                                   format_number(alpha) + " MHz");
    const double omega = c.exp.field.omega_mod;
    const double b0 = c.exp.field.b0;
    if (c.experiment != "chern_map" && c.sweep.count("omega_mod") == 0 && b0 > 0.0 && omega >= b0)
        rep.warnings.push_back("operating regime: omega_mod = " + format_number(omega) + " MHz is not << B0 = " +
                               format_number(b0) + " MHz");
    if (c.experiment == "pump") {
        const double n0 = c.param("n0");
        const double gn = c.exp.field.g * std::sqrt(n0);
        const double delta = std::abs(c.exp.field.delta);
        if (delta >= b0) rep.warnings.push_back("operating regime: Delta is not << B0");
        if (gn >= alpha)
            rep.warnings.push_back("operating regime: g sqrt(n0) = " + format_number(gn) + " MHz is not << alpha");
        if (gn > 0.0 && (delta >= gn || omega >= gn))
            rep.warnings.push_back("operating regime: Delta and omega_mod should be << g sqrt(n0) = " + format_number(gn) +
                                   " MHz");
        const double dim = c.param("cavity_dim");
        const double need = n0 + c.param("n_periods") + 5.0;
        if (need > dim)
            rep.warnings.push_back("truncation risk: cavity_dim = " + format_number(dim) + " leaves no headroom for n0 = " +
                                   format_number(n0) + " pumped over " + format_number(c.param("n_periods")) +
                                   " periods (needs about " + format_number(need) + ")");
    }
}

}  // namespace

double RunConfig::param(const std::string& key) const {
    auto it = protocol.find(key);
    if (it == protocol.end()) throw std::out_of_range("Protocol." + key + " is not set");
    double v = 0.0;
    if (!parse_double(it->second, v)) throw std::invalid_argument("Protocol." + key + " is not a number");
    return v;
}

std::string RunConfig::text(const std::string& key) const {
    auto it = protocol.find(key);
    if (it == protocol.end()) throw std::out_of_range("Protocol." + key + " is not set");
    return it->second;
}

std::vector<double> RunConfig::axis(const std::string& key) const {
    auto it = sweep.find(key);
    if (it == sweep.end()) throw std::out_of_range("Sweep." + key + " is not set");
    return parse_axis(it->second);
}

nlohmann::json ValidationReport::to_json() const {
    return nlohmann::json{{"ok", ok()}, {"errors", errors}, {"warnings", warnings}, {"resolved", resolved}};
}

ConfigError::ConfigError(ValidationReport r)
    : std::runtime_error(r.errors.empty() ? "invalid config" : r.errors.front()), report_(std::move(r)) {}

std::vector<double> parse_axis(const std::string& text) {
    const std::string t = trim(text);
    if (t.empty()) throw std::invalid_argument("empty axis");
    if (t.find(':') != std::string::npos) {
        std::vector<double> p;
        std::stringstream ss(t);
        std::string part;
        while (std::getline(ss, part, ':')) {
            double v = 0.0;
            if (!parse_double(part, v)) throw std::invalid_argument("bad range '" + t + "'");
            p.push_back(v);
        }
        if (p.size() != 3 || !(p[2] > 0.0) || p[1] < p[0]) throw std::invalid_argument("range must be start:stop:step");
        return arange_grid(p[0], p[1], p[2]);
    }
    std::vector<double> out;
    std::stringstream ss(t);
    std::string part;
    while (std::getline(ss, part, ',')) {
        double v = 0.0;
        if (!parse_double(part, v)) throw std::invalid_argument("bad list entry '" + trim(part) + "'");
        out.push_back(v);
    }
    return out;
}

Sections parse_ini(const std::string& text) {
    std::istringstream is(text);
    boost::property_tree::ptree pt;
    boost::property_tree::ini_parser::read_ini(is, pt);
    Sections s;
    for (const auto& [sec, node] : pt) {
        if (node.empty()) throw std::invalid_argument("top-level key '" + sec + "' outside a section");
        for (const auto& [k, v] : node) s[sec][k] = v.get_value<std::string>();
    }
    return s;
}

Sections read_sections(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    const std::string text = buf.str();
    const bool json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
    if (!json) return parse_ini(text);
    const auto j = nlohmann::json::parse(text);
    const auto& cfg = j.contains("config") ? j.at("config") : j;
    Sections s;
    for (const auto& [sec, keys] : cfg.items())
        for (const auto& [k, v] : keys.items()) s[sec][k] = v.is_string() ? v.get<std::string>() : v.dump();
    return s;
}

ValidationReport validate_sections(const Sections& s, RunConfig* out) {
    ValidationReport rep;
    static const std::set<std::string> known{"RunConfig",   "DeviceParams", "NoiseModel", "FieldParams",
                                             "ServoConfig", "Sweep",        "Protocol"};
    for (const auto& [sec, keys] : s)
        if (!known.count(sec)) rep.errors.push_back(sec + ": unknown section");

    Reader r(s, rep);
    RunConfig c;
    c.experiment = r.text("RunConfig", "experiment", "");
    if (c.experiment.empty())
        rep.errors.push_back("RunConfig.experiment: required");
    else if (std::find(kExperiments.begin(), kExperiments.end(), c.experiment) == kExperiments.end())
        rep.errors.push_back("RunConfig.experiment: unknown experiment '" + c.experiment + "'");
    const std::string seed = r.text("RunConfig", "seed", "");
    if (seed.empty()) {
        rep.errors.push_back("RunConfig.seed: required");
    } else {
        try {
            std::size_t pos = 0;
            c.seed = std::stoull(seed, &pos);
            if (pos != seed.size()) throw std::invalid_argument(seed);
        } catch (const std::exception&) {
            rep.errors.push_back("RunConfig.seed: '" + seed + "' is not a nonnegative integer");
        }
    }
    c.out = r.text("RunConfig", "out", "out");
    c.exp.shots = static_cast<int>(r.number("RunConfig", "shots", 1, Rule::integer_pos));
    c.exp.seed = c.seed;

    auto& d = c.exp.device;
    d.omega_q_range.first = r.number("DeviceParams", "omega_q_min", d.omega_q_range.first, Rule::positive);
    d.omega_q_range.second = r.number("DeviceParams", "omega_q_max", d.omega_q_range.second, Rule::positive);
    d.alpha = r.number("DeviceParams", "alpha", d.alpha, Rule::positive);
    d.g_boost = r.number("DeviceParams", "g_boost", d.g_boost, Rule::positive);
    d.g_readout = r.number("DeviceParams", "g_readout", d.g_readout, Rule::positive);
    d.gamma_q = r.number("DeviceParams", "gamma_q", d.gamma_q, Rule::positive);
    d.omega_r = r.number("DeviceParams", "omega_r", d.omega_r, Rule::positive);
    d.kappa_r = r.number("DeviceParams", "kappa_r", d.kappa_r, Rule::positive);
    d.omega_m = r.number("DeviceParams", "omega_m", d.omega_m, Rule::positive);
    d.kappa_m = r.number("DeviceParams", "kappa_m", d.kappa_m, Rule::positive);
    d.ej_ratio = r.number("DeviceParams", "ej_ratio", d.ej_ratio, Rule::positive);
    d.omega_q = r.number("DeviceParams", "omega_q", d.omega_q, Rule::positive);

    const std::string preset = r.text("NoiseModel", "preset", "off");
    if (preset == "measured")
        c.exp.noise = NoiseModel::measured();
    else if (preset == "off")
        c.exp.noise = NoiseModel::off();
    else
        rep.errors.push_back("NoiseModel.preset: must be 'off' or 'measured'");
    auto& n = c.exp.noise;
    n.t1 = r.number("NoiseModel", "t1", n.t1, Rule::positive);
    n.tphi = r.number("NoiseModel", "tphi", n.tphi, Rule::positive);
    n.kappa_m = r.number("NoiseModel", "kappa_m", n.kappa_m, Rule::nonneg);
    n.kappa_r = r.number("NoiseModel", "kappa_r", n.kappa_r, Rule::nonneg);
    n.sigma_quasistatic = r.number("NoiseModel", "sigma_quasistatic", n.sigma_quasistatic, Rule::nonneg);
    n.readout_error.first = r.number("NoiseModel", "readout_error_eg", n.readout_error.first, Rule::probability);
    n.readout_error.second = r.number("NoiseModel", "readout_error_ge", n.readout_error.second, Rule::probability);

    auto& fp = c.exp.field;
    fp.b0 = r.number("FieldParams", "b0", fp.b0, Rule::nonneg);
    fp.omega_mod = r.number("FieldParams", "omega_mod", fp.omega_mod, Rule::positive);
    fp.m = r.number("FieldParams", "m", fp.m);
    fp.delta = r.number("FieldParams", "delta", fp.delta);
    fp.g = r.number("FieldParams", "g", fp.g, Rule::nonneg);

    auto& sv = c.servo;
    sv.omega_target = r.number("ServoConfig", "omega_target", sv.omega_target, Rule::positive);
    sv.scale_a = r.number("ServoConfig", "scale_a", sv.scale_a, Rule::positive);
    sv.i_cap = r.number("ServoConfig", "i_cap", sv.i_cap, Rule::positive);
    sv.delta_freq = r.number("ServoConfig", "delta_freq", sv.delta_freq, Rule::positive);
    sv.n_min = static_cast<int>(r.number("ServoConfig", "n_min", sv.n_min, Rule::integer_pos));
    sv.n_max = static_cast<int>(r.number("ServoConfig", "n_max", sv.n_max, Rule::integer_pos));
    if (sv.n_max < sv.n_min) rep.errors.push_back("ServoConfig.n_max: must be >= n_min");

    {
        const auto pit = protocol_defaults().find(c.experiment);
        if (pit != protocol_defaults().end()) {
            for (const auto& [k, def] : pit->second) {
                c.protocol[k] = r.text("Protocol", k, def);
                double v = 0.0;
                if (!kTextProtocol.count(k) && !parse_double(c.protocol[k], v))
                    rep.errors.push_back("Protocol." + k + ": '" + c.protocol[k] + "' is not a number");
            }
            for (const auto& [k, def] : sweep_defaults().at(c.experiment)) {
                c.sweep[k] = r.text("Sweep", k, def);
                if (c.sweep[k].empty()) continue;
                try {
                    parse_axis(c.sweep[k]);
                } catch (const std::exception& e) {
                    rep.errors.push_back("Sweep." + k + ": " + e.what());
                }
            }
        }
    }
    if (c.protocol.count("band") && c.protocol["band"] != "upper" && c.protocol["band"] != "lower")
        rep.errors.push_back("Protocol.band: must be 'upper' or 'lower'");
    if (c.protocol.count("convention") && c.protocol["convention"] != "amplitude" && c.protocol["convention"] != "coherent")
        rep.errors.push_back("Protocol.convention: must be 'amplitude' or 'coherent'");
    if (c.experiment == "following_adiabatic" && (c.sweep["b0"].empty() != c.sweep["omega_mod"].empty()))
        rep.errors.push_back("Sweep: b0 and omega_mod must be given together for an F map");
    r.unknown_keys();

    if (rep.errors.empty()) {
        for (auto check : {+[](const RunConfig& x) { x.exp.check(); }, +[](const RunConfig& x) { x.servo.check(); }}) {
            try {
                check(c);
            } catch (const std::exception& e) {
                rep.errors.push_back(e.what());
            }
        }
    }
    if (rep.errors.empty()) {
        try {
            regime_warnings(c, rep);
        } catch (const std::exception& e) {
            rep.errors.push_back(e.what());
        }
        rep.resolved = resolved_config(c);
    }
    if (out) *out = c;
    return rep;
}

RunConfig load_config(const std::string& path) {
    RunConfig c;
    ValidationReport rep = validate_sections(read_sections(path), &c);
    if (!rep.ok()) throw ConfigError(std::move(rep));
    return c;
}

nlohmann::json resolved_config(const RunConfig& c) {
    auto num = [](double v) { return format_number(v); };
    nlohmann::json j;
    j["RunConfig"] = {{"experiment", c.experiment},
                      {"seed", std::to_string(c.seed)},
                      {"out", c.out},
                      {"shots", std::to_string(c.exp.shots)}};
    const auto& d = c.exp.device;
    j["DeviceParams"] = {{"omega_q_min", num(d.omega_q_range.first)}, {"omega_q_max", num(d.omega_q_range.second)},
                         {"alpha", num(d.alpha)},     {"g_boost", num(d.g_boost)},
                         {"g_readout", num(d.g_readout)}, {"gamma_q", num(d.gamma_q)},
                         {"omega_r", num(d.omega_r)}, {"kappa_r", num(d.kappa_r)},
                         {"omega_m", num(d.omega_m)}, {"kappa_m", num(d.kappa_m)},
                         {"ej_ratio", num(d.ej_ratio)}, {"omega_q", num(d.omega_q)}};
    const auto& n = c.exp.noise;
    j["NoiseModel"] = {{"t1", num(n.t1)},
                       {"tphi", num(n.tphi)},
                       {"kappa_m", num(n.kappa_m)},
                       {"kappa_r", num(n.kappa_r)},
                       {"sigma_quasistatic", num(n.sigma_quasistatic)},
                       {"readout_error_eg", num(n.readout_error.first)},
                       {"readout_error_ge", num(n.readout_error.second)}};
    const auto& f = c.exp.field;
    j["FieldParams"] = {{"b0", num(f.b0)}, {"omega_mod", num(f.omega_mod)}, {"m", num(f.m)}, {"delta", num(f.delta)},
                        {"g", num(f.g)}};
    const auto& s = c.servo;
    j["ServoConfig"] = {{"omega_target", num(s.omega_target)}, {"scale_a", num(s.scale_a)},
                        {"i_cap", num(s.i_cap)},               {"delta_freq", num(s.delta_freq)},
                        {"n_min", std::to_string(s.n_min)},    {"n_max", std::to_string(s.n_max)}};
    j["Protocol"] = nlohmann::json::object();
    for (const auto& [k, v] : c.protocol) j["Protocol"][k] = v;
    j["Sweep"] = nlohmann::json::object();
    for (const auto& [k, v] : c.sweep) j["Sweep"][k] = v;
    return j;
}

}  // namespace floquet
