#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "resonance/apriori.hpp"
#include "resonance/conditions.hpp"
#include "resonance/radial.hpp"
#include "resonance/solver.hpp"
#include "resonance/spectrum.hpp"

namespace resonance {

using json = nlohmann::json;

/// Documented process exit codes.
enum ExitCode : int {
    exit_ok = 0,
    exit_internal = 1,
    exit_config = 2,
    exit_hypothesis = 3,
    exit_uniformity = 4,
    exit_landesman_lazer = 5,
    exit_apriori = 6,
    exit_solve = 7,
    exit_radial = 8,
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// A failed gate: the stage that refused and the exit code it maps to.
class StageFailure : public Error {
public:
    StageFailure(int code, std::string stage, const std::string& reason)
        : Error(stage + ": " + reason), code(code), stage(std::move(stage)), reason(reason)
    {
    }
    int code;
    std::string stage;
    std::string reason;
};

enum class Theorem { main, main2, singular_weak, singular_strong, radial };

inline const char* to_string(Theorem t)
{
    switch (t) {
    case Theorem::main: return "main";
    case Theorem::main2: return "main2";
    case Theorem::singular_weak: return "singular-weak";
    case Theorem::singular_strong: return "singular-strong";
    case Theorem::radial: return "radial";
    }
    return "?";
}

inline Theorem parse_theorem(const std::string& s)
{
    if (s == "main") return Theorem::main;
    if (s == "main2") return Theorem::main2;
    if (s == "singular-weak") return Theorem::singular_weak;
    if (s == "singular-strong") return Theorem::singular_strong;
    if (s == "radial") return Theorem::radial;
    throw ConfigError("unknown theorem '" + s + "' (main|main2|singular-weak|singular-strong|radial)");
}

struct Tolerances {
    double newton_tol = 1e-8;
    double shoot_rtol = 1e-12;
    double shoot_atol = 1e-12;
    double ll_margin = 1e-8;
    double angle_tol = 1e-6;
    double lap_rtol = 1e-10;
    double lap_atol = 1e-12;
};

struct Grids {
    int tau_points = 256;
    int ll_panels = 64;
    int envelope_t_points = 512;
    int lambda_points = 33;
    int degree_samples = 64;
    int table_x_points = 4096;
    int h_tau_points = 32;
};

struct AprioriConfig {
    int laps = 20;
    double y0_min = 1e2;
    double y0_max = 1e4;
    int elastic_orbits = 16;
    std::vector<double> probe_amplitudes = {1e2, 1e3, 1e4};
    int probe_phases = 4;
};

struct RadialConfig {
    std::vector<int> nu = {1};
    int k_max = 4;
};

struct SweepConfig {
    std::string param;
    std::vector<double> values;
};

struct SpectrumConfig {
    int jmax = 4;
    int points = 64;
};

struct HConfig {
    std::vector<double> zetas = {0.2, 0.1, 0.05};
    std::vector<double> Xs = {1e2, 1e3, 1e4};
};

struct RunConfig {
    std::string name = "model";
    double T = 2 * pi;
    int N = 1;
    Domain domain = Domain::full_line;
    std::string f, f_left, f_right;
    std::string family;
    std::map<std::string, double> params;
    std::map<std::string, double> constants;
    Theorem theorem = Theorem::main;
    Tolerances tol;
    Grids grids;
    AprioriConfig apriori;
    RadialConfig radial;
    SweepConfig sweep;
    SpectrumConfig spectrum;
    HConfig H;
    std::string output = "out";
    json source; // normalized input, echoed in the report
};

// ---------------------------------------------------------------------------
// Named model families.

struct FamilySpec {
    std::string f, f_left, f_right;
    Domain domain;
    std::map<std::string, double> defaults;
};

/// Registered families; defaults may depend on T and N through mu_N, mu_N1 and mu.
inline FamilySpec family_spec(const std::string& name, double T, int N)
{
    const double muN = eigenvalue(N, T), muN1 = eigenvalue(N + 1, T), mid = 0.5 * (muN + muN1);
    if (name == "quintic_uniform") return {"(1+sin(t)^2)*x^5 + x^3", "", "", Domain::full_line, {}};
    if (name == "quintic_nonuniform") return {"x^3 + sin(t)^2*x^5", "", "", Domain::full_line, {}};
    if (name == "singular_quintic")
        return {"", "-(1+sin(t)^2)*x^-5 - x^-3", "mu*(x - 1) - (1+sin(t)^2) - 1", Domain::singular, {{"mu", mid}}};
    if (name == "singular_quintic_nonuniform")
        return {"", "-x^-3 - sin(t)^2*x^-5", "mu*(x - 1) - sin(t)^2 - 1", Domain::singular, {{"mu", mid}}};
    if (name == "cubic_band")
        return {"", "(1 + b*sin(t)^2)*x^3", "(mu + a*sin(t))*x", Domain::full_line, {{"a", 0.3}, {"b", 0.5}, {"mu", mid}}};
    if (name == "double_resonance")
        return {"",
                "x^3 + c*x + eps*cos(t)",
                "lo*x + (hi - lo)/2*x*(1 + sin(log(1 + x))) - amp*sin(log(1 + x)) + eps*cos(t)",
                Domain::full_line,
                {{"lo", muN}, {"hi", muN1}, {"c", mid - 0.3}, {"amp", 0.3}, {"eps", 0.1}}};
    if (name == "singular_power")
        return {"-(1 + b*sin(t)^2)/x^3 + mu*x + eps*cos(t)", "", "", Domain::singular, {{"b", 0.5}, {"mu", mid}, {"eps", 0.1}}};
    throw ConfigError("unknown family '" + name + "'");
}

inline const std::vector<std::string>& family_names()
{
    static const std::vector<std::string> names = {"quintic_uniform", "quintic_nonuniform", "singular_quintic", "singular_quintic_nonuniform", "cubic_band", "double_resonance",
                                                   "singular_power"};
    return names;
}

// ---------------------------------------------------------------------------
// Schema.

namespace detail {

inline std::string key_path(const std::string& parent, const std::string& k)
{
    return parent.empty() ? k : parent + "." + k;
}

inline void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& allowed)
{
    if (!obj.is_object()) throw ConfigError((where.empty() ? std::string("config") : where) + " must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) throw ConfigError("unknown key '" + key_path(where, it.key()) + "'");
}

inline double get_number(const json& v, const std::string& path)
{
    if (!v.is_number()) throw ConfigError("'" + path + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError("'" + path + "' must be finite");
    return d;
}

inline int get_int(const json& v, const std::string& path, int lo = 1)
{
    if (!v.is_number_integer()) throw ConfigError("'" + path + "' must be an integer");
    const long long i = v.get<long long>();
    if (i < lo || i > 100'000'000) throw ConfigError("'" + path + "' out of range");
    return static_cast<int>(i);
}

inline std::string get_string(const json& v, const std::string& path)
{
    if (!v.is_string()) throw ConfigError("'" + path + "' must be a string");
    return v.get<std::string>();
}

inline std::vector<double> get_numbers(const json& v, const std::string& path)
{
    if (!v.is_array() || v.empty()) throw ConfigError("'" + path + "' must be a non-empty array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_number(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

inline std::map<std::string, double> get_constants(const json& v, const std::string& path)
{
    if (!v.is_object()) throw ConfigError("'" + path + "' must be an object of numbers");
    std::map<std::string, double> out;
    for (auto it = v.begin(); it != v.end(); ++it) out[it.key()] = get_number(it.value(), key_path(path, it.key()));
    return out;
}

template <class Fill>
void section(const json& root, const char* name, const std::set<std::string>& keys, Fill fill)
{
    if (!root.contains(name)) return;
    const json& s = root.at(name);
    reject_unknown(s, name, keys);
    for (auto it = s.begin(); it != s.end(); ++it) fill(it.key(), it.value(), std::string(name) + "." + it.key());
}

} // namespace detail

/// Validates `j` against the schema and builds the config. No computation happens here.
inline RunConfig parse_config(const json& j)
{
    using namespace detail;
    reject_unknown(j, "", {"name", "T", "N", "domain", "f", "f_left", "f_right", "family", "params", "constants", "theorem",
                           "tolerances", "grids", "apriori", "radial", "sweep", "spectrum", "H", "output"});
    RunConfig c;
    c.source = j;
    if (j.contains("name")) c.name = get_string(j["name"], "name");
    if (!j.contains("T")) throw ConfigError("missing required key 'T'");
    if (j["T"].is_string()) {
        try {
            c.T = parse(j["T"].get<std::string>(), {{"pi", pi}})(0.0, 0.0);
        } catch (const Error& e) {
            throw ConfigError(std::string("'T': ") + e.what());
        }
    } else {
        c.T = get_number(j["T"], "T");
    }
    if (!(c.T > 0)) throw ConfigError("'T' must be positive");
    if (!j.contains("N")) throw ConfigError("missing required key 'N'");
    c.N = get_int(j["N"], "N");
    if (j.contains("theorem")) c.theorem = parse_theorem(get_string(j["theorem"], "theorem"));
    if (j.contains("output")) c.output = get_string(j["output"], "output");
    if (j.contains("constants")) c.constants = get_constants(j["constants"], "constants");

    const bool has_f = j.contains("f"), has_l = j.contains("f_left"), has_r = j.contains("f_right"),
               has_fam = j.contains("family");
    if (has_l != has_r) throw ConfigError("'f_left' and 'f_right' must appear together");
    if ((has_f ? 1 : 0) + (has_l ? 1 : 0) + (has_fam ? 1 : 0) != 1)
        throw ConfigError("exactly one of 'f', 'f_left'/'f_right' or 'family' is required");
    if (j.contains("params") && !has_fam) throw ConfigError("'params' needs 'family'");
    std::optional<Domain> fam_domain;
    if (has_fam) {
        c.family = get_string(j["family"], "family");
        auto spec = family_spec(c.family, c.T, c.N);
        c.params = spec.defaults;
        fam_domain = spec.domain;
        if (j.contains("params")) {
            for (const auto& [k, v] : get_constants(j["params"], "params")) {
                if (!spec.defaults.count(k)) throw ConfigError("unknown key 'params." + k + "' for family " + c.family);
                c.params[k] = v;
            }
        }
    }
    if (has_f) c.f = get_string(j["f"], "f");
    if (has_l) {
        c.f_left = get_string(j["f_left"], "f_left");
        c.f_right = get_string(j["f_right"], "f_right");
    }
    if (j.contains("domain")) {
        const auto d = get_string(j["domain"], "domain");
        if (d == "full_line") c.domain = Domain::full_line;
        else if (d == "singular") c.domain = Domain::singular;
        else throw ConfigError("'domain' must be full_line or singular");
        if (fam_domain && *fam_domain != c.domain) throw ConfigError("'domain' contradicts family " + c.family);
    } else if (fam_domain) {
        c.domain = *fam_domain;
    }

    section(j, "tolerances",
                        {"newton_tol", "shoot_rtol", "shoot_atol", "ll_margin", "angle_tol", "lap_rtol", "lap_atol"},
                        [&](const std::string& k, const json& v, const std::string& p) {
                            const double x = get_number(v, p);
                            if (!(x > 0)) throw ConfigError("'" + p + "' must be positive");
                            if (k == "newton_tol") c.tol.newton_tol = x;
                            else if (k == "shoot_rtol") c.tol.shoot_rtol = x;
                            else if (k == "shoot_atol") c.tol.shoot_atol = x;
                            else if (k == "ll_margin") c.tol.ll_margin = x;
                            else if (k == "angle_tol") c.tol.angle_tol = x;
                            else if (k == "lap_rtol") c.tol.lap_rtol = x;
                            else c.tol.lap_atol = x;
                        });
    section(j, "grids",
                   {"tau_points", "ll_panels", "envelope_t_points", "lambda_points", "degree_samples", "table_x_points",
                    "h_tau_points"},
                   [&](const std::string& k, const json& v, const std::string& p) {
                       const int n = get_int(v, p, 2);
                       if (k == "tau_points") c.grids.tau_points = n;
                       else if (k == "ll_panels") c.grids.ll_panels = n;
                       else if (k == "envelope_t_points") c.grids.envelope_t_points = n;
                       else if (k == "lambda_points") c.grids.lambda_points = n;
                       else if (k == "degree_samples") c.grids.degree_samples = n;
                       else if (k == "table_x_points") c.grids.table_x_points = n;
                       else c.grids.h_tau_points = n;
                   });
    section(j, "apriori",
                           {"laps", "y0_min", "y0_max", "elastic_orbits", "probe_amplitudes", "probe_phases"},
                           [&](const std::string& k, const json& v, const std::string& p) {
                               if (k == "laps") c.apriori.laps = get_int(v, p);
                               else if (k == "y0_min") c.apriori.y0_min = get_number(v, p);
                               else if (k == "y0_max") c.apriori.y0_max = get_number(v, p);
                               else if (k == "elastic_orbits") c.apriori.elastic_orbits = get_int(v, p);
                               else if (k == "probe_amplitudes") c.apriori.probe_amplitudes = get_numbers(v, p);
                               else c.apriori.probe_phases = get_int(v, p);
                           });
    if (!(c.apriori.y0_min > 0) || !(c.apriori.y0_max >= c.apriori.y0_min))
        throw ConfigError("'apriori' needs 0 < y0_min <= y0_max");
    section(j, "radial", {"nu", "k_max"}, [&](const std::string& k, const json& v, const std::string& p) {
        if (k == "k_max") {
            c.radial.k_max = get_int(v, p);
        } else if (v.is_array()) {
            c.radial.nu.clear();
            for (std::size_t i = 0; i < v.size(); ++i) c.radial.nu.push_back(get_int(v[i], p + "[" + std::to_string(i) + "]"));
            if (c.radial.nu.empty()) throw ConfigError("'" + p + "' must not be empty");
        } else {
            c.radial.nu = {get_int(v, p)};
        }
    });
    section(j, "sweep", {"param", "values"}, [&](const std::string& k, const json& v, const std::string& p) {
        if (k == "param") c.sweep.param = get_string(v, p);
        else c.sweep.values = get_numbers(v, p);
    });
    if (j.contains("sweep") && (c.sweep.param.empty() || c.sweep.values.empty()))
        throw ConfigError("'sweep' needs both 'param' and 'values'");
    section(j, "spectrum", {"jmax", "points"}, [&](const std::string& k, const json& v, const std::string& p) {
        if (k == "jmax") c.spectrum.jmax = get_int(v, p);
        else c.spectrum.points = get_int(v, p, 2);
    });
    section(j, "H", {"zetas", "Xs"}, [&](const std::string& k, const json& v, const std::string& p) {
        auto xs = get_numbers(v, p);
        for (double x : xs)
            if (!(x > 0)) throw ConfigError("'" + p + "' entries must be positive");
        (k == "zetas" ? c.H.zetas : c.H.Xs) = xs;
    });
    return c;
}

/// Applies "K=V" overrides to the raw json before validation. K is a key of
/// tolerances or grids, optionally qualified as section.key.
inline void apply_override(json& j, const std::string& kv)
{
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + kv + "' is not K=V");
    std::string key = kv.substr(0, eq);
    const std::string val = kv.substr(eq + 1);
    std::string sec;
    if (auto dot = key.find('.'); dot != std::string::npos) {
        sec = key.substr(0, dot);
        key = key.substr(dot + 1);
    } else {
        static const std::set<std::string> grid_keys = {"tau_points", "ll_panels", "envelope_t_points", "lambda_points",
                                                        "degree_samples", "table_x_points", "h_tau_points"};
        sec = grid_keys.count(key) ? "grids" : "tolerances";
    }
    json v;
    try {
        v = json::parse(val);
    } catch (const json::exception&) {
        throw ConfigError("override '" + kv + "' has a non-numeric value");
    }
    if (!v.is_number()) throw ConfigError("override '" + kv + "' has a non-numeric value");
    j[sec][key] = v;
}

inline RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {})
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    for (const auto& o : overrides) apply_override(j, o);
    return parse_config(j);
}

/// Builds the model, with family parameters and constants visible to the expressions.
inline NonlinearityModel build_model(const RunConfig& c)
{
    std::map<std::string, double> consts = c.constants;
    consts.emplace("pi", pi);
    for (const auto& [k, v] : c.params) consts[k] = v;
    std::string f = c.f, l = c.f_left, r = c.f_right;
    if (!c.family.empty()) {
        auto spec = family_spec(c.family, c.T, c.N);
        f = spec.f;
        l = spec.f_left;
        r = spec.f_right;
    }
    try {
        if (!f.empty()) return NonlinearityModel::parse_model(c.name, c.T, c.domain, c.N, f, consts);
        return NonlinearityModel::parse_piecewise(c.name, c.T, c.domain, c.N, l, r, consts);
    } catch (const Error& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Report.

struct StageRecord {
    std::string name;
    std::string verdict;
    double seconds = 0.0;
    std::vector<std::pair<std::string, std::string>> values;
};

struct RunReport {
    std::string command;
    std::string theorem;
    std::vector<StageRecord> stages;
    std::vector<std::string> artifacts;
    int exit_code = exit_ok;
    std::string failed_stage;
    std::string reason;
    json config;
};

inline std::string yes_no(bool b) { return b ? "true" : "false"; }

inline void write_report(std::ostream& os, const RunReport& r, const Tolerances& tol, const Grids& g)
{
    os << "command = " << r.command << '\n'
       << "theorem = " << r.theorem << '\n'
       << "status = " << (r.exit_code == exit_ok ? "ok" : "failed") << '\n'
       << "exit_code = " << r.exit_code << '\n';
    if (r.exit_code != exit_ok) os << "failed_stage = " << r.failed_stage << '\n' << "reason = " << r.reason << '\n';
    os << "threads = " << worker_count() << '\n' << "seed = none (deterministic grids)\n";
    os << "tol.newton_tol = " << fmt17(tol.newton_tol) << '\n'
       << "tol.shoot_rtol = " << fmt17(tol.shoot_rtol) << '\n'
       << "tol.shoot_atol = " << fmt17(tol.shoot_atol) << '\n'
       << "tol.ll_margin = " << fmt17(tol.ll_margin) << '\n'
       << "tol.angle_tol = " << fmt17(tol.angle_tol) << '\n'
       << "tol.lap_rtol = " << fmt17(tol.lap_rtol) << '\n'
       << "tol.lap_atol = " << fmt17(tol.lap_atol) << '\n'
       << "grids.tau_points = " << g.tau_points << '\n'
       << "grids.ll_panels = " << g.ll_panels << '\n'
       << "grids.envelope_t_points = " << g.envelope_t_points << '\n'
       << "grids.lambda_points = " << g.lambda_points << '\n'
       << "grids.degree_samples = " << g.degree_samples << '\n'
       << "grids.table_x_points = " << g.table_x_points << '\n'
       << "grids.h_tau_points = " << g.h_tau_points << '\n';
    os << "config = " << r.config.dump() << '\n';
    for (const auto& s : r.stages) {
        os << "stage." << s.name << ".verdict = " << s.verdict << '\n';
        std::ostringstream sec;
        sec.precision(6);
        sec << std::fixed << s.seconds;
        os << "stage." << s.name << ".seconds = " << sec.str() << '\n';
        for (const auto& [k, v] : s.values) os << "stage." << s.name << '.' << k << " = " << v << '\n';
    }
    for (const auto& a : r.artifacts) os << "artifact = " << a << '\n';
}

// ---------------------------------------------------------------------------
// Stages.

class Pipeline {
public:
    Pipeline(RunConfig cfg, std::filesystem::path out) : cfg_(std::move(cfg)), out_(std::move(out))
    {
        report_.config = cfg_.source;
        report_.theorem = to_string(cfg_.theorem);
    }

    const RunConfig& config() const { return cfg_; }
    RunReport& report() { return report_; }
    const std::filesystem::path& out() const { return out_; }

    /// Runs `body` as a named stage; failures are recorded and rethrown.
    template <class Body>
    void stage(const std::string& name, Body body)
    {
        report_.stages.push_back({name, "running", 0.0, {}});
        const std::size_t idx = report_.stages.size() - 1;
        const auto t0 = std::chrono::steady_clock::now();
        auto finish = [&](const std::string& verdict) {
            report_.stages[idx].seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            report_.stages[idx].verdict = verdict;
        };
        try {
            body(report_.stages[idx]);
            finish("pass");
        } catch (const StageFailure& f) {
            finish("fail");
            throw;
        } catch (...) {
            finish("error");
            throw;
        }
    }

    void put(StageRecord& s, const std::string& k, const std::string& v) { s.values.emplace_back(k, v); }
    void put(StageRecord& s, const std::string& k, const char* v) { s.values.emplace_back(k, v); }
    void put(StageRecord& s, const std::string& k, double v) { s.values.emplace_back(k, fmt17(v)); }
    void put(StageRecord& s, const std::string& k, int v) { s.values.emplace_back(k, std::to_string(v)); }
    void put(StageRecord& s, const std::string& k, long v) { s.values.emplace_back(k, std::to_string(v)); }
    void put(StageRecord& s, const std::string& k, std::size_t v) { s.values.emplace_back(k, std::to_string(v)); }
    void put(StageRecord& s, const std::string& k, bool v) { s.values.emplace_back(k, yes_no(v)); }

    template <class Writer>
    void artifact(const std::string& file, Writer w)
    {
        std::filesystem::create_directories(out_);
        std::ofstream os(out_ / file, std::ios::binary);
        if (!os) throw Error("cannot write " + (out_ / file).string());
        w(os);
        report_.artifacts.push_back(file);
    }

    NonlinearityModel model() const { return build_model(cfg_); }

    void require_domain(Domain d) const
    {
        if (cfg_.domain != d)
            throw ConfigError(std::string("theorem ") + to_string(cfg_.theorem) + " needs a " +
                              (d == Domain::singular ? "singular" : "full_line") + " model");
    }

    // -- individual stages ----------------------------------------------------

    void spectrum(double T, int jmax, int points)
    {
        stage("spectrum", [&](StageRecord& s) {
            put(s, "T", T);
            put(s, "jmax", jmax);
            for (int j = 1; j <= jmax; ++j) put(s, "mu_" + std::to_string(j), eigenvalue(j, T));
            artifact("spectrum.csv", [&](std::ostream& os) {
                os << "j,mu,nu\n";
                for (int j = 1; j <= jmax; ++j)
                    for (const auto& [mu, nu] : sample_curve(j, T, static_cast<std::size_t>(points)))
                        os << j << ',' << fmt17(mu) << ',' << fmt17(nu) << '\n';
            });
        });
    }

    /// (A) or (A0)/(Ainf), depending on the domain.
    void hypotheses(const NonlinearityModel& m)
    {
        stage("hypotheses", [&](StageRecord& s) {
            if (m.domain() == Domain::full_line) {
                auto r = validate_A(m);
                put(s, "check", "validate_A");
                put(s, "superlinear", r.superlinear);
                put(s, "band_c", r.band.c);
                put(s, "band_stable", r.band.stable);
                artifact("A_ratios.csv", [&](std::ostream& os) {
                    os << "x,min_ratio\n";
                    for (std::size_t i = 0; i < r.x.size(); ++i) os << fmt17(r.x[i]) << ',' << fmt17(r.ratio[i]) << '\n';
                });
                if (r.verdict != Verdict::pass) throw StageFailure(exit_hypothesis, "validate_A", r.reason);
            } else {
                auto r = validate_A0_Ainf(m);
                put(s, "check", "validate_A0_Ainf");
                put(s, "negative_near_zero", r.negative_near_zero);
                put(s, "diverges", r.diverges);
                put(s, "primitive_diverges", r.primitive_diverges);
                put(s, "band_c", r.band.c);
                artifact("A0_scan.csv", [&](std::ostream& os) {
                    os << "x,f1,f2,integral\n";
                    for (std::size_t i = 0; i < r.x.size(); ++i)
                        os << fmt17(r.x[i]) << ',' << fmt17(r.f1[i]) << ',' << fmt17(r.f2[i]) << ','
                           << fmt17(i < r.integral.size() ? r.integral[i] : std::nan("")) << '\n';
                });
                if (r.verdict != Verdict::pass) throw StageFailure(exit_hypothesis, "validate_A0_Ainf", r.reason);
            }
        });
    }

    void uniformity(const NonlinearityModel& m)
    {
        const Direction dir = m.domain() == Domain::singular ? Direction::zero_plus : Direction::minus_infinity;
        stage("uniformity", [&](StageRecord& s) {
            HOptions o;
            o.tau_points = cfg_.grids.h_tau_points;
            o.zetas = cfg_.H.zetas;
            o.Xs = cfg_.H.Xs;
            auto r = check_H(m, dir, o);
            put(s, "check", "check_H");
            put(s, "direction", to_string(dir));
            for (std::size_t z = 0; z < r.zetas.size(); ++z) put(s, "deviation_zeta_" + fmt_shortest(r.zetas[z]), r.deviation[z]);
            artifact("H_ratios.csv", [&](std::ostream& os) { write_H_csv(os, r); });
            if (r.verdict != Verdict::pass)
                throw StageFailure(exit_uniformity, "check_H", "window primitive ratios do not tend to 1 uniformly");
        });
    }

    void landesman_lazer(const NonlinearityModel& m, LLVariant v)
    {
        stage("landesman_lazer", [&](StageRecord& s) {
            LLOptions o;
            o.tau_points = cfg_.grids.tau_points;
            o.panels = cfg_.grids.ll_panels;
            o.margin_floor = cfg_.tol.ll_margin;
            o.envelope.t_points = cfg_.grids.envelope_t_points;
            auto r = ll_verdict(m, v, o);
            put(s, "variant", v == LLVariant::truncated_sine ? "truncated_sine" : "abs_sine");
            put(s, "lower.verdict", to_string(r.lower.verdict));
            put(s, "lower.min", r.lower.min);
            put(s, "lower.margin", r.lower.margin);
            put(s, "upper.verdict", to_string(r.upper.verdict));
            put(s, "upper.max", r.upper.max);
            put(s, "upper.margin", r.upper.margin);
            artifact("ll.csv", [&](std::ostream& os) { write_ll_csv(os, r.lower, r.upper); });
            if (!r.pass())
                throw StageFailure(exit_landesman_lazer, "ll_verdict",
                                   std::string("lower ") + to_string(r.lower.verdict) + ", upper " +
                                       to_string(r.upper.verdict));
        });
    }

    KitOptions kit_options() const
    {
        KitOptions k;
        k.table.x_points = cfg_.grids.table_x_points;
        return k;
    }

    IntegrateOptions lap_options() const
    {
        IntegrateOptions io;
        io.rtol = cfg_.tol.lap_rtol;
        io.atol = cfg_.tol.lap_atol;
        return io;
    }

    /// Kit, lap checks and the elastic property (full line); rotation probes (singular).
    std::optional<AprioriKit> apriori(const NonlinearityModel& m)
    {
        std::optional<AprioriKit> out;
        stage("apriori", [&](StageRecord& s) {
            const auto& ac = cfg_.apriori;
            if (m.domain() == Domain::singular) {
                auto g = HomotopyField::exact(m);
                auto probes = singular_probes(g, m.T(), m.N(), ac.probe_amplitudes, ac.probe_phases);
                bool all = true;
                double min_N = inf;
                for (const auto& p : probes) {
                    all = all && p.laps_ok;
                    min_N = std::min(min_N, p.min_N);
                }
                put(s, "probes", probes.size());
                put(s, "probes_laps_ok", all);
                put(s, "probes_min_N", min_N);
                artifact("probes.csv", [&](std::ostream& os) {
                    os << "t0,x0,min_N,rotation,outer,inner,eps,min_x,laps_ok\n";
                    for (const auto& p : probes)
                        os << fmt17(p.t0) << ',' << fmt17(p.x0) << ',' << fmt17(p.min_N) << ',' << fmt17(p.rotation) << ','
                           << fmt17(p.outer) << ',' << fmt17(p.inner) << ',' << fmt17(p.eps) << ',' << fmt17(p.min_x)
                           << ',' << (p.laps_ok ? 1 : 0) << '\n';
                });
                if (!all) throw StageFailure(exit_apriori, "singular_probes", "a large probe left the [N, N+1] lap band");
                return;
            }
            AprioriKit kit;
            try {
                kit = build_kit(HomotopyField::exact(m), kit_options());
            } catch (const Error& e) {
                throw StageFailure(exit_apriori, "build_kit", e.what());
            }
            put(s, "d", kit.d());
            put(s, "R0", kit.R0);
            put(s, "kappa", kit.kappa);
            put(s, "a", kit.a);
            put(s, "yhat", kit.yhat);
            put(s, "calR", kit.calR);
            put(s, "binding", kit.binding);
            const auto abs_kit = kit.with_abs_a(true);
            put(s, "calR_abs_a", abs_kit.calR);
            artifact("envelopes.csv", [&](std::ostream& os) { write_envelope_csv(os, kit.env); });
            artifact("maps.csv", [&](std::ostream& os) { write_maps_csv(os, kit); });
            artifact("r0_scan.csv", [&](std::ostream& os) {
                os << "R,omega0,ell0,kappa,a,rotates,inout,en1\n";
                for (const auto& p : kit.scan)
                    os << fmt17(p.R) << ',' << fmt17(p.omega0) << ',' << fmt17(p.ell0) << ',' << fmt17(p.kappa) << ','
                       << fmt17(p.a) << ',' << (p.rotates ? 1 : 0) << ',' << (p.inout ? 1 : 0) << ',' << (p.en1 ? 1 : 0)
                       << '\n';
            });

            auto g = HomotopyField::exact(m);
            const auto ys = logspace(ac.y0_min, ac.y0_max, static_cast<std::size_t>(ac.laps));
            const auto io = lap_options();
            auto laps = parallel_map(ys.size(), [&](std::size_t i) {
                return measure_lap(g, kit, m.T() * static_cast<double>(i) / ac.laps, ys[i], io);
            });
            std::size_t large = 0, bounds = 0, bounds_abs = 0, band = 0;
            double eps_max = 0.0;
            for (const auto& c : laps) {
                large += c.R0_large;
                bounds += c.bounds_ok();
                bounds_abs += c.T_ok && c.L_ok_abs && c.M_ok_abs;
                band += c.rotation >= m.N() - 1e-9 && c.rotation <= m.N() + 1 + 1e-9;
                eps_max = std::max(eps_max, c.eps);
            }
            put(s, "laps", laps.size());
            put(s, "laps_R0_large", large);
            put(s, "laps_rotation_band", band);
            put(s, "laps_bounds_ok", bounds);
            put(s, "laps_bounds_ok_abs_a", bounds_abs);
            put(s, "laps_eps_max", eps_max);
            artifact("laps.csv", [&](std::ostream& os) {
                os << "t0,y0,rotation,min_rho,R0_large,y7,T_y5,T_ok,y8,L_y2,L_ok,x6,M_x3,M_ok,L_y2_abs,M_x3_abs,right_half,"
                      "left_half,eps,energy_ok\n";
                for (std::size_t i = 0; i < laps.size(); ++i) {
                    const auto& c = laps[i];
                    os << fmt17(m.T() * static_cast<double>(i) / ac.laps) << ',' << fmt17(ys[i]) << ',' << fmt17(c.rotation)
                       << ',' << fmt17(c.min_rho) << ',' << (c.R0_large ? 1 : 0) << ',' << fmt17(c.lap.z[6][1]) << ','
                       << fmt17(c.T_y5) << ',' << (c.T_ok ? 1 : 0) << ',' << fmt17(c.lap.z[7][1]) << ',' << fmt17(c.L_y2)
                       << ',' << (c.L_ok ? 1 : 0) << ',' << fmt17(c.lap.z[5][0]) << ',' << fmt17(c.M_x3) << ','
                       << (c.M_ok ? 1 : 0) << ',' << fmt17(c.L_y2_abs) << ',' << fmt17(c.M_x3_abs) << ','
                       << fmt17(c.right_half) << ',' << fmt17(c.left_half) << ',' << fmt17(c.eps) << ','
                       << (c.energy_ok ? 1 : 0) << '\n';
                }
            });

            HomotopyField h(m, 0.0);
            try {
                auto hk = build_kit(h, kit_options());
                auto el = check_elastic(h, hk, ac.elastic_orbits);
                put(s, "elastic_asserted", el.asserted);
                put(s, "elastic_all_large", el.all_large);
                artifact("elastic.csv", [&](std::ostream& os) {
                    os << "start_norm,min_rho\n";
                    for (std::size_t i = 0; i < el.min_rho.size(); ++i)
                        os << fmt17(el.start_norm[i]) << ',' << fmt17(el.min_rho[i]) << '\n';
                });
            } catch (const Error& e) {
                put(s, "elastic_asserted", false);
                put(s, "elastic_reason", e.what());
            }
            out = kit;
        });
        return out;
    }

    HomotopyOptions homotopy_options() const
    {
        HomotopyOptions o;
        o.lambda_points = cfg_.grids.lambda_points;
        o.newton.tol = cfg_.tol.newton_tol;
        o.newton.shoot.rtol = cfg_.tol.shoot_rtol;
        o.newton.shoot.atol = cfg_.tol.shoot_atol;
        o.degree.shoot = o.newton.shoot;
        o.degree.samples = cfg_.grids.degree_samples;
        o.kit = kit_options();
        return o;
    }

    PeriodicCertificate solve(const NonlinearityModel& m, const std::optional<AprioriKit>& kit, bool gate)
    {
        PeriodicCertificate cert;
        stage("solve", [&](StageRecord& s) {
            auto o = homotopy_options();
            o.gate = gate;
            if (kit) o.radius = kit->calR;
            try {
                cert = homotopy_solve(m, o);
            } catch (const GateError& e) {
                throw StageFailure(exit_hypothesis, e.gate(), e.what());
            } catch (const Error& e) {
                throw StageFailure(exit_solve, "homotopy_solve", e.what());
            }
            if (kit) {
                cert.radius_source = "calR";
                cert.R0 = kit->R0;
                cert.calR = kit->calR;
                cert.kappa = kit->kappa;
                cert.a = kit->a;
            }
            put(s, "x0", cert.z[0]);
            put(s, "y0", cert.z[1]);
            put(s, "residual", cert.residual);
            put(s, "rotation", cert.rotation);
            put(s, "degree", cert.degree);
            put(s, "degree_invariant", cert.degree_invariant);
            put(s, "radius", cert.radius);
            put(s, "radius_source", cert.radius_source);
            put(s, "min_x_path", cert.min_x_path);
            artifact("certificate.txt", [&](std::ostream& os) { write_certificate(os, cert); });
            artifact("path.csv", [&](std::ostream& os) { write_path_csv(os, cert); });
            std::string why;
            if (!(cert.residual < cfg_.tol.newton_tol)) why = "residual above tolerance";
            else if (!cert.rotation_integral()) why = "rotation count is not an integer";
            else if (cert.degree == 0) why = "boundary degree is zero";
            if (!why.empty()) throw StageFailure(exit_solve, "certificate", why);
        });
        return cert;
    }

    std::vector<RadialResult> radial(const NonlinearityModel& m)
    {
        std::vector<RadialResult> out;
        stage("radial", [&](StageRecord& s) {
            RadialOptions o;
            o.k_max = cfg_.radial.k_max;
            o.angle_tol = cfg_.tol.angle_tol;
            o.newton.tol = cfg_.tol.newton_tol;
            o.newton.shoot.rtol = cfg_.tol.shoot_rtol;
            o.newton.shoot.atol = cfg_.tol.shoot_atol;
            o.homotopy = homotopy_options();
            o.homotopy.newton = o.newton;
            std::vector<RotatingSolution> all;
            for (int nu : cfg_.radial.nu) {
                RadialResult r;
                try {
                    r = find_rotating(m, nu, o);
                } catch (const GateError& e) {
                    throw StageFailure(exit_hypothesis, e.gate(), e.what());
                }
                const std::string p = "nu_" + std::to_string(nu) + ".";
                put(s, p + "k_nu", r.k_nu);
                std::size_t found = 0;
                for (const auto& c : r.cells) {
                    found += c.found;
                    if (c.found) put(s, p + "L_k" + std::to_string(c.k), c.L);
                    if (c.found)
                        artifact("planar_nu" + std::to_string(nu) + "_k" + std::to_string(c.k) + ".csv",
                                 [&](std::ostream& os) { write_planar_csv(os, c); });
                }
                put(s, p + "found", found);
                all.insert(all.end(), r.cells.begin(), r.cells.end());
                out.push_back(std::move(r));
            }
            artifact("radial.csv", [&](std::ostream& os) { write_radial_csv(os, all); });
            for (const auto& r : out)
                if (r.k_nu == 0)
                    throw StageFailure(exit_radial, "find_rotating",
                                       "no rotating solution for nu = " + std::to_string(r.nu) + " with k <= " +
                                           std::to_string(cfg_.radial.k_max));
        });
        return out;
    }

private:
    RunConfig cfg_;
    std::filesystem::path out_;
    RunReport report_;
};

/// The full pipeline of the configured theorem; stops at the first failed gate.
inline void run_theorem(Pipeline& p)
{
    const auto& c = p.config();
    const auto m = p.model();
    switch (c.theorem) {
    case Theorem::main:
    case Theorem::main2: {
        p.require_domain(Domain::full_line);
        p.hypotheses(m);
        if (c.theorem == Theorem::main2) p.uniformity(m);
        p.landesman_lazer(m, c.theorem == Theorem::main ? LLVariant::truncated_sine : LLVariant::abs_sine);
        auto kit = p.apriori(m);
        p.solve(m, kit, false);
        break;
    }
    case Theorem::singular_weak:
    case Theorem::singular_strong: {
        p.require_domain(Domain::singular);
        p.hypotheses(m);
        if (c.theorem == Theorem::singular_strong) p.uniformity(m);
        p.landesman_lazer(m, c.theorem == Theorem::singular_weak ? LLVariant::truncated_sine : LLVariant::abs_sine);
        p.apriori(m);
        p.solve(m, std::nullopt, false);
        break;
    }
    case Theorem::radial: {
        p.require_domain(Domain::singular);
        p.hypotheses(m);
        p.landesman_lazer(m, LLVariant::truncated_sine);
        p.radial(m);
        break;
    }
    }
}

/// Hypotheses, uniformity and LL checks without gating; returns the first failure code.
inline int run_verify(Pipeline& p)
{
    const auto m = p.model();
    int code = exit_ok;
    auto attempt = [&](auto fn) {
        try {
            fn();
        } catch (const StageFailure& f) {
            if (code == exit_ok) {
                code = f.code;
                p.report().failed_stage = f.stage;
                p.report().reason = f.reason;
            }
        }
    };
    const bool strong = p.config().theorem == Theorem::main2 || p.config().theorem == Theorem::singular_strong;
    attempt([&] { p.hypotheses(m); });
    if (strong) attempt([&] { p.uniformity(m); });
    attempt([&] { p.landesman_lazer(m, strong ? LLVariant::abs_sine : LLVariant::truncated_sine); });
    return code;
}

struct SweepRow {
    double value = 0.0;
    std::string status;
    int code = exit_ok;
    std::string ll = "n/a";
    Vec2 z{};
    double residual = inf, rotation = 0.0;
    int degree = 0;
};

/// `find` over the sweep grid, one independent config per value.
inline std::vector<SweepRow> run_sweep(const RunConfig& base)
{
    if (base.sweep.param.empty()) throw ConfigError("sweep needs a 'sweep' section");
    const bool in_params = base.params.count(base.sweep.param) > 0;
    if (!in_params && !base.constants.count(base.sweep.param))
        throw ConfigError("sweep parameter '" + base.sweep.param + "' is neither a family parameter nor a constant");
    return parallel_map(base.sweep.values.size(), [&](std::size_t i) {
        RunConfig c = base;
        const double v = base.sweep.values[i];
        (in_params ? c.params : c.constants)[base.sweep.param] = v;
        SweepRow row;
        row.value = v;
        Pipeline p(c, {});
        try {
            auto m = p.model();
            LLOptions lo;
            lo.tau_points = c.grids.tau_points;
            lo.panels = c.grids.ll_panels;
            lo.margin_floor = c.tol.ll_margin;
            lo.envelope.t_points = c.grids.envelope_t_points;
            const auto variant = c.theorem == Theorem::main2 || c.theorem == Theorem::singular_strong ? LLVariant::abs_sine
                                                                                                     : LLVariant::truncated_sine;
            row.ll = ll_verdict(m, variant, lo).pass() ? "pass" : "fail";
            auto o = p.homotopy_options();
            auto cert = homotopy_solve(m, o);
            row.z = cert.z;
            row.residual = cert.residual;
            row.rotation = cert.rotation;
            row.degree = cert.degree;
            const bool ok = cert.residual < c.tol.newton_tol && cert.rotation_integral() && cert.degree != 0;
            row.status = ok ? "pass" : "fail";
            row.code = ok ? exit_ok : exit_solve;
        } catch (const GateError& e) {
            row.status = "gate:" + e.gate();
            row.code = exit_hypothesis;
        } catch (const Error&) {
            row.status = "fail";
            row.code = exit_solve;
        }
        return row;
    });
}

inline void write_sweep_csv(std::ostream& os, const std::string& param, const std::vector<SweepRow>& rows)
{
    os << param << ",status,exit_code,ll,x0,y0,residual,rotation,degree\n";
    for (const auto& r : rows)
        os << fmt17(r.value) << ',' << r.status << ',' << r.code << ',' << r.ll << ',' << fmt17(r.z[0]) << ',' << fmt17(r.z[1]) << ','
           << fmt17(r.residual) << ',' << fmt17(r.rotation) << ',' << r.degree << '\n';
}

} // namespace resonance
