// resonance: hypothesis checks, a priori estimates and periodic-solution search
// for x'' + f(t, x) = 0.
//
// Exit codes: 0 ok, 1 internal error, 2 config error, 3 hypothesis (A)/(A0)/(Ainf),
// 4 uniformity (H), 5 Landesman-Lazer, 6 a priori stage, 7 solve, 8 radial.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "resonance/pipeline.hpp"

using namespace resonance;

namespace {

struct Args {
    std::string config;
    std::string out;
    std::string theorem;
    std::vector<std::string> overrides;
    double T = 2 * pi;
    int jmax = 4;
    int points = 64;
};

RunConfig configure(const Args& a)
{
    if (a.config.empty()) throw ConfigError("--config is required");
    RunConfig c = load_config(a.config, a.overrides);
    if (!a.theorem.empty()) c.theorem = parse_theorem(a.theorem);
    if (!a.out.empty()) c.output = a.out;
    return c;
}

int finish(Pipeline& p, int code, const std::string& stage = {}, const std::string& reason = {})
{
    auto& r = p.report();
    r.exit_code = code;
    if (!stage.empty()) {
        r.failed_stage = stage;
        r.reason = reason;
    }
    std::filesystem::create_directories(p.out());
    std::ofstream os(p.out() / "report.txt", std::ios::binary);
    write_report(os, r, p.config().tol, p.config().grids);
    std::cout << "status = " << (code == exit_ok ? "ok" : "failed") << " (exit " << code << ")";
    if (code != exit_ok) std::cout << " at " << r.failed_stage << ": " << r.reason;
    std::cout << "\nreport = " << (p.out() / "report.txt").string() << '\n';
    return code;
}

/// Runs `body` inside a pipeline and maps failures to exit codes.
template <class Body>
int guarded(const std::string& command, const RunConfig& cfg, Body body)
{
    Pipeline p(cfg, cfg.output);
    p.report().command = command;
    try {
        const int code = body(p);
        return finish(p, code, p.report().failed_stage, p.report().reason);
    } catch (const StageFailure& f) {
        return finish(p, f.code, f.stage, f.reason);
    } catch (const ConfigError& e) {
        return finish(p, exit_config, "config", e.what());
    } catch (const std::exception& e) {
        return finish(p, exit_internal, "internal", e.what());
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Periodic solutions of x'' + f(t,x) = 0 at double resonance"};
    app.require_subcommand(1);
    Args a;

    auto common = [&](CLI::App* s) {
        s->add_option("--config", a.config, "JSON run configuration");
        s->add_option("--out", a.out, "output directory (overrides the config)");
        s->add_option("--theorem", a.theorem, "main|main2|singular-weak|singular-strong|radial")
            ->check(CLI::IsMember({"main", "main2", "singular-weak", "singular-strong", "radial"}));
        s->add_option("--tol-override", a.overrides, "K=V override of a tolerance or grid size");
    };

    auto* spec = app.add_subcommand("spectrum", "tabulate the Dancer-Fucik curves");
    spec->add_option("--T", a.T, "period")->check(CLI::PositiveNumber);
    spec->add_option("--jmax", a.jmax, "number of curves")->check(CLI::PositiveNumber);
    spec->add_option("--points", a.points, "samples per curve")->check(CLI::Range(2, 1000000));
    spec->add_option("--out", a.out, "output directory");
    spec->add_option("--config", a.config, "optional JSON configuration supplying T and spectrum");

    auto* verify = app.add_subcommand("verify", "check the hypotheses and Landesman-Lazer conditions");
    auto* apr = app.add_subcommand("apriori", "build the a priori kit and measure laps");
    auto* find = app.add_subcommand("find", "homotopy search for a certified periodic solution");
    auto* rad = app.add_subcommand("radial", "rotating solutions of the radial system");
    auto* sweep = app.add_subcommand("sweep", "map find over a parameter grid");
    auto* run = app.add_subcommand("run", "full pipeline of the chosen theorem");
    for (auto* s : {verify, apr, find, rad, sweep, run}) common(s);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    RunConfig cfg;
    try {
        if (spec->parsed() && a.config.empty()) {
            cfg.T = a.T;
            cfg.spectrum.jmax = a.jmax;
            cfg.spectrum.points = a.points;
            cfg.source = json{{"T", a.T}, {"spectrum", {{"jmax", a.jmax}, {"points", a.points}}}};
            cfg.output = a.out.empty() ? "out" : a.out;
        } else {
            cfg = configure(a);
        }
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    }

    if (spec->parsed())
        return guarded("spectrum", cfg, [&](Pipeline& p) {
            p.spectrum(p.config().T, p.config().spectrum.jmax, p.config().spectrum.points);
            return int(exit_ok);
        });
    if (verify->parsed()) return guarded("verify", cfg, [&](Pipeline& p) { return run_verify(p); });
    if (apr->parsed())
        return guarded("apriori", cfg, [&](Pipeline& p) {
            auto m = p.model();
            p.hypotheses(m);
            p.apriori(m);
            return int(exit_ok);
        });
    if (find->parsed())
        return guarded("find", cfg, [&](Pipeline& p) {
            auto m = p.model();
            p.hypotheses(m);
            p.solve(m, std::nullopt, false);
            return int(exit_ok);
        });
    if (rad->parsed())
        return guarded("radial", cfg, [&](Pipeline& p) {
            p.require_domain(Domain::singular);
            auto m = p.model();
            p.hypotheses(m);
            p.radial(m);
            return int(exit_ok);
        });
    if (sweep->parsed())
        return guarded("sweep", cfg, [&](Pipeline& p) {
            std::vector<SweepRow> rows;
            p.stage("sweep", [&](StageRecord& s) {
                rows = run_sweep(p.config());
                std::size_t pass = 0;
                for (const auto& r : rows) pass += r.code == exit_ok;
                p.put(s, "param", p.config().sweep.param);
                p.put(s, "points", rows.size());
                p.put(s, "passed", pass);
                p.artifact("atlas.csv", [&](std::ostream& os) { write_sweep_csv(os, p.config().sweep.param, rows); });
            });
            return int(exit_ok);
        });
    return guarded("run", cfg, [&](Pipeline& p) {
        run_theorem(p);
        return int(exit_ok);
    });
}
