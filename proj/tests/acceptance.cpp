// Acceptance checks: one PASS/FAIL line per criterion, with measured values and runtimes.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <unistd.h>

#include "resonance/resonance.hpp"

using namespace resonance;
namespace fs = std::filesystem;

namespace {

const double T2pi = 2 * pi;

struct Outcome {
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what)
    {
        if (!cond) {
            ok = false;
            detail << " [failed: " << what << "]";
        }
    }
};

int failures = 0;

/// `carried` adds the time of shared work done by an earlier criterion.
void criterion(int id, const char* title, double limit_s, const std::function<void(Outcome&)>& body, double carried = 0.0)
{
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.ok = false;
        o.detail << " [exception: " << e.what() << "]";
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() + carried;
    if (s >= limit_s) o.require(false, "runtime " + fmt_shortest(s) + " s >= " + fmt_shortest(limit_s) + " s");
    if (!o.ok) ++failures;
    std::printf("%s %2d %s (%.2f s, limit %.0f s):%s\n", o.ok ? "PASS" : "FAIL", id, title, s, limit_s,
                o.detail.str().c_str());
    std::fflush(stdout);
}

std::string g(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

NonlinearityModel pw(const std::string& l, const std::string& r, int N = 2, Domain d = Domain::full_line)
{
    return NonlinearityModel::parse_piecewise("m", T2pi, d, N, l, r);
}

NonlinearityModel lap_model() { return pw("(1 + 0.5*sin(t)^2)*x^3", "(1.625 + 0.3*sin(t))*x"); }

NonlinearityModel singular_model()
{
    return NonlinearityModel::parse_model("s", T2pi, Domain::singular, 2, "-(1 + 0.5*sin(t)^2)/x^3 + 1.625*x + 0.1*cos(t)");
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

int main()
{
    std::printf("threads = %u\n", worker_count());

    criterion(1, "spectrum geometry", 1.0, [](Outcome& o) {
        double worst = 0.0;
        for (double T : {T2pi, 3.0})
            for (int j = 1; j <= 6; ++j) {
                const double m = eigenvalue(2 * j, T);
                worst = std::max(worst, std::abs(curve_residual({m, m, T}, j)));
            }
        o.detail << " max |residual(mu_2j, mu_2j, j)| = " << g(worst);
        o.require(worst <= 1e-12, "curve residual <= 1e-12");
        double rel = 0.0;
        for (double T : {T2pi, 3.0})
            for (int j = 1; j <= 6; ++j) {
                const double mj = eigenvalue(j, T);
                rel = std::max(rel, std::abs(curve_mu_at(1e10, j, T) - mj) / mj);
            }
        o.detail << "; max asymptote rel error at nu=1e10 = " << g(rel);
        o.require(rel < 1e-6, "asymptote rel error < 1e-6");
    });

    criterion(2, "integrator oracles", 1.0, [](Outcome& o) {
        auto h = HomotopyField::exact(NonlinearityModel::parse_model("h", T2pi, Domain::full_line, 1, "x"));
        IntegrateOptions io;
        io.rtol = 1e-12;
        io.atol = 1e-12;
        auto tr = integrate(h, {0.0, 1.0, 0.0}, T2pi, io);
        const Vec2 e = tr.z.back();
        const double ret = std::hypot(e[0] - 1.0, e[1]);
        o.detail << " harmonic 2pi-return error = " << g(ret);
        o.require(ret < 1e-8, "return error < 1e-8");
        auto f = HomotopyField::exact(NonlinearityModel::parse_model("f", T2pi, Domain::full_line, 1, "4*x - cos(t)"));
        auto r = newton_fixed_point(f, {0.0, 0.0});
        const double dist = std::hypot(r.z[0] - 1.0 / 3, r.z[1]);
        o.detail << "; Newton from (0,0): status " << to_string(r.status) << ", z = (" << g(r.z[0]) << ", "
                 << g(r.z[1]) << "), residual " << g(r.residual) << ", |z - (1/3,0)| = " << g(dist);
        o.require(r.converged() && r.residual < 1e-7 && dist < 1e-7, "Newton recovers (1/3, 0) with residual < 1e-7");
    });

    AprioriKit kit3;
    std::vector<LapCheck> laps;
    double lap_seconds = 0.0;

    criterion(3, "rotation counts and half-turn timing", 30.0, [&](Outcome& o) {
        const auto t0 = std::chrono::steady_clock::now();
        auto gf = HomotopyField::exact(lap_model());
        kit3 = build_kit(gf);
        const auto ys = logspace(1e2, 1e4, 20);
        laps = parallel_map(ys.size(), [&](std::size_t i) { return measure_lap(gf, kit3, T2pi * i / 20.0, ys[i]); });
        lap_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        int large = 0, band = 0;
        double rmin = inf, rmax = -inf;
        for (const auto& c : laps) {
            large += c.R0_large;
            band += c.rotation >= 2.0 - 1e-9 && c.rotation <= 3.0 + 1e-9;
            rmin = std::min(rmin, c.rotation);
            rmax = std::max(rmax, c.rotation);
        }
        o.detail << " R0 = " << g(kit3.R0) << ", R0-large laps " << large << "/20, rotations in [2,3] " << band
                 << "/20 (range " << g(rmin) << ".." << g(rmax) << ")";
        o.require(large == 20 && band == 20, "20 R0-large laps with 2..3 rotations");
        auto c = measure_lap(HomotopyField::exact(lap_model()), kit3, 0.0, 1e3);
        const double e = c.eps;
        o.detail << "; amplitude 1e3: t4-t2 = " << g(c.right_half) << " in (T/3-eps, T/2+eps), t8-t4 = "
                 << g(c.left_half) << ", eps = " << g(e) << " = " << g(e / T2pi) << " T";
        o.require(c.right_half > T2pi / 3 - e - 1e-12 && c.right_half < T2pi / 2 + e + 1e-12 &&
                      c.left_half <= e + 1e-12,
                  "half-turn timing inside the band");
        o.require(e <= 0.05 * T2pi, "eps <= 0.05 T");
    });

    criterion(4, "energy and guiding maps", 30.0, [&](Outcome& o) {
        int t_ok = 0, l_ok = 0, m_ok = 0;
        for (const auto& c : laps) {
            t_ok += c.T_ok;
            l_ok += c.L_ok;
            m_ok += c.M_ok;
        }
        o.detail << " y7 < T(y5) " << t_ok << "/20, y8 <= L(y2) " << l_ok << "/20, x6 > M(x3) " << m_ok << "/20";
        o.require(t_ok == 20 && l_ok == 20 && m_ok == 20, "all 20 laps satisfy the three bounds");
        auto kit = build_kit(HomotopyField::exact(pw("x^3", "1.625*x")));
        double dev = 0.0;
        for (double v : logspace(2.0, 1e6, 50)) dev = std::max(dev, std::abs(map_T(kit, v) - v) / v);
        o.detail << "; t-independent max |T(v)/v - 1| = " << g(dev);
        o.require(dev <= 1e-10, "T is the identity to 1e-10");
    }, lap_seconds);

    criterion(5, "Landesman-Lazer closed forms", 5.0, [](Outcome& o) {
        auto one = [](double) { return 1.0; };
        double worst = 0.0;
        for (double tau : periodic_grid(T2pi, 256)) {
            worst = std::max(worst, std::abs(ll_integral(one, T2pi, 1, LLVariant::truncated_sine, tau) - 4.0));
            worst = std::max(worst, std::abs(ll_integral(one, T2pi, 2, LLVariant::truncated_sine, tau) - 2.0));
        }
        o.detail << " max |truncated - {4, 2}| = " << g(worst);
        o.require(worst <= 1e-8, "truncated integrals 4.0 and 2.0 to 1e-8");
        auto res = [](double t) { return 1.0 + 0.5 * std::cos(t) + 0.3 * std::sin(3 * t) - 0.2 * std::cos(5 * t); };
        double dec = 0.0;
        for (int j : {1, 2, 3}) {
            for (double tau : periodic_grid(T2pi, 256)) {
                double sum = 0.0;
                for (int r = 0; r < j; ++r) sum += ll_integral(res, T2pi, j, LLVariant::truncated_sine, tau + r * T2pi / j);
                dec = std::max(dec, std::abs(ll_integral(res, T2pi, j, LLVariant::abs_sine, tau) - sum));
            }
        }
        o.detail << "; decomposition identity max error = " << g(dec);
        o.require(dec <= 1e-8, "abs_sine = sum of translated truncated to 1e-8");
    });

    criterion(6, "uniformity discrimination", 10.0, [](Outcome& o) {
        auto table = [&](const char* label, const NonlinearityModel& m, Direction d, Verdict expect) {
            auto r = check_H(m, d);
            o.detail << ' ' << label << ": " << to_string(r.verdict) << " (deviation at largest X over zeta";
            for (std::size_t z = 0; z < r.zetas.size(); ++z) o.detail << ' ' << g(r.zetas[z]) << ':' << g(r.deviation[z]);
            o.detail << ")";
            o.require(r.verdict == expect, std::string(label) + " verdict");
        };
        table("(1+sin^2 t)x^5+x^3", NonlinearityModel::parse_model("a", T2pi, Domain::full_line, 2, "(1+sin(t)^2)*x^5 + x^3"),
              Direction::minus_infinity, Verdict::pass);
        table("x^3+sin^2(t)x^5", NonlinearityModel::parse_model("b", T2pi, Domain::full_line, 2, "x^3 + sin(t)^2*x^5"),
              Direction::minus_infinity, Verdict::fail);
        table("-(1+sin^2 t)x^-5-x^-3", pw("-(1+sin(t)^2)*x^-5 - x^-3", "1.625*(x - 1) - (1+sin(t)^2) - 1", 2, Domain::singular),
              Direction::zero_plus, Verdict::pass);
        table("-x^-3-sin^2(t)x^-5", pw("-x^-3 - sin(t)^2*x^-5", "1.625*(x - 1) - sin(t)^2 - 1", 2, Domain::singular),
              Direction::zero_plus, Verdict::fail);
    });

    criterion(7, "end-to-end existence", 120.0, [](Outcome& o) {
        auto m = pw("x^3 + 1.325*x + 0.1*cos(t)",
                    "x + 0.625*x*(1 + sin(log(1 + x))) - 0.3*sin(log(1 + x)) + 0.1*cos(t)");
        auto ll = ll_verdict(m, LLVariant::truncated_sine);
        auto c = homotopy_solve(m);
        o.detail << " LL lower " << to_string(ll.lower.verdict) << " / upper " << to_string(ll.upper.verdict)
                 << "; z = (" << g(c.z[0]) << ", " << g(c.z[1]) << "), residual " << g(c.residual) << ", rotation "
                 << g(c.rotation) << ", degree " << c.degree << " on radius " << g(c.radius) << " (" << c.radius_source
                 << "), lambda reached " << (c.path.empty() ? 0.0 : c.path.back().lambda);
        o.require(ll.pass(), "LL conditions hold");
        o.require(c.residual < 1e-8, "residual < 1e-8");
        o.require(c.rotation_integral(), "integer rotation count");
        o.require(c.degree != 0, "nonzero boundary degree");
        o.require(!c.path.empty() && c.path.back().lambda == 1.0, "certificate at lambda = 1");
    });

    criterion(8, "singular mode", 120.0, [](Outcome& o) {
        auto m = singular_model();
        auto c = homotopy_solve(m);
        double min_orbit = inf;
        {
            auto tr = integrate(HomotopyField::exact(m), {0.0, c.z[0], c.z[1]}, T2pi);
            for (const auto& z : tr.z) min_orbit = std::min(min_orbit, z[0]);
        }
        o.detail << " z = (" << g(c.z[0]) << ", " << g(c.z[1]) << "), residual " << g(c.residual) << ", min x on orbit "
                 << g(min_orbit) << ", min x along homotopy " << g(c.min_x_path);
        o.require(c.residual < 1e-8 && min_orbit > 0, "positive T-periodic solution");
        o.require(c.min_x_path > 0, "min x bounded below across the homotopy");
        auto probes = singular_probes(HomotopyField::exact(m), T2pi, 2, {1e2, 1e3, 1e4});
        int ok = 0;
        double rmin = inf, rmax = -inf, nmin = inf;
        for (const auto& p : probes) {
            ok += p.laps_ok;
            rmin = std::min(rmin, p.rotation);
            rmax = std::max(rmax, p.rotation);
            nmin = std::min(nmin, p.min_N);
        }
        o.detail << "; probes about (1,0): " << ok << "/" << probes.size() << " with 2..3 laps (range " << g(rmin) << ".."
                 << g(rmax) << "), min N = " << g(nmin);
        o.require(ok == static_cast<int>(probes.size()), "all large probes make N or N+1 laps");
    });

    criterion(9, "radial application", 300.0, [](Outcome& o) {
        RadialOptions ro;
        ro.k_max = 8;
        auto r = find_rotating(singular_model(), 1, ro);
        o.detail << " k_nu = " << r.k_nu;
        o.require(r.k_nu >= 1, "some rotating solution exists");
        if (r.k_nu < 1) return;
        double prev = inf, drift = 0.0, back = 0.0, L0 = 0.0, L3 = 0.0;
        bool all = true, dec = true;
        o.detail << ", L =";
        for (int k = r.k_nu; k <= r.k_nu + 3; ++k) {
            if (k > ro.k_max) {
                all = false;
                break;
            }
            const auto& c = r.cells[static_cast<std::size_t>(k - 1)];
            if (!c.found) {
                all = false;
                o.detail << " (k=" << k << " missing: " << c.failure << ")";
                continue;
            }
            o.detail << ' ' << g(c.L);
            dec = dec && c.L < prev;
            prev = c.L;
            drift = std::max(drift, c.momentum_drift);
            back = std::max(back, c.backsub_residual);
            if (k == r.k_nu) L0 = c.L;
            if (k == r.k_nu + 3) L3 = c.L;
        }
        o.detail << "; L(k_nu+3)/L(k_nu) = " << g(L0 > 0 ? L3 / L0 : inf) << ", back-substitution " << g(back)
                 << ", momentum drift " << g(drift);
        o.require(all, "solutions for every k in [k_nu, k_nu+3]");
        o.require(dec, "L strictly decreasing");
        o.require(L3 < 0.5 * L0, "L(k_nu+3) < 0.5 L(k_nu)");
        o.require(back < 1e-6, "back-substitution residual < 1e-6");
        o.require(drift < 1e-8, "momentum drift < 1e-8");
    });

    criterion(10, "determinism", 600.0, [](Outcome& o) {
        const fs::path base = fs::temp_directory_path() / ("resonance_acceptance_" + std::to_string(::getpid()));
        fs::remove_all(base);
        const fs::path dir = RESONANCE_CONFIG_DIR;
        struct Job {
            const char* config;
            std::function<void(Pipeline&)> run;
        };
        const std::vector<Job> jobs = {
            {"rotation_laps.json",
             [](Pipeline& p) {
                 auto m = p.model();
                 p.hypotheses(m);
                 p.apriori(m);
             }},
            {"double_resonance_expr.json", [](Pipeline& p) { run_theorem(p); }},
            {"radial.json", [](Pipeline& p) { run_theorem(p); }},
        };
        int files = 0, same = 0;
        for (const auto& j : jobs) {
            const auto cfg = load_config((dir / j.config).string());
            std::array<fs::path, 2> outs = {base / (std::string(j.config) + ".a"), base / (std::string(j.config) + ".b")};
            for (const auto& out : outs) {
                Pipeline p(cfg, out);
                j.run(p);
            }
            for (const auto& e : fs::directory_iterator(outs[0])) {
                if (e.path().extension() != ".csv") continue;
                ++files;
                if (slurp(e.path()) == slurp(outs[1] / e.path().filename())) ++same;
                else o.detail << " [differs: " << j.config << "/" << e.path().filename().string() << "]";
            }
        }
        fs::remove_all(base);
        o.detail << " " << same << "/" << files << " CSV files byte-identical across repeated runs";
        o.require(files > 0 && same == files, "byte-identical CSVs");
    });

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
