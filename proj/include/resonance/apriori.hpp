#pragma once

// Envelopes, energy maps and a priori radii for one-sided superlinear problems.

#include "resonance/integrate.hpp"

namespace resonance {

struct TableOptions {
    double x_max = 1e8;          // full line: table covers [-x_max, d]
    double x_min = 1e-8;         // singular: table covers [x_min, delta]
    std::size_t x_points = 4096; // log spaced
    std::size_t t_points = 64;
    int polish_iters = 40;
};

/// f1 = min_t f, f2 = max_t f and their primitives from the base point, tabulated on x < base.
struct EnvelopePair {
    Domain regime = Domain::full_line;
    double T = 2 * pi;
    double base = 0.0; // d (full line) or delta (singular)
    std::vector<double> x; // ascending, x.back() == base
    std::vector<double> f1, f2, F1, F2;

    double d() const noexcept { return base; }
    double x_lo() const { return x.front(); }
    double x_hi() const { return x.back(); }

    double f(int i, double s) const { return interp(i == 1 ? f1 : f2, s); }
    double F(int i, double s) const { return interp(i == 1 ? F1 : F2, s); }

    /// The x < base with F2(x) = level, by monotone bisection on the table.
    double F2_inverse(double level) const
    {
        if (!(level >= 0)) throw InvalidArgument("F2 inverse needs a non-negative level");
        if (level > F2.front()) throw InvalidArgument("F2 inverse: level " + fmt17(level) + " beyond the table");
        // F2 decreases with increasing x.
        std::size_t lo = 0, hi = x.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (F2[mid] >= level) lo = mid;
            else hi = mid;
        }
        const double a = F2[lo], b = F2[hi];
        if (a == b) return x[lo];
        const double w = (a - level) / (a - b);
        return x[lo] + w * (x[hi] - x[lo]);
    }

private:
    double interp(const std::vector<double>& v, double s) const
    {
        if (!(s >= x.front() && s <= x.back()))
            throw InvalidArgument("x = " + fmt17(s) + " outside the envelope table [" + fmt17(x.front()) + ", " +
                                  fmt17(x.back()) + "]");
        auto it = std::upper_bound(x.begin(), x.end(), s);
        if (it == x.end()) return v.back();
        const std::size_t k = static_cast<std::size_t>(it - x.begin());
        if (k == 0) return v.front();
        const double w = (s - x[k - 1]) / (x[k] - x[k - 1]);
        return v[k - 1] + w * (v[k] - v[k - 1]);
    }
};

namespace detail {

/// min and max over t of g(t, x) on a periodic grid, polished by golden search.
template <class G>
std::pair<double, double> t_extrema(const G& g, double T, double x, const std::vector<double>& ts, int iters)
{
    std::size_t imin = 0, imax = 0;
    double vmin = inf, vmax = -inf;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double v = g(ts[i], x);
        if (v < vmin) {
            vmin = v;
            imin = i;
        }
        if (v > vmax) {
            vmax = v;
            imax = i;
        }
    }
    if (vmin == vmax || iters <= 0) return {vmin, vmax};
    const double h = T / static_cast<double>(ts.size());
    auto lo = golden_minimize([&](double t) { return g(t, x); }, ts[imin] - h, ts[imin] + h, iters);
    auto hi = golden_minimize([&](double t) { return -g(t, x); }, ts[imax] - h, ts[imax] + h, iters);
    return {std::min(vmin, lo.second), std::max(vmax, -hi.second)};
}

} // namespace detail

/// Largest d on the grid -0.5 * 2^(k/4) with max_t g(t, x) < 0 for every sampled x < d.
template <class G>
double detect_d(const G& g, double T, const TableOptions& o = {})
{
    const auto ts = periodic_grid(T, o.t_points);
    for (int k = 0;; ++k) {
        const double d = -0.5 * std::pow(2.0, k / 4.0);
        if (-d * 10 > o.x_max) break;
        const auto xs = logspace(-d, o.x_max, 256);
        bool ok = true;
        for (double ax : xs) {
            for (double t : ts) {
                if (!(g(t, -ax) < 0)) {
                    ok = false;
                    break;
                }
            }
            if (!ok) break;
        }
        if (ok) return d;
    }
    throw Error("no valid d found: max_t f(t, x) < 0 fails for x < d on the whole scan range");
}

/// Tabulates the envelopes of g on x < base with cumulative Gauss-Legendre primitives.
template <class G>
EnvelopePair build_envelopes(const G& g, double T, Domain regime, double base, const TableOptions& o = {})
{
    if (o.x_points < 8) throw InvalidArgument("envelope table needs at least 8 points");
    EnvelopePair e;
    e.regime = regime;
    e.T = T;
    e.base = base;
    if (regime == Domain::full_line) {
        if (!(base < 0)) throw InvalidArgument("full-line base point d must be negative");
        if (!(-base < o.x_max)) throw InvalidArgument("table range must exceed |d|");
        auto ax = logspace(-base, o.x_max, o.x_points);
        e.x.assign(ax.rbegin(), ax.rend());
        for (double& v : e.x) v = -v;
    } else {
        if (!(base > o.x_min)) throw InvalidArgument("singular base point must exceed the table floor");
        e.x = logspace(o.x_min, base, o.x_points);
    }
    const std::size_t n = e.x.size();
    static const double gl[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
    static const double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    // Node layout: table point k at 4k, then the three interior nodes of [x_k, x_k+1].
    const std::size_t m = 4 * (n - 1) + 1;
    auto node = [&](std::size_t i) {
        const std::size_t k = i / 4, r = i % 4;
        if (r == 0) return e.x[k];
        const double a = e.x[k], b = e.x[k + 1];
        return 0.5 * (a + b) + 0.5 * (b - a) * gl[r - 1];
    };
    const auto ts = periodic_grid(T, o.t_points);
    auto ext = parallel_map(m, [&](std::size_t i) { return detail::t_extrema(g, T, node(i), ts, o.polish_iters); });
    e.f1.resize(n);
    e.f2.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        e.f1[k] = ext[4 * k].first;
        e.f2[k] = ext[4 * k].second;
    }
    e.F1.assign(n, 0.0);
    e.F2.assign(n, 0.0);
    for (std::size_t k = n - 1; k-- > 0;) {
        const double h = 0.5 * (e.x[k + 1] - e.x[k]);
        double i1 = 0.0, i2 = 0.0;
        for (int r = 0; r < 3; ++r) {
            i1 += gw[r] * ext[4 * k + 1 + r].first;
            i2 += gw[r] * ext[4 * k + 1 + r].second;
        }
        e.F1[k] = e.F1[k + 1] - h * i1;
        e.F2[k] = e.F2[k + 1] - h * i2;
    }
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (!(e.f1[k] <= e.f2[k])) throw Error("envelope order violated at x = " + fmt17(e.x[k]));
        if (!(e.f2[k] < 0)) throw Error("max_t f(t, x) >= 0 at x = " + fmt17(e.x[k]) + " below the base point");
        if (!(e.F1[k] > e.F1[k + 1] && e.F2[k] > e.F2[k + 1]))
            throw Error("non-monotone primitive table at x = " + fmt17(e.x[k]) + " (hypotheses violated)");
        if (!(e.F1[k] >= e.F2[k] && e.F2[k] > 0)) throw Error("F1 >= F2 > 0 fails at x = " + fmt17(e.x[k]));
        if (!std::isfinite(e.F1[k])) throw Error("primitive overflow at x = " + fmt17(e.x[k]));
    }
    return e;
}

inline EnvelopePair build_envelopes(const HomotopyField& field, const TableOptions& o = {})
{
    if (field.regime() == Domain::full_line)
        return build_envelopes(field, field.T(), Domain::full_line, detect_d(field, field.T(), o), o);
    return build_envelopes(field, field.T(), Domain::singular, 1.0, o);
}

struct KitOptions {
    TableOptions table;
    double R_min = 1.0;
    double R_growth = 1.2;
    int R_candidates = 120;
    int probes = 32;
    double safety = 1.1;
    double rtol = 1e-10, atol = 1e-12;
};

/// One candidate radius of the R0 scan.
struct R0Probe {
    double R = 0.0;
    double omega0 = 0.0, ell0 = 0.0, kappa = 0.0, a = 0.0;
    bool rotates = false, inout = false, en1 = false;
    bool ok() const { return rotates && inout && en1; }
};

struct AprioriKit {
    EnvelopePair env;
    int N = 1;
    double T = 2 * pi;
    double kappa = 0.0, omega0 = 0.0, ell0 = 0.0;
    double a = 0.0; // kappa * asin(d / R0), negative
    double R0 = 0.0;
    double yhat = 0.0;
    double calR = 0.0; // L^(N+2)(yhat)
    bool abs_a = false;
    std::vector<R0Probe> scan;
    std::string binding; // constraint that failed last before R0

    double d() const noexcept { return env.base; }
    double a_used() const noexcept { return abs_a ? std::abs(a) : a; }
    AprioriKit with_abs_a(bool on) const
    {
        AprioriKit k = *this;
        k.abs_a = on;
        k.finish();
        return k;
    }

    void finish();
};

/// T(v) = sqrt(2 F1(F2^-1(v^2 / 2))).
inline double map_T(const EnvelopePair& env, double v)
{
    if (!(v >= 0)) throw InvalidArgument("map T needs v >= 0");
    const double x = env.F2_inverse(0.5 * v * v);
    return std::sqrt(2 * env.F(1, x));
}

inline double map_T(const AprioriKit& kit, double v) { return map_T(kit.env, v); }

/// L(v) = e^a sqrt(T^2(sqrt(e^{2(kappa pi + a)} v^2 - d^2)) + d^2).
inline double map_L(const AprioriKit& kit, double v)
{
    const double a = kit.a_used(), d = kit.d();
    const double inner = std::exp(2 * (kit.kappa * pi + a)) * v * v - d * d;
    if (!(inner >= 0)) throw InvalidArgument("map L: v = " + fmt17(v) + " below its domain");
    const double tv = map_T(kit.env, std::sqrt(inner));
    return std::exp(a) * std::sqrt(tv * tv + d * d);
}

/// M(r) = F2^-1((e^{kappa pi + 2a} r^2 - d^2) / 2).
inline double map_M(const AprioriKit& kit, double r)
{
    const double a = kit.a_used(), d = kit.d();
    const double level = 0.5 * (std::exp(kit.kappa * pi + 2 * a) * r * r - d * d);
    if (!(level >= 0)) throw InvalidArgument("map M: r = " + fmt17(r) + " below its domain");
    return kit.env.F2_inverse(level);
}

inline void AprioriKit::finish()
{
    const double au = a_used();
    yhat = std::exp(au) * std::sqrt(2 * env.F(1, -R0) + d() * d());
    double v = yhat;
    for (int i = 0; i < N + 2; ++i) v = map_L(*this, v);
    calR = v;
}

namespace detail {

struct RateExtremes {
    double omega_min = inf;
    double ratio_max = 0.0;
    bool clockwise = true;
};

/// Samples -theta' and |rho'| / rho over x > d along probe orbits on the circle of radius r.
template <class G>
RateExtremes probe_rates(const G& g, double T, double d, double r, int probes, const KitOptions& o)
{
    auto parts = parallel_map(static_cast<std::size_t>(probes), [&](std::size_t i) {
        RateExtremes ex;
        const double phi = 2 * pi * static_cast<double>(i) / probes;
        const double t0 = T * static_cast<double>(i) / probes;
        IntegrateOptions io;
        io.rtol = o.rtol;
        io.atol = o.atol;
        io.keep_samples = false;
        Trajectory tr = integrate_planar(g, Domain::full_line, {t0, r * std::cos(phi), r * std::sin(phi)}, t0 + T, io);
        if (tr.center_hit) ex.clockwise = false;
        for (const auto& seg : tr.dense) {
            for (int q = 0; q <= 3; ++q) {
                const double s = seg.t0 + seg.h * q / 4.0;
                const Vec2 z = seg.eval(s);
                const double gv = g(s, z[0]);
                const auto pr = polar_rates(z[0], z[1], gv);
                if (!(pr.omega > 0)) ex.clockwise = false;
                if (z[0] > d) {
                    ex.omega_min = std::min(ex.omega_min, pr.omega);
                    ex.ratio_max = std::max(ex.ratio_max, std::abs(pr.rho_dot) / std::hypot(z[0], z[1]));
                }
            }
        }
        if (!(tr.theta0 - tr.theta_end > 0)) ex.clockwise = false;
        return ex;
    });
    RateExtremes all;
    for (const auto& p : parts) {
        all.omega_min = std::min(all.omega_min, p.omega_min);
        all.ratio_max = std::max(all.ratio_max, p.ratio_max);
        all.clockwise = all.clockwise && p.clockwise;
    }
    return all;
}

/// 2F(-r) - r^2 > 2F(x) - x^2 for every tabulated r >= R and x in (-r, d).
inline bool inout_holds(const EnvelopePair& e, int i, double R)
{
    const auto& F = i == 1 ? e.F1 : e.F2;
    double running = -e.base * e.base; // limit at x = d
    for (std::size_t k = e.x.size() - 1; k-- > 0;) {
        const double G = 2 * F[k] - e.x[k] * e.x[k];
        if (-e.x[k] >= R && !(G > running)) return false;
        running = std::max(running, G);
    }
    return true;
}

} // namespace detail

/// Smallest candidate radius with clockwise probes, (inout) for both envelopes and (en1).
template <class G>
AprioriKit probe_R0(const G& g, double T, int N, const EnvelopePair& env, const KitOptions& o = {})
{
    if (env.regime != Domain::full_line) throw InvalidArgument("probe_R0 needs a full-line envelope table");
    AprioriKit kit;
    kit.env = env;
    kit.N = N;
    kit.T = T;
    const double d = env.base;
    const double R_first = std::max(2 * std::abs(d), o.R_min);
    for (int k = 0; k < o.R_candidates; ++k) {
        R0Probe p;
        p.R = R_first * std::pow(o.R_growth, k);
        if (p.R > -env.x_lo()) break;
        if (!(std::abs(d) < p.R)) continue;
        const auto ex = detail::probe_rates(g, T, d, 2 * p.R, o.probes, o);
        p.omega0 = ex.omega_min / o.safety;
        p.ell0 = ex.ratio_max * o.safety;
        p.rotates = ex.clockwise && p.omega0 > 0 && std::isfinite(p.omega0);
        p.kappa = p.rotates ? p.ell0 / p.omega0 : inf;
        p.a = p.kappa * std::asin(d / p.R);
        p.inout = detail::inout_holds(env, 1, p.R) && detail::inout_holds(env, 2, p.R);
        p.en1 = p.rotates && 2 * env.F(2, -p.R) > p.R * p.R * std::exp(2 * (p.kappa * pi + p.a));
        kit.scan.push_back(p);
        if (p.ok()) {
            kit.R0 = p.R;
            kit.kappa = p.kappa;
            kit.omega0 = p.omega0;
            kit.ell0 = p.ell0;
            kit.a = p.a;
            kit.binding = "none";
            if (kit.scan.size() >= 2) {
                const auto& q = kit.scan[kit.scan.size() - 2];
                kit.binding = !q.rotates ? "rotation" : !q.inout ? "inout" : !q.en1 ? "en1" : "none";
            }
            kit.finish();
            return kit;
        }
    }
    std::string last = kit.scan.empty() ? "table"
                       : !kit.scan.back().rotates ? "rotation"
                       : !kit.scan.back().inout   ? "inout"
                                                  : "en1";
    throw Error("R0 constraints unsatisfiable in the scan range (last failing: " + last + ")");
}

inline AprioriKit build_kit(const HomotopyField& field, const KitOptions& o = {})
{
    if (field.regime() != Domain::full_line) throw InvalidArgument("a priori kit is built for full-line fields");
    EnvelopePair env = build_envelopes(field, o.table);
    return probe_R0(field, field.T(), field.model().N(), env, o);
}

// ---------------------------------------------------------------------------
// Lap-level checks of the bounds.

struct LapCheck {
    LapInstants lap;
    double min_rho = 0.0;
    bool R0_large = false;
    double rotation = 0.0; // laps over [t0, t0 + T]
    double T_y5 = 0.0, L_y2 = 0.0, M_x3 = 0.0;
    double L_y2_abs = 0.0, M_x3_abs = 0.0;
    bool T_ok = false, L_ok = false, M_ok = false;
    bool L_ok_abs = false, M_ok_abs = false;
    bool r1_ok = false;
    bool energy_ok = false;
    double right_half = 0.0; // t4 - t2
    double left_half = 0.0;  // t8 - t4
    double eps = 0.0;        // smallest eps with the half-turn timing inside the band

    bool bounds_ok() const { return T_ok && L_ok && M_ok; }
};

/// Integrates from (t0, d, y0) and checks the first lap against the kit's maps.
template <class G>
LapCheck measure_lap(const G& g, const AprioriKit& kit, double t0, double y0, const IntegrateOptions& base = {})
{
    if (!(y0 > 0)) throw InvalidArgument("lap start needs y0 > 0");
    const double d = kit.d(), T = kit.T;
    IntegrateOptions io = base;
    io.d = d;
    io.stop_times = {t0 + T};
    int seen = 0;
    io.stop_on = [&seen, T, t0](const Event& e) {
        if (e.kind == EventKind::cross_x_eq_0 && e.y > 0) ++seen;
        return seen >= 2 && e.t >= t0 + T;
    };
    Trajectory tr = integrate_planar(g, Domain::full_line, {t0, d, y0}, t0 + 4 * T, io);
    LapCheck c;
    c.lap = crossing_times(tr, d);
    const auto& L = c.lap;

    c.min_rho = inf;
    double theta_T = tr.theta_end;
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
        if (tr.t[i] <= t0 + T) c.min_rho = std::min(c.min_rho, tr.rho[i]);
        if (tr.t[i] == t0 + T) theta_T = tr.theta[i];
    }
    c.R0_large = c.min_rho > kit.R0;
    c.rotation = (tr.theta0 - theta_T) / (2 * pi);

    const double y2 = L.z[1][1], x3 = L.z[2][0], y4 = L.z[3][1], y5 = L.z[4][1];
    const double x6 = L.z[5][0], y7 = L.z[6][1], y8 = L.z[7][1];
    c.T_y5 = map_T(kit, std::abs(y5));
    c.T_ok = y7 < c.T_y5;
    auto verbatim = kit.with_abs_a(false);
    auto absolute = kit.with_abs_a(true);
    c.L_y2 = map_L(verbatim, y2);
    c.M_x3 = map_M(verbatim, x3);
    c.L_y2_abs = map_L(absolute, y2);
    c.M_x3_abs = map_M(absolute, x3);
    c.L_ok = y8 <= c.L_y2;
    c.M_ok = x6 > c.M_x3;
    c.L_ok_abs = y8 <= c.L_y2_abs;
    c.M_ok_abs = x6 > c.M_x3_abs;

    const double s = std::exp(kit.kappa * pi / 2);
    c.r1_ok = x3 / s <= std::abs(y2) && std::abs(y2) <= x3 * s && x3 / s <= std::abs(y4) && std::abs(y4) <= x3 * s;

    // H1 = y^2/2 + F1 falls and H2 rises while y > 0 in x < d; reversed for y < 0.
    c.energy_ok = true;
    const auto ts_env = periodic_grid(T, 64);
    for (const auto& seg : tr.dense) {
        if (seg.t0 < L.t[0] || seg.t0 > L.t[7]) continue;
        for (int q = 0; q < 4; ++q) {
            const double ts = seg.t0 + seg.h * q / 4.0;
            const Vec2 z = seg.eval(ts);
            if (!(z[0] < d) || z[0] < kit.env.x_lo()) continue;
            const double gv = g(ts, z[0]);
            const auto [f1, f2] = detail::t_extrema(g, T, z[0], ts_env, 40);
            const double dH1 = z[1] * (f1 - gv);
            const double dH2 = z[1] * (f2 - gv);
            const double tol = 1e-9 * std::abs(z[1] * gv);
            if (z[1] > 0 && (dH1 > tol || dH2 < -tol)) c.energy_ok = false;
            if (z[1] < 0 && (dH1 < -tol || dH2 > tol)) c.energy_ok = false;
        }
    }

    const int N = kit.N;
    c.right_half = L.t[3] - L.t[1];
    c.left_half = L.t[7] - L.t[3];
    c.eps = std::max({0.0, T / (N + 1) - c.right_half, c.right_half - T / N, c.left_half});
    return c;
}

// ---------------------------------------------------------------------------
// Elasticity and the normalized minimum.

struct ElasticReport {
    bool asserted = false;
    std::string reason;
    std::vector<double> start_norm;
    std::vector<double> min_rho;
    bool all_large = false;
};

/// Orbits started with norm 1.05 R(R0) stay R0-large over one period.
template <class G>
ElasticReport check_elastic(const G& g, const AprioriKit& kit, int n_orbits, double factor = 1.05)
{
    ElasticReport r;
    if (!(kit.R0 > 0) || !std::isfinite(kit.calR)) {
        r.reason = "no a priori kit (hypotheses not met)";
        return r;
    }
    r.asserted = true;
    const double rad = factor * kit.calR;
    auto res = parallel_map(static_cast<std::size_t>(n_orbits), [&](std::size_t i) {
        const double phi = 2 * pi * static_cast<double>(i) / n_orbits;
        IntegrateOptions io;
        io.keep_dense = false;
        Trajectory tr = integrate_planar(g, Domain::full_line, {0.0, rad * std::cos(phi), rad * std::sin(phi)}, kit.T, io);
        return *std::min_element(tr.rho.begin(), tr.rho.end());
    });
    r.all_large = true;
    for (double m : res) {
        r.start_norm.push_back(rad);
        r.min_rho.push_back(m);
        if (!(m > kit.R0)) r.all_large = false;
    }
    return r;
}

/// |min_t x| / max_t |x| along one trajectory.
inline double min_to_sup_ratio(const Trajectory& tr)
{
    double mn = inf, sup = 0.0;
    for (const auto& z : tr.z) {
        mn = std::min(mn, z[0]);
        sup = std::max(sup, std::abs(z[0]));
    }
    return sup > 0 ? std::abs(std::min(mn, 0.0)) / sup : 0.0;
}

/// Ratios for orbits started at (A, 0) over one period, one per amplitude.
template <class G>
std::vector<double> mintozero_ratios(const G& g, double T, const std::vector<double>& amplitudes)
{
    return parallel_map(amplitudes.size(), [&](std::size_t i) {
        IntegrateOptions io;
        io.keep_dense = false;
        return min_to_sup_ratio(integrate_planar(g, Domain::full_line, {0.0, amplitudes[i], 0.0}, T, io));
    });
}

// ---------------------------------------------------------------------------
// Singular mode.

/// N(x, y) = 1/x^2 + x^2 + y^2.
inline double N_measure(double x, double y)
{
    if (!(x > 0)) throw InvalidArgument("N measure needs x > 0");
    return 1 / (x * x) + x * x + y * y;
}

struct SingularProbe {
    double t0 = 0.0, x0 = 0.0;
    double min_N = 0.0;
    double rotation = 0.0;  // laps about (1, 0) over [t0, t0 + T]
    double outer = 0.0;     // t1 - t0, time in x > 1
    double inner = 0.0;     // t2 - t1, time in 0 < x < 1
    double eps = 0.0;       // smallest eps reproducing the timing band
    double min_x = 0.0;
    bool laps_ok = false;   // rotation in [N, N+1]
};

/// Probe orbits started at (t0, A, 0), one per amplitude and phase.
template <class G>
std::vector<SingularProbe> singular_probes(const G& g, double T, int N, const std::vector<double>& amplitudes,
                                           int phases = 4)
{
    const std::size_t n = amplitudes.size() * static_cast<std::size_t>(phases);
    return parallel_map(n, [&](std::size_t i) {
        SingularProbe p;
        p.x0 = amplitudes[i / phases];
        p.t0 = T * static_cast<double>(i % phases) / phases;
        IntegrateOptions io;
        io.stop_times = {p.t0 + T};
        Trajectory tr = integrate_planar(g, Domain::singular, {p.t0, p.x0, 0.0}, p.t0 + 3 * T, io);
        double theta_T = tr.theta_end;
        p.min_N = inf;
        p.min_x = inf;
        for (std::size_t k = 0; k < tr.t.size(); ++k) {
            if (tr.t[k] <= p.t0 + T) {
                p.min_N = std::min(p.min_N, N_measure(tr.z[k][0], tr.z[k][1]));
                p.min_x = std::min(p.min_x, tr.z[k][0]);
            }
            if (tr.t[k] == p.t0 + T) theta_T = tr.theta[k];
        }
        p.rotation = (tr.theta0 - theta_T) / (2 * pi);
        p.laps_ok = p.rotation >= N - 1e-9 && p.rotation <= N + 1 + 1e-9;
        // Complete rotation: up through x = 1, down through x = 1, up again.
        auto ups = std::vector<double>{}, downs = std::vector<double>{};
        for (const auto& e : tr.events_of(EventKind::cross_x_eq_1)) (e.y > 0 ? ups : downs).push_back(e.t);
        p.eps = inf;
        if (!ups.empty()) {
            const double a = ups.front();
            auto dn = std::upper_bound(downs.begin(), downs.end(), a);
            auto up = std::upper_bound(ups.begin(), ups.end(), a);
            if (dn != downs.end() && up != ups.end() && *dn < *up) {
                p.outer = *dn - a;
                p.inner = *up - *dn;
                p.eps = std::max({0.0, T / (N + 1) - p.outer, p.outer - T / N, p.inner});
            }
        }
        return p;
    });
}

// ---------------------------------------------------------------------------
// CSV export.

inline void write_maps_csv(std::ostream& os, const AprioriKit& kit, std::size_t n = 64)
{
    os << "v,T,L,M\n";
    const auto vs = logspace(std::max(1.0, kit.R0), std::max(2.0, kit.R0) * 1e3, n);
    for (double v : vs) {
        auto cell = [&](auto fn) {
            try {
                return fmt17(fn());
            } catch (const InvalidArgument&) {
                return std::string("nan");
            }
        };
        os << fmt17(v) << ',' << cell([&] { return map_T(kit, v); }) << ',' << cell([&] { return map_L(kit, v); })
           << ',' << cell([&] { return map_M(kit, v); }) << '\n';
    }
}

inline void write_envelope_csv(std::ostream& os, const EnvelopePair& e, std::size_t stride = 16)
{
    os << "x,f1,f2,F1,F2\n";
    for (std::size_t k = 0; k < e.x.size(); k += stride)
        os << fmt17(e.x[k]) << ',' << fmt17(e.f1[k]) << ',' << fmt17(e.f2[k]) << ',' << fmt17(e.F1[k]) << ','
           << fmt17(e.F2[k]) << '\n';
}

} // namespace resonance
