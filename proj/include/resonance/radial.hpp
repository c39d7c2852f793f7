#pragma once

// Radially symmetric systems x'' + f(t, |x|) x / |x| = 0 through the rho equation with angular momentum L.

#include "resonance/solver.hpp"

namespace resonance {

/// rho -> f(t, rho) - L^2 / rho^3 as a singular model.
inline NonlinearityModel effective_field(const NonlinearityModel& f, double L)
{
    if (!std::isfinite(L)) throw InvalidArgument("angular momentum must be finite");
    if (L == 0.0 && f.domain() == Domain::singular) return f;
    const double L2 = L * L;
    NonlinearityModel base = f;
    return NonlinearityModel(f.name() + "+centrifugal(L=" + fmt_shortest(L) + ")", f.T(), Domain::singular, f.N(),
                             [base, L2](double t, double r) {
                                 if (!(r > 0)) throw DomainError("rho", "radial field evaluated at rho <= 0");
                                 return base(t, r) - L2 / (r * r * r);
                             });
}

/// Root of f(0, rho) - L^2 / rho^3 in [lo, hi] by bisection.
inline double circular_orbit(const NonlinearityModel& f, double L, double lo = 1e-6, double hi = 1e6)
{
    if (!(lo > 0 && hi > lo)) throw InvalidArgument("circular orbit bracket must satisfy 0 < lo < hi");
    auto bal = [&](double r) { return f(0.0, r) - L * L / (r * r * r); };
    double a = lo, b = hi;
    double fa = bal(a), fb = bal(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa < 0) == (fb < 0)) throw Error("no bracketing root of f(rho) - L^2/rho^3 in [" + fmt17(lo) + ", " + fmt17(hi) + "]");
    for (int i = 0; i < 200 && b - a > 1e-15 * b; ++i) {
        const double m = 0.5 * (a + b);
        const double fm = bal(m);
        if (fm == 0.0) return m;
        if ((fm < 0) == (fa < 0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

/// Integral of L / rho(t)^2 over [t0, t0 + horizon] on the dense output.
inline double angular_progress(const Trajectory& rho, double L, double t0, double horizon, double floor = 1e-12,
                               int panels_per_segment = 1)
{
    if (!(horizon >= 0)) throw InvalidArgument("horizon must be non-negative");
    const double t1 = t0 + horizon;
    double total = 0.0;
    bool low = false;
    for (const auto& seg : rho.dense) {
        const double a = std::max(seg.t0, t0), b = std::min(seg.t1(), t1);
        if (!(b > a)) continue;
        total += integrate_gl(
            [&](double s) {
                const double r = seg.eval(s)[0];
                if (!(r > floor)) low = true;
                return L / (r * r);
            },
            a, b, panels_per_segment);
    }
    if (low) throw Error("rho dropped below the floor " + fmt17(floor));
    if (!rho.dense.empty() && (rho.dense.front().t0 > t0 + 1e-12 || rho.dense.back().t1() < t1 - 1e-9 * std::max(1.0, t1)))
        throw InvalidArgument("horizon exceeds the rho profile");
    return total;
}

struct RadialOptions {
    int k_max = 8;
    int scan_points = 12;
    int golden_iters = 80;
    double angle_tol = 1e-6;   // |dtheta - 2 pi nu| accepted
    double rho_floor = 1e-9;
    NewtonOptions newton;
    HomotopyOptions homotopy;
    int check_points = 256;    // samples for the Cartesian comparison
};

struct RotatingSolution {
    int k = 0, nu = 0;
    bool found = false;
    std::string failure;
    double L = 0.0;
    Vec2 z{};          // (rho(0), rho'(0))
    double residual = inf;
    double dtheta = 0.0; // over kT
    double angle_error = inf;
    double rho_min = 0.0, rho_max = 0.0;
    double L_circular = 0.0; // rho0^2 * 2 pi nu / (kT) from the circular estimate
    double momentum_drift = inf;
    double backsub_residual = inf;
    std::vector<std::array<double, 3>> planar; // (t, x1, x2) over kT
};

struct RadialResult {
    int nu = 0;
    int k_nu = 0; // 0 when none found
    std::vector<RotatingSolution> cells;
};

namespace detail {

inline double mean_over_t(const NonlinearityModel& f, double r, std::size_t n = 64)
{
    double s = 0.0;
    for (double t : periodic_grid(f.T(), n)) s += f(t, r);
    return s / n;
}

/// Cartesian integration of the planar system and comparison with the reduced solution.
inline void cartesian_checks(const NonlinearityModel& f, RotatingSolution& s, const RadialOptions& o)
{
    const double T = f.T(), H = s.k * T;
    auto rhs4 = [&](double t, const Vec<4>& u) -> Vec<4> {
        const double r = std::hypot(u[0], u[1]);
        if (!(r > 0)) throw DomainError("|x|", "planar orbit reached the origin");
        const double a = f(t, r) / r;
        return {u[2], u[3], -a * u[0], -a * u[1]};
    };
    // (rho, rho', theta) reduced system.
    const double L = s.L;
    auto rhs3 = [&](double t, const Vec<3>& u) -> Vec<3> {
        if (!(u[0] > 0)) throw DomainError("rho", "reduced orbit reached rho <= 0");
        return {u[1], L * L / (u[0] * u[0] * u[0]) - f(t, u[0]), L / (u[0] * u[0])};
    };
    const auto times = linspace(0.0, H, static_cast<std::size_t>(o.check_points) + 1);
    SolverOptions so;
    so.rtol = 1e-12;
    so.atol = 1e-14;
    const Vec<4> u0{s.z[0], 0.0, s.z[1], L / s.z[0]};
    const auto cart = integrate_at<4>(rhs4, 0.0, u0, times, so);
    const auto red = integrate_at<3>(rhs3, 0.0, Vec<3>{s.z[0], s.z[1], 0.0}, times, so);
    s.momentum_drift = 0.0;
    s.backsub_residual = 0.0;
    s.planar.clear();
    for (std::size_t i = 0; i < times.size(); ++i) {
        const auto& u = cart[i];
        const double m = u[0] * u[3] - u[1] * u[2];
        s.momentum_drift = std::max(s.momentum_drift, std::abs(m - L));
        const double xr = red[i][0] * std::cos(red[i][2]), yr = red[i][0] * std::sin(red[i][2]);
        s.backsub_residual = std::max(s.backsub_residual, std::hypot(xr - u[0], yr - u[1]));
        s.planar.push_back({times[i], u[0], u[1]});
    }
}

} // namespace detail

/// One (k, nu) cell: solve k * L * int_0^T rho_L^-2 = 2 pi nu for L along T-periodic rho solutions.
inline RotatingSolution solve_rotating_cell(const NonlinearityModel& f, int nu, int k, const RadialOptions& o = {})
{
    RotatingSolution s;
    s.k = k;
    s.nu = nu;
    const double T = f.T();
    const double target = 2 * pi * nu;
    const double w = target / (k * T);

    // Circular estimate on the t-averaged force: mean f(rho) = w^2 rho.
    double rho0 = std::numeric_limits<double>::quiet_NaN();
    {
        auto bal = [&](double r) { return detail::mean_over_t(f, r) - w * w * r; };
        const auto rs = logspace(1e-3, 1e3, 241);
        for (std::size_t i = 1; i < rs.size() && std::isnan(rho0); ++i) {
            double a = rs[i - 1], b = rs[i];
            double fa = bal(a);
            if ((fa < 0) == (bal(b) < 0)) continue;
            for (int it = 0; it < 100; ++it) {
                const double m = 0.5 * (a + b);
                if ((bal(m) < 0) == (fa < 0)) a = m;
                else b = m;
            }
            rho0 = 0.5 * (a + b);
        }
    }
    if (std::isnan(rho0)) {
        s.failure = "no circular estimate for the angular speed";
        return s;
    }
    s.L_circular = rho0 * rho0 * w;
    const double L_max = 4 * s.L_circular;

    struct Eval {
        double L;
        Vec2 z;
        double residual;
        double dtheta;
        bool ok;
    };
    std::vector<Eval> cache;
    auto nearest = [&](double L) -> const Eval* {
        const Eval* best = nullptr;
        for (const auto& e : cache)
            if (e.ok && (!best || std::abs(e.L - L) < std::abs(best->L - L))) best = &e;
        return best;
    };
    auto evaluate = [&](double L) -> Eval {
        NonlinearityModel eff = effective_field(f, L);
        HomotopyField field = HomotopyField::exact(eff);
        NewtonResult r;
        if (const Eval* g = nearest(L)) r = newton_fixed_point(field, g->z, o.newton);
        if (!r.converged()) {
            try {
                HomotopyOptions ho = o.homotopy;
                ho.newton = o.newton;
                auto c = homotopy_solve(eff, ho);
                r.status = NewtonStatus::converged;
                r.z = c.z;
                r.residual = c.residual;
            } catch (const Error&) {
                return {L, {}, inf, 0.0, false};
            }
        }
        IntegrateOptions io;
        io.rtol = o.newton.shoot.rtol;
        io.atol = o.newton.shoot.atol;
        Trajectory tr = integrate(field, {0.0, r.z[0], r.z[1]}, T, io);
        const double per = angular_progress(tr, L, 0.0, T, o.rho_floor);
        Eval e{L, r.z, r.residual, k * per, true};
        cache.push_back(e);
        return e;
    };

    // Scan for a sign change of dtheta - 2 pi nu.
    std::vector<Eval> scan;
    for (int i = 1; i <= o.scan_points; ++i) scan.push_back(evaluate(L_max * i / o.scan_points));
    int bracket = -1;
    for (int i = 0; i + 1 < static_cast<int>(scan.size()); ++i) {
        if (!scan[i].ok || !scan[i + 1].ok) continue;
        if ((scan[i].dtheta - target < 0) != (scan[i + 1].dtheta - target < 0)) {
            bracket = i;
            break;
        }
    }
    if (bracket < 0) {
        s.failure = "no sign change of dtheta(L) - 2 pi nu on (0, 4 L_circ]";
        return s;
    }
    double a = scan[bracket].L, b = scan[bracket + 1].L;
    auto obj = [&](double L) {
        Eval e = evaluate(L);
        return e.ok ? std::abs(e.dtheta - target) : inf;
    };
    auto best = golden_minimize(obj, a, b, o.golden_iters);
    Eval e = evaluate(best.first);
    if (!e.ok) {
        s.failure = "solver failed at the selected angular momentum";
        return s;
    }
    s.L = e.L;
    s.z = e.z;
    s.residual = e.residual;
    s.dtheta = e.dtheta;
    s.angle_error = std::abs(e.dtheta - target);
    {
        IntegrateOptions io;
        io.rtol = o.newton.shoot.rtol;
        io.atol = o.newton.shoot.atol;
        Trajectory tr = integrate(HomotopyField::exact(effective_field(f, s.L)), {0.0, s.z[0], s.z[1]}, T, io);
        s.rho_min = inf;
        s.rho_max = 0.0;
        for (const auto& seg : tr.dense)
            for (int q = 0; q < 4; ++q) {
                const double r = seg.eval(seg.t0 + seg.h * q / 4.0)[0];
                s.rho_min = std::min(s.rho_min, r);
                s.rho_max = std::max(s.rho_max, r);
            }
    }
    if (!(s.angle_error < o.angle_tol)) {
        s.failure = "angle condition not met: |dtheta - 2 pi nu| = " + fmt17(s.angle_error);
        return s;
    }
    if (!(s.residual < o.newton.tol)) {
        s.failure = "periodicity residual " + fmt17(s.residual);
        return s;
    }
    detail::cartesian_checks(f, s, o);
    s.found = true;
    return s;
}

/// Cells k = 1..k_max for one nu; k_nu is the first k with a certified solution.
inline RadialResult find_rotating(const NonlinearityModel& f, int nu, const RadialOptions& o = {})
{
    if (nu < 1) throw InvalidArgument("nu must be >= 1");
    if (o.k_max < 1) throw InvalidArgument("k_max must be >= 1");
    if (f.domain() == Domain::singular) {
        auto r = validate_A0_Ainf(f);
        if (r.verdict != Verdict::pass) throw GateError("validate_A0_Ainf", r.reason);
    }
    RadialResult res;
    res.nu = nu;
    res.cells = parallel_map(static_cast<std::size_t>(o.k_max), [&](std::size_t i) {
        try {
            return solve_rotating_cell(f, nu, static_cast<int>(i) + 1, o);
        } catch (const Error& e) {
            RotatingSolution s;
            s.k = static_cast<int>(i) + 1;
            s.nu = nu;
            s.failure = e.what();
            return s;
        }
    });
    for (const auto& c : res.cells)
        if (c.found) {
            res.k_nu = c.k;
            break;
        }
    return res;
}

inline void write_radial_csv(std::ostream& os, const std::vector<RotatingSolution>& cells)
{
    os << "k,nu,found,L,residual,dtheta,angle_error,rho_min,rho_max,momentum_drift,backsub_residual\n";
    for (const auto& c : cells)
        os << c.k << ',' << c.nu << ',' << (c.found ? 1 : 0) << ',' << fmt17(c.L) << ',' << fmt17(c.residual) << ','
           << fmt17(c.dtheta) << ',' << fmt17(c.angle_error) << ',' << fmt17(c.rho_min) << ',' << fmt17(c.rho_max)
           << ',' << fmt17(c.momentum_drift) << ',' << fmt17(c.backsub_residual) << '\n';
}

inline void write_planar_csv(std::ostream& os, const RotatingSolution& c)
{
    os << "t,x1,x2\n";
    for (const auto& p : c.planar) os << fmt17(p[0]) << ',' << fmt17(p[1]) << ',' << fmt17(p[2]) << '\n';
}

} // namespace resonance
