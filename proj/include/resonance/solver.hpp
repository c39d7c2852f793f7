#pragma once

// Periodic solutions: time-T map, Newton shooting, boundary degree and continuation in lambda.

#include "resonance/apriori.hpp"
#include "resonance/conditions.hpp"

namespace resonance {

/// A hypothesis gate refused the model before solving.
class GateError : public Error {
public:
    GateError(std::string gate, const std::string& msg) : Error(gate + ": " + msg), gate_(std::move(gate)) {}
    const std::string& gate() const noexcept { return gate_; }

private:
    std::string gate_;
};

/// Continuation lost and the degree search exhausted.
class SolveError : public Error {
public:
    SolveError(const std::string& msg, double last_lambda)
        : Error(msg + " (last good lambda " + fmt17(last_lambda) + ")"), last_(last_lambda)
    {
    }
    double last_lambda() const noexcept { return last_; }

private:
    double last_;
};

struct ShootOptions {
    double rtol = 1e-12;
    double atol = 1e-12;
};

inline IntegrateOptions shoot_integrate_options(const ShootOptions& o)
{
    IntegrateOptions io;
    io.rtol = o.rtol;
    io.atol = o.atol;
    io.keep_dense = false;
    io.keep_samples = false;
    return io;
}

/// State at time T of the solution starting at z0 at time 0.
template <class G>
Vec2 poincare_of(const G& g, Domain regime, double T, const Vec2& z0, const ShootOptions& o = {})
{
    Trajectory tr = integrate_planar(g, regime, {0.0, z0[0], z0[1]}, T, shoot_integrate_options(o));
    return tr.z.back();
}

inline Vec2 poincare(const HomotopyField& field, const Vec2& z0, const ShootOptions& o = {})
{
    return poincare_of(field, field.regime(), field.T(), z0, o);
}

// ---------------------------------------------------------------------------
// Newton shooting.

struct NewtonOptions {
    double tol = 1e-8;
    int max_iter = 40;
    double fd_step = 1e-6; // relative to max(1, |z|)
    double singular_det = 1e-10;
    int max_backtracks = 30;
    ShootOptions shoot;
};

enum class NewtonStatus { converged, singular_jacobian, max_iterations, no_descent, integration_failure };

inline const char* to_string(NewtonStatus s)
{
    switch (s) {
    case NewtonStatus::converged: return "converged";
    case NewtonStatus::singular_jacobian: return "singular_jacobian";
    case NewtonStatus::max_iterations: return "max_iterations";
    case NewtonStatus::no_descent: return "no_descent";
    case NewtonStatus::integration_failure: return "integration_failure";
    }
    return "?";
}

struct NewtonResult {
    NewtonStatus status = NewtonStatus::max_iterations;
    Vec2 z{};
    double residual = inf;
    int iterations = 0;
    std::string message;
    bool converged() const { return status == NewtonStatus::converged; }
};

inline double norm2(const Vec2& v) { return std::hypot(v[0], v[1]); }

/// Damped Newton on P(z) - z with a forward-difference Jacobian.
/// Converged points must also be isolated: a singular Jacobian there is reported as such.
inline NewtonResult newton_fixed_point(const HomotopyField& field, const Vec2& guess, const NewtonOptions& o = {})
{
    NewtonResult r;
    r.z = guess;
    auto F = [&](const Vec2& z) -> std::optional<Vec2> {
        try {
            if (field.regime() == Domain::singular && !(z[0] > 0)) return std::nullopt;
            const Vec2 p = poincare(field, z, o.shoot);
            return Vec2{p[0] - z[0], p[1] - z[1]};
        } catch (const Error&) {
            return std::nullopt;
        }
    };
    auto Fz = F(r.z);
    if (!Fz) {
        r.status = NewtonStatus::integration_failure;
        r.message = "time-T map undefined at the initial guess";
        return r;
    }
    r.residual = norm2(*Fz);
    for (r.iterations = 0; r.iterations <= o.max_iter; ++r.iterations) {
        const bool small = r.residual < o.tol;
        if (r.iterations == o.max_iter && !small) break;
        const double h = o.fd_step * std::max(1.0, norm2(r.z));
        double J[2][2];
        bool ok = true;
        for (int c = 0; c < 2; ++c) {
            Vec2 zp = r.z;
            zp[c] += h;
            auto Fp = F(zp);
            if (!Fp) {
                zp[c] = r.z[c] - h;
                Fp = F(zp);
                if (!Fp) {
                    ok = false;
                    break;
                }
                J[0][c] = ((*Fz)[0] - (*Fp)[0]) / h;
                J[1][c] = ((*Fz)[1] - (*Fp)[1]) / h;
            } else {
                J[0][c] = ((*Fp)[0] - (*Fz)[0]) / h;
                J[1][c] = ((*Fp)[1] - (*Fz)[1]) / h;
            }
        }
        if (!ok) {
            r.status = NewtonStatus::integration_failure;
            r.message = "time-T map undefined near the iterate";
            return r;
        }
        const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
        const double scale = std::max({std::abs(J[0][0]), std::abs(J[0][1]), std::abs(J[1][0]), std::abs(J[1][1]), 1.0});
        if (std::abs(det) < o.singular_det * scale * scale) {
            r.status = NewtonStatus::singular_jacobian;
            r.message = "Jacobian of P - I is singular (resonant linearization), det = " + fmt17(det);
            return r;
        }
        if (small) {
            r.status = NewtonStatus::converged;
            return r;
        }
        const Vec2 step{-(J[1][1] * (*Fz)[0] - J[0][1] * (*Fz)[1]) / det, -(-J[1][0] * (*Fz)[0] + J[0][0] * (*Fz)[1]) / det};
        double damp = 1.0;
        bool moved = false;
        for (int b = 0; b <= o.max_backtracks; ++b, damp *= 0.5) {
            const Vec2 zn{r.z[0] + damp * step[0], r.z[1] + damp * step[1]};
            auto Fn = F(zn);
            if (!Fn) continue;
            const double rn = norm2(*Fn);
            if (rn < r.residual) {
                r.z = zn;
                Fz = Fn;
                r.residual = rn;
                moved = true;
                break;
            }
        }
        if (!moved) {
            r.status = NewtonStatus::no_descent;
            r.message = "line search found no decrease of the residual";
            return r;
        }
    }
    r.status = NewtonStatus::max_iterations;
    r.message = "Newton did not converge in " + std::to_string(o.max_iter) + " iterations";
    return r;
}

// ---------------------------------------------------------------------------
// Winding numbers of z - P(z).

struct DegreeOptions {
    std::size_t samples = 64;
    std::size_t max_samples = 1u << 14;
    double boundary_tol = 1e-9; // |z - P(z)| below tol * max(1, |z|) counts as a boundary fixed point
    ShootOptions shoot;
};

/// Winding number of w(c(s)) around 0 for a closed curve c on s in [0, 1).
template <class Curve, class W>
int winding_number(const Curve& c, const W& w, const DegreeOptions& o)
{
    struct Sample {
        double s;
        Vec2 v;
    };
    auto eval = [&](double s) {
        const Vec2 z = c(s);
        const Vec2 v = w(z);
        if (norm2(v) < o.boundary_tol * std::max(1.0, norm2(z)))
            throw Error("fixed point on the boundary near (" + fmt17(z[0]) + ", " + fmt17(z[1]) + ")");
        return v;
    };
    std::vector<Sample> pts;
    {
        auto vals = parallel_map(o.samples, [&](std::size_t i) { return eval(static_cast<double>(i) / o.samples); });
        for (std::size_t i = 0; i < o.samples; ++i) pts.push_back({static_cast<double>(i) / o.samples, vals[i]});
    }
    auto incr = [](const Vec2& a, const Vec2& b) { return detail::angle_between(a[0], a[1], b[0], b[1]); };
    for (;;) {
        std::vector<std::size_t> bad;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const auto& a = pts[i];
            const auto& b = pts[(i + 1) % pts.size()];
            if (std::abs(incr(a.v, b.v)) >= pi / 2) bad.push_back(i);
        }
        if (bad.empty()) break;
        if (pts.size() + bad.size() > o.max_samples) throw Error("degree refinement budget exceeded");
        auto mids = parallel_map(bad.size(), [&](std::size_t k) {
            const std::size_t i = bad[k];
            const double sa = pts[i].s;
            const double sb = i + 1 == pts.size() ? 1.0 : pts[i + 1].s;
            const double sm = 0.5 * (sa + sb);
            return Sample{sm, eval(sm)};
        });
        std::vector<Sample> merged;
        merged.reserve(pts.size() + mids.size());
        std::size_t k = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            merged.push_back(pts[i]);
            if (k < bad.size() && bad[k] == i) merged.push_back(mids[k++]);
        }
        pts = std::move(merged);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) total += incr(pts[i].v, pts[(i + 1) % pts.size()].v);
    return static_cast<int>(std::lround(total / (2 * pi)));
}

/// Winding number of z - P(z) along the circle of radius R about `center`.
inline int boundary_degree(const HomotopyField& field, double R, const DegreeOptions& o = {}, Vec2 center = {0.0, 0.0})
{
    if (!(R > 0)) throw InvalidArgument("radius must be positive");
    if (field.regime() == Domain::singular && !(center[0] - R > 0))
        throw InvalidArgument("circle leaves the half-plane x > 0");
    auto circle = [&](double s) {
        return Vec2{center[0] + R * std::cos(2 * pi * s), center[1] + R * std::sin(2 * pi * s)};
    };
    auto w = [&](const Vec2& z) {
        const Vec2 p = poincare(field, z, o.shoot);
        return Vec2{z[0] - p[0], z[1] - p[1]};
    };
    return winding_number(circle, w, o);
}

/// Winding number of z - P(z) along the boundary of the square with the given center and half width.
inline int square_degree(const HomotopyField& field, Vec2 center, double half, const DegreeOptions& o = {})
{
    auto square = [&](double s) {
        const double u = 4 * s;
        const int side = std::min(3, static_cast<int>(u));
        const double f = 2 * (u - side) - 1;
        switch (side) {
        case 0: return Vec2{center[0] + f * half, center[1] - half};
        case 1: return Vec2{center[0] + half, center[1] + f * half};
        case 2: return Vec2{center[0] - f * half, center[1] + half};
        default: return Vec2{center[0] - half, center[1] - f * half};
        }
    };
    auto w = [&](const Vec2& z) {
        const Vec2 p = poincare(field, z, o.shoot);
        return Vec2{z[0] - p[0], z[1] - p[1]};
    };
    return winding_number(square, w, o);
}

struct DegreeCell {
    Vec2 center;
    double half;
    int degree;
};

/// Quadrant subdivision keeping cells of nonzero degree.
inline std::vector<DegreeCell> degree_search(const HomotopyField& field, Vec2 center, double half, double min_half,
                                             const DegreeOptions& o = {}, std::size_t max_cells = 64)
{
    std::vector<DegreeCell> found;
    std::vector<DegreeCell> todo;
    try {
        const int d0 = square_degree(field, center, half, o);
        if (d0 == 0) return found;
        todo.push_back({center, half, d0});
    } catch (const Error&) {
        return found;
    }
    while (!todo.empty() && found.size() < max_cells) {
        DegreeCell c = todo.back();
        todo.pop_back();
        if (c.half <= min_half) {
            found.push_back(c);
            continue;
        }
        const double h = 0.5 * c.half;
        const std::array<Vec2, 4> centers = {Vec2{c.center[0] - h, c.center[1] - h}, Vec2{c.center[0] + h, c.center[1] - h},
                                             Vec2{c.center[0] + h, c.center[1] + h}, Vec2{c.center[0] - h, c.center[1] + h}};
        bool any = false;
        for (int q = 3; q >= 0; --q) {
            if (field.regime() == Domain::singular && !(centers[q][0] - h > 0)) continue;
            try {
                const int dq = square_degree(field, centers[q], h, o);
                if (dq != 0) {
                    todo.push_back({centers[q], h, dq});
                    any = true;
                }
            } catch (const Error&) {
                // a fixed point sits on this cell boundary: keep the cell for Newton
                found.push_back({centers[q], h, 0});
                any = true;
            }
        }
        if (!any) found.push_back(c);
    }
    return found;
}

// ---------------------------------------------------------------------------
// Continuation along lambda.

struct HomotopyOptions {
    int lambda_points = 33;
    int max_halvings = 8;
    int search_depth = 12;
    NewtonOptions newton;
    DegreeOptions degree;
    KitOptions kit;
    bool gate = true;
    double radius = std::numeric_limits<double>::quiet_NaN(); // certifying radius; from the kit when NaN
    Vec2 guess{std::numeric_limits<double>::quiet_NaN(), 0.0};
};

struct PathPoint {
    double lambda;
    Vec2 z;
    double residual;
    double min_x; // min over [0, T] of x(t)
};

struct PeriodicCertificate {
    Vec2 z{};
    double residual = inf;
    double rotation = 0.0;
    long rotation_int = 0;
    double radius = 0.0; // certifying radius
    std::string radius_source;
    Vec2 degree_center{};
    int degree = 0;
    std::array<double, 3> radii{};
    std::array<int, 3> degrees{};
    bool degree_invariant = false;
    int degree_lambda0 = 0;
    bool degree_lambda0_ok = false;
    double return_2T = inf; // |z(2T) - z*|
    double min_x_path = inf;
    std::vector<PathPoint> path;
    std::vector<Vec2> others;
    std::vector<std::string> notes;
    double R0 = std::numeric_limits<double>::quiet_NaN(), calR = std::numeric_limits<double>::quiet_NaN();
    double kappa = std::numeric_limits<double>::quiet_NaN(), a = std::numeric_limits<double>::quiet_NaN();

    bool rotation_integral() const { return std::abs(rotation - static_cast<double>(rotation_int)) <= 0.01; }
};

/// Root of the t-average of g, the usual guess for the singular comparison field.
inline double mean_equilibrium(const HomotopyField& field)
{
    const auto ts = periodic_grid(field.T(), 64);
    auto mean = [&](double x) {
        double s = 0.0;
        for (double t : ts) s += field(t, x);
        return s / ts.size();
    };
    const auto xs = field.regime() == Domain::singular ? logspace(1e-3, 1e3, 241) : linspace(-10.0, 10.0, 241);
    for (std::size_t i = 1; i < xs.size(); ++i) {
        double a = xs[i - 1], b = xs[i];
        double fa = mean(a);
        if (fa == 0.0) return a;
        if ((fa < 0) == (mean(b) < 0)) continue;
        for (int k = 0; k < 100 && b - a > 1e-15 * std::abs(b); ++k) {
            const double m = 0.5 * (a + b);
            const double fm = mean(m);
            if ((fm < 0) == (fa < 0)) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        return 0.5 * (a + b);
    }
    return field.regime() == Domain::singular ? 1.0 : 0.0;
}

/// Gates first, then the comparison field at lambda = 0, then continuation to lambda = 1.
inline PeriodicCertificate homotopy_solve(const NonlinearityModel& model, const HomotopyOptions& o = {})
{
    const bool singular = model.domain() == Domain::singular;
    if (o.gate) {
        if (singular) {
            auto r = validate_A0_Ainf(model);
            if (r.verdict != Verdict::pass) throw GateError("validate_A0_Ainf", r.reason);
        } else {
            auto r = validate_A(model);
            if (r.verdict != Verdict::pass) throw GateError("validate_A", r.reason);
        }
    }
    PeriodicCertificate cert;
    const HomotopyField base(model, 0.0);

    // Certifying radius.
    if (std::isfinite(o.radius)) {
        cert.radius = o.radius;
        cert.radius_source = "user";
    } else if (!singular) {
        try {
            AprioriKit kit = build_kit(base.at(1.0), o.kit);
            cert.R0 = kit.R0;
            cert.calR = kit.calR;
            cert.kappa = kit.kappa;
            cert.a = kit.a;
            cert.radius = kit.calR;
            cert.radius_source = "calR";
        } catch (const Error& e) {
            cert.notes.push_back(std::string("a priori kit unavailable: ") + e.what());
        }
    }

    auto newton_at = [&](double lam, const Vec2& g) { return newton_fixed_point(base.at(lam), g, o.newton); };

    auto search = [&](double lam) -> std::optional<NewtonResult> {
        Vec2 c{singular ? 1.0 : 0.0, 0.0};
        double half = singular ? 0.9 : (cert.radius > 0 ? cert.radius : 10.0);
        const double min_half = half / std::pow(2.0, o.search_depth);
        auto cells = degree_search(base.at(lam), c, half, min_half, o.degree);
        std::optional<NewtonResult> best;
        for (const auto& cell : cells) {
            auto r = newton_at(lam, cell.center);
            if (!r.converged()) continue;
            if (!best || r.residual < best->residual) {
                if (best) cert.others.push_back(best->z);
                best = r;
            } else {
                cert.others.push_back(r.z);
            }
        }
        return best;
    };

    // lambda = 0.
    Vec2 g0 = std::isfinite(o.guess[0]) ? o.guess : Vec2{singular ? mean_equilibrium(base) : 0.0, 0.0};
    auto r0 = newton_at(0.0, g0);
    if (!r0.converged()) {
        auto s = search(0.0);
        if (!s) throw SolveError("no fixed point of the comparison field", 0.0);
        r0 = *s;
    }
    auto min_x_of = [&](double lam, const Vec2& z) {
        IntegrateOptions io = shoot_integrate_options(o.newton.shoot);
        io.keep_samples = true;
        Trajectory tr = integrate(base.at(lam), {0.0, z[0], z[1]}, model.T(), io);
        double m = inf;
        for (const auto& q : tr.z) m = std::min(m, q[0]);
        return m;
    };
    cert.path.push_back({0.0, r0.z, r0.residual, min_x_of(0.0, r0.z)});

    // Continuation.
    const double dl0 = 1.0 / (o.lambda_points - 1);
    double lam = 0.0;
    double step = dl0;
    int halvings = 0;
    while (lam < 1.0) {
        const double next = std::min(1.0, lam + step);
        const auto& cur = cert.path.back();
        Vec2 pred = cur.z;
        if (cert.path.size() >= 2) {
            const auto& prev = cert.path[cert.path.size() - 2];
            const double ratio = (next - cur.lambda) / (cur.lambda - prev.lambda);
            pred = {cur.z[0] + ratio * (cur.z[0] - prev.z[0]), cur.z[1] + ratio * (cur.z[1] - prev.z[1])};
        }
        auto r = newton_at(next, pred);
        if (!r.converged() && cert.path.size() >= 2) r = newton_at(next, cur.z);
        if (!r.converged()) {
            if (halvings < o.max_halvings) {
                step *= 0.5;
                ++halvings;
                continue;
            }
            auto s = search(next);
            if (!s) throw SolveError("continuation lost and degree search exhausted", lam);
            cert.notes.push_back("degree search used at lambda = " + fmt17(next));
            r = *s;
        }
        cert.path.push_back({next, r.z, r.residual, min_x_of(next, r.z)});
        lam = next;
        // Return to the uniform grid once past the difficult stretch.
        const double grid = std::ceil(lam / dl0 - 1e-9) * dl0;
        step = grid - lam > 1e-12 ? grid - lam : dl0;
        halvings = 0;
    }

    const auto& fin = cert.path.back();
    cert.z = fin.z;
    cert.residual = fin.residual;
    for (const auto& p : cert.path) cert.min_x_path = std::min(cert.min_x_path, p.min_x);

    const HomotopyField exact = base.at(1.0);
    {
        IntegrateOptions io = shoot_integrate_options(o.newton.shoot);
        io.keep_samples = true;
        io.stop_times = {model.T()};
        Trajectory tr = integrate(exact, {0.0, cert.z[0], cert.z[1]}, 2 * model.T(), io);
        double theta_T = tr.theta_end;
        for (std::size_t i = 0; i < tr.t.size(); ++i)
            if (tr.t[i] == model.T()) theta_T = tr.theta[i];
        if (tr.center_hit) cert.notes.push_back("orbit passes through the rotation center");
        cert.rotation = (tr.theta0 - theta_T) / (2 * pi);
        cert.rotation_int = std::lround(cert.rotation);
        cert.return_2T = std::hypot(tr.z.back()[0] - cert.z[0], tr.z.back()[1] - cert.z[1]);
    }

    // Degree on three radii.
    if (singular) {
        cert.degree_center = cert.z;
        cert.radius = 0.5 * std::min(cert.z[0], 1.0);
        cert.radius_source = "local";
    } else if (!(cert.radius > 0)) {
        cert.radius = std::max(10.0, 4 * norm2(cert.z));
        cert.radius_source = "fallback";
    }
    const std::array<double, 3> mult = singular ? std::array<double, 3>{1.0, 0.75, 0.5} : std::array<double, 3>{1.0, 1.25, 1.5};
    for (int i = 0; i < 3; ++i) {
        cert.radii[i] = cert.radius * mult[i];
        try {
            cert.degrees[i] = boundary_degree(exact, cert.radii[i], o.degree, cert.degree_center);
        } catch (const Error& e) {
            cert.degrees[i] = 0;
            cert.notes.push_back("degree at radius " + fmt17(cert.radii[i]) + " failed: " + e.what());
        }
    }
    cert.degree = cert.degrees[0];
    cert.degree_invariant = cert.degrees[0] == cert.degrees[1] && cert.degrees[1] == cert.degrees[2];
    try {
        const Vec2 c0 = singular ? cert.path.front().z : Vec2{0.0, 0.0};
        const double r0c = singular ? 0.5 * std::min(c0[0], 1.0) : cert.radius;
        cert.degree_lambda0 = boundary_degree(base, r0c, o.degree, c0);
        cert.degree_lambda0_ok = true;
    } catch (const Error& e) {
        cert.notes.push_back(std::string("degree at lambda = 0 failed: ") + e.what());
    }
    return cert;
}

// ---------------------------------------------------------------------------
// Normalized profiles of growing families.

struct ArcFit {
    double xi = 0.0;     // left zero of the positive arc
    double length = 0.0; // distance to the next zero
    double c = 0.0;      // amplitude
    double residual = 0.0;
};

struct ProfileFit {
    std::vector<double> sup_norm;
    std::vector<double> zeros; // of the last member
    std::vector<ArcFit> arcs;  // positive arcs of the last member
    double frequency = 0.0;
    int K = 0;
    double rel_error = 0.0; // |frequency - sqrt(mu_K)| / sqrt(mu_K)
    double max_residual = 0.0;
};

/// Fits c_r sin(omega (t - xi_r)) on the positive arcs of v = x / |x|_inf.
inline ProfileFit normalized_profile(const std::vector<Trajectory>& family, int N, double T,
                                     std::size_t grid = 4096)
{
    if (family.size() < 3) throw InvalidArgument("normalized profile needs at least 3 solutions");
    ProfileFit fit;
    for (const auto& tr : family) {
        std::size_t im = 0;
        for (std::size_t i = 0; i < tr.z.size(); ++i)
            if (std::abs(tr.z[i][0]) > std::abs(tr.z[im][0])) im = i;
        double s = std::abs(tr.z[im][0]);
        if (!tr.dense.empty()) {
            const double a = tr.t[im == 0 ? 0 : im - 1], b = tr.t[std::min(im + 1, tr.t.size() - 1)];
            if (b > a) s = std::max(s, -golden_minimize([&](double u) { return -std::abs(tr.at(u)[0]); }, a, b).second);
        }
        fit.sup_norm.push_back(s);
    }
    const Trajectory& tr = family.back();
    const double sup = fit.sup_norm.back();
    const double t0 = tr.t.front(), t1 = tr.t.back();
    auto v = [&](double s) { return tr.at(s)[0] / sup; };
    const auto ts = linspace(t0, t1, grid);
    for (std::size_t i = 1; i < ts.size(); ++i) {
        double a = ts[i - 1], b = ts[i];
        double va = v(a), vb = v(b);
        if (va == 0.0) {
            if (fit.zeros.empty() || fit.zeros.back() != a) fit.zeros.push_back(a);
            continue;
        }
        if ((va < 0) == (vb < 0)) continue;
        for (int k = 0; k < 60; ++k) {
            const double m = 0.5 * (a + b);
            const double vm = v(m);
            if ((vm < 0) == (va < 0)) {
                a = m;
                va = vm;
            } else {
                b = m;
            }
        }
        fit.zeros.push_back(0.5 * (a + b));
    }
    double wsum = 0.0;
    for (std::size_t r = 0; r + 1 < fit.zeros.size(); ++r) {
        const double a = fit.zeros[r], b = fit.zeros[r + 1];
        if (!(v(0.5 * (a + b)) > 0)) continue;
        ArcFit arc;
        arc.xi = a;
        arc.length = b - a;
        const double w = pi / arc.length;
        auto neg = golden_minimize([&](double s) { return -v(s); }, a, b);
        arc.c = -neg.second;
        for (double s : linspace(a, b, 65)) arc.residual = std::max(arc.residual, std::abs(v(s) - arc.c * std::sin(w * (s - a))));
        fit.arcs.push_back(arc);
        wsum += w;
        fit.max_residual = std::max(fit.max_residual, arc.residual);
    }
    if (fit.arcs.empty()) throw Error("no complete positive arc in the normalized profile");
    fit.frequency = wsum / fit.arcs.size();
    const double wN = std::sqrt(eigenvalue(N, T)), wN1 = std::sqrt(eigenvalue(N + 1, T));
    fit.K = std::abs(fit.frequency - wN) <= std::abs(fit.frequency - wN1) ? N : N + 1;
    const double wK = fit.K == N ? wN : wN1;
    fit.rel_error = std::abs(fit.frequency - wK) / wK;
    return fit;
}

/// sqrt(mu_K) times the integral of (y^2 + x g) / (mu_K x^2 + y^2) over [a, b]: the modified polar angle swept.
inline double modified_angle(const HomotopyField& field, const Trajectory& tr, int K, double a, double b, int panels = 256)
{
    const double mu = eigenvalue(K, field.T());
    auto integrand = [&](double s) {
        const Vec2 z = tr.at(s);
        const double g = field(s, z[0]);
        return (z[1] * z[1] + z[0] * g) / (mu * z[0] * z[0] + z[1] * z[1]);
    };
    return std::sqrt(mu) * integrate_gl(integrand, a, b, panels);
}

// ---------------------------------------------------------------------------
// Output.

inline void write_certificate(std::ostream& os, const PeriodicCertificate& c)
{
    os << "x0 = " << fmt17(c.z[0]) << '\n'
       << "y0 = " << fmt17(c.z[1]) << '\n'
       << "residual = " << fmt17(c.residual) << '\n'
       << "rotation = " << fmt17(c.rotation) << '\n'
       << "rotation_int = " << c.rotation_int << '\n'
       << "return_2T = " << fmt17(c.return_2T) << '\n'
       << "radius = " << fmt17(c.radius) << '\n'
       << "radius_source = " << c.radius_source << '\n'
       << "degree = " << c.degree << '\n'
       << "degrees = " << c.degrees[0] << ' ' << c.degrees[1] << ' ' << c.degrees[2] << '\n'
       << "degree_invariant = " << (c.degree_invariant ? "true" : "false") << '\n'
       << "degree_lambda0 = " << (c.degree_lambda0_ok ? std::to_string(c.degree_lambda0) : "unavailable") << '\n'
       << "min_x_path = " << fmt17(c.min_x_path) << '\n'
       << "R0 = " << fmt17(c.R0) << '\n'
       << "calR = " << fmt17(c.calR) << '\n'
       << "kappa = " << fmt17(c.kappa) << '\n'
       << "a = " << fmt17(c.a) << '\n'
       << "path_points = " << c.path.size() << '\n'
       << "other_fixed_points = " << c.others.size() << '\n';
    for (const auto& n : c.notes) os << "note = " << n << '\n';
}

inline void write_path_csv(std::ostream& os, const PeriodicCertificate& c)
{
    os << "lambda,x0,y0,residual,min_x\n";
    for (const auto& p : c.path)
        os << fmt17(p.lambda) << ',' << fmt17(p.z[0]) << ',' << fmt17(p.z[1]) << ',' << fmt17(p.residual) << ','
           << fmt17(p.min_x) << '\n';
}

} // namespace resonance
