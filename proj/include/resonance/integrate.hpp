#pragma once

// Dormand-Prince 5(4) integration with dense output, event location and
// polar lifting for the planar system x' = y, y' = -g(t, x).

#include "resonance/model.hpp"

#include <fstream>
#include <optional>
#include <ostream>

namespace resonance {

template <std::size_t D>
using Vec = std::array<double, D>;

using Vec2 = Vec<2>;

/// Dense-output polynomial over one accepted step [t0, t0 + h].
template <std::size_t D>
struct DenseSegment {
    double t0 = 0.0, h = 0.0;
    Vec<D> r1{}, r2{}, r3{}, r4{}, r5{};

    double t1() const { return t0 + h; }

    Vec<D> eval(double t) const
    {
        const double s = h == 0.0 ? 0.0 : (t - t0) / h;
        const double s1 = 1.0 - s;
        Vec<D> out;
        for (std::size_t i = 0; i < D; ++i) out[i] = r1[i] + s * (r2[i] + s1 * (r3[i] + s * (r4[i] + s1 * r5[i])));
        return out;
    }
};

class IntegrationError : public Error {
public:
    enum class Kind { blow_up, step_underflow, domain_exit, max_steps };

    IntegrationError(Kind kind, double t, std::vector<double> state, const std::string& what)
        : Error(what), kind_(kind), t_(t), state_(std::move(state))
    {
    }
    Kind kind() const noexcept { return kind_; }
    double t() const noexcept { return t_; }
    const std::vector<double>& state() const noexcept { return state_; }

private:
    Kind kind_;
    double t_;
    std::vector<double> state_;
};

inline const char* to_string(IntegrationError::Kind k)
{
    switch (k) {
    case IntegrationError::Kind::blow_up: return "blow_up";
    case IntegrationError::Kind::step_underflow: return "step_underflow";
    case IntegrationError::Kind::domain_exit: return "domain_exit";
    case IntegrationError::Kind::max_steps: return "max_steps";
    }
    return "?";
}

struct SolverOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double h_init = 0.0; // 0: automatic
    double h_min = 1e-14;
    double h_max = inf;
    long max_steps = 5'000'000;
    std::vector<double> stop_times; // sorted; the solver lands on each exactly
    bool singular_wall = false;     // treat domain errors in stages as step failures
};

enum class StepVerdict { accept, reject, stop };

namespace detail {

struct Dopri5Tableau {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                            a76 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
    static constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                            d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                            d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
};

template <std::size_t D>
double norm_inf(const Vec<D>& v)
{
    double m = 0.0;
    for (double a : v) m = std::max(m, std::abs(a));
    return m;
}

template <std::size_t D>
std::vector<double> to_vector(const Vec<D>& v)
{
    return std::vector<double>(v.begin(), v.end());
}

} // namespace detail

/// Generic adaptive driver. `rhs(t, y)` returns y'; `cap(t, y)` bounds the
/// next step; `observe(segment, y1)` sees each step before it is accepted.
/// Returns the final time reached.
template <std::size_t D, class Rhs, class Cap, class Observe>
double drive(Rhs&& rhs, double t, Vec<D> y, double t_end, const SolverOptions& o, Cap&& cap, Observe&& observe)
{
    using Tb = detail::Dopri5Tableau;
    if (!(t_end > t)) return t;
    for (double v : y)
        if (!std::isfinite(v)) throw InvalidArgument("initial state must be finite");

    auto err_norm = [&](const Vec<D>& y0, const Vec<D>& y1, const Vec<D>& e) {
        double s = 0.0;
        for (std::size_t i = 0; i < D; ++i) {
            const double sc = o.atol + o.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
            s += (e[i] / sc) * (e[i] / sc);
        }
        return std::sqrt(s / D);
    };

    Vec<D> k1 = rhs(t, y);
    double h = o.h_init;
    if (!(h > 0)) {
        const double d0 = err_norm(y, y, y), d1 = err_norm(y, y, k1);
        h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h = std::min(h, 0.1 * (t_end - t));
        Vec<D> y1;
        for (std::size_t i = 0; i < D; ++i) y1[i] = y[i] + h * k1[i];
        try {
            Vec<D> k2 = rhs(t + h, y1);
            Vec<D> dk;
            for (std::size_t i = 0; i < D; ++i) dk[i] = k2[i] - k1[i];
            const double d2 = err_norm(y, y, dk) / h;
            const double mx = std::max(d1, d2);
            const double h1 = mx <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / mx, 0.2);
            h = std::min(100 * h, h1);
        } catch (const DomainError&) {
            h *= 0.1;
        }
        // Components starting at zero make the estimate tiny; the controller grows it back.
        h = std::max(h, 100 * o.h_min);
    }
    h = std::min(h, o.h_max);

    std::size_t next_stop = 0;
    while (next_stop < o.stop_times.size() && o.stop_times[next_stop] <= t) ++next_stop;

    double facold = 1e-4;
    bool last_rejected = false;
    long steps = 0;
    std::array<double, 6> recent_abs{};
    int recent_count = 0;
    std::exception_ptr last_domain;

    while (t < t_end) {
        if (++steps > o.max_steps)
            throw IntegrationError(IntegrationError::Kind::max_steps, t, detail::to_vector(y), "step budget exhausted");
        double target = t_end;
        if (next_stop < o.stop_times.size()) target = std::min(target, o.stop_times[next_stop]);
        h = std::min({h, o.h_max, cap(t, y)});
        bool land = false;
        if (t + h >= target || t + 1.01 * h >= target) {
            h = target - t;
            land = true;
        }
        const double h_floor = std::max(o.h_min, 8 * std::numeric_limits<double>::epsilon() * std::abs(t));
        if (h < h_floor && !land) {
            if (last_domain && !o.singular_wall) std::rethrow_exception(last_domain);
            const double big = detail::norm_inf(y);
            bool growing = recent_count >= static_cast<int>(recent_abs.size());
            for (std::size_t i = 1; growing && i < recent_abs.size(); ++i)
                growing = recent_abs[i] > recent_abs[i - 1];
            auto kind = (growing || big > 1e100) ? IntegrationError::Kind::blow_up
                        : o.singular_wall        ? IntegrationError::Kind::domain_exit
                                                 : IntegrationError::Kind::step_underflow;
            throw IntegrationError(kind, t, detail::to_vector(y),
                                   std::string("step size underflow (") + to_string(kind) + ") at t=" + fmt17(t));
        }

        Vec<D> ys, k2, k3, k4, k5, k6, k7, y1, err;
        bool stage_failed = false;
        try {
            for (std::size_t i = 0; i < D; ++i) ys[i] = y[i] + h * Tb::a21 * k1[i];
            k2 = rhs(t + Tb::c2 * h, ys);
            for (std::size_t i = 0; i < D; ++i) ys[i] = y[i] + h * (Tb::a31 * k1[i] + Tb::a32 * k2[i]);
            k3 = rhs(t + Tb::c3 * h, ys);
            for (std::size_t i = 0; i < D; ++i)
                ys[i] = y[i] + h * (Tb::a41 * k1[i] + Tb::a42 * k2[i] + Tb::a43 * k3[i]);
            k4 = rhs(t + Tb::c4 * h, ys);
            for (std::size_t i = 0; i < D; ++i)
                ys[i] = y[i] + h * (Tb::a51 * k1[i] + Tb::a52 * k2[i] + Tb::a53 * k3[i] + Tb::a54 * k4[i]);
            k5 = rhs(t + Tb::c5 * h, ys);
            for (std::size_t i = 0; i < D; ++i)
                ys[i] = y[i] + h * (Tb::a61 * k1[i] + Tb::a62 * k2[i] + Tb::a63 * k3[i] + Tb::a64 * k4[i] +
                                    Tb::a65 * k5[i]);
            k6 = rhs(t + h, ys);
            for (std::size_t i = 0; i < D; ++i)
                y1[i] = y[i] + h * (Tb::a71 * k1[i] + Tb::a73 * k3[i] + Tb::a74 * k4[i] + Tb::a75 * k5[i] +
                                    Tb::a76 * k6[i]);
            k7 = rhs(t + h, y1);
        } catch (const DomainError&) {
            // an oversized trial step can leave the domain or overflow; retry smaller
            last_domain = std::current_exception();
            stage_failed = true;
        }
        bool finite = !stage_failed;
        if (finite)
            for (std::size_t i = 0; i < D; ++i)
                if (!std::isfinite(y1[i]) || !std::isfinite(k7[i])) finite = false;
        if (!finite) {
            if (!stage_failed && detail::norm_inf(y) > 1e200)
                throw IntegrationError(IntegrationError::Kind::blow_up, t, detail::to_vector(y), "state overflow");
            h *= 0.5;
            last_rejected = true;
            continue;
        }
        for (std::size_t i = 0; i < D; ++i)
            err[i] = h * (Tb::e1 * k1[i] + Tb::e3 * k3[i] + Tb::e4 * k4[i] + Tb::e5 * k5[i] + Tb::e6 * k6[i] +
                          Tb::e7 * k7[i]);
        const double e = err_norm(y, y1, err);
        constexpr double expo1 = 0.17, beta = 0.04, safe = 0.9;
        const double fac11 = std::pow(std::max(e, 1e-300), expo1);
        if (e > 1.0) {
            h /= std::min(5.0, fac11 / safe);
            last_rejected = true;
            continue;
        }

        last_domain = nullptr;
        DenseSegment<D> seg;
        seg.t0 = t;
        seg.h = h;
        for (std::size_t i = 0; i < D; ++i) {
            const double ydiff = y1[i] - y[i];
            const double bspl = h * k1[i] - ydiff;
            seg.r1[i] = y[i];
            seg.r2[i] = ydiff;
            seg.r3[i] = bspl;
            seg.r4[i] = ydiff - h * k7[i] - bspl;
            seg.r5[i] = h * (Tb::d1 * k1[i] + Tb::d3 * k3[i] + Tb::d4 * k4[i] + Tb::d5 * k5[i] + Tb::d6 * k6[i] +
                             Tb::d7 * k7[i]);
        }
        const double t_new = land ? target : t + h;
        const StepVerdict v = observe(seg, t_new, y1);
        if (v == StepVerdict::reject) {
            h *= 0.5;
            last_rejected = true;
            continue;
        }

        double fac = fac11 / std::pow(facold, beta);
        fac = std::max(0.1, std::min(5.0, fac / safe));
        double h_new = h / fac;
        facold = std::max(e, 1e-4);
        if (last_rejected) h_new = std::min(h_new, h);
        last_rejected = false;

        t = t_new;
        y = y1;
        k1 = k7;
        std::rotate(recent_abs.begin(), recent_abs.begin() + 1, recent_abs.end());
        recent_abs.back() = std::abs(y[0]);
        ++recent_count;
        if (detail::norm_inf(y) > 1e200)
            throw IntegrationError(IntegrationError::Kind::blow_up, t, detail::to_vector(y), "state overflow");
        if (land && next_stop < o.stop_times.size() && t >= o.stop_times[next_stop]) ++next_stop;
        if (v == StepVerdict::stop) return t;
        h = h_new;
    }
    return t;
}

/// Plain integration of y' = rhs(t, y); returns the state at t_end.
template <std::size_t D, class Rhs>
Vec<D> integrate_to(Rhs&& rhs, double t0, const Vec<D>& y0, double t_end, const SolverOptions& o = {})
{
    Vec<D> last = y0;
    drive<D>(
        rhs, t0, y0, t_end, o, [](double, const Vec<D>&) { return inf; },
        [&](const DenseSegment<D>&, double, const Vec<D>& y1) {
            last = y1;
            return StepVerdict::accept;
        });
    return last;
}

/// Integrates and records the state at each requested output time.
template <std::size_t D, class Rhs>
std::vector<Vec<D>> integrate_at(Rhs&& rhs, double t0, const Vec<D>& y0, const std::vector<double>& times,
                                 SolverOptions o = {})
{
    std::vector<Vec<D>> out;
    out.reserve(times.size());
    if (times.empty()) return out;
    std::size_t k = 0;
    while (k < times.size() && times[k] <= t0) {
        out.push_back(y0);
        ++k;
    }
    o.stop_times.assign(times.begin() + static_cast<long>(k), times.end());
    drive<D>(
        rhs, t0, y0, times.back(), o, [](double, const Vec<D>&) { return inf; },
        [&](const DenseSegment<D>&, double t1, const Vec<D>& y1) {
            while (k < times.size() && times[k] <= t1) {
                out.push_back(y1);
                ++k;
            }
            return StepVerdict::accept;
        });
    return out;
}

// ---------------------------------------------------------------------------
// Planar system with events and polar lifting.

struct PhaseState {
    double t = 0.0, x = 0.0, y = 0.0;
};

enum class EventKind { cross_x_eq_d, cross_x_eq_0, cross_y_eq_0, cross_x_eq_1 };

inline const char* to_string(EventKind k)
{
    switch (k) {
    case EventKind::cross_x_eq_d: return "cross_x_eq_d";
    case EventKind::cross_x_eq_0: return "cross_x_eq_0";
    case EventKind::cross_y_eq_0: return "cross_y_eq_0";
    case EventKind::cross_x_eq_1: return "cross_x_eq_1";
    }
    return "?";
}

struct Event {
    EventKind kind;
    double t, x, y;
    int direction; // +1 if the event function increases through zero
    double theta;
};

struct IntegrateOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double event_tol = 1e-10;
    double h_init = 0.0;
    double h_min = 1e-14;
    double h_max = inf;
    long max_steps = 5'000'000;
    double max_angle_step = 0.5;
    double center_floor = 1e-9;
    double d = std::numeric_limits<double>::quiet_NaN(); // x = d events when finite
    bool keep_dense = true;
    bool keep_samples = true;
    std::vector<double> stop_times;
    /// Terminates the integration at the first event for which this returns true.
    std::function<bool(const Event&)> stop_on;
};

/// Ordered samples with unwrapped polar angle about the rotation center.
struct Trajectory {
    Domain regime = Domain::full_line;
    double center_x = 0.0;
    double d = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> t;
    std::vector<Vec2> z;
    std::vector<double> theta;
    std::vector<double> rho;
    std::vector<Event> events;
    std::vector<DenseSegment<2>> dense;
    bool center_hit = false;
    bool stopped_on_event = false;

    PhaseState front() const { return {t.front(), z.front()[0], z.front()[1]}; }
    PhaseState back() const { return {t.back(), z.back()[0], z.back()[1]}; }
    double theta0 = 0.0, theta_end = 0.0;

    /// State at time s from the dense output.
    Vec2 at(double s) const
    {
        if (dense.empty()) throw InvalidArgument("trajectory has no dense output");
        if (s < dense.front().t0 || s > dense.back().t1() + 1e-12 * std::max(1.0, std::abs(s)))
            throw InvalidArgument("time outside trajectory span");
        auto it = std::upper_bound(dense.begin(), dense.end(), s,
                                   [](double v, const DenseSegment<2>& sg) { return v < sg.t0; });
        if (it != dense.begin()) --it;
        return it->eval(s);
    }

    std::vector<Event> events_of(EventKind k) const
    {
        std::vector<Event> out;
        for (const auto& e : events)
            if (e.kind == k) out.push_back(e);
        return out;
    }
};

namespace detail {

inline double angle_between(double ax, double ay, double bx, double by)
{
    return std::atan2(ax * by - ay * bx, ax * bx + ay * by);
}

inline double event_value(EventKind k, const Vec2& z, double d)
{
    switch (k) {
    case EventKind::cross_x_eq_d: return z[0] - d;
    case EventKind::cross_x_eq_0: return z[0];
    case EventKind::cross_y_eq_0: return z[1];
    case EventKind::cross_x_eq_1: return z[0] - 1.0;
    }
    return 0.0;
}

} // namespace detail

/// Integrates the planar system of `g` from z0 up to t_end.
template <class G>
Trajectory integrate_planar(const G& g, Domain regime, const PhaseState& z0, double t_end,
                            const IntegrateOptions& opts = {})
{
    if (!std::isfinite(z0.x) || !std::isfinite(z0.y) || !std::isfinite(z0.t))
        throw InvalidArgument("initial state must be finite");
    if (regime == Domain::singular && !(z0.x > 0)) throw InvalidArgument("singular mode requires x > 0");

    Trajectory tr;
    tr.regime = regime;
    tr.center_x = regime == Domain::singular ? 1.0 : 0.0;
    tr.d = opts.d;
    const double cx = tr.center_x;

    std::vector<EventKind> kinds = {EventKind::cross_x_eq_0, EventKind::cross_y_eq_0};
    if (std::isfinite(opts.d)) kinds.insert(kinds.begin(), EventKind::cross_x_eq_d);
    if (regime == Domain::singular) kinds.push_back(EventKind::cross_x_eq_1);

    auto rhs = [&g](double t, const Vec2& z) -> Vec2 { return {z[1], -g(t, z[0])}; };

    Vec2 z_prev{z0.x, z0.y};
    double theta_prev = std::atan2(z0.y, z0.x - cx);
    tr.theta0 = theta_prev;
    auto push_sample = [&](double t, const Vec2& z, double th) {
        if (!opts.keep_samples && !tr.t.empty()) {
            tr.t.back() = t;
            tr.z.back() = z;
            tr.theta.back() = th;
            tr.rho.back() = std::hypot(z[0] - cx, z[1]);
            return;
        }
        tr.t.push_back(t);
        tr.z.push_back(z);
        tr.theta.push_back(th);
        tr.rho.push_back(std::hypot(z[0] - cx, z[1]));
    };
    push_sample(z0.t, z_prev, theta_prev);

    // Events exactly at the start point.
    bool stop_now = false;
    for (EventKind k : kinds) {
        if (detail::event_value(k, z_prev, opts.d) == 0.0) {
            const Vec2 dz = rhs(z0.t, z_prev);
            const double slope = k == EventKind::cross_y_eq_0 ? dz[1] : dz[0];
            Event ev{k, z0.t, z_prev[0], z_prev[1], slope >= 0 ? 1 : -1, theta_prev};
            tr.events.push_back(ev);
            if (opts.stop_on && opts.stop_on(ev)) stop_now = true;
        }
    }
    if (stop_now) {
        tr.stopped_on_event = true;
        tr.theta_end = theta_prev;
        return tr;
    }

    SolverOptions so;
    so.rtol = opts.rtol;
    so.atol = opts.atol;
    so.h_init = opts.h_init;
    so.h_min = opts.h_min;
    so.h_max = opts.h_max;
    so.max_steps = opts.max_steps;
    so.stop_times = opts.stop_times;
    so.singular_wall = regime == Domain::singular;

    auto cap = [&](double, const Vec2& z) {
        if (regime == Domain::singular && z[1] < 0) return 0.5 * z[0] / -z[1];
        return inf;
    };

    auto observe = [&](const DenseSegment<2>& seg, double t1, const Vec2& z1) -> StepVerdict {
        if (regime == Domain::singular && !(z1[0] > 0)) return StepVerdict::reject;
        const double ax = z_prev[0] - cx, ay = z_prev[1];
        const Vec2 zm = seg.eval(seg.t0 + 0.5 * (t1 - seg.t0));
        const double mx = zm[0] - cx, my = zm[1];
        const double bx = z1[0] - cx, by = z1[1];
        const double rho1 = std::hypot(bx, by);
        const double dth = detail::angle_between(ax, ay, mx, my) + detail::angle_between(mx, my, bx, by);
        const bool near_center = rho1 < opts.center_floor || std::hypot(ax, ay) < opts.center_floor;
        if (near_center) tr.center_hit = true;
        if (!near_center && std::abs(dth) > opts.max_angle_step && seg.h > 1e-12) return StepVerdict::reject;

        // Event location on the dense output.
        std::vector<Event> found;
        constexpr int sub = 4;
        for (EventKind k : kinds) {
            double ta = seg.t0;
            double va = detail::event_value(k, z_prev, opts.d);
            for (int s = 1; s <= sub; ++s) {
                const double tb = s == sub ? t1 : seg.t0 + (t1 - seg.t0) * s / sub;
                const Vec2 zb = s == sub ? z1 : seg.eval(tb);
                const double vb = detail::event_value(k, zb, opts.d);
                if (va != 0.0 && (vb == 0.0 || (va < 0) != (vb < 0))) {
                    double lo = ta, hi = tb;
                    double vlo = va;
                    while (hi - lo > opts.event_tol) {
                        const double mid = 0.5 * (lo + hi);
                        const double vm = detail::event_value(k, seg.eval(mid), opts.d);
                        if (vm == 0.0) {
                            lo = hi = mid;
                            break;
                        }
                        if ((vm < 0) == (vlo < 0)) {
                            lo = mid;
                            vlo = vm;
                        } else {
                            hi = mid;
                        }
                    }
                    const double te = hi;
                    Vec2 ze = te == t1 ? z1 : seg.eval(te);
                    // Snap the crossing coordinate exactly onto the event surface.
                    switch (k) {
                    case EventKind::cross_x_eq_d: ze[0] = opts.d; break;
                    case EventKind::cross_x_eq_0: ze[0] = 0.0; break;
                    case EventKind::cross_y_eq_0: ze[1] = 0.0; break;
                    case EventKind::cross_x_eq_1: ze[0] = 1.0; break;
                    }
                    const double th = theta_prev + detail::angle_between(ax, ay, ze[0] - cx, ze[1]);
                    found.push_back({k, te, ze[0], ze[1], va < 0 ? 1 : -1, th});
                }
                ta = tb;
                va = vb;
            }
        }
        std::sort(found.begin(), found.end(), [](const Event& a, const Event& b) { return a.t < b.t; });

        StepVerdict verdict = StepVerdict::accept;
        double t_stop = t1;
        Vec2 z_stop = z1;
        double th_stop = theta_prev + dth;
        for (const auto& ev : found) {
            tr.events.push_back(ev);
            if (opts.stop_on && opts.stop_on(ev)) {
                verdict = StepVerdict::stop;
                t_stop = ev.t;
                z_stop = {ev.x, ev.y};
                th_stop = ev.theta;
                tr.stopped_on_event = true;
                break;
            }
        }
        if (opts.keep_dense) tr.dense.push_back(seg);
        push_sample(t_stop, z_stop, th_stop);
        z_prev = z_stop;
        theta_prev = th_stop;
        return verdict;
    };

    drive<2>(rhs, z0.t, Vec2{z0.x, z0.y}, t_end, so, cap, observe);
    tr.theta_end = theta_prev;
    return tr;
}

/// Integrates the homotopy field from z0 to t_end.
inline Trajectory integrate(const HomotopyField& field, const PhaseState& z0, double t_end,
                            const IntegrateOptions& opts = {})
{
    return integrate_planar(field, field.regime(), z0, t_end, opts);
}

/// Clockwise laps about the rotation center.
inline double rotation_count(const Trajectory& tr)
{
    if (tr.center_hit) throw Error("trajectory passed through the rotation center; rotation count invalid");
    return (tr.theta0 - tr.theta_end) / (2 * pi);
}

/// The eight labelled instants of one lap, starting at x = d with y > 0.
struct LapInstants {
    std::array<double, 8> t{};
    std::array<Vec2, 8> z{};
};

inline std::optional<LapInstants> crossing_times_from(const Trajectory& tr, double d, std::size_t& cursor)
{
    if (!(d < 0)) throw InvalidArgument("threshold d must be negative");
    struct Pattern {
        EventKind kind;
        int sign; // sign of the other coordinate
    };
    static const std::array<Pattern, 8> pat = {{{EventKind::cross_x_eq_d, +1},
                                                {EventKind::cross_x_eq_0, +1},
                                                {EventKind::cross_y_eq_0, +1},
                                                {EventKind::cross_x_eq_0, -1},
                                                {EventKind::cross_x_eq_d, -1},
                                                {EventKind::cross_y_eq_0, -1},
                                                {EventKind::cross_x_eq_d, +1},
                                                {EventKind::cross_x_eq_0, +1}}};
    auto matches = [&](const Event& e, const Pattern& p) {
        if (e.kind != p.kind) return false;
        const double other = e.kind == EventKind::cross_y_eq_0 ? e.x : e.y;
        return p.sign > 0 ? other > 0 : other < 0;
    };
    std::vector<const Event*> evs;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < tr.events.size(); ++i) {
        const auto& e = tr.events[i];
        if (e.kind == EventKind::cross_x_eq_d || e.kind == EventKind::cross_x_eq_0 || e.kind == EventKind::cross_y_eq_0) {
            evs.push_back(&e);
            idx.push_back(i);
        }
    }
    for (std::size_t s = 0; s < evs.size(); ++s) {
        if (idx[s] < cursor) continue;
        if (!matches(*evs[s], pat[0])) continue;
        if (s + 7 >= evs.size()) return std::nullopt;
        LapInstants lap;
        for (std::size_t k = 0; k < 8; ++k) {
            const Event& e = *evs[s + k];
            if (!matches(e, pat[k]))
                throw Error("lap does not follow the expected crossing pattern (trajectory not large enough)");
            lap.t[k] = e.t;
            lap.z[k] = {e.x, e.y};
        }
        cursor = idx[s + 6];
        return lap;
    }
    return std::nullopt;
}

/// First complete lap of the trajectory; throws when none is found.
inline LapInstants crossing_times(const Trajectory& tr, double d)
{
    std::size_t cursor = 0;
    auto lap = crossing_times_from(tr, d, cursor);
    if (!lap) throw Error("lap incomplete: no full lap starting at x = d with y > 0");
    return *lap;
}

/// Every consecutive lap in the trajectory.
inline std::vector<LapInstants> all_laps(const Trajectory& tr, double d)
{
    std::vector<LapInstants> out;
    std::size_t cursor = 0;
    for (;;) {
        auto lap = crossing_times_from(tr, d, cursor);
        if (!lap) break;
        out.push_back(*lap);
    }
    return out;
}

struct HalfTurn {
    double right = 0.0; // t4 - t2
    double left = 0.0;  // t8 - t4
};

/// Durations of the two half-turns of the orbit started at (0, y0).
template <class G>
HalfTurn measure_halfturn_of(const G& g, double y0, double t_horizon, IntegrateOptions opts = {})
{
    if (!(y0 > 0)) throw InvalidArgument("y0 must be positive");
    double t4 = std::numeric_limits<double>::quiet_NaN();
    opts.d = std::numeric_limits<double>::quiet_NaN();
    opts.keep_dense = false;
    opts.keep_samples = false;
    opts.stop_on = [&t4](const Event& e) {
        if (e.kind != EventKind::cross_x_eq_0) return false;
        if (std::isnan(t4)) {
            if (e.y < 0) t4 = e.t;
            return false;
        }
        return e.y > 0;
    };
    Trajectory tr = integrate_planar(g, Domain::full_line, {0.0, 0.0, y0}, t_horizon, opts);
    if (!tr.stopped_on_event) throw Error("half-turns not completed within the horizon");
    return {t4, tr.t.back() - t4};
}

inline HalfTurn measure_halfturn(const HomotopyField& field, double y0, IntegrateOptions opts = {})
{
    return measure_halfturn_of(field, y0, 20 * field.T(), std::move(opts));
}

/// Angular speed -theta' and radial speed rho' about (cx, 0).
struct PolarRates {
    double omega; // -theta'
    double rho_dot;
};

inline PolarRates polar_rates(double x, double y, double g, double cx = 0.0)
{
    const double X = x - cx;
    const double r2 = X * X + y * y;
    return {(y * y + X * g) / r2, y * (X - g) / std::sqrt(r2)};
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr)
{
    os << "t,x,y,rho,theta\n";
    for (std::size_t i = 0; i < tr.t.size(); ++i)
        os << fmt17(tr.t[i]) << ',' << fmt17(tr.z[i][0]) << ',' << fmt17(tr.z[i][1]) << ',' << fmt17(tr.rho[i])
           << ',' << fmt17(tr.theta[i]) << '\n';
}

inline void write_events_csv(std::ostream& os, const Trajectory& tr)
{
    os << "kind,t,x,y\n";
    for (const auto& e : tr.events)
        os << to_string(e.kind) << ',' << fmt17(e.t) << ',' << fmt17(e.x) << ',' << fmt17(e.y) << '\n';
}

} // namespace resonance
