#pragma once

// Hypothesis checks and Landesman-Lazer integrals.

#include "resonance/model.hpp"

#include <ostream>

namespace resonance {

enum class Verdict { pass, fail, inconclusive, unreliable };

inline const char* to_string(Verdict v)
{
    switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
    case Verdict::unreliable: return "unreliable";
    }
    return "?";
}

enum class LLVariant { truncated_sine, abs_sine };
enum class LLSide { lower, upper };

inline const char* to_string(LLVariant v) { return v == LLVariant::truncated_sine ? "truncated_sine" : "abs_sine"; }
inline const char* to_string(LLSide s) { return s == LLSide::lower ? "lower" : "upper"; }

/// Test profile phi_j, extended T-periodically.
inline double phi(LLVariant v, int j, double T, double t)
{
    const double s = wrap_period(t, T);
    const double w = std::sqrt(eigenvalue(j, T));
    if (v == LLVariant::abs_sine) return std::abs(std::sin(w * s));
    return s <= T / j ? std::sin(w * s) : 0.0;
}

namespace detail {

/// Breakpoints of phi_j(t + tau) in [0, T], sorted, including both ends.
inline std::vector<double> phi_breaks(int j, double T, double tau, const std::vector<double>& extra)
{
    std::vector<double> b = {0.0, T};
    for (int k = 0; k < j; ++k) {
        double t = wrap_period(k * T / j - tau, T);
        b.push_back(t);
    }
    for (double e : extra) b.push_back(wrap_period(e, T));
    std::sort(b.begin(), b.end());
    std::vector<double> out;
    for (double v : b)
        if (out.empty() || v - out.back() > 1e-14 * T) out.push_back(v);
    if (out.back() < T) out.push_back(T);
    out.back() = T;
    return out;
}

} // namespace detail

/// Integral over [0, T] of residue(t) * phi_j(t + tau) by composite
/// Gauss-Legendre split at the kinks of phi (and any extra breakpoints).
template <class R>
double ll_integral(R&& residue, double T, int j, LLVariant v, double tau, int panels = 64,
                   const std::vector<double>& extra_breaks = {})
{
    const auto b = detail::phi_breaks(j, T, tau, extra_breaks);
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < b.size(); ++i) {
        const double len = b[i + 1] - b[i];
        const int p = std::max(1, static_cast<int>(std::lround(panels * len / T)));
        sum += integrate_gl([&](double t) { return residue(t) * phi(v, j, T, t + tau); }, b[i], b[i + 1], p);
    }
    return sum;
}

// ---------------------------------------------------------------------------
// Asymptotic envelopes.

enum class Direction { plus_infinity, zero_plus, minus_infinity };

inline const char* to_string(Direction d)
{
    switch (d) {
    case Direction::plus_infinity: return "x->+inf";
    case Direction::zero_plus: return "x->0+";
    case Direction::minus_infinity: return "x->-inf";
    }
    return "?";
}

enum class TailStatus { stabilized, diverged, unreliable };

struct EnvelopeOptions {
    int t_points = 512;
    double X0 = 1e3;
    int octaves = 20;
    int per_octave = 16;
    int window = 10;
    double stab_rel = 1e-4;
};

/// liminf / limsup over a geometric x tail of residue(t, x) = f(t, x) - mu_ref x,
/// tabulated over one period.
struct AsymptoticEnvelope {
    Direction direction = Direction::plus_infinity;
    double mu_ref = 0.0;
    double T = 2 * pi;
    std::vector<double> t;
    std::vector<double> lower, upper;
    std::vector<TailStatus> lower_status, upper_status;
    EnvelopeOptions opts;

    bool stabilized(LLSide side) const
    {
        const auto& st = side == LLSide::lower ? lower_status : upper_status;
        return std::none_of(st.begin(), st.end(), [](TailStatus s) { return s == TailStatus::unreliable; });
    }

    /// Periodic four-point interpolation of one side; infinities propagate.
    double value(LLSide side, double s) const
    {
        const auto& v = side == LLSide::lower ? lower : upper;
        const std::size_t M = v.size();
        const double h = T / M;
        const double u = wrap_period(s, T) / h;
        long i = static_cast<long>(std::floor(u));
        const double f = u - i;
        auto at = [&](long k) { return v[static_cast<std::size_t>(((k % static_cast<long>(M)) + M) % M)]; };
        const double a = at(i - 1), b = at(i), c = at(i + 1), d = at(i + 2);
        if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c) || !std::isfinite(d))
            return f < 0.5 ? b : c;
        return -f * (f - 1) * (f - 2) / 6 * a + (f + 1) * (f - 1) * (f - 2) / 2 * b - (f + 1) * f * (f - 2) / 2 * c +
               (f + 1) * f * (f - 1) / 6 * d;
    }
};

namespace detail {

struct TailEstimate {
    double value;
    TailStatus status;
};

/// Tail extremum (sign = +1 for liminf, -1 for limsup) of a scalar sequence
/// sampled on octaves; r(s) evaluates at log-position s (in octaves).
template <class R>
TailEstimate tail_extremum(R&& r, int sign, const EnvelopeOptions& o)
{
    const int K = o.octaves, n = o.per_octave;
    std::vector<double> m(K);
    std::vector<double> arg(K);
    for (int k = 0; k < K; ++k) {
        double best = inf, best_s = k;
        for (int i = 0; i <= n; ++i) {
            const double s = k + static_cast<double>(i) / n;
            const double v = sign * r(s);
            if (v < best) {
                best = v;
                best_s = s;
            }
        }
        const double half = 1.0 / n;
        auto polished = golden_minimize([&](double s) { return sign * r(s); }, best_s - half, best_s + half, 80);
        if (polished.second < best) {
            best = polished.second;
            best_s = polished.first;
        }
        m[k] = best;
        arg[k] = best_s;
    }
    // running extremum of the tail starting at each octave
    std::vector<double> E(K);
    E[K - 1] = m[K - 1];
    for (int k = K - 2; k >= 0; --k) E[k] = std::min(E[k + 1], m[k]);
    const int start = std::max(0, K - o.window);
    const double est = E[start];

    // divergence of the extremum toward -inf (in the signed frame)
    auto diverging_down = [&]() {
        if (K < 5) return false;
        for (int k = K - 4; k < K; ++k)
            if (!(m[k] < m[k - 1])) return false;
        for (int k = K - 3; k < K; ++k) {
            const double inc = m[k - 1] - m[k], prev = m[k - 2] - m[k - 1];
            if (!(inc >= 0.9 * prev)) return false;
        }
        return m[K - 1] < 0 && arg[K - 1] >= K - 1 - 1e-12;
    };
    auto diverging_up = [&]() {
        if (K < 5) return false;
        for (int k = K - 4; k < K; ++k)
            if (!(m[k] > m[k - 1])) return false;
        for (int k = K - 3; k < K; ++k) {
            const double inc = m[k] - m[k - 1], prev = m[k - 1] - m[k - 2];
            if (!(inc >= 0.9 * prev)) return false;
        }
        return m[K - 1] > 0;
    };

    if (diverging_down()) return {sign > 0 ? -inf : inf, TailStatus::diverged};
    bool stable = start >= 3;
    for (int k = start; stable && k > start - 3; --k)
        if (std::abs(E[k] - E[k - 1]) >= o.stab_rel * std::max(1.0, std::abs(est))) stable = false;
    // an extremum at the far end of the grid may still be moving
    int arg_oct = start;
    for (int k = start; k < K; ++k)
        if (m[k] <= m[arg_oct]) arg_oct = k;
    if (stable && arg[arg_oct] >= K - 1.0 / n) {
        for (int k = K - 1; stable && k > K - 4; --k)
            if (std::abs(m[k] - m[k - 1]) >= o.stab_rel * std::max(1.0, std::abs(est))) stable = false;
    }
    if (stable) return {sign * est, TailStatus::stabilized};
    if (diverging_up()) return {sign > 0 ? inf : -inf, TailStatus::diverged};
    return {sign * est, TailStatus::unreliable};
}

inline double tail_point(Direction d, double X0, double s)
{
    switch (d) {
    case Direction::plus_infinity: return X0 * std::exp2(s);
    case Direction::minus_infinity: return -X0 * std::exp2(s);
    case Direction::zero_plus: return std::exp2(-s) / X0;
    }
    return 0.0;
}

} // namespace detail

/// Estimates liminf and limsup of f(t, x) - mu_ref x along `dir` at each t.
inline AsymptoticEnvelope asymptotic_envelope(const NonlinearityModel& f, double mu_ref,
                                              Direction dir = Direction::plus_infinity,
                                              const EnvelopeOptions& o = {})
{
    AsymptoticEnvelope env;
    env.direction = dir;
    env.mu_ref = mu_ref;
    env.T = f.T();
    env.opts = o;
    env.t = periodic_grid(f.T(), static_cast<std::size_t>(o.t_points));
    struct Pair {
        detail::TailEstimate lo, hi;
    };
    auto res = parallel_map(env.t.size(), [&](std::size_t i) {
        const double t = env.t[i];
        auto r = [&](double s) {
            const double x = detail::tail_point(dir, o.X0, s);
            return f(t, x) - mu_ref * x;
        };
        return Pair{detail::tail_extremum(r, +1, o), detail::tail_extremum(r, -1, o)};
    });
    for (const auto& p : res) {
        env.lower.push_back(p.lo.value);
        env.lower_status.push_back(p.lo.status);
        env.upper.push_back(p.hi.value);
        env.upper_status.push_back(p.hi.status);
    }
    return env;
}

/// Integral of one side of the envelope against phi_j(. + tau).
/// Returns +-inf when the envelope is infinite where phi is positive, and NaN
/// when both infinities occur.
inline double ll_integral(const AsymptoticEnvelope& env, LLSide side, int j, LLVariant v, double tau,
                          int panels = 64)
{
    const auto& vals = side == LLSide::lower ? env.lower : env.upper;
    bool pos = false, neg = false;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        if (std::isfinite(vals[i])) continue;
        if (phi(v, j, env.T, env.t[i] + tau) <= 0.0) continue;
        (vals[i] > 0 ? pos : neg) = true;
    }
    if (pos && neg) return std::numeric_limits<double>::quiet_NaN();
    if (pos) return inf;
    if (neg) return -inf;
    return ll_integral([&](double s) { return env.value(side, s); }, env.T, j, v, tau, panels);
}

struct LLReport {
    LLVariant variant = LLVariant::truncated_sine;
    LLSide side = LLSide::lower;
    int j = 1;
    std::vector<double> tau;
    std::vector<double> values;
    double min = 0.0, max = 0.0;
    double margin = 0.0;
    Verdict verdict = Verdict::unreliable;
};

struct LLOptions {
    int tau_points = 256;
    int panels = 64;
    double margin_floor = 1e-8;
    EnvelopeOptions envelope;
};

namespace detail {

inline void ll_finish(LLReport& r, bool reliable, double floor)
{
    r.min = inf;
    r.max = -inf;
    bool nan = false;
    for (double v : r.values) {
        if (std::isnan(v)) {
            nan = true;
            continue;
        }
        r.min = std::min(r.min, v);
        r.max = std::max(r.max, v);
    }
    r.margin = r.side == LLSide::lower ? r.min : -r.max;
    if (nan || !reliable)
        r.verdict = Verdict::unreliable;
    else if (std::abs(r.margin) < floor)
        r.verdict = Verdict::inconclusive;
    else
        r.verdict = r.margin > 0 ? Verdict::pass : Verdict::fail;
}

} // namespace detail

/// Evaluates one side over a tau grid using a residue function directly.
template <class R>
LLReport ll_report(R&& residue, double T, int j, LLVariant v, LLSide side, const LLOptions& o = {},
                   const std::vector<double>& extra_breaks = {})
{
    LLReport r;
    r.variant = v;
    r.side = side;
    r.j = j;
    r.tau = periodic_grid(T, static_cast<std::size_t>(o.tau_points));
    r.values = parallel_map(r.tau.size(), [&](std::size_t i) {
        return ll_integral(residue, T, j, v, r.tau[i], o.panels, extra_breaks);
    });
    detail::ll_finish(r, true, o.margin_floor);
    return r;
}

struct LLVerdictPair {
    LLReport lower, upper;
    AsymptoticEnvelope env_lower, env_upper;
    bool pass() const { return lower.verdict == Verdict::pass && upper.verdict == Verdict::pass; }
};

/// Both Landesman-Lazer conditions for `model` at the declared N.
inline LLVerdictPair ll_verdict(const NonlinearityModel& model, LLVariant v, const LLOptions& o = {})
{
    const int N = model.N();
    const double T = model.T();
    LLVerdictPair out;
    out.env_lower = asymptotic_envelope(model, model.mu_N(), Direction::plus_infinity, o.envelope);
    out.env_upper = asymptotic_envelope(model, model.mu_N1(), Direction::plus_infinity, o.envelope);
    auto side = [&](const AsymptoticEnvelope& env, LLSide s, int j) {
        LLReport r;
        r.variant = v;
        r.side = s;
        r.j = j;
        r.tau = periodic_grid(T, static_cast<std::size_t>(o.tau_points));
        r.values = parallel_map(r.tau.size(), [&](std::size_t i) { return ll_integral(env, s, j, v, r.tau[i], o.panels); });
        detail::ll_finish(r, env.stabilized(s), o.margin_floor);
        return r;
    };
    out.lower = side(out.env_lower, LLSide::lower, N);
    out.upper = side(out.env_upper, LLSide::upper, N + 1);
    return out;
}

inline void write_ll_csv(std::ostream& os, const LLReport& lower, const LLReport& upper)
{
    os << "tau,lower,upper\n";
    for (std::size_t i = 0; i < lower.tau.size(); ++i)
        os << fmt17(lower.tau[i]) << ',' << fmt17(lower.values[i]) << ',' << fmt17(upper.values[i]) << '\n';
}

// ---------------------------------------------------------------------------
// Growth hypotheses.

struct BandOptions {
    double x_min = 1e-6;
    double x_max = 1e8;
    int x_points = 400;
    int t_points = 64;
};

struct BandEstimate {
    double c = 0.0;        // smallest c on the full grid
    double c_inner = 0.0;  // same on x <= x_max / 100
    bool stable = false;
    double worst_x = 0.0, worst_t = 0.0;
};

/// Smallest c with mu_N x - c <= f <= mu_{N+1} x + c on the sampled grid.
inline BandEstimate band_constant(const NonlinearityModel& f, double x_lo, const BandOptions& o = {})
{
    const auto xs = logspace(x_lo, o.x_max, static_cast<std::size_t>(o.x_points));
    const auto ts = periodic_grid(f.T(), static_cast<std::size_t>(o.t_points));
    const double a = f.mu_N(), b = f.mu_N1();
    struct Row {
        double c, c_inner, wx, wt;
    };
    auto rows = parallel_map(xs.size(), [&](std::size_t i) {
        Row r{0.0, 0.0, xs[i], 0.0};
        for (double t : ts) {
            const double v = f(t, xs[i]);
            const double excess = std::max({a * xs[i] - v, v - b * xs[i], 0.0});
            if (excess > r.c) {
                r.c = excess;
                r.wt = t;
            }
        }
        r.c_inner = xs[i] <= o.x_max / 100 ? r.c : 0.0;
        return r;
    });
    BandEstimate e;
    for (const auto& r : rows) {
        if (r.c > e.c) {
            e.c = r.c;
            e.worst_x = r.wx;
            e.worst_t = r.wt;
        }
        e.c_inner = std::max(e.c_inner, r.c_inner);
    }
    e.stable = std::isfinite(e.c) && std::abs(e.c - e.c_inner) <= 1e-3 * std::max(1.0, e.c);
    return e;
}

struct AReport {
    std::vector<double> x;     // -10^k
    std::vector<double> ratio; // min_t f(t, x) / x
    bool superlinear = false;
    BandEstimate band;
    Verdict verdict = Verdict::fail;
    std::string reason;
};

/// One-sided superlinear growth at -inf plus the linear band at +inf.
inline AReport validate_A(const NonlinearityModel& f, int K = 8, const BandOptions& o = {})
{
    if (f.domain() != Domain::full_line) throw InvalidArgument("validate_A needs a full-line model");
    AReport r;
    const auto ts = periodic_grid(f.T(), 64);
    for (int k = 1; k <= K; ++k) {
        const double x = -std::pow(10.0, k);
        double m = inf;
        for (double t : ts) m = std::min(m, f(t, x) / x);
        r.x.push_back(x);
        r.ratio.push_back(m);
    }
    bool ok = true;
    for (int k = 1; k < K && ok; ++k) {
        const double inc = r.ratio[k] - r.ratio[k - 1];
        if (!(inc > 0)) ok = false;
        if (k >= 2) {
            const double prev = r.ratio[k - 1] - r.ratio[k - 2];
            if (!(inc >= 0.5 * prev)) ok = false;
        }
    }
    r.superlinear = ok && r.ratio.back() > f.mu_N1();
    r.band = band_constant(f, o.x_min, o);
    if (!r.superlinear) {
        r.reason = "f(t,x)/x does not diverge as x -> -inf";
        r.verdict = Verdict::fail;
    } else if (!r.band.stable) {
        r.reason = "linear band constant not stable on the sampled grid";
        r.verdict = Verdict::fail;
    } else {
        r.verdict = Verdict::pass;
    }
    return r;
}

struct A0Report {
    double delta = 0.0;
    std::vector<double> x;        // 10^-k
    std::vector<double> f2;       // max_t f(t, x)
    std::vector<double> f1;       // min_t f(t, x)
    std::vector<double> integral; // int_x^delta f_2
    bool negative_near_zero = false;
    bool diverges = false;
    bool primitive_diverges = false;
    BandEstimate band;
    Verdict verdict = Verdict::fail;
    std::string reason;
};

/// Strong singularity at 0+ and the linear band for x > 1.
inline A0Report validate_A0_Ainf(const NonlinearityModel& f, int K = 8, const BandOptions& o = {})
{
    if (f.domain() != Domain::singular) throw InvalidArgument("validate_A0_Ainf needs a singular model");
    A0Report r;
    const auto ts = periodic_grid(f.T(), 64);
    auto env = [&](double x) {
        double lo = inf, hi = -inf;
        for (double t : ts) {
            const double v = f(t, x);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        return std::pair{lo, hi};
    };
    // delta: start of the region next to 0 where the upper envelope is negative
    const double x_floor = std::pow(10.0, -K);
    const auto scan = logspace(x_floor, 1.0, 241);
    r.delta = 0.0;
    for (double x : scan) {
        if (env(x).second < 0)
            r.delta = x;
        else
            break;
    }
    r.negative_near_zero = r.delta > x_floor;
    if (!r.negative_near_zero) {
        r.reason = "upper envelope not negative near 0+";
        r.band = band_constant(f, 1.0, o);
        return r;
    }
    // f_i -> -inf and int_0^delta f_i = -inf
    auto primitive = [&](double a, double b, bool upper) {
        // log substitution xi = exp(s)
        const double la = std::log(a), lb = std::log(b);
        const int panels = std::max(8, static_cast<int>(8 * (lb - la)));
        return integrate_gl(
            [&](double s) {
                const double xi = std::exp(s);
                auto e = env(xi);
                return (upper ? e.second : e.first) * xi;
            },
            la, lb, panels);
    };
    bool f_div = true, int_div = true;
    double cum2 = 0.0;
    double prev_x = r.delta;
    for (int k = 1; k <= K; ++k) {
        const double x = std::pow(10.0, -k);
        if (x >= r.delta) continue;
        auto e = env(x);
        r.x.push_back(x);
        r.f1.push_back(e.first);
        r.f2.push_back(e.second);
        cum2 += primitive(x, prev_x, true);
        r.integral.push_back(cum2);
        prev_x = x;
    }
    const std::size_t n = r.x.size();
    if (n < 4) {
        r.reason = "too few decades below delta";
        r.band = band_constant(f, 1.0, o);
        return r;
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (!(r.f2[i] < r.f2[i - 1])) f_div = false;
        if (i >= 2) {
            const double inc = r.f2[i - 1] - r.f2[i], prev = r.f2[i - 2] - r.f2[i - 1];
            if (!(inc >= 0.5 * prev)) f_div = false;
        }
    }
    for (std::size_t i = 2; i < n; ++i) {
        const double inc = r.integral[i - 1] - r.integral[i];
        const double prev = r.integral[i - 2] - r.integral[i - 1];
        if (!(inc > 0) || !(inc >= 0.98 * prev)) int_div = false;
    }
    r.diverges = f_div;
    r.primitive_diverges = int_div;
    r.band = band_constant(f, 1.0, o);
    if (!f_div)
        r.reason = "envelope does not diverge to -inf at 0+";
    else if (!int_div)
        r.reason = "primitive stays bounded: weak singularity";
    else if (!r.band.stable)
        r.reason = "linear band constant for x > 1 not stable";
    r.verdict = (f_div && int_div && r.band.stable) ? Verdict::pass : Verdict::fail;
    return r;
}

// ---------------------------------------------------------------------------
// Uniformity of the superlinear / singular order across t.

struct HOptions {
    int tau_points = 32;
    std::vector<double> zetas = {0.2, 0.1, 0.05};
    std::vector<double> Xs = {1e2, 1e3, 1e4};
    int window_samples = 17;
    int panels_per_segment = 64;
    double delta = 1.0; // base point for the singular variant
};

struct HReport {
    Direction direction = Direction::minus_infinity;
    std::vector<double> tau, zetas, Xs;
    // ratio[z][x][tau] = F_2 / F_1 at x = -X (or 1/X)
    std::vector<std::vector<std::vector<double>>> ratio;
    std::vector<double> deviation; // max over tau of |ratio - 1| at the largest X, per zeta
    Verdict verdict = Verdict::fail;
};

/// Ratio tables of window-envelope primitives and the uniform-convergence verdict.
inline HReport check_H(const NonlinearityModel& f, Direction dir, const HOptions& o = {})
{
    if (dir == Direction::plus_infinity) throw InvalidArgument("check_H direction must be x->-inf or x->0+");
    if (dir == Direction::zero_plus && f.domain() != Domain::singular)
        throw InvalidArgument("singular variant needs a singular model");
    HReport r;
    r.direction = dir;
    r.tau = periodic_grid(f.T(), static_cast<std::size_t>(o.tau_points));
    r.zetas = o.zetas;
    r.Xs = o.Xs;
    std::vector<double> Xs = o.Xs;
    std::sort(Xs.begin(), Xs.end());

    auto table = [&](double zeta, double tau) {
        auto window = [&](double x) {
            double lo = inf, hi = -inf;
            for (int i = 0; i < o.window_samples; ++i) {
                const double t = tau - zeta + 2 * zeta * i / (o.window_samples - 1);
                const double v = f(t, x);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            return std::pair{lo, hi};
        };
        std::vector<double> ratios;
        double F1 = 0.0, F2 = 0.0;
        double prev = 0.0;
        for (std::size_t k = 0; k < Xs.size(); ++k) {
            double a, b; // integrate over [a, b] in the s variable
            if (dir == Direction::minus_infinity) {
                // x from -prev to -X; geometric panels beyond the first segment
                const double x0 = prev, x1 = Xs[k];
                if (k == 0) {
                    for (int p = 0; p < o.panels_per_segment; ++p) {
                        const double lo = x1 * p / o.panels_per_segment, hi = x1 * (p + 1) / o.panels_per_segment;
                        const GaussRule& g = gauss8();
                        for (std::size_t q = 0; q < g.nodes.size(); ++q) {
                            const double xi = -(0.5 * (lo + hi) + 0.5 * (hi - lo) * g.nodes[q]);
                            auto e = window(xi);
                            // F(-X) = int_0^{-X} f = -int_{-X}^0 f
                            F1 -= 0.5 * (hi - lo) * g.weights[q] * e.first;
                            F2 -= 0.5 * (hi - lo) * g.weights[q] * e.second;
                        }
                    }
                } else {
                    a = std::log(x0);
                    b = std::log(x1);
                    const double hs = (b - a) / o.panels_per_segment;
                    const GaussRule& g = gauss8();
                    for (int p = 0; p < o.panels_per_segment; ++p) {
                        for (std::size_t q = 0; q < g.nodes.size(); ++q) {
                            const double s = a + hs * (p + 0.5 + 0.5 * g.nodes[q]);
                            const double m = std::exp(s);
                            auto e = window(-m);
                            F1 -= 0.5 * hs * g.weights[q] * e.first * m;
                            F2 -= 0.5 * hs * g.weights[q] * e.second * m;
                        }
                    }
                }
            } else {
                // x from delta (segment 0) or 1/prev down to 1/X
                const double hi_x = k == 0 ? o.delta : 1.0 / prev, lo_x = 1.0 / Xs[k];
                a = std::log(lo_x);
                b = std::log(hi_x);
                const double hs = (b - a) / o.panels_per_segment;
                const GaussRule& g = gauss8();
                for (int p = 0; p < o.panels_per_segment; ++p) {
                    for (std::size_t q = 0; q < g.nodes.size(); ++q) {
                        const double s = a + hs * (p + 0.5 + 0.5 * g.nodes[q]);
                        const double m = std::exp(s);
                        auto e = window(m);
                        // F(1/X) = int_delta^{1/X} f = -int_{1/X}^delta f
                        F1 -= 0.5 * hs * g.weights[q] * e.first * m;
                        F2 -= 0.5 * hs * g.weights[q] * e.second * m;
                    }
                }
            }
            prev = Xs[k];
            ratios.push_back(F2 / F1);
        }
        return ratios;
    };

    r.ratio.assign(o.zetas.size(), std::vector<std::vector<double>>(Xs.size(), std::vector<double>(r.tau.size())));
    for (std::size_t z = 0; z < o.zetas.size(); ++z) {
        auto cols = parallel_map(r.tau.size(), [&](std::size_t i) { return table(o.zetas[z], r.tau[i]); });
        for (std::size_t i = 0; i < r.tau.size(); ++i)
            for (std::size_t k = 0; k < Xs.size(); ++k) r.ratio[z][k][i] = cols[i][k];
        double dev = 0.0;
        for (std::size_t i = 0; i < r.tau.size(); ++i) {
            const double v = r.ratio[z][Xs.size() - 1][i];
            dev = std::isfinite(v) ? std::max(dev, std::abs(v - 1)) : inf;
        }
        r.deviation.push_back(dev);
    }

    // order zetas from largest to smallest for the trend test
    std::vector<std::size_t> idx(o.zetas.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return o.zetas[a] > o.zetas[b]; });
    bool all_tiny = std::all_of(r.deviation.begin(), r.deviation.end(), [](double d) { return d < 1e-9; });
    bool decreasing = true;
    for (std::size_t i = 1; i < idx.size(); ++i)
        if (!(r.deviation[idx[i]] < r.deviation[idx[i - 1]])) decreasing = false;
    const double zmax = o.zetas[idx.front()], zmin = o.zetas[idx.back()];
    const bool fast = r.deviation[idx.back()] <= r.deviation[idx.front()] * std::sqrt(zmin / zmax);
    r.verdict = (all_tiny || (decreasing && fast)) ? Verdict::pass : Verdict::fail;
    return r;
}

inline void write_H_csv(std::ostream& os, const HReport& r)
{
    os << "zeta,X,tau,ratio\n";
    std::vector<double> Xs = r.Xs;
    std::sort(Xs.begin(), Xs.end());
    for (std::size_t z = 0; z < r.zetas.size(); ++z)
        for (std::size_t k = 0; k < Xs.size(); ++k)
            for (std::size_t i = 0; i < r.tau.size(); ++i)
                os << fmt17(r.zetas[z]) << ',' << fmt17(Xs[k]) << ',' << fmt17(r.tau[i]) << ','
                   << fmt17(r.ratio[z][k][i]) << '\n';
}

} // namespace resonance
