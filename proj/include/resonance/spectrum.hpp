#pragma once

// Eigenvalues and Dancer-Fucik curves for T-periodic problems.

#include "resonance/common.hpp"

#include <set>

namespace resonance {

struct SpectrumPoint {
    double mu = 0.0;
    double nu = 0.0;
    double T = 2.0 * pi;
};

/// Rectangle [mu_down, mu_up] x [nu_down, nu_up]; bounds may be +inf.
struct AsymptoticRectangle {
    double mu_down = 0.0, mu_up = 0.0;
    double nu_down = 0.0, nu_up = 0.0;
};

/// mu_j = (j pi / T)^2.
inline double eigenvalue(int j, double T)
{
    if (j < 1) throw InvalidArgument("eigenvalue index must be >= 1");
    if (!(T > 0)) throw InvalidArgument("period must be positive");
    const double s = j * pi / T;
    return s * s;
}

namespace detail {
inline double inv_sqrt(double v) { return std::isinf(v) ? 0.0 : 1.0 / std::sqrt(v); }
} // namespace detail

/// Signed residual of the curve C_j; zero exactly on the curve.
/// For j >= 1 it is decreasing in both mu and nu.
inline double curve_residual(const SpectrumPoint& p, int j)
{
    if (j < 0) throw InvalidArgument("curve index must be >= 0");
    if (!(p.T > 0)) throw InvalidArgument("period must be positive");
    if (j == 0) {
        if (p.mu < 0 || p.nu < 0) throw InvalidArgument("mu, nu must be nonnegative");
        if (p.mu == 0 || p.nu == 0) return 0.0;
        return p.mu * p.nu;
    }
    if (!(p.mu > 0) || !(p.nu > 0)) throw InvalidArgument("curve residual needs mu > 0 and nu > 0");
    return (pi / p.T) * (detail::inv_sqrt(p.mu) + detail::inv_sqrt(p.nu)) - 1.0 / j;
}

/// Point of C_j with the given nu, located by bisection on the residual.
/// Requires nu > mu_j (otherwise the curve has no point at that height).
inline double curve_mu_at(double nu, int j, double T)
{
    const double muj = eigenvalue(j, T);
    if (!(nu > muj)) throw InvalidArgument("nu must exceed the asymptote eigenvalue");
    auto r = [&](double mu) { return curve_residual({mu, nu, T}, j); };
    double lo = muj, hi = 2.0 * muj;
    while (r(hi) > 0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (r(mid) > 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

enum class Contact { lower_corner, upper_corner, interior, asymptotic };

inline const char* to_string(Contact c)
{
    switch (c) {
    case Contact::lower_corner: return "lower_corner";
    case Contact::upper_corner: return "upper_corner";
    case Contact::interior: return "interior";
    case Contact::asymptotic: return "asymptotic";
    }
    return "?";
}

enum class Resonance { nonresonant, simple_resonance, double_resonance, unbounded_double_resonance, interior_crossing };

inline const char* to_string(Resonance r)
{
    switch (r) {
    case Resonance::nonresonant: return "nonresonant";
    case Resonance::simple_resonance: return "simple_resonance";
    case Resonance::double_resonance: return "double_resonance";
    case Resonance::unbounded_double_resonance: return "unbounded_double_resonance";
    case Resonance::interior_crossing: return "interior_crossing";
    }
    return "?";
}

struct CurveContact {
    int j;
    Contact contact;
};

struct Classification {
    Resonance kind = Resonance::nonresonant;
    std::vector<CurveContact> contacts;
    int N = 0; // lower index of the double-resonance pair, if any

    std::vector<int> curves() const
    {
        std::vector<int> out;
        for (const auto& c : contacts) out.push_back(c.j);
        return out;
    }
};

namespace detail {
inline bool rel_equal(double a, double b, double tol = 1e-12)
{
    if (std::isinf(a) || std::isinf(b)) return a == b;
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

/// Residual with an explicit zero tolerance relative to 1/j.
inline int residual_sign(double mu, double nu, int j, double T)
{
    const double r = (pi / T) * (inv_sqrt(mu) + inv_sqrt(nu)) - 1.0 / j;
    if (std::abs(r) <= 1e-12 / j) return 0;
    return r > 0 ? 1 : -1;
}
} // namespace detail

/// Position of W relative to the spectrum: which curves it meets and how.
inline Classification classify(const AsymptoticRectangle& W, double T, int j_max = 64)
{
    if (!(T > 0)) throw InvalidArgument("period must be positive");
    if (W.mu_down < 0 || W.nu_down < 0 || W.mu_down > W.mu_up || W.nu_down > W.nu_up || std::isnan(W.mu_up) ||
        std::isnan(W.nu_up))
        throw InvalidArgument("invalid asymptotic rectangle");

    Classification out;

    // One-sided unbounded band between two consecutive asymptotes.
    const bool unbounded_nu = std::isinf(W.nu_up);
    const bool unbounded_mu = std::isinf(W.mu_up);
    if (unbounded_nu != unbounded_mu) {
        const double lo = unbounded_nu ? W.mu_down : W.nu_down;
        const double hi = unbounded_nu ? W.mu_up : W.nu_up;
        for (int n = 1; n < j_max; ++n) {
            if (detail::rel_equal(lo, eigenvalue(n, T)) && detail::rel_equal(hi, eigenvalue(n + 1, T))) {
                out.kind = Resonance::unbounded_double_resonance;
                out.N = n;
                out.contacts = {{n, Contact::asymptotic}, {n + 1, Contact::asymptotic}};
                return out;
            }
        }
    }

    if (W.mu_down == 0 || W.nu_down == 0) {
        const bool single_point = W.mu_down == W.mu_up && W.nu_down == W.nu_up;
        out.contacts.push_back({0, single_point ? Contact::lower_corner : Contact::interior});
    }

    bool crossing = false;
    for (int j = 1; j <= j_max; ++j) {
        if (W.mu_up == 0 || W.nu_up == 0) break;
        const double mu_lo = std::max(W.mu_down, std::numeric_limits<double>::min());
        const double nu_lo = std::max(W.nu_down, std::numeric_limits<double>::min());
        const int s_lo = detail::residual_sign(mu_lo, nu_lo, j, T);
        const int s_hi = detail::residual_sign(W.mu_up, W.nu_up, j, T);
        const bool up_at_inf = std::isinf(W.mu_up) || std::isinf(W.nu_up);
        if (s_hi > 0) break; // this and every later curve lie beyond W
        if (s_lo < 0) continue;
        CurveContact c{j, Contact::interior};
        if (s_lo == 0 && s_hi == 0)
            c.contact = Contact::lower_corner; // degenerate single point
        else if (s_lo == 0)
            c.contact = Contact::lower_corner;
        else if (s_hi == 0)
            c.contact = up_at_inf ? Contact::asymptotic : Contact::upper_corner;
        else
            crossing = true;
        out.contacts.push_back(c);
    }
    for (const auto& c : out.contacts)
        if (c.contact == Contact::interior) crossing = true;

    if (crossing)
        out.kind = Resonance::interior_crossing;
    else if (out.contacts.empty())
        out.kind = Resonance::nonresonant;
    else if (out.contacts.size() == 1)
        out.kind = Resonance::simple_resonance;
    else
        out.kind = Resonance::double_resonance;
    if (out.contacts.size() >= 2) out.N = out.contacts.front().j;
    return out;
}

/// Samples nu on C_j over a log grid, for plotting; returns (mu, nu) pairs.
inline std::vector<std::pair<double, double>> sample_curve(int j, double T, std::size_t n = 64, double span = 1e4)
{
    std::vector<std::pair<double, double>> pts;
    const double m2 = eigenvalue(2 * j, T);
    // Right half of the curve (nu >= mu) mirrored to obtain the left half.
    std::vector<double> nus = logspace(m2, m2 * span, n);
    std::vector<std::pair<double, double>> right;
    for (double nu : nus) {
        double mu = nu == m2 ? m2 : curve_mu_at(nu, j, T);
        right.emplace_back(mu, nu);
    }
    for (auto it = right.rbegin(); it != right.rend(); ++it) pts.emplace_back(it->second, it->first);
    for (std::size_t i = 1; i < right.size(); ++i) pts.push_back(right[i]);
    return pts;
}

} // namespace resonance
