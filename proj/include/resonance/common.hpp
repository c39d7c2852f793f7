#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <system_error>
#include <thread>
#include <vector>

namespace resonance {

inline constexpr double pi = std::numbers::pi;
inline constexpr double inf = std::numeric_limits<double>::infinity();

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when an input violates a documented precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Formats a double with 17 significant digits (round-trip exact).
inline std::string fmt17(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                   std::chars_format::general, 17);
    if (ec != std::errc{}) return "nan";
    return std::string(buf.data(), end);
}

/// Shortest representation that parses back to the same double.
inline std::string fmt_shortest(double v)
{
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{}) return fmt17(v);
    return std::string(buf.data(), end);
}

/// Worker count: RESONANCE_THREADS caps the hardware concurrency.
inline unsigned worker_count()
{
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("RESONANCE_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) hw = std::min(hw, static_cast<unsigned>(v));
    }
    return hw;
}

/// Evaluates fn(i) for i in [0, n) and returns results in index order.
/// Output does not depend on the number of workers.
template <class Fn>
auto parallel_map(std::size_t n, Fn&& fn) -> std::vector<decltype(fn(std::size_t{}))>
{
    using R = decltype(fn(std::size_t{}));
    std::vector<R> out(n);
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) out[i] = fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline GaussRule gauss_legendre(int n)
{
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        rule.nodes[i] = -z;
        rule.weights[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return rule;
}

inline const GaussRule& gauss8()
{
    static const GaussRule rule = gauss_legendre(8);
    return rule;
}

/// Composite Gauss-Legendre over [a, b] with `panels` equal panels.
template <class F>
double integrate_gl(F&& f, double a, double b, int panels, const GaussRule& rule = gauss8())
{
    if (panels < 1) panels = 1;
    const double h = (b - a) / panels;
    double sum = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * h;
        const double mid = lo + 0.5 * h;
        double part = 0.0;
        for (std::size_t k = 0; k < rule.nodes.size(); ++k)
            part += rule.weights[k] * f(mid + 0.5 * h * rule.nodes[k]);
        sum += 0.5 * h * part;
    }
    return sum;
}

/// Uniform grid of n points covering [a, b] inclusive.
inline std::vector<double> linspace(double a, double b, std::size_t n)
{
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = a;
        return v;
    }
    for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / (n - 1);
    return v;
}

/// n log-spaced points from a to b (both > 0) inclusive.
inline std::vector<double> logspace(double a, double b, std::size_t n)
{
    std::vector<double> v = linspace(std::log(a), std::log(b), n);
    for (double& x : v) x = std::exp(x);
    v.front() = a;
    v.back() = b;
    return v;
}

/// Periodic t-grid of n points on [0, T) (endpoint excluded).
inline std::vector<double> periodic_grid(double T, std::size_t n)
{
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = T * static_cast<double>(i) / n;
    return v;
}

/// Reduces t into [0, T).
inline double wrap_period(double t, double T)
{
    double r = std::fmod(t, T);
    if (r < 0) r += T;
    if (r >= T) r -= T;
    return r;
}

/// Golden-section minimisation of a unimodal function on [a, b].
template <class F>
std::pair<double, double> golden_minimize(F&& f, double a, double b, int iterations = 80)
{
    constexpr double g = 0.6180339887498949;
    double c = b - g * (b - a);
    double d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < iterations; ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        if (std::abs(b - a) <= 1e-15 * (std::abs(a) + std::abs(b))) break;
    }
    return fc < fd ? std::pair{c, fc} : std::pair{d, fd};
}

} // namespace resonance
