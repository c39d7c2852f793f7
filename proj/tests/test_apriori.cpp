#include <catch_amalgamated.hpp>

#include "resonance/apriori.hpp"

#include <random>

using namespace resonance;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const double T2pi = 2 * pi;

NonlinearityModel pw(const std::string& left, const std::string& right, int N = 2)
{
    return NonlinearityModel::parse_piecewise("pw", T2pi, Domain::full_line, N, left, right);
}

// Cubic-type left side, slope band inside (mu_2, mu_3) on the right.
NonlinearityModel lap_model() { return pw("(1 + 0.5*sin(t)^2)*x^3", "(1.625 + 0.3*sin(t))*x"); }

const AprioriKit& lap_kit()
{
    static const AprioriKit kit = build_kit(HomotopyField::exact(lap_model()));
    return kit;
}

} // namespace

TEST_CASE("envelopes of a t-independent cubic")
{
    auto f = HomotopyField::exact(NonlinearityModel::parse_model("c", T2pi, Domain::full_line, 2, "x^3"));
    auto env = build_envelopes(f);
    CHECK(env.d() == -0.5);
    const double d4 = std::pow(env.d(), 4);
    for (std::size_t k = 0; k < env.x.size(); k += 97) {
        const double x = env.x[k];
        CHECK(env.f1[k] == env.f2[k]);
        CHECK_THAT(env.f1[k], WithinRel(x * x * x, 1e-14));
        CHECK_THAT(env.F1[k], WithinRel((std::pow(x, 4) - d4) / 4, 1e-9));
    }
}

TEST_CASE("quintic coefficient flips the envelopes on the left")
{
    auto f = HomotopyField::exact(NonlinearityModel::parse_model("q", T2pi, Domain::full_line, 2, "(1+sin(t)^2)*x^5 + x^3"));
    auto env = build_envelopes(f);
    for (std::size_t k = 0; k < env.x.size(); k += 131) {
        const double x = env.x[k];
        CHECK_THAT(env.f1[k], WithinRel(2 * std::pow(x, 5) + std::pow(x, 3), 1e-12));
        CHECK_THAT(env.f2[k], WithinRel(std::pow(x, 5) + std::pow(x, 3), 1e-12));
    }
    for (std::size_t k = 0; k + 1 < env.x.size(); ++k) {
        REQUIRE(env.F1[k] > env.F2[k]);
        REQUIRE(env.F2[k] > env.F2[k + 1]);
    }
}

TEST_CASE("singular envelopes near zero")
{
    auto m = NonlinearityModel::parse_model("singular_quintic", T2pi, Domain::singular, 2, "-(1+sin(t)^2)*x^-5 - x^-3");
    auto env = build_envelopes(HomotopyField::exact(m));
    CHECK(env.base == 1.0);
    for (std::size_t k = 0; k + 1 < env.x.size(); k += 211) {
        const double x = env.x[k];
        CHECK_THAT(env.f1[k], WithinRel(-2 * std::pow(x, -5) - std::pow(x, -3), 1e-12));
        CHECK_THAT(env.f2[k], WithinRel(-std::pow(x, -5) - std::pow(x, -3), 1e-12));
    }
}

TEST_CASE("no valid d when f is positive far left")
{
    auto m = NonlinearityModel::parse_model("p", T2pi, Domain::full_line, 2, "x^2");
    CHECK_THROWS_AS(build_envelopes(HomotopyField::exact(m)), Error);
}

TEST_CASE("T map is the identity without t dependence")
{
    auto kit = build_kit(HomotopyField::exact(pw("x^3", "1.625*x")));
    for (double v : {3.0, 17.0, 250.0, 1e4, 3e6}) CHECK_THAT(map_T(kit, v), WithinRel(v, 1e-10));
}

TEST_CASE("T map dominates the identity on the quintic model")
{
    auto f = HomotopyField::exact(NonlinearityModel::parse_model("q", T2pi, Domain::full_line, 2, "(1+sin(t)^2)*x^5 + x^3"));
    auto env = build_envelopes(f);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 40.0);
    for (int i = 0; i < 100; ++i) {
        const double v = std::exp(u(rng)) * 1e-3;
        CHECK(map_T(env, v) >= v);
    }
    CHECK_THROWS_AS(map_T(env, 1e40), InvalidArgument);
}

TEST_CASE("M map is sublinear on a cubic-left model")
{
    const auto& kit = lap_kit();
    double prev = inf;
    for (double r : {1e2, 1e3, 1e4}) {
        const double q = map_M(kit, r) / r;
        CHECK(std::abs(q) < std::abs(prev));
        prev = q;
    }
    CHECK(std::abs(prev) < 0.2);
}

TEST_CASE("L map is increasing and the elastic radius exceeds R0")
{
    const auto& kit = lap_kit();
    double prev = 0.0;
    for (double v : logspace(kit.R0, 1e4, 20)) {
        const double l = map_L(kit, v);
        CHECK(l > prev);
        prev = l;
    }
    CHECK(kit.calR > kit.R0);
    CHECK(kit.a < 0);
}

TEST_CASE("R0 probe on cubic left and linear right")
{
    auto kit = build_kit(HomotopyField::exact(pw("x^3", "1.625*x")));
    CHECK(std::isfinite(kit.R0));
    CHECK(kit.binding == "en1");
    // kappa close to |1 - mu| / 2 inflated by the safety factors
    CHECK_THAT(kit.kappa, WithinRel(0.3125 * 1.21, 0.05));
    CHECK_THROWS_AS(build_kit(HomotopyField::exact(pw("x", "x"))), Error);
}

TEST_CASE("scaling the cubic model does not raise R0")
{
    auto m = pw("x^3", "0.25*x");
    auto k1 = build_kit(HomotopyField::exact(m));
    auto k4 = build_kit(HomotopyField::exact(m.scaled(4.0)));
    CHECK(k4.R0 <= k1.R0);
}

TEST_CASE("measured laps respect the energy maps")
{
    const auto& kit = lap_kit();
    UNSCOPED_INFO("R0 = " << kit.R0 << " kappa = " << kit.kappa << " R = " << kit.calR);
    auto g = HomotopyField::exact(lap_model());
    const auto ys = logspace(1e2, 1e4, 20);
    for (std::size_t i = 0; i < ys.size(); ++i) {
        auto c = measure_lap(g, kit, T2pi * i / 20.0, ys[i]);
        INFO("y0 = " << ys[i]);
        CHECK(c.R0_large);
        CHECK(c.T_ok);
        CHECK(c.L_ok);
        CHECK(c.M_ok);
        CHECK(c.r1_ok);
        CHECK(c.energy_ok);
        CHECK(c.rotation >= 2.0);
        CHECK(c.rotation <= 3.0);
    }
    auto big = measure_lap(g, kit, 0.0, 1e3);
    CHECK(big.eps <= 0.05 * T2pi);
}

TEST_CASE("elastic property on the comparison field")
{
    HomotopyField h(lap_model(), 0.0);
    auto kit = build_kit(h);
    auto r = check_elastic(h, kit, 16);
    CHECK(r.asserted);
    CHECK(r.all_large);

    AprioriKit none;
    auto skip = check_elastic(HomotopyField::exact(pw("x", "x")), none, 4);
    CHECK_FALSE(skip.asserted);
}

TEST_CASE("normalized minimum tends to zero")
{
    auto g = HomotopyField::exact(lap_model());
    auto r = mintozero_ratios(g, T2pi, {1e2, 1e3, 1e4});
    CHECK(r[1] < r[0]);
    CHECK(r[2] < r[1]);
    CHECK(r[2] < 0.1);
}

TEST_CASE("singular largeness functional")
{
    CHECK(N_measure(1, 0) == 2.0);
    CHECK_THAT(N_measure(0.1, 0), WithinRel(100.01, 1e-14));
    CHECK(N_measure(1e-4, 0) > 1e7);
    CHECK(N_measure(1e4, 0) > 1e7);
    CHECK_THROWS_AS(N_measure(0.0, 1.0), InvalidArgument);
}

TEST_CASE("singular probes rotate N or N+1 times about (1, 0)")
{
    auto m = NonlinearityModel::parse_model("s", T2pi, Domain::singular, 2, "-(1 + 0.5*sin(t)^2)/x^3 + 1.625*x + 0.1*cos(t)");
    auto probes = singular_probes(HomotopyField::exact(m), T2pi, 2, {1e2, 1e3, 1e4});
    for (const auto& p : probes) {
        CHECK(p.laps_ok);
        CHECK(p.min_x > 0);
        CHECK(std::isfinite(p.eps));
    }
    CHECK(probes.back().eps < probes.front().eps + 1e-12);
}
