#include <catch_amalgamated.hpp>

#include "resonance/spectrum.hpp"

using namespace resonance;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("eigenvalues")
{
    CHECK_THAT(eigenvalue(1, pi), WithinRel(1.0, 1e-15));
    CHECK_THAT(eigenvalue(2, 2 * pi), WithinRel(1.0, 1e-15));
    CHECK_THAT(eigenvalue(3, 2 * pi), WithinRel(2.25, 1e-15));
    for (int j = 1; j < 10; ++j) {
        CHECK(eigenvalue(j + 1, 3.0) > eigenvalue(j, 3.0));
        CHECK_THAT(eigenvalue(j, 6.0) * 4.0, WithinRel(eigenvalue(j, 3.0), 1e-14));
    }
    CHECK_THROWS_AS(eigenvalue(0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(eigenvalue(1, -1.0), InvalidArgument);
}

TEST_CASE("diagonal points of the curves")
{
    for (double T : {2 * pi, pi, 5.0}) {
        for (int j = 1; j <= 6; ++j) {
            const double m = eigenvalue(2 * j, T);
            CHECK_THAT(curve_residual({m, m, T}, j), WithinAbs(0.0, 1e-12));
        }
    }
}

TEST_CASE("semi-axes form the zeroth curve")
{
    CHECK(curve_residual({5.0, 0.0, 2 * pi}, 0) == 0.0);
    CHECK(curve_residual({0.0, 3.0, 2 * pi}, 0) == 0.0);
    CHECK(curve_residual({1.0, 3.0, 2 * pi}, 0) > 0.0);
    CHECK_THROWS_AS(curve_residual({0.0, 1.0, 2 * pi}, 1), InvalidArgument);
}

TEST_CASE("residual is symmetric and decreasing in mu")
{
    const double T = 2 * pi;
    for (int j = 1; j <= 4; ++j) {
        for (double mu : {0.3, 1.0, 4.0, 17.0}) {
            for (double nu : {0.5, 2.0, 9.0}) {
                CHECK(curve_residual({mu, nu, T}, j) == curve_residual({nu, mu, T}, j));
                CHECK(curve_residual({mu * 1.01, nu, T}, j) < curve_residual({mu, nu, T}, j));
            }
        }
    }
}

TEST_CASE("vertical asymptote approached from above")
{
    const double T = 2 * pi;
    const double m1 = eigenvalue(1, T);
    const double r = curve_residual({m1, 1e8, T}, 1);
    CHECK(r > 0.0);
    CHECK(r < 1e-4);
    // root in mu at fixed nu converges to the asymptote at the rate 2 sqrt(mu_j / nu)
    double prev = inf;
    for (double nu : {1e4, 1e6, 1e8, 1e10}) {
        const double mu = curve_mu_at(nu, 1, T);
        const double rel = (mu - m1) / m1;
        const double s = std::sqrt(m1 / nu);
        const double exact = 1.0 / ((1 - s) * (1 - s)) - 1.0;
        CHECK_THAT(rel, WithinRel(exact, 1e-6));
        CHECK(rel < prev);
        prev = rel;
    }
}

TEST_CASE("classification of rectangles")
{
    const double T = 2 * pi;
    const double m2 = eigenvalue(2, T), m3 = eigenvalue(3, T);

    SECTION("unbounded band between consecutive asymptotes")
    {
        auto c = classify({m2, m3, 10.0, inf}, T);
        CHECK(c.kind == Resonance::unbounded_double_resonance);
        CHECK(c.curves() == std::vector<int>{2, 3});
        CHECK(c.N == 2);
        auto d = classify({m2, m3, inf, inf}, T);
        CHECK(d.kind == Resonance::unbounded_double_resonance);
    }
    SECTION("single point off the spectrum")
    {
        auto c = classify({1.3, 1.3, 1.3, 1.3}, T);
        CHECK(c.kind == Resonance::nonresonant);
        CHECK(c.contacts.empty());
    }
    SECTION("small rectangle in a gap between curves")
    {
        // C_1 passes through (1, 1), C_2 through (4, 4): a box around (2, 2) is clear.
        auto c = classify({1.8, 2.2, 1.8, 2.2}, T);
        CHECK(c.kind == Resonance::nonresonant);
    }
    SECTION("corner contacts")
    {
        const double m = eigenvalue(2, T); // C_1 passes through (m, m)
        auto lower = classify({m, m + 0.5, m, m + 0.5}, T);
        REQUIRE(lower.contacts.size() == 1);
        CHECK(lower.contacts[0].j == 1);
        CHECK(lower.contacts[0].contact == Contact::lower_corner);
        CHECK(lower.kind == Resonance::simple_resonance);
        auto upper = classify({m - 0.5, m, m - 0.5, m}, T);
        REQUIRE(upper.contacts.size() == 1);
        CHECK(upper.contacts[0].contact == Contact::upper_corner);
        // between C_1 and C_2 with both corners on curves
        const double m4 = eigenvalue(4, T);
        auto both = classify({m, m4, m, m4}, T);
        CHECK(both.kind == Resonance::double_resonance);
        CHECK(both.curves() == std::vector<int>{1, 2});
    }
    SECTION("interior crossing")
    {
        auto c = classify({0.5, 1.5, 0.5, 1.5}, T);
        CHECK(c.kind == Resonance::interior_crossing);
    }
    SECTION("invalid rectangle")
    {
        CHECK_THROWS_AS(classify({2.0, 1.0, 0.0, 1.0}, T), InvalidArgument);
    }
}

TEST_CASE("sampled curves satisfy the residual equation")
{
    const double T = 2 * pi;
    for (int j = 1; j <= 4; ++j) {
        auto pts = sample_curve(j, T, 32);
        for (auto [mu, nu] : pts) CHECK_THAT(curve_residual({mu, nu, T}, j), WithinAbs(0.0, 1e-12));
    }
}
