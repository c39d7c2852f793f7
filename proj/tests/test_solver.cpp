#include <catch_amalgamated.hpp>

#include "resonance/solver.hpp"

using namespace resonance;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const double T2pi = 2 * pi;

HomotopyField linear_field(const std::string& f, int N = 1)
{
    return HomotopyField::exact(NonlinearityModel::parse_model("lin", T2pi, Domain::full_line, N, f));
}

NonlinearityModel pw(const std::string& left, const std::string& right, int N = 2)
{
    return NonlinearityModel::parse_piecewise("pw", T2pi, Domain::full_line, N, left, right);
}

} // namespace

TEST_CASE("time-T map of linear oscillators")
{
    auto forced = linear_field("4*x - cos(t)");
    auto p = poincare(forced, {1.0 / 3, 0.0});
    CHECK_THAT(p[0], WithinAbs(1.0 / 3, 1e-7));
    CHECK_THAT(p[1], WithinAbs(0.0, 1e-7));

    auto id = linear_field("x");
    for (Vec2 z : {Vec2{1.0, 0.0}, Vec2{-0.3, 2.0}, Vec2{5.0, -4.0}}) {
        auto q = poincare(id, z);
        CHECK_THAT(q[0], WithinAbs(z[0], 1e-9 * norm2(z)));
        CHECK_THAT(q[1], WithinAbs(z[1], 1e-9 * norm2(z)));
    }

    auto two = linear_field("2*x");
    auto q = poincare(two, {1.0, 0.0});
    const double w = std::sqrt(2.0);
    CHECK_THAT(q[0], WithinAbs(std::cos(w * T2pi), 1e-9));
    CHECK_THAT(q[1], WithinAbs(-w * std::sin(w * T2pi), 1e-9));
}

TEST_CASE("Newton shooting on forced linear oscillators")
{
    auto f = linear_field("2*x - cos(t)");
    auto r = newton_fixed_point(f, {0.0, 0.0});
    REQUIRE(r.converged());
    CHECK_THAT(r.z[0], WithinAbs(1.0, 1e-8));
    CHECK_THAT(r.z[1], WithinAbs(0.0, 1e-8));
    CHECK(r.residual < 1e-8);
    // idempotent: the fixed point is a fixed point of the map itself
    auto p = poincare(f, r.z);
    CHECK(std::hypot(p[0] - r.z[0], p[1] - r.z[1]) < 1e-8);

    auto id = newton_fixed_point(linear_field("x"), {1.0, 0.0});
    CHECK(id.status == NewtonStatus::singular_jacobian);
    auto res = newton_fixed_point(linear_field("4*x - cos(t)"), {0.0, 0.0});
    CHECK(res.status == NewtonStatus::singular_jacobian);
}

TEST_CASE("boundary degree of nonresonant linear maps")
{
    auto f = linear_field("2*x");
    for (double R : {0.5, 1.0, 20.0}) CHECK(boundary_degree(f, R) == 1);
    auto g = linear_field("2*x - cos(t)");
    CHECK(boundary_degree(g, 3.0) == 1);
    CHECK(boundary_degree(g, 1.0, {}, {5.0, 0.0}) == 0);
    CHECK(square_degree(g, {1.0, 0.0}, 0.25) == 1);
    CHECK_THROWS_AS(boundary_degree(g, 1.0), Error); // the fixed point (1, 0) sits on the circle
}

TEST_CASE("degree search isolates the fixed point")
{
    auto g = linear_field("2*x - cos(t)");
    auto cells = degree_search(g, {0.3, 0.2}, 2.0, 2.0 / 64);
    REQUIRE_FALSE(cells.empty());
    bool hit = false;
    for (const auto& c : cells)
        if (std::abs(c.center[0] - 1.0) <= 2 * c.half && std::abs(c.center[1]) <= 2 * c.half) hit = true;
    CHECK(hit);
}

TEST_CASE("homotopy continuation to a certified solution")
{
    auto m = pw("x^3 + 1.625*x + 0.2*cos(t)", "1.625*x + 0.3*x/(1 + x) + 0.2*cos(t)");
    auto c = homotopy_solve(m);
    CHECK(c.residual < 1e-8);
    CHECK(c.rotation_integral());
    CHECK(c.degree != 0);
    CHECK(c.degree_invariant);
    CHECK(c.degree_lambda0_ok);
    CHECK(c.radius_source == "calR");
    CHECK(c.path.front().lambda == 0.0);
    CHECK(c.path.back().lambda == 1.0);
    CHECK(c.path.size() >= 33);
    CHECK(c.return_2T <= 2 * c.residual + 1e-9);
    auto p = poincare(HomotopyField::exact(m), c.z);
    CHECK(std::hypot(p[0] - c.z[0], p[1] - c.z[1]) < 1e-8);
}

TEST_CASE("models outside the hypotheses are refused")
{
    auto lin = pw("1.5*x", "1.625*x");
    CHECK_THROWS_AS(homotopy_solve(lin), GateError);
}

TEST_CASE("normalized profile of resonant linear families")
{
    const int N = 2;
    const double mu = eigenvalue(N, T2pi);
    auto f = linear_field(fmt17(mu) + "*x", N);
    std::vector<Trajectory> fam;
    for (double A : {1.0, 10.0, 100.0}) fam.push_back(integrate(f, {0.0, 0.0, A}, T2pi));
    auto fit = normalized_profile(fam, N, T2pi);
    CHECK(fit.K == N);
    CHECK(fit.rel_error < 1e-6);
    for (const auto& arc : fit.arcs) {
        CHECK_THAT(arc.c, WithinAbs(1.0, 1e-8));
        CHECK(arc.residual < 1e-6);
    }
    CHECK(fit.sup_norm[2] > fit.sup_norm[1]);
    CHECK_THROWS_AS(normalized_profile({fam[0], fam[1]}, N, T2pi), InvalidArgument);

    // positive arc of the pure oscillation sweeps pi in the modified angle
    auto tr = integrate(f, {0.0, 0.0, 1.0}, T2pi);
    CHECK_THAT(modified_angle(f, tr, N, 0.0, pi / std::sqrt(mu)), WithinAbs(pi, 1e-8));
}

TEST_CASE("growing family at resonance recovers the right eigenfrequency")
{
    const int N = 2;
    auto m = pw("x^3", fmt17(eigenvalue(N + 1, T2pi)) + "*x", N);
    auto f = HomotopyField::exact(m);
    std::vector<Trajectory> fam;
    for (double A : {1e2, 1e3, 1e4}) fam.push_back(integrate(f, {0.0, A, 0.0}, T2pi));
    auto fit = normalized_profile(fam, N, T2pi);
    CHECK(fit.K == N + 1);
    CHECK(fit.rel_error < 0.01);
}
