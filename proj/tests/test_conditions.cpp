#include <catch_amalgamated.hpp>

#include "resonance/conditions.hpp"

using namespace resonance;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const double T2pi = 2 * pi;

NonlinearityModel pw(const std::string& left, const std::string& right, int N = 2, double T = 2 * pi)
{
    return NonlinearityModel::parse_piecewise("pw", T, Domain::full_line, N, left, right);
}

} // namespace

TEST_CASE("constant residue closed forms")
{
    auto one = [](double) { return 1.0; };
    for (double tau : {0.0, 0.4, 2.0, 5.5}) {
        CHECK_THAT(ll_integral(one, T2pi, 1, LLVariant::truncated_sine, tau), WithinAbs(4.0, 1e-8));
        CHECK_THAT(ll_integral(one, T2pi, 2, LLVariant::truncated_sine, tau), WithinAbs(2.0, 1e-8));
        CHECK_THAT(ll_integral(one, T2pi, 2, LLVariant::abs_sine, tau), WithinAbs(4.0, 1e-8));
    }
}

TEST_CASE("abs profile decomposes into shifted truncated humps")
{
    auto res = [](double t) { return 1 + 0.5 * std::cos(t) + 0.3 * std::sin(3 * t) - 0.2 * std::cos(5 * t); };
    for (int j : {1, 2, 3, 5}) {
        const auto taus = periodic_grid(T2pi, 256);
        for (double tau : taus) {
            double sum = 0.0;
            for (int r = 0; r < j; ++r) sum += ll_integral(res, T2pi, j, LLVariant::truncated_sine, tau + r * T2pi / j);
            CHECK_THAT(ll_integral(res, T2pi, j, LLVariant::abs_sine, tau), WithinAbs(sum, 1e-8));
        }
    }
}

TEST_CASE("integrals are periodic in tau")
{
    auto res = [](double t) { return std::exp(std::sin(t)); };
    for (double tau : {0.1, 1.3, 3.0}) {
        CHECK_THAT(ll_integral(res, T2pi, 2, LLVariant::truncated_sine, tau + T2pi),
                   WithinAbs(ll_integral(res, T2pi, 2, LLVariant::truncated_sine, tau), 1e-10));
    }
}

TEST_CASE("a negative patch kills the lower condition at some tau")
{
    const int N = 2;
    auto res = [&](double t) { return wrap_period(t, T2pi) < T2pi / (2 * N) ? -3.0 : 1.0; };
    auto r = ll_report(res, T2pi, N, LLVariant::truncated_sine, LLSide::lower, {}, {0.0, T2pi / (2 * N)});
    CHECK(r.verdict == Verdict::fail);
    CHECK_THAT(ll_integral(res, T2pi, N, LLVariant::truncated_sine, 0.0, 64, {0.0, T2pi / (2 * N)}),
               WithinAbs(-2.0, 1e-10));
}

TEST_CASE("constant residue signs give both conditions")
{
    auto plus = [](double) { return 1.0; };
    auto minus = [](double) { return -1.0; };
    auto lo = ll_report(plus, T2pi, 2, LLVariant::truncated_sine, LLSide::lower);
    auto hi = ll_report(minus, T2pi, 3, LLVariant::truncated_sine, LLSide::upper);
    CHECK(lo.verdict == Verdict::pass);
    CHECK(hi.verdict == Verdict::pass);
    CHECK_THAT(lo.margin, WithinAbs(2.0, 1e-8));
    auto tiny = [](double) { return 1e-12; };
    CHECK(ll_report(tiny, T2pi, 2, LLVariant::truncated_sine, LLSide::lower).verdict == Verdict::inconclusive);
}

TEST_CASE("model level verdicts from asymptotic envelopes")
{
    SECTION("eigenvalue slope plus one")
    {
        auto m = pw("x^3", "x + 1");
        auto v = ll_verdict(m, LLVariant::truncated_sine);
        CHECK(v.lower.verdict == Verdict::pass);
        CHECK_THAT(v.lower.min, WithinAbs(2 * m.T() / (m.N() * pi), 1e-6));
        CHECK(v.upper.verdict == Verdict::pass);
        CHECK(v.upper.max == -inf);
    }
    SECTION("oscillating slope with forcing")
    {
        auto m = pw("x^3 + 1.325*x + 0.1*cos(t)", "x + 0.625*x*(1+sin(log(1+x))) - 0.3*sin(log(1+x)) + 0.1*cos(t)");
        auto v = ll_verdict(m, LLVariant::truncated_sine);
        // liminf residue 0.3 + 0.1 cos t, limsup residue -0.3 + 0.1 cos t
        for (std::size_t i = 0; i < v.env_lower.t.size(); i += 37) {
            const double t = v.env_lower.t[i];
            CHECK_THAT(v.env_lower.lower[i], WithinAbs(0.3 + 0.1 * std::cos(t), 1e-4));
            CHECK_THAT(v.env_upper.upper[i], WithinAbs(-0.3 + 0.1 * std::cos(t), 1e-4));
        }
        CHECK(v.pass());
    }
    SECTION("nonconvergent tail is unreliable")
    {
        auto m = pw("x^3", "x + sin(log(log(x + 3)))");
        auto v = ll_verdict(m, LLVariant::truncated_sine);
        CHECK(v.lower.verdict == Verdict::unreliable);
    }
}

TEST_CASE("enlarging the tail never raises the liminf estimate")
{
    auto m = pw("x^3", "x + 0.5*sin(x^0.5) + 0.2*cos(t)*sin(log(x))");
    EnvelopeOptions a, b;
    a.t_points = b.t_points = 16;
    a.window = 8;
    b.window = 12;
    auto ea = asymptotic_envelope(m, 1.0, Direction::plus_infinity, a);
    auto eb = asymptotic_envelope(m, 1.0, Direction::plus_infinity, b);
    for (std::size_t i = 0; i < ea.t.size(); ++i) {
        CHECK(eb.lower[i] <= ea.lower[i]);
        CHECK(eb.upper[i] >= ea.upper[i]);
    }
}

TEST_CASE("superlinear growth and linear band")
{
    const double mid = 0.5 * (eigenvalue(2, T2pi) + eigenvalue(3, T2pi));
    auto good = pw("x^3", fmt17(mid) + "*x");
    auto r = validate_A(good);
    CHECK(r.verdict == Verdict::pass);
    CHECK_THAT(r.band.c, WithinAbs(0.0, 1e-12));

    auto band = pw("x^3", "2.25*x + 2*0.7*sin(t)");
    auto rb = validate_A(band);
    CHECK(rb.verdict == Verdict::pass);
    CHECK_THAT(rb.band.c, WithinRel(1.4, 1e-6));

    auto lin = pw("x", "1.5*x");
    auto rl = validate_A(lin);
    CHECK(rl.verdict == Verdict::fail);
    CHECK_FALSE(rl.superlinear);
}

TEST_CASE("strong singularity and linear growth beyond one")
{
    auto strong = NonlinearityModel::parse_model("s", T2pi, Domain::singular, 2, "-1/x^3 + 1.625*x");
    auto r = validate_A0_Ainf(strong);
    CHECK(r.verdict == Verdict::pass);
    CHECK(r.primitive_diverges);

    auto weak = NonlinearityModel::parse_model("w", T2pi, Domain::singular, 2, "-1/x^0.5 + 1.625*x");
    auto rw = validate_A0_Ainf(weak);
    CHECK(rw.verdict == Verdict::fail);
    CHECK(rw.diverges);
    CHECK_FALSE(rw.primitive_diverges);

    auto ex = NonlinearityModel::parse_piecewise("ex", T2pi, Domain::singular, 2, "-(1+sin(t)^2)*x^-5 - x^-3",
                                                 "1.625*(x - 1) - (1+sin(t)^2) - 1");
    CHECK(validate_A0_Ainf(ex).verdict == Verdict::pass);
}

TEST_CASE("uniform order of the superlinear growth")
{
    auto good = NonlinearityModel::parse_model("g", T2pi, Domain::full_line, 2, "(1+sin(t)^2)*x^5 + x^3");
    auto bad = NonlinearityModel::parse_model("b", T2pi, Domain::full_line, 2, "x^3 + sin(t)^2*x^5");
    auto flat = NonlinearityModel::parse_model("f", T2pi, Domain::full_line, 2, "x^5 + x^3");
    auto rg = check_H(good, Direction::minus_infinity);
    auto rb = check_H(bad, Direction::minus_infinity);
    auto rf = check_H(flat, Direction::minus_infinity);
    CHECK(rg.verdict == Verdict::pass);
    CHECK(rb.verdict == Verdict::fail);
    CHECK(rf.verdict == Verdict::pass);
    for (double d : rf.deviation) CHECK(d < 1e-12);
    // ratios close in on 1 as the window shrinks
    CHECK(rg.deviation[2] < rg.deviation[1]);
    CHECK(rg.deviation[1] < rg.deviation[0]);
    CHECK(rb.deviation[2] > 0.9);

    auto sg = NonlinearityModel::parse_model("sg", T2pi, Domain::singular, 2, "-(1+sin(t)^2)*x^-5 - x^-3");
    auto sb = NonlinearityModel::parse_model("sb", T2pi, Domain::singular, 2, "-x^-3 - sin(t)^2*x^-5");
    CHECK(check_H(sg, Direction::zero_plus).verdict == Verdict::pass);
    CHECK(check_H(sb, Direction::zero_plus).verdict == Verdict::fail);
}
