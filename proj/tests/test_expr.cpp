#include <catch_amalgamated.hpp>

#include "resonance/expr.hpp"

#include <random>

using namespace resonance;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("single variable parses to a variable node")
{
    Expr e = parse("x");
    CHECK(e.root().kind == NodeKind::VarX);
    CHECK(e(0.3, 5.0) == 5.0);
    CHECK(e(-7.0, 5.0) == 5.0);
}

TEST_CASE("quintic example nonlinearity parses with the expected shape")
{
    Expr e = parse("(1+sin(t)^2)*x^5 + x^3");
    const Node& r = e.root();
    REQUIRE(r.kind == NodeKind::Add);
    CHECK(r.args[0]->kind == NodeKind::Mul);
    CHECK(r.args[0]->args[0]->kind == NodeKind::Add);
    CHECK(r.args[0]->args[1]->kind == NodeKind::Pow);
    CHECK(r.args[1]->kind == NodeKind::Pow);
    const double t = 0.7, x = -1.3;
    const double s = std::sin(t);
    CHECK_THAT(e(t, x), WithinRel((1 + s * s) * std::pow(x, 5) + std::pow(x, 3), 1e-14));
}

TEST_CASE("power is right associative")
{
    CHECK(parse("2^3^2")(0, 0) == 512.0);
    CHECK(parse("2^3^2") == parse("2^(3^2)"));
    CHECK(parse("(2^3)^2")(0, 0) == 64.0);
}

TEST_CASE("precedence: power over unary minus over products over sums")
{
    CHECK(parse("-2^2")(0, 0) == -4.0);
    CHECK(parse("2^-1")(0, 0) == 0.5);
    CHECK(parse("1 + 2*3")(0, 0) == 7.0);
    CHECK(parse("8/4/2")(0, 0) == 1.0);
    CHECK(parse("8-4-2")(0, 0) == 2.0);
    CHECK(parse("-x*2")(0, 3) == -6.0);
}

TEST_CASE("hand evaluations of the example nonlinearities")
{
    CHECK(parse("x^3 + sin(t)^2 * x^2")(0.0, -2.0) == -8.0);
    CHECK(parse("-(1+sin(t)^2)*x^-5 - x^-3")(0.0, 1.0) == -2.0);
}

TEST_CASE("functions min max abs exp log")
{
    CHECK(parse("min(x, t)")(1, 2) == 1.0);
    CHECK(parse("max(x, t)")(1, 2) == 2.0);
    CHECK(parse("abs(x)")(0, -3) == 3.0);
    CHECK_THAT(parse("exp(log(x))")(0, 2.5), WithinRel(2.5, 1e-15));
}

TEST_CASE("syntax errors report offset and expected tokens")
{
    try {
        parse("1 + * x");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 4);
        CHECK_FALSE(e.expected().empty());
    }
    try {
        parse("sin(x");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 5);
        CHECK(std::find(e.expected().begin(), e.expected().end(), ")") != e.expected().end());
    }
    CHECK_THROWS_AS(parse("(x"), ParseError);
    CHECK_THROWS_AS(parse("x y"), ParseError);
    CHECK_THROWS_AS(parse(""), ParseError);
    CHECK_THROWS_AS(parse("min(x)"), ParseError);
}

TEST_CASE("unknown identifiers are reported by name")
{
    try {
        parse("x + foo");
        FAIL("expected unknown identifier");
    } catch (const UnknownIdentifierError& e) {
        CHECK(e.name() == "foo");
        CHECK(e.offset() == 4);
    }
}

TEST_CASE("named constants are bound at parse time")
{
    Expr e = parse("a*x + b", {{"a", 2.0}, {"b", -1.0}});
    CHECK(e(0, 3) == 5.0);
}

TEST_CASE("domain errors name the offending subtree")
{
    try {
        parse("1 + log(x - 1)")(0, 1);
        FAIL("expected domain error");
    } catch (const DomainError& e) {
        CHECK(e.subtree() == "log(x - 1)");
    }
    try {
        parse("x + 1/(x - 2)")(0, 2);
        FAIL("expected domain error");
    } catch (const DomainError& e) {
        CHECK(e.subtree() == "1/(x - 2)");
    }
    CHECK_THROWS_AS(parse("x^0.5")(0, -1), DomainError);
    CHECK_THROWS_AS(parse("x^-3")(0, 0), DomainError);
    CHECK(parse("x^3")(0, -2) == -8.0);
    CHECK(parse("x^-2")(0, -2) == 0.25);
}

namespace {

NodePtr random_ast(std::mt19937_64& rng, int depth)
{
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 15);
    std::uniform_real_distribution<double> val(0.0, 10.0);
    const int k = pick(rng);
    switch (k) {
    case 0: {
        // a mix of integers and awkward doubles
        double v = (rng() % 2) ? std::floor(val(rng)) : val(rng);
        return make_num(v);
    }
    case 1: return make_var_t();
    case 2: return make_var_x();
    case 3: return make_node(NodeKind::Neg, {random_ast(rng, depth - 1)});
    case 4: return make_node(NodeKind::Add, {random_ast(rng, depth - 1), random_ast(rng, depth - 1)});
    case 5: return make_node(NodeKind::Sub, {random_ast(rng, depth - 1), random_ast(rng, depth - 1)});
    case 6: return make_node(NodeKind::Mul, {random_ast(rng, depth - 1), random_ast(rng, depth - 1)});
    case 7: return make_node(NodeKind::Div, {random_ast(rng, depth - 1), random_ast(rng, depth - 1)});
    case 8: return make_node(NodeKind::Pow, {random_ast(rng, depth - 1), random_ast(rng, depth - 1)});
    case 9: return make_node(NodeKind::Sin, {random_ast(rng, depth - 1)});
    case 10: return make_node(NodeKind::Cos, {random_ast(rng, depth - 1)});
    case 11: return make_node(NodeKind::Abs, {random_ast(rng, depth - 1)});
    case 12: return make_node(NodeKind::Exp, {random_ast(rng, depth - 1)});
    case 13: return make_node(NodeKind::Log, {random_ast(rng, depth - 1)});
    case 14: return make_node(NodeKind::Min, {random_ast(rng, depth - 1), random_ast(rng, depth - 1)});
    default: return make_node(NodeKind::Max, {random_ast(rng, depth - 1), random_ast(rng, depth - 1)});
    }
}

} // namespace

TEST_CASE("print then parse is the identity on 1000 random trees")
{
    std::mt19937_64 rng(20240611);
    for (int i = 0; i < 1000; ++i) {
        Expr e(random_ast(rng, 1 + i % 6));
        const std::string s = e.str();
        INFO(s);
        Expr back = parse(s);
        REQUIRE(back == e);
        CHECK(back.str() == s);
    }
}

TEST_CASE("evaluation agrees with a native oracle on a fixed corpus")
{
    using F = double (*)(double, double);
    struct Row {
        const char* src;
        F oracle;
    };
    const std::vector<Row> corpus = {
        {"x", [](double, double x) { return x; }},
        {"t", [](double t, double) { return t; }},
        {"x^3 + x", [](double, double x) { return x * x * x + x; }},
        {"(1+sin(t)^2)*x^5 + x^3",
         [](double t, double x) { return (1 + std::sin(t) * std::sin(t)) * x * x * x * x * x + x * x * x; }},
        {"x^3 + sin(t)^2*x^5",
         [](double t, double x) { return x * x * x + std::sin(t) * std::sin(t) * x * x * x * x * x; }},
        {"-(1+sin(t)^2)*x^-5 - x^-3",
         [](double t, double x) { return -(1 + std::sin(t) * std::sin(t)) / (x * x * x * x * x) - 1 / (x * x * x); }},
        {"-x^-3 - sin(t)^2*x^-2", [](double t, double x) { return -1 / (x * x * x) - std::sin(t) * std::sin(t) / (x * x); }},
        {"1.625*x + 0.3*sin(t)", [](double t, double x) { return 1.625 * x + 0.3 * std::sin(t); }},
        {"exp(-x)*cos(3*t)", [](double t, double x) { return std::exp(-x) * std::cos(3 * t); }},
        {"log(1 + x^2)", [](double, double x) { return std::log(1 + x * x); }},
        {"abs(x - 1.5)*t", [](double t, double x) { return std::abs(x - 1.5) * t; }},
        {"min(x, 2) + max(t, 1)", [](double t, double x) { return std::min(x, 2.0) + std::max(t, 1.0); }},
        {"x/(1 + t)", [](double t, double x) { return x / (1 + t); }},
        {"x^0.5 + x^1.5", [](double, double x) { return std::sqrt(x) + x * std::sqrt(x); }},
        {"2^x", [](double, double x) { return std::pow(2.0, x); }},
        {"sin(x)*cos(t) - cos(x)*sin(t)", [](double t, double x) { return std::sin(x - t); }},
        {"(x - 1)*(x + 1) - x^2", [](double, double x) { return (x - 1) * (x + 1) - x * x; }},
        {"-1/x^3 + 1.625*x + 0.1*cos(t)",
         [](double t, double x) { return -1 / (x * x * x) + 1.625 * x + 0.1 * std::cos(t); }},
        {"x + 0.625*x*(1+sin(log(1+x))) - 0.3*sin(log(1+x))",
         [](double, double x) {
             const double s = std::sin(std::log(1 + x));
             return x + 0.625 * x * (1 + s) - 0.3 * s;
         }},
        {"exp(sin(t))*x^2/(2 + cos(x))",
         [](double t, double x) { return std::exp(std::sin(t)) * x * x / (2 + std::cos(x)); }},
    };
    REQUIRE(corpus.size() == 20);
    for (const auto& row : corpus) {
        Expr e = parse(row.src);
        for (int k = 0; k < 20; ++k) {
            const double t = 2 * pi * k / 20.0 + 0.05;
            const double x = 0.5 + 0.13 * k;
            const double want = row.oracle(t, x);
            INFO(row.src << " at t=" << t << " x=" << x);
            if (std::abs(want) < 1e-300)
                CHECK_THAT(e(t, x), WithinAbs(want, 1e-12));
            else
                CHECK_THAT(e(t, x), WithinRel(want, 1e-12));
        }
    }
}

TEST_CASE("concurrent evaluation of a shared expression is consistent")
{
    Expr e = parse("(1+sin(t)^2)*x^5 + x^3");
    auto vals = parallel_map(64, [&](std::size_t i) { return e(0.1 * i, -1.0 - 0.01 * i); });
    for (std::size_t i = 0; i < vals.size(); ++i) CHECK(vals[i] == e(0.1 * i, -1.0 - 0.01 * i));
}
