#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "torint/expr.hpp"

using namespace torint;

namespace {

// independent high-precision evaluator over the same AST (long double walk)
long double eval_hp(const Expr::Node& n, long double x, long double y) {
    using Kind = Expr::Node::Kind;
    switch (n.kind) {
    case Kind::Lit: return n.lit;
    case Kind::Var: return n.var.kind == VarTag::Kind::X ? x : y;
    case Kind::Un: {
        long double a = eval_hp(*n.a, x, y);
        switch (n.un) {
        case UnOp::Neg: return -a;
        case UnOp::Sin: return sinl(a);
        case UnOp::Cos: return cosl(a);
        case UnOp::Exp: return expl(a);
        case UnOp::Sqrt: return sqrtl(a);
        }
        return 0;
    }
    case Kind::Bin: {
        long double a = eval_hp(*n.a, x, y), b = eval_hp(*n.b, x, y);
        switch (n.bin) {
        case BinOp::Add: return a + b;
        case BinOp::Sub: return a - b;
        case BinOp::Mul: return a * b;
        case BinOp::Div: return a / b;
        }
        return 0;
    }
    case Kind::Pow: return powl(eval_hp(*n.a, x, y), n.exponent);
    }
    return 0;
}

// random expression generator for the round-trip corpus
Expr random_expr(std::mt19937& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 9);
    std::uniform_real_distribution<double> num(-4.0, 4.0);
    switch (pick(rng)) {
    case 0: return Expr::lit(std::round(num(rng) * 100) / 100);
    case 1: return Expr::x();
    case 2: return Expr::y();
    case 3: return sin(random_expr(rng, depth - 1));
    case 4: return cos(random_expr(rng, depth - 1));
    case 5: return random_expr(rng, depth - 1) + random_expr(rng, depth - 1);
    case 6: return random_expr(rng, depth - 1) - random_expr(rng, depth - 1);
    case 7: return random_expr(rng, depth - 1) * random_expr(rng, depth - 1);
    case 8: return -random_expr(rng, depth - 1);
    default: return pow(random_expr(rng, depth - 1), std::uniform_int_distribution<int>(2, 4)(rng));
    }
}

} // namespace

TEST_CASE("parse: paper component functions") {
    Expr e = parse_expr("sin(y)+sqrt(2)");
    const auto& n = e.node();
    REQUIRE(n.kind == Expr::Node::Kind::Bin);
    CHECK(n.bin == BinOp::Add);
    CHECK(n.a->kind == Expr::Node::Kind::Un);
    CHECK(n.a->un == UnOp::Sin);
    CHECK(n.a->a->var.kind == VarTag::Kind::Y);
    // sqrt(2) folds to a literal
    CHECK(n.b->kind == Expr::Node::Kind::Lit);
    CHECK(n.b->lit == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));

    Expr atom = parse_expr("x");
    CHECK(atom.node().kind == Expr::Node::Kind::Var);
    CHECK(atom.node().var.kind == VarTag::Kind::X);

    // three summands, left-associated
    Expr h = parse_expr("-cos(y)+2*y+cos(x)");
    REQUIRE(h.node().kind == Expr::Node::Kind::Bin);
    CHECK(h.node().bin == BinOp::Add);
    CHECK(h.node().a->kind == Expr::Node::Kind::Bin);
    CHECK(h.node().a->bin == BinOp::Add);
}

TEST_CASE("parse errors carry positions and declared variables") {
    CHECK_THROWS_AS(parse_expr("sin(y"), ParseError);
    CHECK_THROWS_AS(parse_expr("2 +* 3"), ParseError);
    try {
        parse_expr("sin(z)+1");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.position == 4);
        CHECK(e.found == "'z'");
        CHECK(e.expected.find("x, y") != std::string::npos);
    }
    try {
        parse_expr("c_2*x", 1);  // only c_1 declared
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.position == 0);
    }
    // position lies within the input
    try {
        parse_expr("1+");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.position <= 2);
    }
}

TEST_CASE("eval: literal cases") {
    Expr h = parse_expr("-cos(y)+2*y+cos(x)");
    CHECK(h.eval({0.0, 0.0}) == doctest::Approx(0.0).epsilon(1e-15));

    Expr e1 = parse_expr("sin(y)+sqrt(2)");
    CHECK(e1.eval({0.0, 0.0}) == doctest::Approx(1.4142135623730951).epsilon(1e-15));
}

TEST_CASE("eval matches independent high-precision evaluation") {
    Expr e = parse_expr("sin(-cos(y)+2*y+cos(x))");
    double x = M_PI, y = M_PI / 2;
    double got = e.eval({x, y});
    long double want = eval_hp(e.node(), x, y);
    CHECK(got == doctest::Approx(0.8414709848078965).epsilon(1e-14));  // sin(pi - 1) = sin(1)
    CHECK(std::abs(got - static_cast<double>(want)) <= 1e-14 * std::abs(got));

    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(0.0, 2 * M_PI);
    for (int i = 0; i < 50; ++i) {
        double px = u(rng), py = u(rng);
        double g = e.eval({px, py});
        long double w = eval_hp(e.node(), px, py);
        CHECK(std::abs(g - static_cast<double>(w)) <= 1e-13 * std::max(1.0, std::abs(g)));
    }
}

TEST_CASE("eval errors: sqrt domain and near-zero division") {
    CHECK_THROWS_AS(parse_expr("sqrt(x-1)").eval({0.0, 0.0}), EvalError);
    CHECK_THROWS_AS(parse_expr("1/x").eval({1e-13, 0.0}), EvalError);
    CHECK(parse_expr("1/x").eval({2.0, 0.0}) == doctest::Approx(0.5));
}

TEST_CASE("differentiate: stated rules") {
    // d/dx sin(y) = 0
    Expr e = differentiate(parse_expr("sin(y)"), VarTag::x());
    CHECK(e.is_literal(0.0));

    // d/dy (sin(y)+sqrt(2)) = cos(y)
    Expr d = differentiate(parse_expr("sin(y)+sqrt(2)"), VarTag::y());
    CHECK(equal(d, parse_expr("cos(y)")));

    // d/dy (-cos(y)+2y+cos(x)) = sin(y)+2
    Expr dh = differentiate(parse_expr("-cos(y)+2*y+cos(x)"), VarTag::y());
    for (double y = 0.0; y < 6.3; y += 0.37)
        CHECK(dh.eval({1.0, y}) == doctest::Approx(std::sin(y) + 2.0).epsilon(1e-14));
}

TEST_CASE("differentiate agrees with central finite differences") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0.0, 2 * M_PI);
    const char* exprs[] = {
        "sin(x)*cos(y)+x^3", "exp(sin(x)+cos(y))", "(2+sin(y))/(3+cos(x))",
        "sin(-cos(y)+2*y+cos(x))", "x^2*y^2 - sin(x*y)",
    };
    const double step = 1e-5;
    for (const char* src : exprs) {
        Expr e = parse_expr(src);
        Expr ex = dx(e), ey = dy(e);
        for (int i = 0; i < 100; ++i) {
            double x = u(rng), y = u(rng);
            double fd_x = (e.eval({x + step, y}) - e.eval({x - step, y})) / (2 * step);
            double fd_y = (e.eval({x, y + step}) - e.eval({x, y - step})) / (2 * step);
            CHECK(std::abs(ex.eval({x, y}) - fd_x) <= 1e-7);
            CHECK(std::abs(ey.eval({x, y}) - fd_y) <= 1e-7);
        }
    }
}

TEST_CASE("print/parse round trip is idempotent on 50 generated expressions") {
    std::mt19937 rng(42);
    for (int i = 0; i < 50; ++i) {
        Expr e = random_expr(rng, 4);
        std::string printed = to_string(e);
        Expr reparsed = parse_expr(printed);
        CHECK(equal(e, reparsed));
        CHECK(to_string(reparsed) == printed);
    }
}

TEST_CASE("fiber variables and constants") {
    Expr e = parse_expr("c_1*sin(x) + c_2", 2);
    double cv[] = {3.0, 0.5};
    CHECK(e.eval({M_PI / 2, 0.0, cv}) == doctest::Approx(3.5));
    CHECK(differentiate(e, VarTag::c(0)).eval({M_PI / 2, 0.0, cv}) == doctest::Approx(1.0));
    CHECK(differentiate(e, VarTag::x()).eval({0.0, 0.0, cv}) == doctest::Approx(3.0));
    CHECK(parse_expr("pi").eval({}) == doctest::Approx(M_PI));
}
