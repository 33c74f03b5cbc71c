#include "expr_corpus.hpp"

#include "vbm/expr.hpp"

#include <doctest.h>

using namespace vbm;
using namespace vbm::expr;

TEST_CASE("parser corpus") {
    std::string log;
    const int failures = vbm_tests::run_expr_corpus(&log);
    INFO(log);
    CHECK(failures == 0);
    CHECK(vbm_tests::expr_corpus().size() >= 50);
}

TEST_CASE("syntax errors carry byte offsets") {
    try {
        parse("2+");
        FAIL("expected a syntax error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::SyntaxError);
        CHECK(std::string(e.what()).find("offset 2") != std::string::npos);
    }
    try {
        parse("1 + $");
        FAIL("expected a syntax error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("offset 4") != std::string::npos);
    }
}

TEST_CASE("free variables") {
    const auto ast = parse("sin(a) + b*c + v[2]");
    const auto vars = ast->free_vars();
    CHECK(vars == std::set<std::string>{"a", "b", "c", "v2"});
}

TEST_CASE("print-parse idempotence on nested shapes") {
    for (const char* text : {"-x^2", "a-(b+c)", "a-b+c", "2^-3", "min(1,bump(x,-1,1))",
                             "-(a*b)^(c+d)", "1/(2/(3/4))", "x[0]*x[1]-x[2]"}) {
        const auto once = parse(text);
        const auto twice = parse(print(once));
        CHECK(*once == *twice);
    }
}

TEST_CASE("bump is exactly zero outside its support") {
    for (double x = 1.0; x < 50.0; x += 0.7)
        CHECK(bump(x, -1.0, 1.0) == 0.0);
    for (double x = -0.99; x < 1.0; x += 0.07)
        CHECK(bump(x, -1.0, 1.0) > 0.0);
    CHECK(bump(0.0, -1.0, 1.0) == 1.0);
    // values decay to zero approaching the support boundary
    CHECK(bump(0.999999, -1.0, 1.0) < 1e-200);
}

TEST_CASE("evaluation is IEEE double arithmetic") {
    EvalContext ctx;
    ctx.bind("x", 0.1);
    CHECK(evaluate(parse("x+x+x"), ctx) == 0.1 + 0.1 + 0.1);
    CHECK(evaluate(parse("2^0.5"), ctx) == std::pow(2.0, 0.5));
}
