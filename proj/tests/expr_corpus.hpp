#pragma once

#include "vbm/expr.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace vbm_tests {

// Shared parser corpus: valid fixtures carry an expected value under the
// given bindings, invalid ones the expected error kind.
struct ExprFixture {
    const char* text;
    bool valid;
    double expected = 0.0;
    double tol = 0.0; // 0 means exact
    vbm::Errc error = vbm::Errc::SyntaxError;
    std::vector<std::pair<std::string, double>> bindings;
};

inline const std::vector<ExprFixture>& expr_corpus() {
    using vbm::Errc;
    static const std::vector<ExprFixture> fixtures = {
        // precedence and associativity
        {"2+3*4", true, 14.0},
        {"2*3+4", true, 10.0},
        {"2^3^2", true, 64.0}, // left associative
        {"-2^2", true, 4.0},   // unary minus binds tighter than the power
        {"2^-1", true, 0.5},
        {"-(2^2)", true, -4.0},
        {"1-2-3", true, -4.0},
        {"12/2/3", true, 2.0},
        {"--5", true, 5.0},
        {"2 - -3", true, 5.0},
        {"(1+2)*3", true, 9.0},
        {"2*(3+4)", true, 14.0},
        {"1/2 + 1/2", true, 1.0},
        {"10/4", true, 2.5},
        // literals
        {"3.5e2", true, 350.0},
        {"0.5", true, 0.5},
        {" 1 + 2 ", true, 3.0},
        {".25 * 4", true, 1.0},
        // functions
        {"sin(0)", true, 0.0},
        {"cos(0)", true, 1.0},
        {"tan(0)", true, 0.0},
        {"exp(0)", true, 1.0},
        {"log(1)", true, 0.0},
        {"sqrt(4)", true, 2.0},
        {"abs(-3.5)", true, 3.5},
        {"min(2,3)", true, 2.0},
        {"max(2,3)", true, 3.0},
        {"min(max(1,2), 3)", true, 2.0},
        {"sqrt(2)^2", true, 2.0, 1e-15},
        {"exp(log(5))", true, 5.0, 1e-14},
        // bump: peak 1 at the midpoint, exactly zero outside
        {"bump(0,-1,1)", true, 1.0},
        {"bump(0.5, 0, 1)", true, 1.0},
        {"bump(2,-1,1)", true, 0.0},
        {"bump(-1,-1,1)", true, 0.0},
        {"bump(1,-1,1)", true, 0.0},
        {"bump(100, -1, 1)", true, 0.0},
        // variables and component access
        {"sin(t) + 2*t", true, 0.0, 0.0, Errc::SyntaxError, {{"t", 0.0}}},
        {"x0*x1", true, 12.0, 0.0, Errc::SyntaxError, {{"x0", 3.0}, {"x1", 4.0}}},
        {"v[0] + v[1]", true, 3.0, 0.0, Errc::SyntaxError, {{"v0", 1.0}, {"v1", 2.0}}},
        {"pi + 1", true, 4.0, 0.0, Errc::SyntaxError, {{"pi", 3.0}}},
        {"-x^2", true, 9.0, 0.0, Errc::SyntaxError, {{"x", 3.0}}}, // (-x)^2
        // syntax errors
        {"2+", false, 0, 0, Errc::SyntaxError},
        {"", false, 0, 0, Errc::SyntaxError},
        {")", false, 0, 0, Errc::SyntaxError},
        {"(1+2", false, 0, 0, Errc::SyntaxError},
        {"sin()", false, 0, 0, Errc::SyntaxError},
        {"sin(1,2)", false, 0, 0, Errc::SyntaxError},
        {"min(1)", false, 0, 0, Errc::SyntaxError},
        {"bump(1,2)", false, 0, 0, Errc::SyntaxError},
        {"1 $ 2", false, 0, 0, Errc::SyntaxError},
        {"x[1.5]", false, 0, 0, Errc::SyntaxError},
        {"(1)(2)", false, 0, 0, Errc::SyntaxError},
        {"foo(1)", false, 0, 0, Errc::UnknownFunction},
        // evaluation errors
        {"log(0)", false, 0, 0, Errc::DomainError},
        {"log(-1)", false, 0, 0, Errc::DomainError},
        {"sqrt(-1)", false, 0, 0, Errc::DomainError},
        {"1/0", false, 0, 0, Errc::DomainError},
        {"y + 1", false, 0, 0, Errc::UnboundVariable},
    };
    return fixtures;
}

// Runs every fixture plus the print-parse idempotence law; returns the number
// of failures and appends one line per failure to `log`.
inline int run_expr_corpus(std::string* log = nullptr) {
    int failures = 0;
    auto report = [&](const std::string& line) {
        ++failures;
        if (log)
            *log += line + "\n";
    };
    for (const auto& f : expr_corpus()) {
        try {
            const auto ast = vbm::expr::parse(f.text);
            vbm::expr::EvalContext ctx;
            for (const auto& [name, value] : f.bindings)
                ctx.bind(name, value);
            const double got = vbm::expr::evaluate(ast, ctx);
            if (!f.valid) {
                report(std::string(f.text) + ": expected an error, got " + std::to_string(got));
                continue;
            }
            const bool ok = f.tol == 0.0 ? got == f.expected : std::abs(got - f.expected) <= f.tol;
            if (!ok) {
                report(std::string(f.text) + ": expected " + std::to_string(f.expected) + ", got " +
                       std::to_string(got));
                continue;
            }
            // print-parse idempotence on the AST
            const auto reparsed = vbm::expr::parse(vbm::expr::print(ast));
            if (!(*reparsed == *ast))
                report(std::string(f.text) + ": print-parse changed the AST");
        } catch (const vbm::Error& e) {
            if (f.valid)
                report(std::string(f.text) + ": unexpected error " + e.what());
            else if (e.code() != f.error)
                report(std::string(f.text) + ": wrong error kind " + e.what());
        }
    }
    return failures;
}

} // namespace vbm_tests
