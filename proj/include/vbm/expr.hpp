#pragma once

#include "vbm/errors.hpp"

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace vbm::expr {

// Arithmetic expression AST. Nodes are immutable once parsed; trees are
// shared freely across threads.
//
// Grammar (left-associative binaries, unary minus binds tighter than '^'):
//   sum     := product (('+'|'-') product)*
//   product := power (('*'|'/') power)*
//   power   := unary ('^' unary)*
//   unary   := '-' unary | postfix
//   postfix := atom ('[' integer ']')?
//   atom    := number | identifier | identifier '(' sum (',' sum)* ')' | '(' sum ')'
//
// Functions: sin cos tan exp log sqrt abs (1 arg), min max (2), bump (3).
// bump(x,a,b) is a smooth bump supported on (a,b), normalized to peak 1 and
// exactly zero outside the open interval.
//
// Component access `v[k]` reads the scalar binding named `vk`, matching the
// convention that point coordinates are bound as x0, x1, ...

class Expression;
using ExprPtr = std::shared_ptr<const Expression>;

class Expression {
public:
    enum class Kind { Literal, Variable, Unary, Binary, Call, Access };

    Kind kind;
    double value = 0.0;        // Literal
    std::string name;          // Variable, Call (function), Access (base)
    char op = 0;               // Unary ('-'), Binary ('+','-','*','/','^')
    int index = 0;             // Access
    std::vector<ExprPtr> args; // Unary: 1, Binary: 2, Call: arity

    bool operator==(const Expression& other) const;

    std::set<std::string> free_vars() const;
};

struct EvalContext {
    std::map<std::string, double> bindings;

    EvalContext() = default;
    EvalContext(std::initializer_list<std::pair<const std::string, double>> init) : bindings(init) {}

    EvalContext& bind(const std::string& name, double v) {
        bindings[name] = v;
        return *this;
    }
};

ExprPtr parse(const std::string& text);
std::string print(const Expression& expr);
double evaluate(const Expression& expr, const EvalContext& ctx);

inline double evaluate(const ExprPtr& expr, const EvalContext& ctx) { return evaluate(*expr, ctx); }
inline std::string print(const ExprPtr& expr) { return print(*expr); }

// The bump primitive, exposed directly: several fixtures need exact compact
// support without going through a parsed expression.
double bump(double x, double a, double b);

} // namespace vbm::expr
