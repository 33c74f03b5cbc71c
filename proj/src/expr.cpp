#include "vbm/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>

namespace vbm::expr {

namespace {

struct FunctionInfo {
    const char* name;
    int arity;
};

constexpr FunctionInfo kFunctions[] = {
    {"sin", 1}, {"cos", 1}, {"tan", 1}, {"exp", 1}, {"log", 1},
    {"sqrt", 1}, {"abs", 1}, {"min", 2}, {"max", 2}, {"bump", 3},
};

const FunctionInfo* find_function(const std::string& name) {
    for (const auto& f : kFunctions)
        if (name == f.name)
            return &f;
    return nullptr;
}

struct Token {
    enum class Type { Number, Ident, Op, End };
    Type type = Type::End;
    double number = 0.0;
    std::string text;
    char op = 0;
    std::size_t offset = 0;
};

class Lexer {
public:
    explicit Lexer(const std::string& text) : text_(text) { advance(); }

    const Token& peek() const { return current_; }

    Token take() {
        Token t = current_;
        advance();
        return t;
    }

private:
    void advance() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        current_ = Token{};
        current_.offset = pos_;
        if (pos_ >= text_.size()) {
            current_.type = Token::Type::End;
            return;
        }
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && pos_ + 1 < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
            const char* start = text_.c_str() + pos_;
            char* end = nullptr;
            current_.type = Token::Type::Number;
            current_.number = std::strtod(start, &end);
            pos_ += static_cast<std::size_t>(end - start);
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            current_.type = Token::Type::Ident;
            current_.text = text_.substr(start, pos_ - start);
            return;
        }
        switch (c) {
        case '+': case '-': case '*': case '/': case '^':
        case '(': case ')': case ',': case '[': case ']':
            current_.type = Token::Type::Op;
            current_.op = c;
            ++pos_;
            return;
        default:
            fail(Errc::SyntaxError,
                 "unexpected character '" + std::string(1, c) + "' at offset " + std::to_string(pos_));
        }
    }

    const std::string& text_;
    std::size_t pos_ = 0;
    Token current_;
};

class Parser {
public:
    explicit Parser(const std::string& text) : lex_(text) {}

    ExprPtr run() {
        ExprPtr e = sum();
        expect_end();
        return e;
    }

private:
    [[noreturn]] void syntax_error(const Token& at, const std::string& what) {
        fail(Errc::SyntaxError, what + " at offset " + std::to_string(at.offset));
    }

    void expect_end() {
        if (lex_.peek().type != Token::Type::End)
            syntax_error(lex_.peek(), "trailing input");
    }

    bool accept_op(char c) {
        if (lex_.peek().type == Token::Type::Op && lex_.peek().op == c) {
            lex_.take();
            return true;
        }
        return false;
    }

    void expect_op(char c, const char* what) {
        if (!accept_op(c))
            syntax_error(lex_.peek(), std::string("expected '") + c + "' " + what);
    }

    static ExprPtr make_binary(char op, ExprPtr lhs, ExprPtr rhs) {
        auto node = std::make_shared<Expression>();
        node->kind = Expression::Kind::Binary;
        node->op = op;
        node->args = {std::move(lhs), std::move(rhs)};
        return node;
    }

    ExprPtr sum() {
        ExprPtr lhs = product();
        while (lex_.peek().type == Token::Type::Op && (lex_.peek().op == '+' || lex_.peek().op == '-')) {
            const char op = lex_.take().op;
            lhs = make_binary(op, std::move(lhs), product());
        }
        return lhs;
    }

    ExprPtr product() {
        ExprPtr lhs = power();
        while (lex_.peek().type == Token::Type::Op && (lex_.peek().op == '*' || lex_.peek().op == '/')) {
            const char op = lex_.take().op;
            lhs = make_binary(op, std::move(lhs), power());
        }
        return lhs;
    }

    ExprPtr power() {
        ExprPtr lhs = unary();
        while (lex_.peek().type == Token::Type::Op && lex_.peek().op == '^') {
            const char op = lex_.take().op;
            lhs = make_binary(op, std::move(lhs), unary());
        }
        return lhs;
    }

    ExprPtr unary() {
        if (accept_op('-')) {
            auto node = std::make_shared<Expression>();
            node->kind = Expression::Kind::Unary;
            node->op = '-';
            node->args = {unary()};
            return node;
        }
        return postfix();
    }

    ExprPtr postfix() {
        ExprPtr base = atom();
        if (lex_.peek().type == Token::Type::Op && lex_.peek().op == '[') {
            const Token bracket = lex_.take();
            if (base->kind != Expression::Kind::Variable)
                syntax_error(bracket, "component access applies to a variable");
            const Token idx = lex_.take();
            if (idx.type != Token::Type::Number || idx.number != std::floor(idx.number) || idx.number < 0)
                syntax_error(idx, "expected a nonnegative integer index");
            expect_op(']', "to close component access");
            auto node = std::make_shared<Expression>();
            node->kind = Expression::Kind::Access;
            node->name = base->name;
            node->index = static_cast<int>(idx.number);
            return node;
        }
        return base;
    }

    ExprPtr atom() {
        const Token t = lex_.take();
        switch (t.type) {
        case Token::Type::Number: {
            auto node = std::make_shared<Expression>();
            node->kind = Expression::Kind::Literal;
            node->value = t.number;
            return node;
        }
        case Token::Type::Ident: {
            if (lex_.peek().type == Token::Type::Op && lex_.peek().op == '(') {
                lex_.take();
                const FunctionInfo* fn = find_function(t.text);
                if (!fn)
                    fail(Errc::UnknownFunction,
                         "'" + t.text + "' at offset " + std::to_string(t.offset));
                auto node = std::make_shared<Expression>();
                node->kind = Expression::Kind::Call;
                node->name = t.text;
                node->args.push_back(sum());
                while (accept_op(','))
                    node->args.push_back(sum());
                expect_op(')', "to close call");
                if (static_cast<int>(node->args.size()) != fn->arity)
                    fail(Errc::SyntaxError, "'" + t.text + "' takes " + std::to_string(fn->arity) +
                                                " arguments, got " + std::to_string(node->args.size()) +
                                                " at offset " + std::to_string(t.offset));
                return node;
            }
            auto node = std::make_shared<Expression>();
            node->kind = Expression::Kind::Variable;
            node->name = t.text;
            return node;
        }
        case Token::Type::Op:
            if (t.op == '(') {
                ExprPtr inner = sum();
                expect_op(')', "to close group");
                return inner;
            }
            syntax_error(t, std::string("unexpected '") + t.op + "'");
        case Token::Type::End:
            syntax_error(t, "unexpected end of input");
        }
        syntax_error(t, "unexpected token");
    }

    Lexer lex_;
};

int precedence(const Expression& e) {
    switch (e.kind) {
    case Expression::Kind::Binary:
        switch (e.op) {
        case '+': case '-': return 1;
        case '*': case '/': return 2;
        default: return 3; // '^'
        }
    case Expression::Kind::Unary:
        return 4;
    default:
        return 5;
    }
}

void print_rec(const Expression& e, int parent_prec, bool right_operand, std::string& out) {
    const int prec = precedence(e);
    const bool parens = prec < parent_prec || (prec == parent_prec && right_operand);
    if (parens)
        out += '(';
    switch (e.kind) {
    case Expression::Kind::Literal: {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", e.value);
        out += buf;
        break;
    }
    case Expression::Kind::Variable:
        out += e.name;
        break;
    case Expression::Kind::Access:
        out += e.name;
        out += '[';
        out += std::to_string(e.index);
        out += ']';
        break;
    case Expression::Kind::Unary:
        out += '-';
        print_rec(*e.args[0], prec, false, out);
        break;
    case Expression::Kind::Binary:
        print_rec(*e.args[0], prec, false, out);
        out += e.op;
        print_rec(*e.args[1], prec, true, out);
        break;
    case Expression::Kind::Call:
        out += e.name;
        out += '(';
        for (std::size_t i = 0; i < e.args.size(); ++i) {
            if (i > 0)
                out += ',';
            print_rec(*e.args[i], 0, false, out);
        }
        out += ')';
        break;
    }
    if (parens)
        out += ')';
}

double require_finite(double v, const char* what) {
    if (!std::isfinite(v))
        fail(Errc::DomainError, std::string(what) + " produced a non-finite value");
    return v;
}

} // namespace

double bump(double x, double a, double b) {
    if (!(a < b))
        fail(Errc::DomainError, "bump requires a < b");
    if (x <= a || x >= b)
        return 0.0;
    const double width = b - a;
    return std::exp(4.0 / (width * width) - 1.0 / ((x - a) * (b - x)));
}

bool Expression::operator==(const Expression& other) const {
    if (kind != other.kind)
        return false;
    switch (kind) {
    case Kind::Literal:
        return value == other.value;
    case Kind::Variable:
        return name == other.name;
    case Kind::Access:
        return name == other.name && index == other.index;
    case Kind::Unary:
    case Kind::Binary:
    case Kind::Call:
        if (op != other.op || name != other.name || args.size() != other.args.size())
            return false;
        for (std::size_t i = 0; i < args.size(); ++i)
            if (!(*args[i] == *other.args[i]))
                return false;
        return true;
    }
    return false;
}

std::set<std::string> Expression::free_vars() const {
    std::set<std::string> vars;
    std::function<void(const Expression&)> walk = [&](const Expression& e) {
        if (e.kind == Kind::Variable)
            vars.insert(e.name);
        else if (e.kind == Kind::Access)
            vars.insert(e.name + std::to_string(e.index));
        for (const auto& a : e.args)
            walk(*a);
    };
    walk(*this);
    return vars;
}

ExprPtr parse(const std::string& text) { return Parser(text).run(); }

std::string print(const Expression& expr) {
    std::string out;
    print_rec(expr, 0, false, out);
    return out;
}

double evaluate(const Expression& expr, const EvalContext& ctx) {
    switch (expr.kind) {
    case Expression::Kind::Literal:
        return expr.value;
    case Expression::Kind::Variable: {
        auto it = ctx.bindings.find(expr.name);
        if (it == ctx.bindings.end())
            fail(Errc::UnboundVariable, "'" + expr.name + "'");
        return it->second;
    }
    case Expression::Kind::Access: {
        const std::string resolved = expr.name + std::to_string(expr.index);
        auto it = ctx.bindings.find(resolved);
        if (it == ctx.bindings.end())
            fail(Errc::UnboundVariable, "'" + resolved + "'");
        return it->second;
    }
    case Expression::Kind::Unary:
        return -evaluate(*expr.args[0], ctx);
    case Expression::Kind::Binary: {
        const double lhs = evaluate(*expr.args[0], ctx);
        const double rhs = evaluate(*expr.args[1], ctx);
        switch (expr.op) {
        case '+': return lhs + rhs;
        case '-': return lhs - rhs;
        case '*': return lhs * rhs;
        case '/':
            if (rhs == 0.0)
                fail(Errc::DomainError, "division by zero");
            return lhs / rhs;
        case '^':
            return require_finite(std::pow(lhs, rhs), "power");
        }
        fail(Errc::SyntaxError, "corrupt binary node");
    }
    case Expression::Kind::Call: {
        std::vector<double> a(expr.args.size());
        for (std::size_t i = 0; i < expr.args.size(); ++i)
            a[i] = evaluate(*expr.args[i], ctx);
        if (expr.name == "sin") return std::sin(a[0]);
        if (expr.name == "cos") return std::cos(a[0]);
        if (expr.name == "tan") return require_finite(std::tan(a[0]), "tan");
        if (expr.name == "exp") return require_finite(std::exp(a[0]), "exp");
        if (expr.name == "log") {
            if (a[0] <= 0.0)
                fail(Errc::DomainError, "log of a non-positive value");
            return std::log(a[0]);
        }
        if (expr.name == "sqrt") {
            if (a[0] < 0.0)
                fail(Errc::DomainError, "sqrt of a negative value");
            return std::sqrt(a[0]);
        }
        if (expr.name == "abs") return std::abs(a[0]);
        if (expr.name == "min") return std::min(a[0], a[1]);
        if (expr.name == "max") return std::max(a[0], a[1]);
        if (expr.name == "bump") return bump(a[0], a[1], a[2]);
        fail(Errc::UnknownFunction, "'" + expr.name + "'");
    }
    }
    fail(Errc::SyntaxError, "corrupt expression node");
}

} // namespace vbm::expr
