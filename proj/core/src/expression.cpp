#include "qsteer/expression.hpp"

#include "qsteer/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <vector>

namespace qsteer {

struct Expression::Node {
    enum class Op { Number, Var, Neg, Add, Sub, Mul, Div, Pow, Call } op;
    double value = 0.0;
    int var = 0;
    double (*fn)(double) = nullptr;
    std::shared_ptr<const Node> a, b;

    double eval(std::span<const double> x) const {
        switch (op) {
        case Op::Number: return value;
        case Op::Var: return x[var];
        case Op::Neg: return -a->eval(x);
        case Op::Add: return a->eval(x) + b->eval(x);
        case Op::Sub: return a->eval(x) - b->eval(x);
        case Op::Mul: return a->eval(x) * b->eval(x);
        case Op::Div: return a->eval(x) / b->eval(x);
        case Op::Pow: {
            const double base = a->eval(x);
            const double ex = b->eval(x);
            if (ex == 2.0) return base * base;
            return std::pow(base, ex);
        }
        case Op::Call: return fn(a->eval(x));
        }
        return 0.0;
    }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Op = Expression::Node::Op;

NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<Expression::Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

NodePtr number(double v) {
    auto n = std::make_shared<Expression::Node>();
    n->op = Op::Number;
    n->value = v;
    return n;
}

struct Function {
    const char* name;
    double (*fn)(double);
};

const Function kFunctions[] = {
    {"sin", [](double v) { return std::sin(v); }},
    {"cos", [](double v) { return std::cos(v); }},
    {"tan", [](double v) { return std::tan(v); }},
    {"exp", [](double v) { return std::exp(v); }},
    {"log", [](double v) { return std::log(v); }},
    {"sqrt", [](double v) { return std::sqrt(v); }},
    {"abs", [](double v) { return std::abs(v); }},
    {"sinh", [](double v) { return std::sinh(v); }},
    {"cosh", [](double v) { return std::cosh(v); }},
    {"tanh", [](double v) { return std::tanh(v); }},
};

class Parser {
public:
    explicit Parser(const std::string& s) : s_(s) {}

    NodePtr parse() {
        NodePtr n = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected character");
        return n;
    }

    int arity = 0;

private:
    const std::string& s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw InputError("expression '" + s_ + "': " + what + " at position " + std::to_string(pos_));
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr expr() {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+')) lhs = make(Op::Add, lhs, term());
            else if (accept('-')) lhs = make(Op::Sub, lhs, term());
            else return lhs;
        }
    }

    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*')) lhs = make(Op::Mul, lhs, unary());
            else if (accept('/')) lhs = make(Op::Div, lhs, unary());
            else return lhs;
        }
    }

    NodePtr unary() {
        if (accept('-')) return make(Op::Neg, unary());
        if (accept('+')) return unary();
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (accept('^')) return make(Op::Pow, base, unary());
        return base;
    }

    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        const char c = s_[pos_];
        if (accept('(')) {
            NodePtr n = expr();
            if (!accept(')')) fail("expected ')'");
            return n;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = s_.c_str() + pos_;
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin) fail("malformed number");
            pos_ += static_cast<std::size_t>(end - begin);
            return number(v);
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            const std::string name = s_.substr(start, pos_ - start);
            if (name == "pi") return number(std::numbers::pi);
            if (name == "e") return number(std::numbers::e);
            if (name == "x" || name == "x1" || name == "x2" || name == "x3") {
                auto n = std::make_shared<Expression::Node>();
                n->op = Op::Var;
                n->var = name == "x" ? 0 : name[1] - '1';
                arity = std::max(arity, n->var + 1);
                return n;
            }
            for (const auto& f : kFunctions) {
                if (name == f.name) {
                    if (!accept('(')) fail("expected '(' after " + name);
                    auto n = std::make_shared<Expression::Node>();
                    n->op = Op::Call;
                    n->fn = f.fn;
                    n->a = expr();
                    if (!accept(')')) fail("expected ')'");
                    return n;
                }
            }
            pos_ = start;
            fail("unknown identifier '" + name + "'");
        }
        fail("unexpected character");
    }
};

} // namespace

Expression::Expression() : Expression("0") {}

Expression::Expression(const std::string& source) : source_(source) {
    Parser p(source_);
    root_ = p.parse();
    arity_ = p.arity;
}

double Expression::operator()(std::span<const double> vars) const {
    if (static_cast<int>(vars.size()) < arity_)
        throw InputError("expression '" + source_ + "' needs " + std::to_string(arity_) + " variables");
    return root_->eval(vars);
}

double Expression::operator()(double x) const {
    const double v[3] = {x, 0.0, 0.0};
    if (arity_ > 1)
        throw InputError("expression '" + source_ + "' is not a function of a single variable");
    return root_->eval(std::span<const double>(v, 3));
}

} // namespace qsteer
