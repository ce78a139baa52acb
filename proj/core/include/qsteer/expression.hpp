#pragma once

#include <memory>
#include <span>
#include <string>

namespace qsteer {

// A compiled scalar expression in up to three variables.
//
// Grammar: sums/products/powers of numbers, the constants `pi` and `e`,
// the variables `x` (alias of `x1`), `x1`, `x2`, `x3`, and the functions
// sin cos tan exp log sqrt abs sinh cosh tanh.  `^` is right associative
// and binds tighter than unary minus, so -x^2 == -(x^2).
class Expression {
public:
    Expression();
    explicit Expression(const std::string& source);

    double operator()(std::span<const double> vars) const;
    double operator()(double x) const;

    const std::string& source() const noexcept { return source_; }
    // Highest variable index referenced (0 for a constant, 1 for x/x1, ...).
    int arity() const noexcept { return arity_; }
    bool is_constant() const noexcept { return arity_ == 0; }

    struct Node;

private:
    std::string source_;
    std::shared_ptr<const Node> root_;
    int arity_ = 0;
};

} // namespace qsteer
