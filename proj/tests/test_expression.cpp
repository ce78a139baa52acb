#include "qsteer/errors.hpp"
#include "qsteer/expression.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

using qsteer::Expression;

TEST(Expression, ConstantsAndArithmetic) {
    EXPECT_DOUBLE_EQ(Expression("1 + 2*3")(0.0), 7.0);
    EXPECT_DOUBLE_EQ(Expression("(1 + 2)*3")(0.0), 9.0);
    EXPECT_DOUBLE_EQ(Expression("2^3^2")(0.0), 512.0);
    EXPECT_DOUBLE_EQ(Expression("-2^2")(0.0), -4.0);
    EXPECT_DOUBLE_EQ(Expression("pi")(0.0), std::numbers::pi);
    EXPECT_DOUBLE_EQ(Expression("e")(0.0), std::numbers::e);
    EXPECT_DOUBLE_EQ(Expression("1.5e2")(0.0), 150.0);
    EXPECT_TRUE(Expression("3*pi").is_constant());
}

TEST(Expression, VariablesAndFunctions) {
    const Expression v("cos(2*pi*x)");
    EXPECT_EQ(v.arity(), 1);
    EXPECT_NEAR(v(0.25), 0.0, 1e-15);
    EXPECT_NEAR(v(0.5), -1.0, 1e-15);

    const Expression q("x1 * x2^2 + sqrt(x3)");
    EXPECT_EQ(q.arity(), 3);
    const std::vector<double> p{2.0, 3.0, 16.0};
    EXPECT_DOUBLE_EQ(q(p), 22.0);

    EXPECT_NEAR(Expression("exp(log(3)) + abs(-1) + tanh(0) + sinh(0) + cosh(0)")(0.0), 5.0, 1e-14);
}

TEST(Expression, RejectsMalformedInput) {
    EXPECT_THROW(Expression("1 +"), qsteer::InputError);
    EXPECT_THROW(Expression("foo(x)"), qsteer::InputError);
    EXPECT_THROW(Expression("(x"), qsteer::InputError);
    EXPECT_THROW(Expression("x y"), qsteer::InputError);
    EXPECT_THROW(Expression("x4"), qsteer::InputError);
}
