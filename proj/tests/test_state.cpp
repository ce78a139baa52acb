#include "qsteer/errors.hpp"
#include "qsteer/state.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace qsteer;

namespace {

constexpr double kPi2 = std::numbers::pi * std::numbers::pi;

std::shared_ptr<const TensorBasis> free_basis(int d, int K, int M, const std::string& q = "x1") {
    std::vector<SpectralBasis1D> bases(d, solve_eigens_1d(Potential1D(), K));
    return std::make_shared<const TensorBasis>(assemble_tensor_basis(bases, M, ScalarField::from_expression(q)));
}

State random_state(const StateSpace& sp, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::VectorXcd c(sp.size());
    for (int a = 0; a < sp.size(); ++a) c(a) = cd(g(rng), g(rng));
    return sp.make(c / c.norm());
}

} // namespace

TEST(Norms, SingleModeValues) {
    const StateSpace s1(free_basis(1, 10, 10), 4.0);
    EXPECT_DOUBLE_EQ(s1.norm(s1.mode(1), "H"), 8.0);
    EXPECT_DOUBLE_EQ(s1.norm(s1.mode(1), "V"), 8.0);
    EXPECT_DOUBLE_EQ(s1.norm(s1.mode(1), "L2"), 1.0);

    const StateSpace s2(free_basis(2, 6, 20), 8.0);
    const int p = s2.basis().position({2, 3});
    ASSERT_GE(p, 0);
    EXPECT_DOUBLE_EQ(s2.norm(s2.mode(p), "V"), 216.0);
    EXPECT_DOUBLE_EQ(s2.norm(s2.mode(p), "H"), 216.0);

    for (int k = 0; k < 5; ++k) {
        const double lam = s1.basis().eigenvalues()(k);
        EXPECT_NEAR(s1.norm(s1.mode(k), "HsV"), lam * lam, 1e-12 * lam * lam);
        EXPECT_NEAR(s1.norm(s1.mode(k), "HsV(3)"), std::pow(lam, 1.5), 1e-12 * std::pow(lam, 1.5));
    }
}

TEST(Norms, UnknownTagAndForeignState) {
    const StateSpace sp(free_basis(1, 8, 8), 4.0);
    EXPECT_THROW(sp.norm(sp.mode(0), "H2"), InputError);
    EXPECT_THROW(NormSpec::parse("Linf"), InputError);
    const StateSpace other(free_basis(1, 8, 8), 4.0);
    EXPECT_THROW(sp.norm(other.mode(0), "L2"), InputError);
}

TEST(Norms, HBoundedByVAndEmbedding) {
    std::mt19937_64 rng(3);
    const StateSpace sp(free_basis(2, 8, 40), 8.0);
    for (int t = 0; t < 20; ++t) {
        const State z = random_state(sp, rng);
        EXPECT_LE(sp.norm(z, "H"), sp.norm(z, "V"));
    }
    const double C = sp.embedding_constant();
    for (int a = 0; a < sp.size(); ++a)
        EXPECT_LE(sp.norm(sp.mode(a), "H"), C * sp.norm(sp.mode(a), "HsV(6)") * (1.0 + 1e-12));
}

TEST(WeightTable, ExactIntegerWeights) {
    const auto tb = free_basis(3, 6, 30);
    const WeightTable w = WeightTable::build(*tb, 12.0);
    for (int a = 0; a < tb->size(); ++a) {
        const MultiIndex& m = tb->indices()[a];
        EXPECT_EQ(w.h(a), std::pow(m[0] * m[1] * m[2], 3));
        EXPECT_GT(w.hsv(a), 0.0);
    }
}

TEST(ProjectTangent, Cases) {
    std::mt19937_64 rng(5);
    const StateSpace sp(free_basis(1, 10, 10), 4.0);
    const State a = random_state(sp, rng);
    EXPECT_LE(l2_norm(project_tangent(a, a)), 1e-15);
    State ia = a;
    ia *= cd(0.0, 1.0);
    EXPECT_LE(l2_norm(project_tangent(ia, a) - ia), 1e-15);
    for (int t = 0; t < 20; ++t) {
        State z = random_state(sp, rng);
        z *= 3.0;
        const State pz = project_tangent(z, a);
        EXPECT_LE(std::abs(inner(pz, a).real()), 1e-12);
        EXPECT_LE(l2_norm(project_tangent(pz, a) - pz), 1e-14);
        EXPECT_LE(l2_norm(pz), l2_norm(z) * (1.0 + 1e-15));
    }
    State unnormalized = a;
    unnormalized *= 2.0;
    EXPECT_THROW(project_tangent(a, unnormalized), InputError);
}

TEST(ClassifySpecial, SingleModeIsInE) {
    const StateSpace sp(free_basis(1, 10, 10, "x^2"), 4.0);
    const auto c = classify_special(sp.mode(0), sp.basis().coupling());
    EXPECT_EQ(c.label, SpecialLabel::InE);
    EXPECT_TRUE(c.in_E);
    EXPECT_FALSE(c.in_E0);
    EXPECT_EQ(c.support, std::vector<int>{0});
}

TEST(ClassifySpecial, SyntheticBalancedPairIsInE0) {
    Eigen::VectorXd lam(4);
    lam << 1.0, 2.5, 4.1, 7.3;
    Eigen::MatrixXd Q(4, 4);
    Q << 0.7, 0.2, 0.1, 0.05, 0.2, 0.7, 0.3, 0.1, 0.1, 0.3, 0.4, 0.2, 0.05, 0.1, 0.2, 0.9;
    const auto tb = std::make_shared<const TensorBasis>(TensorBasis::from_spectrum(lam, Q));
    const StateSpace sp(tb, 4.0);
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(4);
    c(0) = c(1) = 1.0 / std::sqrt(2.0);
    const auto r = classify_special(sp.make(c), Q);
    EXPECT_EQ(r.label, SpecialLabel::InE0);
    EXPECT_TRUE(r.in_E0);
    EXPECT_EQ(r.balance, 0.0);
}

TEST(ClassifySpecial, FreeQuadraticPairIsGeneric) {
    const StateSpace sp(free_basis(1, 10, 10, "x^2"), 4.0);
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(10);
    c(0) = c(1) = 1.0 / std::sqrt(2.0);
    const auto r = classify_special(sp.make(c), sp.basis().coupling());
    EXPECT_EQ(r.label, SpecialLabel::Generic);
    EXPECT_FALSE(r.in_E0);
    EXPECT_TRUE(r.in_E);
    const double q11 = 1.0 / 3.0 - 1.0 / (2.0 * kPi2), q22 = 1.0 / 3.0 - 1.0 / (8.0 * kPi2);
    EXPECT_NEAR(r.balance, 0.5 * q11 - 0.5 * q22, 1e-13);
}

TEST(ClassifySpecial, SupportReachingTruncationIsNotResolved) {
    const StateSpace sp(free_basis(1, 6, 6, "x^2"), 4.0);
    const auto r = classify_special(sp.mode(5), sp.basis().coupling());
    EXPECT_TRUE(r.touches_truncation);
    EXPECT_FALSE(r.in_E);
}
