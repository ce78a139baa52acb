#include "qsteer/errors.hpp"
#include "qsteer/moment.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace qsteer;
using cd = std::complex<double>;

namespace {

std::vector<double> integer_frequencies(int R) {
    std::vector<double> w;
    for (int r = 0; r < R; ++r) w.push_back(r);
    return w;
}

std::vector<cd> random_targets(int R, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    std::vector<cd> d{cd(g(rng), 0.0)};
    for (int r = 1; r < R; ++r) d.emplace_back(g(rng), g(rng));
    return d;
}

} // namespace

TEST(MomentSolve, ZeroTargetsGiveZeroControl) {
    MomentSystem sys{integer_frequencies(4), std::vector<cd>(4, 0.0), {}};
    const auto rep = solve_moments(sys, make_control_basis(10.0, 2, 10));
    EXPECT_EQ(rep.control.coeffs().norm(), 0.0);
    EXPECT_FALSE(rep.degraded);
}

TEST(MomentSolve, SingleFrequencyFixesTheIntegral) {
    MomentSystem sys{{0.0}, {cd(1.0, 0.0)}, {}};
    const auto rep = solve_moments(sys, make_control_basis(3.0, 2, 4));
    EXPECT_NEAR(rep.control.integral(100.0), 1.0, 1e-9);
    EXPECT_NEAR(inverse_fourier(rep.control, 0.0).real(), 1.0, 1e-9);
}

TEST(MomentSolve, RoundTripOnHiddenControl) {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> g;
    const auto basis = make_control_basis(30.0, 4, 120);
    Eigen::VectorXd c(120);
    for (int p = 0; p < 120; ++p) c(p) = g(rng);
    const ControlSignal hidden(basis, c);
    const auto w = integer_frequencies(30);
    std::vector<cd> d;
    for (double x : w) d.push_back(hidden.inverse_fourier(x));
    d[0] = d[0].real();
    const auto rep = solve_moments(MomentSystem{w, d, {}}, basis);
    double worst = 0.0;
    for (std::size_t r = 0; r < w.size(); ++r)
        worst = std::max(worst, std::abs(rep.control.inverse_fourier(w[r]) - d[r]));
    EXPECT_LE(worst, 1e-8);
    EXPECT_NEAR(*std::max_element(rep.residuals.begin(), rep.residuals.end()), worst, 1e-15);
}

TEST(MomentSolve, LinearInTargets) {
    std::mt19937_64 rng(22);
    const auto w = integer_frequencies(6);
    const MomentSolver solver(w, make_control_basis(8.0, 2, 16));
    const auto d1 = random_targets(6, rng), d2 = random_targets(6, rng);
    std::vector<cd> mix;
    for (int r = 0; r < 6; ++r) mix.push_back(2.0 * d1[r] - 3.0 * d2[r]);
    const Eigen::VectorXd a = solver.solve(d1).control.coeffs(), b = solver.solve(d2).control.coeffs();
    EXPECT_LE((solver.solve(mix).control.coeffs() - (2.0 * a - 3.0 * b)).norm(), 1e-12 * a.norm());
}

TEST(MomentSolve, Validation) {
    const auto basis = make_control_basis(8.0, 2, 16);
    EXPECT_THROW(solve_moments(MomentSystem{{}, {}, {}}, basis), InputError);
    EXPECT_THROW(solve_moments(MomentSystem{{1.0, 2.0}, {1.0, 1.0}, {}}, basis), InputError);
    EXPECT_THROW(solve_moments(MomentSystem{{0.0, 2.0, 1.0}, {1.0, 1.0, 1.0}, {}}, basis), InputError);
    EXPECT_THROW(solve_moments(MomentSystem{{0.0, 1.0}, {cd(1.0, 0.2), 1.0}, {}}, basis), InputError);
    EXPECT_THROW(solve_moments(MomentSystem{{0.0, 1.0}, {1.0}, {}}, basis), InputError);
    EXPECT_THROW(solve_moments(MomentSystem{{0.0, 1.0}, {1.0, cd(NAN, 0.0)}, {}}, basis), InputError);
    EXPECT_THROW(MomentSolver({0.0, 1.0, 1.0}, basis), InputError);
    EXPECT_THROW(MomentSolver(integer_frequencies(9), basis), ConfigurationError);
}

TEST(MomentSolve, NestedBasesLowerTheObjective) {
    std::mt19937_64 rng(23);
    const auto w = integer_frequencies(5);
    const auto d = random_targets(5, rng);
    MomentSolverOptions opt;
    opt.reg_lambda = 1e-6;
    double last = std::numeric_limits<double>::infinity();
    for (int P : {10, 14, 20, 30}) {
        const double obj = solve_moments(MomentSystem{w, d, {}}, make_control_basis(6.0, 2, P), opt).objective;
        EXPECT_LE(obj, last * (1 + 1e-9)) << "P = " << P;
        last = obj;
    }
}

TEST(MomentMatrix, MatchesTransformsOfCoordinateControls) {
    const auto basis = make_control_basis(5.0, 3, 8);
    const std::vector<double> w{0.0, 1.5, 4.0};
    const Eigen::MatrixXd A = moment_matrix(w, *basis);
    ASSERT_EQ(A.rows(), 5);
    for (int p = 0; p < 8; ++p) {
        const ControlSignal e(basis, Eigen::VectorXd::Unit(8, p));
        EXPECT_NEAR(A(0, p), e.inverse_fourier(0.0).real(), 1e-14);
        EXPECT_NEAR(A(1, p), e.inverse_fourier(1.5).real(), 1e-14);
        EXPECT_NEAR(A(2, p), e.inverse_fourier(1.5).imag(), 1e-14);
        EXPECT_NEAR(A(4, p), e.inverse_fourier(4.0).imag(), 1e-14);
    }
}

TEST(Independence, AgreesWithJacobiSvdAndFlagsNearDuplicates) {
    const auto basis = make_control_basis(5.0, 2, 12);
    const std::vector<double> w{0.0, 1.0, 2.0, 3.0};
    Eigen::MatrixXd A(7, 12);
    for (int p = 0; p < 12; ++p) {
        const ControlSignal e(basis, Eigen::VectorXd::Unit(12, p));
        int r = 0;
        for (double x : w) {
            const cd F = e.inverse_fourier(x);
            A(r++, p) = F.real();
            if (x != 0.0) A(r++, p) = F.imag();
        }
    }
    const Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues();
    const auto rep = independence_diagnostic(w, *basis);
    EXPECT_NEAR(rep.sigma_max, s(0), 1e-12 * s(0));
    EXPECT_NEAR(rep.sigma_min, s(6), 1e-10 * s(0));
    EXPECT_FALSE(rep.flagged);

    const std::vector<double> close{0.0, 1.0, 1.0 + 1e-9, 3.0};
    EXPECT_TRUE(independence_diagnostic(close, *basis).flagged);
    EXPECT_THROW(independence_diagnostic(std::vector<double>{0.0, 1.0, 1.0}, *basis), InputError);
}
