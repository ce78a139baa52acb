#include "qsteer/control.hpp"
#include "qsteer/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace qsteer;

namespace {

constexpr double kPi = std::numbers::pi;

std::shared_ptr<StateSpace> make_space(int M, const std::string& V = "cos(2*pi*x)", const std::string& Q = "x^2") {
    auto basis = std::make_shared<const TensorBasis>(
        assemble_tensor_basis({solve_eigens_1d(Potential1D(V), M)}, M, ScalarField::from_expression(Q)));
    return std::make_shared<StateSpace>(basis, 4.0);
}

State normalized(const StateSpace& sp, std::initializer_list<std::pair<int, cd>> entries) {
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(sp.size());
    for (auto [p, v] : entries) c(p) = v;
    return sp.make(c / c.norm());
}

// Random tangent direction at the anchor with decaying mode weights.
State random_tangent(const LinearizedSetup& s, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::VectorXcd c(s.M);
    for (int m = 0; m < s.M; ++m) c(m) = cd(g(rng), g(rng)) / std::pow(m + 1.0, 3);
    return project_tangent(s.space.make(c), s.anchor);
}

ControlSignal random_control(const ControlBasisPtr& basis, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::VectorXd c(basis->P());
    for (int p = 0; p < basis->P(); ++p) c(p) = g(rng);
    return ControlSignal(basis, c);
}

std::vector<double> lambdas(const StateSpace& sp) {
    const auto& l = sp.basis().eigenvalues();
    return {l.data(), l.data() + l.size()};
}

} // namespace

TEST(LinearizedSetup, FrequenciesAndSupport) {
    const auto sp = make_space(8);
    const State a = normalized(*sp, {{0, 1.0}, {2, cd(0.0, 1.0)}});
    const LinearizedSetup s = make_linearized_setup(*sp, a);
    EXPECT_EQ(s.support, (std::vector<int>{0, 2}));
    EXPECT_EQ(s.N, 3);
    EXPECT_EQ(s.M, 8);
    EXPECT_EQ(s.frequencies(0, 0), 0.0);
    EXPECT_EQ(s.frequencies(2, 1), 0.0);
    EXPECT_DOUBLE_EQ(s.frequencies(5, 1), sp->basis().eigenvalues()(5) - sp->basis().eigenvalues()(2));
    State unnormalized = a;
    unnormalized *= 2.0;
    EXPECT_THROW(make_linearized_setup(*sp, unnormalized), InputError);
    EXPECT_THROW(make_linearized_setup(*sp, sp->mode(7)), InputError);
}

TEST(Targets, ZeroDirectionGivesZeroTargets) {
    const auto sp = make_space(8);
    const LinearizedSetup s = make_linearized_setup(*sp, sp->mode(0));
    const TargetMatrix T = build_targets(s, sp->zero());
    EXPECT_EQ(T.entries.norm(), 0.0);
}

TEST(Targets, TwoModeAnchorBlockIsHermitianWithConstantDiagonal) {
    std::mt19937_64 rng(31);
    const auto sp = make_space(8);
    const LinearizedSetup s = make_linearized_setup(*sp, normalized(*sp, {{0, 0.8}, {1, cd(0.3, 0.5)}}));
    const State y = random_tangent(s, rng);
    const TargetMatrix T = build_targets(s, y);
    EXPECT_LE((T.free_constants - T.free_constants.adjoint()).norm(), 1e-14);
    EXPECT_EQ(T(0, 0), T(1, 1));
    EXPECT_NEAR(T(0, 0).imag(), 0.0, 1e-12 * T.entries.cwiseAbs().maxCoeff());
    EXPECT_THROW(T(0, 5), InputError);
}

TEST(Targets, NonTangentDirectionRejected) {
    const auto sp = make_space(8);
    const LinearizedSetup s = make_linearized_setup(*sp, sp->mode(0));
    EXPECT_THROW(build_targets(s, sp->mode(0)), InputError);
}

TEST(Targets, VanishingCouplingRaisesCondition) {
    // For Q = x on the free well, Q_31 = 0.
    const auto sp = make_space(8, "0", "x");
    const LinearizedSetup s = make_linearized_setup(*sp, sp->mode(0));
    try {
        build_targets(s, sp->mode(2, cd(0.0, 0.01)));
        FAIL() << "expected a condition error";
    } catch (const ConditionError& e) {
        EXPECT_EQ(e.condition, "cond_i");
    }
    EXPECT_NO_THROW(build_targets(s, sp->mode(1, 0.01)));
}

TEST(RightInverse, ReproducesTheDirection) {
    std::mt19937_64 rng(32);
    const auto sp = make_space(6);
    const LinearizedSetup s = make_linearized_setup(*sp, normalized(*sp, {{0, 0.9}, {1, cd(0.2, -0.4)}}));
    const auto basis = make_control_basis(400.0, 4, 60);
    const RightInverse A(s, basis);
    const State y = random_tangent(s, rng);
    MomentSolveReport rep;
    const ControlSignal u = A.apply(y, &rep);
    const State r = linearized_response_infinite(s, u);
    EXPECT_LE(sp->h_norm(r - y), 1e-6 * sp->h_norm(y));
    EXPECT_LE(sp->h_norm(project_tangent(r, s.anchor) - r), 1e-10 * sp->h_norm(r));

    EXPECT_TRUE(A.apply(sp->zero()).coeffs().isZero(0.0));
    const ControlSignal u3 = A.apply(cd(3.0) * y);
    EXPECT_LE((u3.coeffs() - 3.0 * u.coeffs()).norm(), 1e-12 * u3.coeffs().norm());
}

TEST(RightInverse, SingleModeAnchorWithConstantCoupling) {
    const auto sp = make_space(6, "cos(2*pi*x)", "1");
    const LinearizedSetup s = make_linearized_setup(*sp, sp->mode(0));
    // Only the phase direction is reachable when Q is constant.
    const State y = sp->mode(0, cd(0.0, 0.02));
    const ControlSignal u = right_inverse(s, y, make_control_basis(50.0, 2, 16));
    EXPECT_LE(sp->h_norm(linearized_response_infinite(s, u) - y), 1e-8);
    EXPECT_NEAR(u.integral(100.0), -0.02, 1e-9);
    EXPECT_THROW(build_targets(s, sp->mode(1, 0.01)), ConditionError);
}

TEST(RightInverse, SharedFrequencyConflictIsReported) {
    // lambda_7 - lambda_1 = lambda_8 - lambda_4 = 48 pi^2 on the free well.
    std::mt19937_64 rng(33);
    const auto sp = make_space(10, "0", "x^2");
    const LinearizedSetup s = make_linearized_setup(*sp, normalized(*sp, {{0, 1.0}, {3, 1.0}}));
    EXPECT_NEAR(s.frequencies(6, 0), 48 * kPi * kPi, 1e-9 * 48 * kPi * kPi);
    const RightInverse A(s, make_control_basis(400.0, 4, 60));
    try {
        A.apply(random_tangent(s, rng));
        FAIL() << "expected a cond_ii conflict";
    } catch (const ConditionError& e) {
        EXPECT_EQ(e.condition, "cond_ii");
    }

    const auto sc = make_space(10);
    const LinearizedSetup c = make_linearized_setup(*sc, normalized(*sc, {{0, 1.0}, {3, 1.0}}));
    EXPECT_NO_THROW(RightInverse(c, make_control_basis(400.0, 4, 60)).apply(random_tangent(c, rng)));
}

TEST(Response, FiniteMatchesInhomogeneousPropagation) {
    std::mt19937_64 rng(34);
    const auto sp = make_space(6);
    const LinearizedSetup s = make_linearized_setup(*sp, normalized(*sp, {{0, 0.8}, {2, 0.6}}));
    const auto basis = make_control_basis(4.0, 2, 6);
    const ControlSignal v = random_control(basis, rng);
    const double t = 5.0;
    PropagateOptions opt;
    opt.dt = default_dt(sp->basis()) / 4;
    opt.active_until = t;
    const Trajectory y = propagate(sp->basis(), s.anchor, ControlSignal(basis), t, opt);
    const State z = propagate_inhomogeneous(sp->basis(), sp->zero(), ControlSignal(basis), v, y, t, opt).final_state();
    const State r = linearized_response_finite(s, v, t);
    EXPECT_LE(l2_norm(z - r), 1e-8 * l2_norm(r));
}

TEST(Response, FiniteReachesInfiniteAtFreeReturnTimes) {
    std::mt19937_64 rng(35);
    const auto sp = make_space(8, "0", "x^2");
    const LinearizedSetup s = make_linearized_setup(*sp, sp->mode(0));
    const ControlSignal v = random_control(make_control_basis(6.0, 2, 6), rng);
    const State inf = linearized_response_infinite(s, v);
    const int n = static_cast<int>(std::ceil(v.horizon() * kPi / 2.0)) + 1;
    const State fin = linearized_response_finite(s, v, 2.0 * n / kPi);
    EXPECT_LE(sp->h_norm(fin - inf), 1e-9 * sp->h_norm(inf));
    const State a = linearized_response_infinite(s, v + 2.0 * v);
    EXPECT_LE(sp->h_norm(a - cd(3.0) * inf), 1e-13 * sp->h_norm(a));
}

TEST(TangentLimit, AgreesWithSeriesAtZeroControl) {
    std::mt19937_64 rng(36);
    const auto sp = make_space(6);
    const LinearizedSetup s = make_linearized_setup(*sp, sp->mode(0));
    const auto basis = make_control_basis(20.0, 4, 10);
    const ControlSignal v = random_control(basis, rng);
    const State b = linearized_response_infinite(s, v);
    auto error = [&](double refine) {
        PropagateOptions opt;
        opt.dt = default_dt(sp->basis()) / refine;
        return sp->h_norm(tangent_limit(s, ControlSignal(basis), v, opt) - b);
    };
    const double e4 = error(4), e8 = error(8);
    EXPECT_LE(e8, 1e-6 * sp->h_norm(b));
    EXPECT_NEAR(e4 / e8, 4.0, 0.5);
}

TEST(DerivativeCheck, SecondOrderRemainder) {
    std::mt19937_64 rng(37);
    const auto sp = make_space(6);
    const LinearizedSetup s = make_linearized_setup(*sp, sp->mode(0));
    const auto basis = make_control_basis(20.0, 4, 10);
    const ControlSignal v = 30.0 * random_control(basis, rng);
    const DerivativeCheckReport rep = derivative_check(s, ControlSignal(basis), v, {1e-2, 1e-3, 1e-4});
    EXPECT_FALSE(rep.inconclusive);
    EXPECT_GE(rep.slope, 1.9);
    EXPECT_LE(rep.slope, 2.1);

    const DerivativeCheckReport z = derivative_check(s, ControlSignal(basis), ControlSignal(basis), {1e-2, 1e-3, 1e-4});
    EXPECT_TRUE(z.inconclusive);
    for (double r : z.residuals) EXPECT_EQ(r, 0.0);
    EXPECT_THROW(derivative_check(s, ControlSignal(basis), v, {1e-2, 1e-3}), InputError);
    EXPECT_THROW(derivative_check(s, ControlSignal(basis), v, {1e-2, 1e-3, 1e-2}), InputError);
}

namespace {

struct SynthesisCase {
    std::shared_ptr<StateSpace> sp;
    LinearizedSetup setup;
    ControlBasisPtr basis;
    ReturnTimes rt;
};

SynthesisCase synthesis_case() {
    auto sp = make_space(6);
    LinearizedSetup s = make_linearized_setup(*sp, sp->mode(0));
    auto basis = make_control_basis(400.0, 4, 40);
    ReturnTimes rt = return_times(lambdas(*sp), 1, 1e-3, 1e4, 6);
    return {sp, std::move(s), std::move(basis), std::move(rt)};
}

} // namespace

TEST(Synthesize, AnchorTargetNeedsNoControl) {
    const SynthesisCase c = synthesis_case();
    const SynthesisResult r = synthesize(c.setup, c.setup.anchor, c.rt, c.basis);
    ASSERT_EQ(r.log.size(), 1u);
    EXPECT_TRUE(r.control.is_zero());
    EXPECT_LE(r.log[0].h_residual, 1e-12);
}

TEST(Synthesize, ReachesManufacturedTarget) {
    std::mt19937_64 rng(38);
    const SynthesisCase c = synthesis_case();
    ControlSignal hidden = random_control(c.basis, rng);
    hidden *= 1e-3 / c.sp->h_norm(linearized_response_infinite(c.setup, hidden));
    const State z1 = infinite_time_state(c.sp->basis(), c.setup.anchor, hidden, c.rt).limit;
    const SynthesisResult r = synthesize(c.setup, z1, c.rt, c.basis);
    EXPECT_LE(r.log.back().h_residual, 1e-5);
    for (std::size_t j = 1; j < r.log.size(); ++j) EXPECT_LT(r.log[j].h_residual, r.log[j - 1].h_residual);

    SynthesisOptions opt;
    opt.max_iter = 0;
    EXPECT_THROW(synthesize(c.setup, z1, c.rt, c.basis, opt), ConvergenceError);
}

TEST(Synthesize, RejectsBadInputs) {
    const SynthesisCase c = synthesis_case();
    EXPECT_THROW(synthesize(c.setup, c.sp->mode(1), c.rt, c.basis), InputError);
    EXPECT_THROW(synthesize(c.setup, c.setup.anchor, c.rt, make_control_basis(1.5, 4, 40)), ConfigurationError);
    State off = c.setup.anchor;
    off *= 1.01;
    EXPECT_THROW(synthesize(c.setup, off, c.rt, c.basis), InputError);
}

TEST(Synthesize, BalancedPairIsNotInvertible) {
    Eigen::VectorXd lam(4);
    lam << 1.0, 2.5, 4.1, 7.3;
    Eigen::MatrixXd Q(4, 4);
    Q << 0.7, 0.2, 0.1, 0.05, 0.2, 0.7, 0.3, 0.1, 0.1, 0.3, 0.4, 0.2, 0.05, 0.1, 0.2, 0.9;
    const auto sp = std::make_shared<StateSpace>(
        std::make_shared<const TensorBasis>(TensorBasis::from_spectrum(lam, Q)), 4.0);
    const State a = normalized(*sp, {{0, 1.0}, {1, 1.0}});
    const LinearizedSetup s = make_linearized_setup(*sp, a);
    const ReturnTimes rt = return_times(lambdas(*sp), 2, 1e-1, 1e4, 2);
    try {
        synthesize(s, a, rt, make_control_basis(20.0, 2, 12));
        FAIL() << "expected a not-invertible error";
    } catch (const NotInvertibleError& e) {
        EXPECT_EQ(e.p, 1);
        EXPECT_EQ(e.q, 2);
        EXPECT_EQ(e.balance, 0.0);
    }
}
