#include "qsteer/control_signal.hpp"
#include "qsteer/errors.hpp"

#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <complex>
#include <random>

using namespace qsteer;
using cd = std::complex<double>;
using GK = boost::math::quadrature::gauss_kronrod<double, 61>;

namespace {

ControlSignal random_control(double beta, int s, int P, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::VectorXd c(P);
    for (int p = 0; p < P; ++p) c(p) = g(rng);
    return ControlSignal(make_control_basis(beta, s, P), c);
}

double integrate(const std::function<double(double)>& f, double a, double b) {
    return GK::integrate(f, a, b, 20, 1e-14);
}

} // namespace

TEST(ControlBasis, RejectsBadParameters) {
    EXPECT_THROW(ControlBasis(0.0, 2, 4), ConfigurationError);
    EXPECT_THROW(ControlBasis(1.0, 2, 4, 1.0), ConfigurationError);
    EXPECT_THROW(ControlBasis(3.0, -1, 4), ConfigurationError);
    EXPECT_THROW(ControlBasis(3.0, 2, 0), ConfigurationError);
}

TEST(ControlBasis, NullSpaceIsOrthonormal) {
    const ControlBasis b(7.0, 4, 12);
    const Eigen::MatrixXd& N = b.null_space();
    EXPECT_LE((N.transpose() * N - Eigen::MatrixXd::Identity(12, 12)).norm(), 1e-12);
}

TEST(ControlSignal, DampedMonomialValuesAndTransform) {
    const double beta = 3.0;
    const auto basis = make_control_basis(beta, 2, 3);
    const std::vector<double> a{1.0, -0.5, 0.25};
    const ControlSignal u = ControlSignal::from_damped_monomials(basis, a);
    auto direct = [&](double t) {
        return (a[0] * t * t + a[1] * t * t * t + a[2] * t * t * t * t) * std::exp(-beta * t);
    };
    for (double t : {0.0, 0.1, 0.7, 2.0, 6.0}) EXPECT_NEAR(u(t), direct(t), 1e-13);

    // Closed form: int t^n e^{-(beta - i w) t} dt = n! / (beta - i w)^{n+1}.
    for (double w : {0.0, 1.3, -9.0, 40.0}) {
        const cd z(beta, -w);
        const cd expect = a[0] * 2.0 / std::pow(z, 3) + a[1] * 6.0 / std::pow(z, 4) + a[2] * 24.0 / std::pow(z, 5);
        EXPECT_LE(std::abs(u.inverse_fourier(w) - expect), 1e-12 * std::max(1.0, std::abs(expect)));
    }
    EXPECT_NEAR(u.inverse_fourier(0.0).real(), 2.0 / 27.0 - 0.5 * 6.0 / 81.0 + 0.25 * 24.0 / 243.0, 1e-14);
}

TEST(ControlSignal, TransformAgainstQuadrature) {
    std::mt19937_64 rng(11);
    const ControlSignal u = random_control(4.0, 4, 10, rng);
    boost::math::quadrature::exp_sinh<double> es;
    for (double w : {0.0, 2.5, 17.0}) {
        const double re = es.integrate([&](double t) { return std::cos(w * t) * u(t); }, 0.0,
                                       std::numeric_limits<double>::infinity());
        const double im = es.integrate([&](double t) { return std::sin(w * t) * u(t); }, 0.0,
                                       std::numeric_limits<double>::infinity());
        const cd F = u.inverse_fourier(w);
        EXPECT_NEAR(F.real(), re, 1e-10);
        EXPECT_NEAR(F.imag(), im, 1e-10);
    }
}

TEST(ControlSignal, VanishesToOrderSAtOrigin) {
    std::mt19937_64 rng(12);
    const ControlSignal u = random_control(5.0, 4, 8, rng);
    const double scale = u.coeffs().norm();
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(u.derivative(k, 0.0), 0.0, 1e-12 * std::pow(5.0, k) * scale) << "k = " << k;
    EXPECT_GT(std::abs(u.derivative(4, 0.0)), 1e-6);
}

TEST(ControlSignal, ConjugateSymmetry) {
    std::mt19937_64 rng(13);
    const ControlSignal u = random_control(2.0, 2, 6, rng);
    for (double w : {0.5, 3.0, 11.0}) EXPECT_LE(std::abs(u.inverse_fourier(-w) - std::conj(u.inverse_fourier(w))), 1e-14);
}

TEST(ControlSignal, DerivativesMatchFiniteDifferences) {
    std::mt19937_64 rng(14);
    const ControlSignal u = random_control(3.0, 2, 6, rng);
    for (double t : {0.3, 1.1, 2.5}) {
        const double h = 1e-5, H = 1e-3;
        const double fd1 = (u(t + h) - u(t - h)) / (2 * h);
        const double fd2 = (u(t + H) - 2 * u(t) + u(t - H)) / (H * H);
        EXPECT_NEAR(u.derivative(1, t), fd1, 1e-8 * std::max(1.0, std::abs(fd1)));
        EXPECT_NEAR(u.derivative(2, t), fd2, 1e-5 * std::max(1.0, std::abs(fd2)));
        EXPECT_DOUBLE_EQ(u.derivative(0, t), u(t));
    }
}

TEST(ControlSignal, IntegralsAndPartialTransform) {
    std::mt19937_64 rng(15);
    const ControlSignal u = random_control(3.0, 2, 6, rng);
    for (double t : {0.4, 1.7, 5.0}) EXPECT_NEAR(u.integral(t), integrate([&](double s) { return u(s); }, 0.0, t), 1e-12);
    const std::vector<double> w{0.0, 4.0, -7.5};
    const double t = 1.3;
    const auto pf = u.partial_fourier(w, t);
    for (std::size_t r = 0; r < w.size(); ++r) {
        const double re = integrate([&](double s) { return std::cos(w[r] * s) * u(s); }, 0.0, t);
        const double im = integrate([&](double s) { return std::sin(w[r] * s) * u(s); }, 0.0, t);
        EXPECT_NEAR(pf[r].real(), re, 1e-12);
        EXPECT_NEAR(pf[r].imag(), im, 1e-12);
    }
    const auto tail = u.partial_fourier(w, 50.0);
    for (std::size_t r = 0; r < w.size(); ++r) EXPECT_LE(std::abs(tail[r] - u.inverse_fourier(w[r])), 1e-13);
}

TEST(ControlSignal, NormsAgainstQuadrature) {
    std::mt19937_64 rng(16);
    const ControlSignal u = random_control(4.0, 2, 5, rng);
    const double T = u.horizon();
    const double B = 1.0;
    const double g = integrate([&](double t) { return std::abs(u(t)) * std::exp(B * t); }, 0.0, T);
    EXPECT_NEAR(u.g_norm(B), g, 1e-8 * g);
    double hs2 = 0.0;
    for (int k = 0; k <= 2; ++k) hs2 += integrate([&](double t) { return std::pow(u.derivative(k, t), 2); }, 0.0, T);
    EXPECT_NEAR(u.hs_norm(2), std::sqrt(hs2), 1e-10 * std::sqrt(hs2));
    // The free coordinates are orthonormal up to sqrt(2 beta).
    EXPECT_NEAR(u.coeffs().norm() / std::sqrt(8.0), std::sqrt(integrate([&](double t) { return u(t) * u(t); }, 0.0, T)),
                1e-10);
    double sup = 0.0;
    for (int i = 0; i <= 20000; ++i) sup = std::max(sup, std::abs(u(T * i / 20000.0 / 4)));
    EXPECT_GE(u.cm_norm(0), sup * (1 - 1e-12));
    EXPECT_LE(u.cm_norm(0), sup * (1 + 1e-3));
}

TEST(ControlSignal, Arithmetic) {
    std::mt19937_64 rng(17);
    const ControlSignal a = random_control(3.0, 2, 4, rng);
    const ControlSignal b(a.basis_ptr(), Eigen::VectorXd::Ones(4));
    const ControlSignal c = a + 2.0 * b;
    for (double t : {0.2, 1.0, 3.0}) EXPECT_NEAR(c(t), a(t) + 2.0 * b(t), 1e-14);
    const ControlSignal zero(a.basis_ptr());
    EXPECT_TRUE(zero.is_zero());
    EXPECT_EQ(zero.horizon(), 0.0);
    const ControlSignal other = random_control(3.0, 2, 4, rng);
    ControlSignal x = a;
    EXPECT_THROW(x += other, InputError);
    EXPECT_THROW(ControlSignal(a.basis_ptr(), Eigen::VectorXd::Ones(3)), InputError);
}
