#pragma once

#include <Eigen/Dense>

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace qsteer {

// Admissible controls u(t) = sum_p a_p t^{s+p} e^{-beta t}, p < P.
//
// The span is stored in the Laguerre functions l_q(t) = L_q(2 beta t) e^{-beta t},
// q < P + s, restricted to the subspace where u and its first s-1
// derivatives vanish at t = 0.  The P free coordinates are taken in an
// orthonormal basis of that subspace, so Euclidean norms of coordinates are
// sqrt(2 beta) times L^2 norms of u.
class ControlBasis {
public:
    ControlBasis(double beta, int s_zero, int P, double B_weight = 1.0);

    double beta() const { return beta_; }
    int s_zero() const { return s_; }
    int P() const { return P_; }
    int laguerre_count() const { return P_ + s_; }
    double B_weight() const { return B_; }
    double horizon() const { return horizon_; }

    const Eigen::MatrixXd& null_space() const { return N_; }         // (P+s) x P
    const Eigen::MatrixXd& derivative_matrix() const { return D_; }  // (P+s) x (P+s)

    // l_q(t) for q < P+s.
    void laguerre(double t, double* out) const;
    // int_0^inf e^{i omega t} l_q(t) dt for q < P+s.
    Eigen::VectorXcd laguerre_fourier(double omega) const;
    // The same transform expressed in free coordinates (length P).
    Eigen::VectorXcd free_fourier(double omega) const;

private:
    double beta_, B_;
    int s_, P_;
    Eigen::MatrixXd N_, D_;
    double horizon_ = 0.0;
};

using ControlBasisPtr = std::shared_ptr<const ControlBasis>;

ControlBasisPtr make_control_basis(double beta, int s_zero, int P, double B_weight = 1.0);

class ControlSignal {
public:
    ControlSignal() = default;
    explicit ControlSignal(ControlBasisPtr basis);  // u = 0
    ControlSignal(ControlBasisPtr basis, Eigen::VectorXd free_coeffs);

    // Coefficients a_p on t^{s+p} e^{-beta t}; practical for a handful of terms.
    static ControlSignal from_damped_monomials(ControlBasisPtr basis, std::span<const double> a);

    const ControlBasis& basis() const { return *basis_; }
    const ControlBasisPtr& basis_ptr() const { return basis_; }
    const Eigen::VectorXd& coeffs() const { return alpha_; }
    const Eigen::VectorXd& laguerre_coeffs() const { return c_; }
    bool is_zero() const { return zero_; }
    double beta() const { return basis_->beta(); }
    int s_zero() const { return basis_->s_zero(); }
    // Past this time every basis function is below 1e-17; zero controls have horizon 0.
    double horizon() const { return zero_ ? 0.0 : basis_->horizon(); }

    double operator()(double t) const;
    double derivative(int k, double t) const;
    std::complex<double> inverse_fourier(double omega) const;
    // int_0^t e^{i omega s} u(s) ds for each omega.
    std::vector<std::complex<double>> partial_fourier(std::span<const double> omegas, double t) const;
    double integral(double t) const;  // int_0^t u

    double g_norm(double B) const;   // int |u| e^{B t}
    double hs_norm(int s) const;     // (sum_{k<=s} ||u^(k)||_2^2)^{1/2}
    double cm_norm(int m) const;     // max_{k<=m} sup |u^(k)|
    double f_norm() const { return g_norm(basis_->B_weight()) + hs_norm(basis_->s_zero()); }

    ControlSignal& operator+=(const ControlSignal& o);
    ControlSignal& operator*=(double c);

private:
    void refresh();

    ControlBasisPtr basis_;
    Eigen::VectorXd alpha_;
    Eigen::VectorXd c_;
    bool zero_ = true;
};

ControlSignal operator+(ControlSignal a, const ControlSignal& b);
ControlSignal operator*(double c, ControlSignal a);

} // namespace qsteer
