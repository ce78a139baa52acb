#include "qsteer/control_signal.hpp"

#include "qsteer/errors.hpp"
#include "qsteer/quadrature.hpp"

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qsteer {

using cd = std::complex<double>;

ControlBasis::ControlBasis(double beta, int s_zero, int P, double B_weight)
    : beta_(beta), B_(B_weight), s_(s_zero), P_(P) {
    if (!(beta > 0.0)) throw ConfigurationError("control decay rate beta must be positive");
    if (!(beta > B_weight))
        throw ConfigurationError("control decay rate beta = " + std::to_string(beta) +
                                 " must exceed B_weight = " + std::to_string(B_weight));
    if (s_zero < 0) throw ConfigurationError("s_zero must be non-negative");
    if (P < 1) throw ConfigurationError("control basis size P must be positive");

    const int L = P + s_zero;
    // l_q' = -beta l_q - 2 beta sum_{j<q} l_j, acting on coefficient vectors.
    D_ = Eigen::MatrixXd::Zero(L, L);
    for (int j = 0; j < L; ++j) {
        D_(j, j) = -beta;
        for (int q = j + 1; q < L; ++q) D_(j, q) = -2.0 * beta;
    }

    if (s_zero == 0) {
        N_ = Eigen::MatrixXd::Identity(L, L);
    } else {
        // u^(k)(0) = 1^T D^k c since l_q(0) = 1.
        Eigen::MatrixXd R(s_zero, L);
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Ones(L);
        for (int k = 0; k < s_zero; ++k) {
            R.row(k) = row / row.norm();
            row = (row * D_).eval();
        }
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(R.transpose());
        const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(L, L);
        N_ = Q.rightCols(P);
    }

    std::vector<double> buf(L);
    double x = 4.0 * L + 2.0;
    for (;; x += 1.0) {
        laguerre(x / (2.0 * beta), buf.data());
        double peak = 0.0;
        for (double v : buf) peak = std::max(peak, std::abs(v));
        if (peak < 1e-17) break;
    }
    horizon_ = x / (2.0 * beta);
}

void ControlBasis::laguerre(double t, double* out) const {
    const int L = laguerre_count();
    const long double x = 2.0L * beta_ * t;
    const long double e = std::exp(-0.5L * x);
    long double prev = e;
    out[0] = static_cast<double>(prev);
    if (L == 1) return;
    long double cur = (1.0L - x) * e;
    out[1] = static_cast<double>(cur);
    for (int q = 1; q + 1 < L; ++q) {
        const long double next = ((2.0L * q + 1.0L - x) * cur - q * prev) / (q + 1.0L);
        prev = cur;
        cur = next;
        out[q + 1] = static_cast<double>(cur);
    }
}

Eigen::VectorXcd ControlBasis::laguerre_fourier(double omega) const {
    const int L = laguerre_count();
    const cd den(beta_, -omega);
    const cd minus_rho = -cd(beta_, omega) / den;
    Eigen::VectorXcd v(L);
    cd term = 1.0 / den;
    for (int q = 0; q < L; ++q) {
        v(q) = term;
        term *= minus_rho;
    }
    return v;
}

Eigen::VectorXcd ControlBasis::free_fourier(double omega) const {
    const Eigen::VectorXcd phi = laguerre_fourier(omega);
    return N_.transpose() * phi;
}

ControlBasisPtr make_control_basis(double beta, int s_zero, int P, double B_weight) {
    return std::make_shared<const ControlBasis>(beta, s_zero, P, B_weight);
}

ControlSignal::ControlSignal(ControlBasisPtr basis)
    : basis_(std::move(basis)), alpha_(Eigen::VectorXd::Zero(basis_->P())) {
    refresh();
}

ControlSignal::ControlSignal(ControlBasisPtr basis, Eigen::VectorXd free_coeffs)
    : basis_(std::move(basis)), alpha_(std::move(free_coeffs)) {
    if (alpha_.size() != basis_->P())
        throw InputError("control needs " + std::to_string(basis_->P()) + " coefficients, got " +
                         std::to_string(alpha_.size()));
    for (Eigen::Index p = 0; p < alpha_.size(); ++p)
        if (!std::isfinite(alpha_(p))) throw InputError("control coefficients must be finite");
    refresh();
}

ControlSignal ControlSignal::from_damped_monomials(ControlBasisPtr basis, std::span<const double> a) {
    const int L = basis->laguerre_count();
    const int s = basis->s_zero();
    if (static_cast<int>(a.size()) > basis->P())
        throw InputError("more monomial coefficients than the basis size P");
    // x^n = n! sum_q (-1)^q C(n,q) L_q(x), with x = 2 beta t.
    Eigen::VectorXd c = Eigen::VectorXd::Zero(L);
    const long double two_beta = 2.0L * basis->beta();
    for (std::size_t p = 0; p < a.size(); ++p) {
        if (a[p] == 0.0) continue;
        const int n = s + static_cast<int>(p);
        const long double scale = std::exp(std::lgamma(n + 1.0L) - n * std::log(two_beta));
        long double binom = 1.0L;
        for (int q = 0; q <= n; ++q) {
            c(q) += static_cast<double>(a[p] * scale * ((q % 2) ? -binom : binom));
            binom = binom * (n - q) / (q + 1);
        }
    }
    Eigen::VectorXd alpha = basis->null_space().transpose() * c;
    return ControlSignal(std::move(basis), std::move(alpha));
}

void ControlSignal::refresh() {
    c_ = basis_->null_space() * alpha_;
    zero_ = alpha_.cwiseAbs().maxCoeff() == 0.0;
}

double ControlSignal::operator()(double t) const {
    if (zero_ || t < 0.0) return 0.0;
    const int L = basis_->laguerre_count();
    double buf[512];
    std::vector<double> heap;
    double* l = buf;
    if (L > 512) {
        heap.resize(L);
        l = heap.data();
    }
    basis_->laguerre(t, l);
    double s = 0.0;
    for (int q = 0; q < L; ++q) s += c_(q) * l[q];
    return s;
}

double ControlSignal::derivative(int k, double t) const {
    if (zero_ || t < 0.0) return 0.0;
    Eigen::VectorXd ck = c_;
    for (int i = 0; i < k; ++i) ck = basis_->derivative_matrix() * ck;
    std::vector<double> l(basis_->laguerre_count());
    basis_->laguerre(t, l.data());
    return Eigen::Map<const Eigen::VectorXd>(l.data(), static_cast<Eigen::Index>(l.size())).dot(ck);
}

std::complex<double> ControlSignal::inverse_fourier(double omega) const {
    if (zero_) return 0.0;
    const Eigen::VectorXcd phi = basis_->laguerre_fourier(omega);
    cd s = 0.0;
    for (Eigen::Index q = 0; q < phi.size(); ++q) s += c_(q) * phi(q);
    return s;
}

std::vector<std::complex<double>> ControlSignal::partial_fourier(std::span<const double> omegas, double t) const {
    std::vector<cd> out(omegas.size(), cd(0.0));
    if (zero_ || t <= 0.0) return out;
    const double H = basis_->horizon();
    if (t >= H) {
        for (std::size_t r = 0; r < omegas.size(); ++r) out[r] = inverse_fourier(omegas[r]);
        return out;
    }
    double wmax = 0.0;
    for (double w : omegas) wmax = std::max(wmax, std::abs(w));
    const int L = basis_->laguerre_count();
    const int panels = static_cast<int>(std::ceil(t / H * L + t * (wmax + basis_->beta()) / std::numbers::pi)) + 4;
    const GaussRule rule = composite_gauss_legendre(panels, 16, 0.0, t);
    for (std::size_t a = 0; a < rule.nodes.size(); ++a) {
        const double wu = rule.weights[a] * (*this)(rule.nodes[a]);
        for (std::size_t r = 0; r < omegas.size(); ++r)
            out[r] += wu * std::polar(1.0, omegas[r] * rule.nodes[a]);
    }
    return out;
}

double ControlSignal::integral(double t) const {
    if (zero_ || t <= 0.0) return 0.0;
    // The decaying antiderivative stays in the span: F = D^{-1} c.
    const Eigen::VectorXd F =
        basis_->derivative_matrix().triangularView<Eigen::Upper>().solve(c_);
    std::vector<double> l(basis_->laguerre_count());
    basis_->laguerre(t, l.data());
    const double Ft = Eigen::Map<const Eigen::VectorXd>(l.data(), static_cast<Eigen::Index>(l.size())).dot(F);
    return Ft - F.sum();
}

double ControlSignal::g_norm(double B) const {
    if (zero_) return 0.0;
    const int L = basis_->laguerre_count();
    const int G = 64 * L;
    const double H = basis_->horizon();
    std::vector<double> l(L);
    auto f = [&](double t) {
        basis_->laguerre(t, l.data());
        return Eigen::Map<const Eigen::VectorXd>(l.data(), L).dot(c_);
    };
    // Integrate |u| piecewise between sign changes so the kinks sit on panel ends.
    const GaussRule unit = gauss_legendre(8);
    auto piece = [&](double a, double b) {
        double acc = 0.0;
        for (std::size_t q = 0; q < unit.nodes.size(); ++q) {
            const double t = a + (b - a) * unit.nodes[q];
            acc += unit.weights[q] * std::abs(f(t)) * std::exp(B * t);
        }
        return acc * (b - a);
    };
    double s = 0.0;
    double t0 = 0.0, f0 = f(0.0);
    for (int g = 1; g <= G; ++g) {
        const double t1 = H * g / G, f1 = f(t1);
        if ((f0 < 0.0 && f1 > 0.0) || (f0 > 0.0 && f1 < 0.0)) {
            std::uintmax_t iters = 100;
            const auto [lo, hi] = boost::math::tools::toms748_solve(f, t0, t1, f0, f1,
                                                                    boost::math::tools::eps_tolerance<double>(52), iters);
            const double root = 0.5 * (lo + hi);
            s += piece(t0, root) + piece(root, t1);
        } else {
            s += piece(t0, t1);
        }
        t0 = t1;
        f0 = f1;
    }
    return s;
}

double ControlSignal::hs_norm(int s) const {
    if (zero_) return 0.0;
    // The l_q are orthogonal with ||l_q||_2^2 = 1 / (2 beta).
    Eigen::VectorXd ck = c_;
    double acc = 0.0;
    for (int k = 0; k <= s; ++k) {
        acc += ck.squaredNorm();
        ck = basis_->derivative_matrix() * ck;
    }
    return std::sqrt(acc / (2.0 * basis_->beta()));
}

double ControlSignal::cm_norm(int m) const {
    if (zero_) return 0.0;
    const int L = basis_->laguerre_count();
    const int G = 64 * L;
    const double H = basis_->horizon();
    std::vector<double> l(L);
    auto eval = [&](const Eigen::VectorXd& d, double t) {
        basis_->laguerre(t, l.data());
        return std::abs(Eigen::Map<const Eigen::VectorXd>(l.data(), L).dot(d));
    };
    Eigen::VectorXd ck = c_;
    double best = 0.0;
    std::vector<double> grid(G + 1);
    for (int k = 0; k <= m; ++k) {
        for (int g = 0; g <= G; ++g) grid[g] = eval(ck, H * g / G);
        const double top = *std::max_element(grid.begin(), grid.end());
        best = std::max(best, top);
        // Polish every grid peak that could still beat the current best.
        for (int g = 0; g <= G; ++g) {
            const bool peak = (g == 0 || grid[g] >= grid[g - 1]) && (g == G || grid[g] >= grid[g + 1]);
            if (!peak || grid[g] < 0.9 * top) continue;
            const double a = H * std::max(g - 1, 0) / G, b = H * std::min(g + 1, G) / G;
            const auto r = boost::math::tools::brent_find_minima([&](double t) { return -eval(ck, t); }, a, b, 52);
            best = std::max(best, -r.second);
        }
        ck = basis_->derivative_matrix() * ck;
    }
    return best;
}

ControlSignal& ControlSignal::operator+=(const ControlSignal& o) {
    if (o.basis_ != basis_) throw InputError("controls live in different bases");
    alpha_ += o.alpha_;
    refresh();
    return *this;
}

ControlSignal& ControlSignal::operator*=(double c) {
    alpha_ *= c;
    refresh();
    return *this;
}

ControlSignal operator+(ControlSignal a, const ControlSignal& b) { return a += b; }
ControlSignal operator*(double c, ControlSignal a) { return a *= c; }

} // namespace qsteer
