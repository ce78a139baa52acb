#include "qsteer/moment.hpp"

#include "qsteer/errors.hpp"

#include <algorithm>
#include <cmath>

namespace qsteer {

using cd = std::complex<double>;

void MomentSystem::validate() const {
    if (frequencies.empty()) throw InputError("moment system has no frequencies");
    if (targets.size() != frequencies.size())
        throw InputError("moment system needs one target per frequency");
    if (!labels.empty() && labels.size() != frequencies.size())
        throw InputError("moment labels must be empty or one list per frequency");
    if (frequencies.front() != 0.0) throw InputError("first moment frequency must be 0");
    for (std::size_t r = 1; r < frequencies.size(); ++r)
        if (!(frequencies[r] > frequencies[r - 1]))
            throw InputError("moment frequencies must be strictly increasing (index " + std::to_string(r) + ")");
    double scale = 0.0;
    for (const cd& d : targets) {
        if (!std::isfinite(d.real()) || !std::isfinite(d.imag())) throw InputError("moment targets must be finite");
        scale = std::max(scale, std::abs(d));
    }
    if (std::abs(targets.front().imag()) > 1e-12 * std::max(scale, 1e-300))
        throw InputError("target at frequency 0 must be real");
}

std::complex<double> inverse_fourier(const ControlSignal& u, double omega) { return u.inverse_fourier(omega); }

Eigen::MatrixXd moment_matrix(std::span<const double> frequencies, const ControlBasis& basis) {
    int rows = 0;
    for (double w : frequencies) rows += w == 0.0 ? 1 : 2;
    Eigen::MatrixXd A(rows, basis.P());
    int r = 0;
    for (double w : frequencies) {
        const Eigen::VectorXcd phi = basis.free_fourier(w);
        A.row(r++) = phi.real().transpose();
        if (w != 0.0) A.row(r++) = phi.imag().transpose();
    }
    return A;
}

namespace {

Eigen::VectorXd stack_targets(std::span<const double> frequencies, const std::vector<cd>& d) {
    int rows = 0;
    for (double w : frequencies) rows += w == 0.0 ? 1 : 2;
    Eigen::VectorXd b(rows);
    int r = 0;
    for (std::size_t k = 0; k < frequencies.size(); ++k) {
        b(r++) = d[k].real();
        if (frequencies[k] != 0.0) b(r++) = d[k].imag();
    }
    return b;
}

void check_distinct(std::span<const double> frequencies) {
    std::vector<double> f(frequencies.begin(), frequencies.end());
    std::sort(f.begin(), f.end());
    for (std::size_t r = 1; r < f.size(); ++r)
        if (f[r] == f[r - 1]) throw InputError("duplicate moment frequency " + std::to_string(f[r]));
}

} // namespace

MomentSolver::MomentSolver(std::vector<double> frequencies, ControlBasisPtr basis, MomentSolverOptions options)
    : freqs_(std::move(frequencies)), basis_(std::move(basis)), options_(options) {
    check_distinct(freqs_);
    const int R = static_cast<int>(freqs_.size());
    if (basis_->P() < 2 * R)
        throw ConfigurationError("moment basis size P = " + std::to_string(basis_->P()) + " is below 2R = " +
                                 std::to_string(2 * R));
    A_ = moment_matrix(freqs_, *basis_);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(A_, Eigen::ComputeThinU | Eigen::ComputeThinV);
    U_ = svd.matrixU();
    V_ = svd.matrixV();
    sigma_ = svd.singularValues();
    reg_ = options_.reg_lambda >= 0.0 ? options_.reg_lambda : options_.reg_relative * sigma_(0) * sigma_(0);
}

MomentSolveReport MomentSolver::solve(const std::vector<cd>& targets) const {
    if (targets.size() != freqs_.size()) throw InputError("moment solve needs one target per frequency");
    const Eigen::VectorXd b = stack_targets(freqs_, targets);
    Eigen::VectorXd proj = U_.transpose() * b;
    for (Eigen::Index i = 0; i < sigma_.size(); ++i) proj(i) *= sigma_(i) / (sigma_(i) * sigma_(i) + reg_);
    Eigen::VectorXd alpha = V_ * proj;

    MomentSolveReport rep;
    rep.control = ControlSignal(basis_, alpha);
    rep.reg_lambda = reg_;
    rep.basis_size = basis_->P();
    rep.sigma_max = sigma_(0);
    rep.sigma_min = sigma_(sigma_.size() - 1);
    rep.objective = (A_ * alpha - b).squaredNorm() + reg_ * alpha.squaredNorm();
    double scale = 0.0, worst = 0.0;
    for (std::size_t r = 0; r < freqs_.size(); ++r) {
        const double res = std::abs(rep.control.inverse_fourier(freqs_[r]) - targets[r]);
        rep.residuals.push_back(res);
        worst = std::max(worst, res);
        scale = std::max(scale, std::abs(targets[r]));
    }
    rep.degraded = worst > options_.degraded_threshold * std::max(scale, 1e-300) && scale > 0.0;
    return rep;
}

MomentSolveReport solve_moments(const MomentSystem& sys, ControlBasisPtr basis, MomentSolverOptions options) {
    sys.validate();
    MomentSolver solver(sys.frequencies, std::move(basis), options);
    return solver.solve(sys.targets);
}

IndependenceReport independence_diagnostic(std::span<const double> frequencies, const ControlBasis& basis,
                                           double flag_ratio) {
    if (frequencies.empty()) throw InputError("independence diagnostic needs frequencies");
    check_distinct(frequencies);
    const Eigen::MatrixXd A = moment_matrix(frequencies, basis);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(A);
    const Eigen::VectorXd s = svd.singularValues();
    IndependenceReport rep;
    rep.sigma_max = s(0);
    rep.sigma_min = s(s.size() - 1);
    if (A.rows() > A.cols()) rep.sigma_min = 0.0;
    rep.flagged = rep.sigma_min < flag_ratio * rep.sigma_max;
    return rep;
}

} // namespace qsteer
