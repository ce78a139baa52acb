#pragma once

#include "qsteer/control_signal.hpp"

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qsteer {

struct MomentSystem {
    std::vector<double> frequencies;              // 0 = w_1 < w_2 < ...
    std::vector<std::complex<double>> targets;    // d_1 real
    std::vector<std::vector<std::pair<int, int>>> labels;  // optional (m,k) pairs per frequency

    int size() const { return static_cast<int>(frequencies.size()); }
    void validate() const;
};

std::complex<double> inverse_fourier(const ControlSignal& u, double omega);

// Real-stacked moment matrix over the free coordinates: row 0 is Re at w_1 = 0,
// then (Re, Im) rows for each further frequency.  (2R - 1) x P.
Eigen::MatrixXd moment_matrix(std::span<const double> frequencies, const ControlBasis& basis);

struct MomentSolverOptions {
    double reg_lambda = -1.0;      // < 0: reg_relative * sigma_max^2
    double reg_relative = 1e-10;
    double degraded_threshold = 1e-6;  // relative to max |d_r|
};

struct MomentSolveReport {
    ControlSignal control;
    std::vector<double> residuals;
    double reg_lambda = 0.0;
    int basis_size = 0;
    double sigma_max = 0.0;
    double sigma_min = 0.0;
    double objective = 0.0;
    bool degraded = false;
};

// Factorizes the moment map once; `solve` can then be applied to many
// target vectors on the same frequency list.
class MomentSolver {
public:
    MomentSolver(std::vector<double> frequencies, ControlBasisPtr basis, MomentSolverOptions options = {});

    MomentSolveReport solve(const std::vector<std::complex<double>>& targets) const;
    const std::vector<double>& frequencies() const { return freqs_; }
    const ControlBasisPtr& basis() const { return basis_; }
    double reg_lambda() const { return reg_; }

private:
    std::vector<double> freqs_;
    ControlBasisPtr basis_;
    MomentSolverOptions options_;
    Eigen::MatrixXd A_;
    Eigen::MatrixXd U_, V_;
    Eigen::VectorXd sigma_;
    double reg_ = 0.0;
};

MomentSolveReport solve_moments(const MomentSystem& sys, ControlBasisPtr basis, MomentSolverOptions options = {});

struct IndependenceReport {
    double sigma_min = 0.0;
    double sigma_max = 0.0;
    bool flagged = false;  // sigma_min / sigma_max below the threshold
};

IndependenceReport independence_diagnostic(std::span<const double> frequencies, const ControlBasis& basis,
                                           double flag_ratio = 1e-6);

} // namespace qsteer
