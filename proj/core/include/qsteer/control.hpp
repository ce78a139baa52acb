#pragma once

#include "qsteer/evolution.hpp"
#include "qsteer/moment.hpp"
#include "qsteer/state.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace qsteer {

struct LinearizedSetup {
    StateSpace space;
    State anchor;
    std::vector<int> support;      // 0-based positions of the anchor's nonzero coefficients
    int N = 0;                     // support bound (largest support position + 1)
    int M = 0;                     // response truncation
    Eigen::MatrixXd frequencies;   // M x |support|, lambda_m - lambda_k

    const TensorBasis& basis() const { return space.basis(); }
};

LinearizedSetup make_linearized_setup(const StateSpace& space, const State& anchor, double tol = 1e-10);

struct TargetMatrix {
    Eigen::MatrixXcd entries;         // M x |support|, column c belongs to support[c]
    Eigen::MatrixXcd free_constants;  // |support| x |support| block of C_mk
    std::vector<int> support;

    // d_mk with m, k 0-based basis positions (k must be in the support).
    std::complex<double> operator()(int m, int k) const;
};

TargetMatrix build_targets(const LinearizedSetup& setup, const State& y);

State linearized_response_infinite(const LinearizedSetup& setup, const ControlSignal& u);
State linearized_response_finite(const LinearizedSetup& setup, const ControlSignal& u, double t);

// build_targets followed by one moment solve over the distinct frequencies.
class RightInverse {
public:
    RightInverse(const LinearizedSetup& setup, ControlBasisPtr basis, MomentSolverOptions options = {},
                 double frequency_tol = 1e-9);

    ControlSignal apply(const State& y, MomentSolveReport* report = nullptr) const;
    const std::vector<double>& frequencies() const { return solver_.frequencies(); }
    const LinearizedSetup& setup() const { return setup_; }

private:
    struct Slot {
        int group;
        bool conjugate;
    };
    LinearizedSetup setup_;
    std::vector<std::vector<Slot>> slots_;  // [m][column]
    MomentSolver solver_;
};

ControlSignal right_inverse(const LinearizedSetup& setup, const State& y, ControlBasisPtr basis,
                            MomentSolverOptions options = {});

struct SynthesisOptions {
    int max_iter = 8;
    double tol = 1e-5;
    double sigma = 1e-2;
    double tol_cauchy = 1e-8;
    double stagnation_ratio = 0.9;
    PropagateOptions propagation;
    MomentSolverOptions moment;
};

struct SynthesisIteration {
    int iteration = 0;
    double h_residual = 0.0;
    double control_norm = 0.0;       // ||u||_F of the current iterate
    double moment_residual_max = 0.0;  // of the correction solved after this residual
    double cauchy_residual = 0.0;
    double return_time = 0.0;
};

struct SynthesisResult {
    ControlSignal control;
    std::vector<SynthesisIteration> log;
    InfiniteTimeResult limit;
    double target_tail_norm = 0.0;  // H norm of z1 - anchor beyond the first M/4 modes
};

SynthesisResult synthesize(const LinearizedSetup& setup, const State& z1, const ReturnTimes& rt,
                           ControlBasisPtr basis, const SynthesisOptions& options = {});

// R_infinity(u, v): the inhomogeneous system along U_t(anchor, u), pulled
// back to the interaction picture once both controls have decayed.
State tangent_limit(const LinearizedSetup& setup, const ControlSignal& u, const ControlSignal& v,
                    const PropagateOptions& options = {});

struct DerivativeCheckReport {
    std::vector<double> epsilons;
    std::vector<double> residuals;
    double slope = 0.0;
    bool inconclusive = false;
};

DerivativeCheckReport derivative_check(const LinearizedSetup& setup, const ControlSignal& u,
                                       const ControlSignal& v, const std::vector<double>& epsilons,
                                       const PropagateOptions& options = {});

} // namespace qsteer
