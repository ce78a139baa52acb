#pragma once

#include "qsteer/control_signal.hpp"
#include "qsteer/spectral.hpp"
#include "qsteer/state.hpp"

#include <Eigen/Dense>

#include <vector>

namespace qsteer {

struct Trajectory {
    std::vector<double> times;
    std::vector<State> states;
    std::vector<double> norms;  // L2

    const State& final_state() const { return states.back(); }
};

struct PropagateOptions {
    double dt = 0.0;                 // 0: 2 pi / (40 lambda_max)
    bool record = true;              // keep every grid state, otherwise only the ends
    double convergence_bound = 0.0;  // > 0: rerun with dt/2 and require L2 agreement
    // Uniform stepping runs up to max(this, horizon of the active controls),
    // clipped to T; beyond that the flow is free and applied in one jump.
    double active_until = 0.0;
};

double default_dt(const TensorBasis& basis);

State free_evolution(const TensorBasis& basis, const State& z, double t);

Trajectory propagate(const TensorBasis& basis, const State& z0, const ControlSignal& u, double T,
                     const PropagateOptions& options = {});

// i z' = (Lambda + u Q) z + v Q y, with y given on its own grid.  `y` must
// be recorded on a grid whose steps are at most dt wherever u or v is active.
Trajectory propagate_inhomogeneous(const TensorBasis& basis, const State& z0, const ControlSignal& u,
                                   const ControlSignal& v, const Trajectory& y, double T,
                                   const PropagateOptions& options = {});

struct ReturnTimes {
    double epsilon_phase = 0.0;
    int J = 0;
    std::vector<double> times;
    std::vector<double> residuals;  // max_{j<J} |e^{-i lambda_j T} - 1| per time
};

// Phase residual max_{j<J} |e^{-i lambda_j T} - 1|.
double phase_residual(std::span<const double> lambdas, int J, double T);

ReturnTimes return_times(std::span<const double> lambdas, int J, double epsilon_phase, double T_max, int count,
                         double t_start = 0.0);

struct InfiniteTimeResult {
    State limit;            // S(-T_n) U_{T_n}(z0, u) at the accepted return time
    State lab_state;        // U_{T_n}(z0, u)
    double time = 0.0;      // accepted T_n
    int index = 0;          // position of T_n in the return time list
    double cauchy_residual = 0.0;
    double phase_residual = 0.0;
    std::vector<double> residual_log;  // H-norm differences between consecutive iterates
};

InfiniteTimeResult infinite_time_state(const TensorBasis& basis, const State& z0, const ControlSignal& u,
                                       const ReturnTimes& rt, double tol_cauchy = 1e-8,
                                       const PropagateOptions& options = {});

} // namespace qsteer
