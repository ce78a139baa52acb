#include "qsteer/evolution.hpp"

#include "qsteer/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qsteer {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void rotate(Eigen::VectorXcd& z, const Eigen::VectorXd& lambda, double t) {
    for (Eigen::Index j = 0; j < z.size(); ++j) z(j) *= std::polar(1.0, -lambda(j) * t);
}

// (e^z - 1)/z and (e^z (z - 1) + 1)/z^2, i.e. int_0^1 e^{zs} ds and
// int_0^1 s e^{zs} ds.
void step_kernels(cd z, cd& phi1, cd& psi) {
    if (std::abs(z) < 1e-2) {
        cd p = 1.0, f1 = 0.0, f2 = 0.0;
        double fact = 1.0;
        for (int n = 0; n < 8; ++n) {
            if (n > 0) fact *= n;
            f1 += p / (fact * (n + 1));
            f2 += p / (fact * (n + 2));
            p *= z;
        }
        phi1 = f1;
        psi = f2;
        return;
    }
    const cd ez = std::exp(z);
    phi1 = (ez - 1.0) / z;
    psi = (ez * (z - 1.0) + 1.0) / (z * z);
}

class Stepper {
public:
    explicit Stepper(const TensorBasis& basis) : lambda_(basis.eigenvalues()), es_(basis.size()) {
        if (basis.has_coupling()) Q_ = &basis.coupling();
    }

    const Eigen::VectorXd& lambda() const { return lambda_; }

    // z <- exp(-i h (Lambda + u Q)) z
    void step(Eigen::VectorXcd& z, double u, double h) {
        if (u == 0.0) {
            rotate(z, lambda_, h);
            return;
        }
        decompose(u);
        Eigen::VectorXcd zt = to_eigen(z);
        for (Eigen::Index a = 0; a < zt.size(); ++a) zt(a) *= std::polar(1.0, -mu_(a) * h);
        z = from_eigen(zt);
    }

    // Same step with the source -i v Q y(tau), y interpolated between the
    // pulled-back endpoint states; integrated exactly in the eigenbasis.
    void step_source(Eigen::VectorXcd& z, double u, double v, const Eigen::VectorXcd& y0,
                     const Eigen::VectorXcd& y1, double h) {
        const int M = static_cast<int>(z.size());
        Eigen::VectorXcd zt, a0, a1;
        Eigen::MatrixXd B;
        if (u == 0.0) {
            mu_ = lambda_;
            zt = z;
            a0 = y0;
            a1 = y1;
            B = coupling();
        } else {
            decompose(u);
            zt = to_eigen(z);
            a0 = to_eigen(y0);
            a1 = to_eigen(y1);
            const Eigen::MatrixXd& W = es_.eigenvectors();
            B = W.transpose() * coupling() * W;
        }
        for (int b = 0; b < M; ++b) a1(b) *= std::polar(1.0, mu_(b) * h);
        const cd src = cd(0.0, -v * h);
        for (int a = 0; a < M; ++a) {
            cd acc = 0.0;
            for (int b = 0; b < M; ++b) {
                if (B(a, b) == 0.0) continue;
                cd phi1, psi;
                step_kernels(cd(0.0, (mu_(a) - mu_(b)) * h), phi1, psi);
                acc += B(a, b) * ((phi1 - psi) * a0(b) + psi * a1(b));
            }
            zt(a) = std::polar(1.0, -mu_(a) * h) * (zt(a) + src * acc);
        }
        z = u == 0.0 ? zt : from_eigen(zt);
    }

private:
    const Eigen::MatrixXd& coupling() const {
        if (!Q_) throw InputError("propagation with a nonzero control needs a coupling matrix");
        return *Q_;
    }

    void decompose(double u) {
        H_ = u * coupling();
        H_.diagonal() += lambda_;
        es_.compute(H_);
        if (es_.info() != Eigen::Success) throw NumericalError("step eigendecomposition failed");
        mu_ = es_.eigenvalues();
    }

    Eigen::VectorXcd to_eigen(const Eigen::VectorXcd& z) const {
        const Eigen::MatrixXd& W = es_.eigenvectors();
        const Eigen::VectorXd re = W.transpose() * z.real();
        const Eigen::VectorXd im = W.transpose() * z.imag();
        Eigen::VectorXcd out(z.size());
        out.real() = re;
        out.imag() = im;
        return out;
    }

    Eigen::VectorXcd from_eigen(const Eigen::VectorXcd& z) const {
        const Eigen::MatrixXd& W = es_.eigenvectors();
        const Eigen::VectorXd re = W * z.real();
        const Eigen::VectorXd im = W * z.imag();
        Eigen::VectorXcd out(z.size());
        out.real() = re;
        out.imag() = im;
        return out;
    }

    Eigen::VectorXd lambda_;
    const Eigen::MatrixXd* Q_ = nullptr;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_;
    Eigen::MatrixXd H_;
    Eigen::VectorXd mu_;
};

void check_state(const TensorBasis& basis, const State& z) {
    if (z.size() != basis.size() || z.basis_id() != basis.id())
        throw InputError("state does not belong to the propagation basis");
}

int step_count(double length, double dt) {
    if (length <= 0.0) return 0;
    return std::max(1, static_cast<int>(std::ceil(length / dt - 1e-9)));
}

Trajectory run_propagate(const TensorBasis& basis, const State& z0, const ControlSignal& u, double T,
                         double dt, double active, bool record) {
    Stepper stepper(basis);
    Trajectory traj;
    Eigen::VectorXcd z = z0.coeffs();
    traj.times.push_back(0.0);
    traj.states.push_back(z0);
    traj.norms.push_back(z.norm());

    const double t_step = std::min(T, active);
    const int n = step_count(t_step, dt);
    const double h = n ? t_step / n : 0.0;
    for (int i = 0; i < n; ++i) {
        const double t0 = i * h;
        stepper.step(z, u(t0 + 0.5 * h), h);
        if (record || i + 1 == n) {
            traj.times.push_back(i + 1 == n ? t_step : (i + 1) * h);
            traj.states.emplace_back(z, z0.basis_id());
            traj.norms.push_back(z.norm());
        }
    }
    if (T > t_step) {
        rotate(z, stepper.lambda(), T - t_step);
        traj.times.push_back(T);
        traj.states.emplace_back(z, z0.basis_id());
        traj.norms.push_back(z.norm());
    }
    return traj;
}

} // namespace

double default_dt(const TensorBasis& basis) {
    const double lmax = basis.eigenvalues().cwiseAbs().maxCoeff();
    return kTwoPi / (40.0 * std::max(lmax, 1e-300));
}

State free_evolution(const TensorBasis& basis, const State& z, double t) {
    check_state(basis, z);
    Eigen::VectorXcd c = z.coeffs();
    rotate(c, basis.eigenvalues(), t);
    return State(std::move(c), z.basis_id());
}

Trajectory propagate(const TensorBasis& basis, const State& z0, const ControlSignal& u, double T,
                     const PropagateOptions& options) {
    check_state(basis, z0);
    if (T < 0.0) throw InputError("propagation time must be non-negative");
    const double dt = options.dt > 0.0 ? options.dt : default_dt(basis);
    const double active = std::max(options.active_until, u.horizon());
    Trajectory traj = run_propagate(basis, z0, u, T, dt, active, options.record);
    if (options.convergence_bound > 0.0) {
        const Trajectory fine = run_propagate(basis, z0, u, T, 0.5 * dt, active, false);
        const double change = (fine.final_state().coeffs() - traj.final_state().coeffs()).norm();
        if (change > options.convergence_bound)
            throw NumericalError("time step not converged: halving dt changes the final state by " +
                                 std::to_string(change));
    }
    return traj;
}

Trajectory propagate_inhomogeneous(const TensorBasis& basis, const State& z0, const ControlSignal& u,
                                   const ControlSignal& v, const Trajectory& y, double T,
                                   const PropagateOptions& options) {
    check_state(basis, z0);
    if (y.times.empty() || y.times.size() != y.states.size() || y.times.front() != 0.0)
        throw InputError("source trajectory must start at t = 0 with one state per time");
    const double tol_t = 1e-12 * std::max(1.0, T);
    std::size_t last = y.times.size();
    for (std::size_t n = 0; n < y.times.size(); ++n)
        if (std::abs(y.times[n] - T) <= tol_t) last = n;
    if (last == y.times.size()) throw InputError("source trajectory grid has no point at T");
    for (const State& s : y.states) check_state(basis, s);

    const double dt = options.dt > 0.0 ? options.dt : default_dt(basis);
    const double active = std::max({options.active_until, u.horizon(), v.horizon()});

    Stepper stepper(basis);
    Trajectory traj;
    Eigen::VectorXcd z = z0.coeffs();
    traj.times.push_back(0.0);
    traj.states.push_back(z0);
    traj.norms.push_back(z.norm());
    for (std::size_t n = 0; n < last; ++n) {
        const double t0 = y.times[n], t1 = y.times[n + 1];
        const double h = t1 - t0;
        if (!(h > 0.0)) throw InputError("source trajectory grid must be strictly increasing");
        if (t0 >= active) {
            rotate(z, stepper.lambda(), h);
        } else {
            if (h > dt * (1.0 + 1e-9))
                throw InputError("source trajectory grid step " + std::to_string(h) + " exceeds dt = " +
                                 std::to_string(dt) + " inside the active window");
            const double tm = t0 + 0.5 * h;
            const double vm = v(tm);
            if (vm == 0.0) stepper.step(z, u(tm), h);
            else stepper.step_source(z, u(tm), vm, y.states[n].coeffs(), y.states[n + 1].coeffs(), h);
        }
        if (options.record || n + 1 == last) {
            traj.times.push_back(t1);
            traj.states.emplace_back(z, z0.basis_id());
            traj.norms.push_back(z.norm());
        }
    }
    return traj;
}

double phase_residual(std::span<const double> lambdas, int J, double T) {
    double r = 0.0;
    for (int j = 0; j < J; ++j) {
        const double theta = std::remainder(lambdas[j] * T, kTwoPi);
        r = std::max(r, 2.0 * std::abs(std::sin(0.5 * theta)));
    }
    return r;
}

ReturnTimes return_times(std::span<const double> lambdas, int J, double epsilon_phase, double T_max, int count,
                         double t_start) {
    if (J < 1 || J > static_cast<int>(lambdas.size()))
        throw InputError("return times need 1 <= J <= number of eigenvalues");
    if (count < 1) throw InputError("return time count must be positive");
    if (!(epsilon_phase > 0.0)) throw InputError("phase tolerance must be positive");

    int ref = 0;
    for (int j = 1; j < J; ++j)
        if (std::abs(lambdas[j]) < std::abs(lambdas[ref])) ref = j;
    const double lref = std::abs(lambdas[ref]);
    if (!(lref > 0.0)) throw InputError("return times need nonzero eigenvalues");
    const double period = kTwoPi / lref;

    ReturnTimes rt;
    rt.epsilon_phase = epsilon_phase;
    rt.J = J;
    double best = std::numeric_limits<double>::infinity(), best_t = 0.0;
    const double refine_below = std::max(20.0 * epsilon_phase, 0.1);
    std::vector<double> theta(J);

    const long long n0 = static_cast<long long>(std::floor(t_start / period)) + 1;
    for (long long n = n0; static_cast<long double>(n) * period <= T_max; ++n) {
        double T = static_cast<double>(n) * period;
        double r = phase_residual(lambdas, J, T);
        if (r > epsilon_phase && r < refine_below && J > 1) {
            // Minimax shift: the optimum sits where two phase lines cross or
            // where one of them vanishes.
            for (int j = 0; j < J; ++j) theta[j] = std::remainder(lambdas[j] * T, kTwoPi);
            double best_shift = 0.0, best_r = r;
            auto trial = [&](double delta) {
                if (std::abs(delta) > 0.5 * period) return;
                const double rr = phase_residual(lambdas, J, T + delta);
                if (rr < best_r) {
                    best_r = rr;
                    best_shift = delta;
                }
            };
            for (int a = 0; a < J; ++a) {
                trial(-theta[a] / lambdas[a]);
                for (int b = a + 1; b < J; ++b) {
                    trial(-(theta[a] + theta[b]) / (lambdas[a] + lambdas[b]));
                    if (lambdas[a] != lambdas[b]) trial(-(theta[a] - theta[b]) / (lambdas[a] - lambdas[b]));
                }
            }
            T += best_shift;
            r = best_r;
        }
        if (r < best) {
            best = r;
            best_t = T;
        }
        if (r <= epsilon_phase && T > t_start && (rt.times.empty() || T > rt.times.back())) {
            rt.times.push_back(T);
            rt.residuals.push_back(r);
            if (static_cast<int>(rt.times.size()) == count) return rt;
        }
    }
    throw SearchHorizonError("found " + std::to_string(rt.times.size()) + " of " + std::to_string(count) +
                                 " return times below T_max = " + std::to_string(T_max) +
                                 "; best phase residual " + std::to_string(best) + " at T = " +
                                 std::to_string(best_t),
                             best, best_t);
}

InfiniteTimeResult infinite_time_state(const TensorBasis& basis, const State& z0, const ControlSignal& u,
                                       const ReturnTimes& rt, double tol_cauchy, const PropagateOptions& options) {
    check_state(basis, z0);
    if (rt.times.empty()) throw InputError("infinite-time limit needs at least one return time");
    for (std::size_t k = 1; k < rt.times.size(); ++k)
        if (!(rt.times[k] > rt.times[k - 1])) throw InputError("return times must be strictly increasing");

    const Eigen::VectorXd& lambda = basis.eigenvalues();
    const int M = basis.size();
    Eigen::VectorXd h(M);
    for (int a = 0; a < M; ++a) h(a) = static_cast<double>(basis.indices()[a].cube_weight());

    const double dt = options.dt > 0.0 ? options.dt : default_dt(basis);
    const double active = std::max(options.active_until, u.horizon());
    const int n = step_count(active, dt);
    const double step = n ? active / n : 0.0;

    Stepper stepper(basis);
    InfiniteTimeResult res;
    Eigen::VectorXcd prev;
    bool have_prev = false;

    // Returns true when the iterate at return time k passes the Cauchy test.
    auto consider = [&](std::size_t k, const Eigen::VectorXcd& lab, const Eigen::VectorXcd& w) {
        if (have_prev) {
            const double r = (w - prev).cwiseAbs().cwiseProduct(h).maxCoeff();
            res.residual_log.push_back(r);
            if (r <= tol_cauchy) {
                res.limit = State(w, z0.basis_id());
                res.lab_state = State(lab, z0.basis_id());
                res.time = rt.times[k];
                res.index = static_cast<int>(k);
                res.cauchy_residual = r;
                res.phase_residual = k < rt.residuals.size() ? rt.residuals[k] : 0.0;
                return true;
            }
        }
        prev = w;
        have_prev = true;
        return false;
    };

    Eigen::VectorXcd z = z0.coeffs();
    std::size_t k = 0;
    for (int i = 0; i < n; ++i) {
        const double t0 = i * step;
        const double t1 = i + 1 == n ? active : (i + 1) * step;
        for (; k < rt.times.size() && rt.times[k] < t1; ++k) {
            const double tau = rt.times[k] - t0;
            Eigen::VectorXcd zk = z;
            if (tau > 0.0) stepper.step(zk, u(t0 + 0.5 * tau), tau);
            Eigen::VectorXcd w = zk;
            rotate(w, lambda, -rt.times[k]);
            if (consider(k, zk, w)) return res;
        }
        stepper.step(z, u(t0 + 0.5 * (t1 - t0)), t1 - t0);
    }
    // Past the active window the interaction-picture state is frozen.
    Eigen::VectorXcd w = z;
    rotate(w, lambda, -active);
    for (; k < rt.times.size(); ++k) {
        Eigen::VectorXcd lab = z;
        rotate(lab, lambda, rt.times[k] - active);
        if (consider(k, lab, w)) return res;
    }
    std::string log;
    for (double r : res.residual_log) log += " " + std::to_string(r);
    throw ConvergenceError("no Cauchy stabilization below " + std::to_string(tol_cauchy) + " within " +
                           std::to_string(rt.times.size()) + " return times; residuals:" + log);
}

} // namespace qsteer
