#include "qsteer/control.hpp"

#include "qsteer/errors.hpp"

#include <algorithm>
#include <cmath>

namespace qsteer {

using cd = std::complex<double>;

namespace {

constexpr cd kI(0.0, 1.0);

void pull_back(Eigen::VectorXcd& z, const Eigen::VectorXd& lambda, double T) {
    for (Eigen::Index j = 0; j < z.size(); ++j) z(j) *= std::polar(1.0, lambda(j) * T);
}

} // namespace

LinearizedSetup make_linearized_setup(const StateSpace& space, const State& anchor, double tol) {
    space.check(anchor);
    const TensorBasis& basis = space.basis();
    const Eigen::MatrixXd& Q = basis.coupling();
    const double n = l2_norm(anchor);
    if (std::abs(n - 1.0) > tol) throw InputError("anchor must be L2-normalized, ||anchor|| = " + std::to_string(n));
    const SpecialClassification cls = classify_special(anchor, Q, tol);
    if (cls.touches_truncation)
        throw InputError("anchor support reaches the last retained mode; it is not resolved as a finite combination");

    LinearizedSetup s{space, anchor, cls.support, cls.support.back() + 1, basis.size(), {}};
    const int S = static_cast<int>(s.support.size());
    s.frequencies.resize(s.M, S);
    for (int m = 0; m < s.M; ++m)
        for (int c = 0; c < S; ++c)
            s.frequencies(m, c) = basis.eigenvalues()(m) - basis.eigenvalues()(s.support[c]);
    return s;
}

cd TargetMatrix::operator()(int m, int k) const {
    for (std::size_t c = 0; c < support.size(); ++c)
        if (support[c] == k) return entries(m, static_cast<Eigen::Index>(c));
    throw InputError("target column k = " + std::to_string(k + 1) + " is outside the anchor support");
}

TargetMatrix build_targets(const LinearizedSetup& setup, const State& y) {
    setup.space.check(y);
    const Eigen::MatrixXd& Q = setup.basis().coupling();
    const Eigen::VectorXcd& a = setup.anchor.coeffs();
    const Eigen::VectorXcd& yv = y.coeffs();
    const int M = setup.M;
    const int S = static_cast<int>(setup.support.size());

    const double ynorm = yv.norm();
    const double re = inner(y, setup.anchor).real();
    if (std::abs(re) > 1e-10 * std::max(1.0, ynorm))
        throw InputError("target direction is not tangent at the anchor: Re<y, anchor> = " + std::to_string(re));

    std::vector<int> col_of(M, -1);
    for (int c = 0; c < S; ++c) col_of[setup.support[c]] = c;

    const double qtol = 1e-14 * Q.cwiseAbs().maxCoeff();
    const double ntol = 1e-14 * std::max(ynorm, 1e-300);
    TargetMatrix T;
    T.support = setup.support;
    T.entries = Eigen::MatrixXcd::Zero(M, S);
    for (int c = 0; c < S; ++c) {
        const int k = setup.support[c];
        for (int m = 0; m < M; ++m) {
            cd num = kI * yv(m) * std::conj(a(k));
            if (col_of[m] >= 0) num -= kI * std::conj(yv(k)) * a(m);
            if (std::abs(Q(m, k)) <= qtol) {
                if (std::abs(num) > ntol)
                    throw ConditionError("cond_i", "coupling Q_mk vanishes on required entry (m,k) = (" +
                                                       std::to_string(m + 1) + "," + std::to_string(k + 1) + ")");
                continue;
            }
            T.entries(m, c) = num / Q(m, k);
        }
    }

    // Hermitian C on the support block: reproduce y on the support modes and
    // make the diagonal constant, with the smallest Frobenius norm.
    const int pairs = S * (S - 1) / 2;
    const int unknowns = S + 2 * pairs;
    auto pair_index = [S](int c, int e) {
        // c < e
        return c * S - c * (c + 1) / 2 + (e - c - 1);
    };
    const cd gamma = inner(setup.anchor, y);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(2 * S + (S - 1), unknowns);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(G.rows());
    for (int c = 0; c < S; ++c) {
        const int m = setup.support[c];
        Eigen::VectorXcd row = Eigen::VectorXcd::Zero(unknowns);
        for (int e = 0; e < S; ++e) {
            const int k = setup.support[e];
            const cd w = a(k) * Q(m, k);
            if (e == c) {
                row(c) += w;
            } else if (c < e) {
                const int p = S + 2 * pair_index(c, e);
                row(p) += w;
                row(p + 1) += kI * w;
            } else {
                const int p = S + 2 * pair_index(e, c);
                row(p) += w;
                row(p + 1) -= kI * w;
            }
        }
        const cd rhs = kI * a(m) * gamma;
        G.row(2 * c) = row.real().transpose();
        G.row(2 * c + 1) = row.imag().transpose();
        g(2 * c) = rhs.real();
        g(2 * c + 1) = rhs.imag();
    }
    for (int c = 1; c < S; ++c) {
        G(2 * S + c - 1, c) = 1.0;
        G(2 * S + c - 1, 0) = -1.0;
        g(2 * S + c - 1) = T.entries(setup.support[0], 0).real() - T.entries(setup.support[c], c).real();
    }
    Eigen::VectorXd x = Eigen::VectorXd::Zero(unknowns);
    if (g.norm() > 0.0) x = G.completeOrthogonalDecomposition().solve(g);
    const double mismatch = (G * x - g).norm();
    if (mismatch > 1e-9 * std::max(g.norm(), 1e-300) && g.norm() > 0.0) {
        const int p = setup.support[0];
        const int q = S > 1 ? setup.support[1] : p;
        const double balance =
            std::norm(a(p)) * Q(p, p) - (S > 1 ? std::norm(a(q)) * Q(q, q) : 0.0);
        throw NotInvertibleError("target constraints on the anchor support are inconsistent (residual " +
                                     std::to_string(mismatch) + "); the linearization is not invertible here",
                                 p + 1, q + 1, balance);
    }

    T.free_constants = Eigen::MatrixXcd::Zero(S, S);
    for (int c = 0; c < S; ++c) {
        T.free_constants(c, c) = x(c);
        for (int e = c + 1; e < S; ++e) {
            const int p = S + 2 * pair_index(c, e);
            const cd v(x(p), x(p + 1));
            T.free_constants(c, e) = v;
            T.free_constants(e, c) = std::conj(v);
        }
    }
    for (int c = 0; c < S; ++c)
        for (int e = 0; e < S; ++e) T.entries(setup.support[c], e) += T.free_constants(c, e);
    // Make the common diagonal exact rather than equal to rounding.
    const cd d11 = T.entries(setup.support[0], 0);
    for (int c = 1; c < S; ++c) {
        T.free_constants(c, c) += d11 - T.entries(setup.support[c], c);
        T.entries(setup.support[c], c) = d11;
    }
    return T;
}

State linearized_response_infinite(const LinearizedSetup& setup, const ControlSignal& u) {
    const Eigen::MatrixXd& Q = setup.basis().coupling();
    const Eigen::VectorXcd& a = setup.anchor.coeffs();
    const int S = static_cast<int>(setup.support.size());
    Eigen::VectorXcd r = Eigen::VectorXcd::Zero(setup.M);
    if (!u.is_zero()) {
        for (int m = 0; m < setup.M; ++m) {
            cd acc = 0.0;
            for (int c = 0; c < S; ++c) {
                const int k = setup.support[c];
                acc += a(k) * Q(m, k) * u.inverse_fourier(setup.frequencies(m, c));
            }
            r(m) = -kI * acc;
        }
    }
    return setup.space.make(std::move(r));
}

State linearized_response_finite(const LinearizedSetup& setup, const ControlSignal& u, double t) {
    const Eigen::MatrixXd& Q = setup.basis().coupling();
    const Eigen::VectorXcd& a = setup.anchor.coeffs();
    const int S = static_cast<int>(setup.support.size());
    Eigen::VectorXcd r = Eigen::VectorXcd::Zero(setup.M);
    if (!u.is_zero()) {
        std::vector<double> omegas(setup.frequencies.data(), setup.frequencies.data() + setup.frequencies.size());
        const std::vector<cd> I = u.partial_fourier(omegas, t);
        for (int m = 0; m < setup.M; ++m) {
            cd acc = 0.0;
            for (int c = 0; c < S; ++c) {
                const int k = setup.support[c];
                acc += a(k) * Q(m, k) * I[static_cast<std::size_t>(m + setup.M * c)];
            }
            r(m) = -kI * std::polar(1.0, -setup.basis().eigenvalues()(m) * t) * acc;
        }
    }
    return setup.space.make(std::move(r));
}

namespace {

struct Grouping {
    std::vector<double> frequencies;
    std::vector<std::vector<int>> group_of;  // [m][c]
    std::vector<std::vector<bool>> conj_of;
};

Grouping group_frequencies(const LinearizedSetup& setup, double rel_tol) {
    struct Item {
        double w;
        int m, c;
        bool conj, diag;
    };
    const int S = static_cast<int>(setup.support.size());
    std::vector<Item> items;
    double wmax = 0.0;
    for (int m = 0; m < setup.M; ++m)
        for (int c = 0; c < S; ++c) {
            const double w = setup.frequencies(m, c);
            const bool diag = m == setup.support[c];
            items.push_back({diag ? 0.0 : std::abs(w), m, c, w < 0.0, diag});
            wmax = std::max(wmax, std::abs(w));
        }
    std::stable_sort(items.begin(), items.end(), [](const Item& x, const Item& y) { return x.w < y.w; });
    const double tol = rel_tol * std::max(wmax, 1e-300);

    Grouping g;
    g.group_of.assign(setup.M, std::vector<int>(S, -1));
    g.conj_of.assign(setup.M, std::vector<bool>(S, false));
    double prev = -1.0;
    for (const Item& it : items) {
        if (g.frequencies.empty() || it.w - prev > tol) g.frequencies.push_back(it.w);
        prev = it.w;
        g.group_of[it.m][it.c] = static_cast<int>(g.frequencies.size()) - 1;
        g.conj_of[it.m][it.c] = it.conj;
    }
    if (g.frequencies.front() != 0.0) g.frequencies.front() = 0.0;
    return g;
}

} // namespace

RightInverse::RightInverse(const LinearizedSetup& setup, ControlBasisPtr basis, MomentSolverOptions options,
                           double frequency_tol)
    : setup_(setup), solver_([&] {
          Grouping g = group_frequencies(setup, frequency_tol);
          slots_.assign(setup.M, std::vector<Slot>(setup.support.size()));
          for (int m = 0; m < setup.M; ++m)
              for (std::size_t c = 0; c < setup.support.size(); ++c)
                  slots_[m][c] = {g.group_of[m][c], static_cast<bool>(g.conj_of[m][c])};
          return MomentSolver(std::move(g.frequencies), std::move(basis), options);
      }()) {}

ControlSignal RightInverse::apply(const State& y, MomentSolveReport* report) const {
    const TargetMatrix T = build_targets(setup_, y);
    const int R = static_cast<int>(solver_.frequencies().size());
    std::vector<cd> d(R, cd(0.0));
    std::vector<int> owner_m(R, -1), owner_c(R, -1);
    const double scale = T.entries.size() ? T.entries.cwiseAbs().maxCoeff() : 0.0;
    const double tol = 1e-9 * std::max(scale, 1e-300);
    for (int m = 0; m < setup_.M; ++m) {
        for (std::size_t c = 0; c < setup_.support.size(); ++c) {
            const Slot& s = slots_[m][c];
            const cd v = s.conjugate ? std::conj(T.entries(m, static_cast<Eigen::Index>(c)))
                                     : T.entries(m, static_cast<Eigen::Index>(c));
            if (owner_m[s.group] < 0) {
                d[s.group] = v;
                owner_m[s.group] = m;
                owner_c[s.group] = static_cast<int>(c);
            } else if (std::abs(v - d[s.group]) > tol) {
                throw ConditionError(
                    "cond_ii", "moment targets conflict at a shared frequency: (m,k) = (" + std::to_string(m + 1) +
                                   "," + std::to_string(setup_.support[c] + 1) + ") vs (" +
                                   std::to_string(owner_m[s.group] + 1) + "," +
                                   std::to_string(setup_.support[owner_c[s.group]] + 1) + ")");
            }
        }
    }
    d[0] = cd(d[0].real(), 0.0);
    MomentSolveReport rep = solver_.solve(d);
    ControlSignal u = rep.control;
    if (report) *report = std::move(rep);
    return u;
}

ControlSignal right_inverse(const LinearizedSetup& setup, const State& y, ControlBasisPtr basis,
                            MomentSolverOptions options) {
    return RightInverse(setup, std::move(basis), options).apply(y);
}

SynthesisResult synthesize(const LinearizedSetup& setup, const State& z1, const ReturnTimes& rt,
                           ControlBasisPtr basis, const SynthesisOptions& options) {
    const TensorBasis& tb = setup.basis();
    const SpecialClassification cls = classify_special(setup.anchor, tb.coupling());
    if (cls.in_E0)
        throw NotInvertibleError("anchor lies in the degenerate two-mode set E0 (balance " +
                                     std::to_string(cls.balance) + "); R_infinity(0, .) is not invertible",
                                 cls.support[0] + 1, cls.support[1] + 1, cls.balance);
    if (!cls.in_E) throw InputError("anchor is not a finite eigenfunction combination resolved by the truncation");
    if (!(basis->beta() > 2.0 * basis->B_weight()))
        throw ConfigurationError("synthesis controls need beta > 2 B_weight");
    setup.space.check(z1);
    if (std::abs(l2_norm(z1) - 1.0) > 1e-10) throw InputError("target state must lie on the unit sphere");
    const double dist = setup.space.h_norm(z1 - setup.anchor);
    if (dist > options.sigma)
        throw InputError("target is " + std::to_string(dist) + " away from the anchor in H, above sigma = " +
                         std::to_string(options.sigma));

    SynthesisResult out;
    {
        Eigen::VectorXcd tail = (z1 - setup.anchor).coeffs();
        tail.head(setup.M / 4).setZero();
        out.target_tail_norm = setup.space.h_norm(setup.space.make(tail));
    }

    const RightInverse A(setup, basis, options.moment);
    ControlSignal u(basis);
    double last = std::numeric_limits<double>::infinity();
    for (int j = 0;; ++j) {
        InfiniteTimeResult lim = infinite_time_state(tb, setup.anchor, u, rt, options.tol_cauchy, options.propagation);
        const State diff = z1 - lim.limit;
        SynthesisIteration it;
        it.iteration = j;
        it.h_residual = setup.space.h_norm(diff);
        it.control_norm = u.f_norm();
        it.cauchy_residual = lim.cauchy_residual;
        it.return_time = lim.time;
        if (it.h_residual <= options.tol) {
            out.log.push_back(it);
            out.control = u;
            out.limit = std::move(lim);
            return out;
        }
        const bool stalled = j >= 2 && it.h_residual > options.stagnation_ratio * last;
        if (j >= options.max_iter || stalled) {
            out.log.push_back(it);
            std::string log;
            for (const auto& e : out.log) log += " " + std::to_string(e.h_residual);
            throw ConvergenceError(std::string(stalled ? "chord-Newton residual stagnated" : "max_iter reached") +
                                   " without reaching tol = " + std::to_string(options.tol) + "; residuals:" + log);
        }
        MomentSolveReport rep;
        const ControlSignal du = A.apply(project_tangent(diff, setup.anchor), &rep);
        it.moment_residual_max = *std::max_element(rep.residuals.begin(), rep.residuals.end());
        out.log.push_back(it);
        u += du;
        last = it.h_residual;
    }
}

State tangent_limit(const LinearizedSetup& setup, const ControlSignal& u, const ControlSignal& v,
                    const PropagateOptions& options) {
    const TensorBasis& tb = setup.basis();
    PropagateOptions opt = options;
    opt.active_until = std::max({options.active_until, u.horizon(), v.horizon()});
    const double T = opt.active_until;
    opt.record = true;
    const Trajectory y = propagate(tb, setup.anchor, u, T, opt);
    opt.record = false;
    const Trajectory R = propagate_inhomogeneous(tb, setup.space.zero(), u, v, y, T, opt);
    Eigen::VectorXcd r = R.final_state().coeffs();
    pull_back(r, tb.eigenvalues(), T);
    return setup.space.make(std::move(r));
}

DerivativeCheckReport derivative_check(const LinearizedSetup& setup, const ControlSignal& u,
                                       const ControlSignal& v, const std::vector<double>& epsilons,
                                       const PropagateOptions& options) {
    if (epsilons.size() < 3) throw InputError("derivative check needs at least three epsilons");
    for (std::size_t i = 1; i < epsilons.size(); ++i)
        if (!(epsilons[i] < epsilons[i - 1])) throw InputError("epsilons must be decreasing");
    if (!u.is_zero() && u.basis_ptr() != v.basis_ptr())
        throw InputError("derivative check needs u and v in the same control basis");

    const TensorBasis& tb = setup.basis();
    PropagateOptions opt = options;
    opt.active_until = std::max({options.active_until, u.horizon(), v.horizon()});
    opt.record = false;
    const double T = opt.active_until;

    const State R = tangent_limit(setup, u, v, opt);
    auto limit = [&](const ControlSignal& w) {
        Eigen::VectorXcd z = propagate(tb, setup.anchor, w, T, opt).final_state().coeffs();
        pull_back(z, tb.eigenvalues(), T);
        return setup.space.make(std::move(z));
    };
    const State base = limit(u);

    DerivativeCheckReport rep;
    rep.epsilons = epsilons;
    for (double eps : epsilons) {
        ControlSignal ue = v.is_zero() ? u : (u.is_zero() ? eps * v : u + eps * v);
        const State ze = v.is_zero() ? base : limit(ue);
        State diff = ze - base;
        diff.coeffs() -= eps * R.coeffs();
        rep.residuals.push_back(setup.space.h_norm(diff));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int n = static_cast<int>(epsilons.size());
    for (int i = 0; i < n; ++i) {
        if (rep.residuals[i] < 1e-12) rep.inconclusive = true;
        const double lx = std::log(epsilons[i]);
        const double ly = std::log(std::max(rep.residuals[i], 1e-300));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    rep.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return rep;
}

} // namespace qsteer
