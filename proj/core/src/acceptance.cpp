#include "qsteer/acceptance.hpp"

#include "qsteer/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace qsteer {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kPi2 = kPi * kPi;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::mt19937_64 criterion_rng(std::uint64_t seed, int id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(id)};
    return std::mt19937_64(seq);
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const int n = static_cast<int>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// The 20-mode one-dimensional scenario shared by several criteria.
struct Cos20 {
    std::shared_ptr<const TensorBasis> basis;
    std::shared_ptr<StateSpace> space;
};

Cos20 make_cos20(const std::string& coupling = "x^2") {
    auto b = solve_eigens_1d(Potential1D("cos(2*pi*x)"), 20);
    Cos20 s;
    s.basis = std::make_shared<const TensorBasis>(
        assemble_tensor_basis({std::move(b)}, 20, ScalarField::from_expression(coupling)));
    s.space = std::make_shared<StateSpace>(s.basis, 4.0);
    return s;
}

State random_unit_state(const StateSpace& sp, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::VectorXcd c(sp.size());
    for (int a = 0; a < sp.size(); ++a) c(a) = cd(g(rng), g(rng));
    return sp.make(c / c.norm());
}

ControlSignal random_control(const ControlBasisPtr& basis, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::VectorXd c(basis->P());
    for (int p = 0; p < basis->P(); ++p) c(p) = g(rng);
    return ControlSignal(basis, c);
}

// Tangent direction at the anchor with H-weights of order one.
State random_tangent(const StateSpace& sp, const State& anchor, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::VectorXcd c(sp.size());
    for (int a = 0; a < sp.size(); ++a)
        c(a) = cd(g(rng), g(rng)) / static_cast<double>(sp.basis().indices()[a].cube_weight());
    return project_tangent(sp.make(c), anchor);
}

CriterionResult started(int id, std::string title) {
    CriterionResult r;
    r.id = id;
    r.title = std::move(title);
    return r;
}

CriterionResult c1_free_spectrum() {
    constexpr double kTolRel = 1e-10;
    constexpr double kTolSum = 4e-16;  // relative, a few ulps
    constexpr double kMaxSeconds = 5.0;
    CriterionResult r = started(1, "free spectrum exactness");
    const auto t0 = Clock::now();

    const SpectralBasis1D b = solve_eigens_1d(Potential1D(), 50);
    double err1 = 0.0;
    for (int k = 1; k <= 50; ++k) {
        const double exact = k * k * kPi2;
        err1 = std::max(err1, std::abs(b.eigenvalues(k - 1) - exact) / exact);
    }

    double sum_err = 0.0, exact_err = 0.0;
    for (int d : {2, 3}) {
        const int K = d == 2 ? 12 : 7;
        std::vector<SpectralBasis1D> bases(d, solve_eigens_1d(Potential1D(), K));
        const TensorBasis tb = assemble_tensor_basis(bases, d == 2 ? 60 : 120, std::nullopt);
        for (int a = 0; a < tb.size(); ++a) {
            const MultiIndex& m = tb.indices()[a];
            double sum = 0.0, sq = 0.0;
            for (int i = 0; i < d; ++i) {
                sum += tb.per_dim()[i].eigenvalues(m[i] - 1);
                sq += m[i] * m[i];
            }
            const double lam = tb.eigenvalues()(a);
            sum_err = std::max(sum_err, std::abs(lam - sum) / lam);
            exact_err = std::max(exact_err, std::abs(lam - sq * kPi2) / lam);
        }
    }
    r.seconds = seconds_since(t0);
    r.pass = err1 <= kTolRel && sum_err <= kTolSum && exact_err <= kTolRel && r.seconds < kMaxSeconds;
    r.metrics = {{"max_rel_error_1d", err1}, {"tensor_sum_rel_error", sum_err}, {"tensor_exact_rel_error", exact_err}};
    r.summary = fmt("1d rel err %.2e", err1) + fmt(", tensor sum %.2e", sum_err) +
                fmt(", tensor vs pi^2|j|^2 %.2e", exact_err);
    return r;
}

CriterionResult c2_asymptotics() {
    constexpr double kMaxIncrement = 1e-6;
    constexpr double kMaxSlope = 0.05;
    constexpr double kMaxSeconds = 30.0;
    CriterionResult r = started(2, "eigenvalue/eigenfunction asymptotics");
    const auto t0 = Clock::now();
    const Potential1D V("cos(2*pi*x)");
    const AsymptoticsReport rep = verify_asymptotics(solve_eigens_1d(V, 100), V);
    r.seconds = seconds_since(t0);
    r.pass = rep.max_increment_past_50 < kMaxIncrement && rep.slope <= kMaxSlope && r.seconds < kMaxSeconds;
    r.metrics = {{"max_increment_past_50", rep.max_increment_past_50},
                 {"slope", rep.slope},
                 {"sup_scaled_deviation", rep.sup_scaled_deviation},
                 {"sum_r2", rep.partial_sums.back()}};
    r.summary = fmt("increment past 50 %.2e", rep.max_increment_past_50) + fmt(", slope %.4f", rep.slope) +
                fmt(", sup k|e_k-e_k0| %.4f", rep.sup_scaled_deviation);
    return r;
}

CriterionResult c3_resonance() {
    constexpr double kMaxSeconds = 1.0;
    constexpr double kTolDiff = 1e-9;
    CriterionResult r = started(3, "condition (ii) resonance witness");
    const auto t0 = Clock::now();
    const TensorBasis tb = assemble_tensor_basis({solve_eigens_1d(Potential1D(), 10)}, 10, std::nullopt);
    const ResonanceReport rep = audit_resonances(tb.eigenvalues());
    r.seconds = seconds_since(t0);
    bool ok = !rep.ok && rep.witness.has_value();
    if (ok) {
        const auto& w = *rep.witness;
        ok = w.i == 8 && w.j == 4 && w.p == 7 && w.q == 1 && std::abs(w.difference - 48 * kPi2) <= kTolDiff * 48 * kPi2;
        r.metrics = {{"witness", {w.i, w.j, w.p, w.q}}, {"difference_over_pi2", w.difference / kPi2}};
        r.summary = "witness (" + std::to_string(w.i) + "," + std::to_string(w.j) + "," + std::to_string(w.p) + "," +
                    std::to_string(w.q) + ")" + fmt(", difference %.10g pi^2", w.difference / kPi2);
    } else {
        r.summary = "no resonance witness reported";
    }
    r.pass = ok && r.seconds < kMaxSeconds;
    return r;
}

CriterionResult c4_no_gap() {
    constexpr double kMinFactor = 2.0;
    constexpr double kMaxSeconds = 10.0;
    CriterionResult r = started(4, "no-gap demonstration, d=3");
    const auto t0 = Clock::now();
    const std::vector<int> Ms{50, 100, 200, 500};
    std::vector<SpectralBasis1D> bases(3, solve_eigens_1d(Potential1D(), 12));
    const TensorBasis tb = assemble_tensor_basis(bases, Ms.back(), std::nullopt);
    std::vector<double> gaps;
    for (int M : Ms) gaps.push_back(min_frequency_gap(tb.eigenvalues().head(M)));
    r.seconds = seconds_since(t0);
    bool monotone = true;
    for (std::size_t i = 1; i < gaps.size(); ++i) monotone = monotone && gaps[i] <= gaps[i - 1];
    const double factor = gaps.front() / gaps.back();
    r.pass = monotone && factor >= kMinFactor && r.seconds < kMaxSeconds;
    r.metrics = {{"M", Ms}, {"min_gap", gaps}, {"non_increasing", monotone}, {"factor", factor}};
    r.summary = "min gap / pi^2 =";
    for (double g : gaps) r.summary += fmt(" %.6g", g / kPi2);
    r.summary += std::string(monotone ? ", non-increasing" : ", increasing somewhere") + fmt(", factor %.3g", factor);
    return r;
}

CriterionResult c5_unitarity(std::uint64_t seed) {
    constexpr double kMaxDrift = 1e-10;
    CriterionResult r = started(5, "unitarity of the propagator");
    const auto t0 = Clock::now();
    auto rng = criterion_rng(seed, 5);
    const Cos20 s = make_cos20();
    const State z0 = random_unit_state(*s.space, rng);
    ControlSignal u = random_control(make_control_basis(1.5, 2, 6), rng);
    u *= 1.0 / u.cm_norm(0);
    PropagateOptions opt;
    opt.active_until = 10.0;
    opt.record = true;
    const Trajectory tr = propagate(*s.basis, z0, u, 10.0, opt);
    double drift = 0.0;
    for (double n : tr.norms) drift = std::max(drift, std::abs(n - 1.0));
    r.seconds = seconds_since(t0);
    r.pass = drift <= kMaxDrift;
    r.metrics = {{"max_l2_drift", drift}, {"steps", tr.times.size() - 1}, {"sup_u", u.cm_norm(0)}};
    r.summary = fmt("max L2 drift %.2e", drift) + " over " + std::to_string(tr.times.size() - 1) + " steps";
    return r;
}

CriterionResult c6_order(std::uint64_t seed) {
    constexpr double kSlopeLo = 1.9, kSlopeHi = 2.1;
    CriterionResult r = started(6, "integrator order");
    const auto t0 = Clock::now();
    auto rng = criterion_rng(seed, 6);
    auto b = solve_eigens_1d(Potential1D("cos(2*pi*x)"), 10);
    const TensorBasis tb = assemble_tensor_basis({b}, 10, ScalarField::from_expression("x^2"));
    const StateSpace sp(std::make_shared<const TensorBasis>(tb), 4.0);
    const State z0 = random_unit_state(sp, rng);
    ControlSignal u = random_control(make_control_basis(4.0, 2, 4), rng);
    u *= 5.0 / u.cm_norm(0);
    constexpr double T = 1.0;
    auto run = [&](double dt) {
        PropagateOptions opt;
        opt.dt = dt;
        opt.record = false;
        opt.active_until = T;
        return propagate(tb, z0, u, T, opt).final_state();
    };
    const State ref = run(1e-3 / 256.0);
    std::vector<double> dts, errs;
    for (int k = 0; k < 4; ++k) {
        const double dt = 1e-3 / std::pow(2.0, k);
        dts.push_back(dt);
        errs.push_back(l2_norm(run(dt) - ref));
    }
    const double slope = fit_slope(dts, errs);
    r.seconds = seconds_since(t0);
    r.pass = slope >= kSlopeLo && slope <= kSlopeHi;
    r.metrics = {{"dt", dts}, {"errors", errs}, {"slope", slope}};
    r.summary = fmt("log-log slope %.4f", slope) + fmt(" (errors %.2e", errs.front()) + fmt(" .. %.2e)", errs.back());
    return r;
}

CriterionResult c7_constant_q(std::uint64_t seed) {
    constexpr double kTol = 1e-8;
    constexpr double q0 = 0.7;
    CriterionResult r = started(7, "constant-Q phase reduction");
    const auto t0 = Clock::now();
    auto rng = criterion_rng(seed, 7);
    const Cos20 s = make_cos20("0.7");
    const State z0 = random_unit_state(*s.space, rng);
    ControlSignal u = random_control(make_control_basis(3.0, 2, 6), rng);
    u *= 1.0 / u.cm_norm(0);
    constexpr double T = 3.0;
    PropagateOptions opt;
    opt.record = false;
    const State z = propagate(*s.basis, z0, u, T, opt).final_state();
    State expect = free_evolution(*s.basis, z0, T);
    expect *= std::polar(1.0, -q0 * u.integral(T));
    const double err = l2_norm(z - expect);
    r.seconds = seconds_since(t0);
    r.pass = err <= kTol;
    r.metrics = {{"l2_error", err}, {"q0", q0}, {"T", T}, {"integral_u", u.integral(T)}};
    r.summary = fmt("L2 error vs analytic phase %.2e", err);
    return r;
}

CriterionResult c8_moment_round_trip(std::uint64_t seed) {
    constexpr double kTol = 1e-8;
    CriterionResult r = started(8, "moment round trip, R=30, P=120");
    const auto t0 = Clock::now();
    auto rng = criterion_rng(seed, 8);
    const ControlBasisPtr basis = make_control_basis(30.0, 4, 120);
    const ControlSignal hidden = random_control(basis, rng);
    MomentSystem sys;
    for (int k = 0; k < 30; ++k) {
        sys.frequencies.push_back(k);
        sys.targets.push_back(hidden.inverse_fourier(k));
    }
    sys.targets[0] = cd(sys.targets[0].real(), 0.0);
    const MomentSolveReport rep = solve_moments(sys, basis);
    const double worst = *std::max_element(rep.residuals.begin(), rep.residuals.end());
    r.seconds = seconds_since(t0);
    r.pass = worst <= kTol;
    r.metrics = {{"max_residual", worst}, {"sigma_min", rep.sigma_min}, {"sigma_max", rep.sigma_max}};
    r.summary = fmt("max |u(w_r) - d_r| %.2e", worst) + fmt(", sigma_min/sigma_max %.2e", rep.sigma_min / rep.sigma_max);
    return r;
}

// Moment basis used for the 20-mode right inverse and synthesis.
ControlBasisPtr synthesis_basis() { return make_control_basis(1500.0, 4, 160); }

CriterionResult c9_right_inverse(std::uint64_t seed) {
    constexpr double kTolRel = 1e-6;
    constexpr double kMaxSeconds = 60.0;
    CriterionResult r = started(9, "linearized right inverse");
    const auto t0 = Clock::now();
    auto rng = criterion_rng(seed, 9);
    const Cos20 s = make_cos20();
    const LinearizedSetup setup = make_linearized_setup(*s.space, s.space->mode(0));
    const RightInverse A(setup, synthesis_basis());
    std::vector<double> rel;
    for (int t = 0; t < 10; ++t) {
        const State y = random_tangent(*s.space, setup.anchor, rng);
        const State back = linearized_response_infinite(setup, A.apply(y));
        rel.push_back(s.space->h_norm(back - y) / s.space->h_norm(y));
    }
    const double worst = *std::max_element(rel.begin(), rel.end());
    r.seconds = seconds_since(t0);
    r.pass = worst <= kTolRel && r.seconds < kMaxSeconds;
    r.metrics = {{"relative_h_errors", rel}, {"max", worst}};
    r.summary = fmt("max relative H error over 10 targets %.2e", worst);
    return r;
}

CriterionResult c10_derivative(std::uint64_t seed) {
    constexpr double kSlopeLo = 1.9, kSlopeHi = 2.1;
    constexpr double kPathTol = 1e-8;
    constexpr double kProbeScale = 30.0;
    CriterionResult r = started(10, "derivative identity");
    const auto t0 = Clock::now();
    auto rng = criterion_rng(seed, 10);
    const Cos20 s = make_cos20();
    const LinearizedSetup setup = make_linearized_setup(*s.space, s.space->mode(0));
    const ControlBasisPtr vb = make_control_basis(20.0, 4, 10);
    const ControlSignal v = random_control(vb, rng);
    const ControlSignal zero(vb);

    const DerivativeCheckReport dc = derivative_check(setup, zero, kProbeScale * v, {1e-2, 1e-3, 1e-4});

    PropagateOptions fine;
    fine.dt = 0.25 * default_dt(*s.basis);
    const State by_ode = tangent_limit(setup, zero, v, fine);
    const State by_series = linearized_response_infinite(setup, v);
    const double path = s.space->h_norm(by_ode - by_series);

    r.seconds = seconds_since(t0);
    r.pass = !dc.inconclusive && dc.slope >= kSlopeLo && dc.slope <= kSlopeHi && path <= kPathTol;
    r.metrics = {{"derivative_check", to_json(dc)},
                 {"path_difference_h", path},
                 {"path_reference_h", s.space->h_norm(by_series)}};
    r.summary = fmt("slope %.4f", dc.slope) + fmt(", R_inf paths differ by %.2e in H", path);
    return r;
}

CriterionResult c11_synthesis(std::uint64_t seed) {
    constexpr double kTol = 1e-5;
    constexpr double kSigma = 1e-2;
    constexpr double kEpsPhase = 1e-3;
    constexpr int kMaxIter = 8;
    constexpr double kMaxSeconds = 300.0;
    CriterionResult r = started(11, "desk-scale exact controllability");
    const auto t0 = Clock::now();
    auto rng = criterion_rng(seed, 11);
    const Cos20 s = make_cos20();
    const LinearizedSetup setup = make_linearized_setup(*s.space, s.space->mode(0));
    const ControlBasisPtr basis = synthesis_basis();
    const std::vector<double> lam(s.basis->eigenvalues().data(), s.basis->eigenvalues().data() + s.basis->size());
    const ReturnTimes rt = return_times(lam, static_cast<int>(setup.support.size()), kEpsPhase, 1e4, 6);
    SynthesisOptions opt;
    opt.max_iter = kMaxIter;
    opt.tol = kTol;
    opt.sigma = kSigma;

    std::vector<State> targets;
    std::uniform_real_distribution<double> radius(0.2 * kSigma, 0.9 * kSigma);
    for (int t = 0; t < 5; ++t) {
        State dz = random_tangent(*s.space, setup.anchor, rng);
        dz *= radius(rng) / s.space->h_norm(dz);
        State z1 = setup.anchor + dz;
        z1 *= 1.0 / l2_norm(z1);
        targets.push_back(std::move(z1));
    }
    {
        // Manufactured target from a small hidden control.
        ControlSignal hidden = random_control(basis, rng);
        hidden *= 0.5 * kSigma / s.space->h_norm(linearized_response_infinite(setup, hidden));
        targets.push_back(infinite_time_state(*s.basis, setup.anchor, hidden, rt).limit);
    }

    bool ok = true;
    json runs = json::array();
    std::string worst_line;
    double worst_res = 0.0;
    int worst_iter = 0;
    for (std::size_t t = 0; t < targets.size(); ++t) {
        json run{{"target", t < 5 ? "random" : "manufactured"},
                 {"distance_h", s.space->h_norm(targets[t] - setup.anchor)}};
        try {
            const SynthesisResult res = synthesize(setup, targets[t], rt, basis, opt);
            const double final_res = s.space->h_norm(res.limit.limit - targets[t]);
            json log = json::array();
            for (const auto& it : res.log) log.push_back(to_json(it));
            run["log"] = log;
            run["final_h_residual"] = final_res;
            run["iterations"] = res.log.back().iteration;
            const bool this_ok = final_res <= kTol && res.log.back().iteration <= kMaxIter;
            ok = ok && this_ok;
            worst_res = std::max(worst_res, final_res);
            worst_iter = std::max(worst_iter, res.log.back().iteration);
        } catch (const Error& e) {
            ok = false;
            run["error"] = e.what();
            worst_line = e.what();
        }
        runs.push_back(run);
    }
    r.seconds = seconds_since(t0);
    r.pass = ok && r.seconds < kMaxSeconds;
    r.metrics = {{"runs", runs}, {"return_times", to_json(rt)}};
    r.summary = fmt("6 targets, worst final H residual %.2e", worst_res) + ", at most " +
                std::to_string(worst_iter) + " iterations" + (worst_line.empty() ? "" : "; error: " + worst_line);
    return r;
}

CriterionResult c12_degenerate_anchor() {
    constexpr double kTolBalance = 1e-10;
    CriterionResult r = started(12, "degenerate two-mode anchor refused");
    const auto t0 = Clock::now();
    auto tb = std::make_shared<const TensorBasis>(
        assemble_tensor_basis({solve_eigens_1d(Potential1D(), 20)}, 20, ScalarField::from_expression("x^2")));
    const StateSpace sp(tb, 4.0);
    const double q11 = tb->coupling()(0, 0), q22 = tb->coupling()(1, 1);
    // |c1|^2 Q11 = |c2|^2 Q22 on the unit sphere.
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(sp.size());
    c(0) = std::sqrt(q22 / (q11 + q22));
    c(1) = std::sqrt(q11 / (q11 + q22));
    const State anchor = sp.make(c);
    const LinearizedSetup setup = make_linearized_setup(sp, anchor);
    const std::vector<double> lam(tb->eigenvalues().data(), tb->eigenvalues().data() + tb->size());
    const ReturnTimes rt = return_times(lam, 2, 1e-3, 1e3, 3);
    bool refused = false;
    try {
        synthesize(setup, anchor, rt, synthesis_basis());
    } catch (const NotInvertibleError& e) {
        refused = true;
        r.metrics = {{"p", e.p}, {"q", e.q}, {"balance", e.balance}, {"message", e.what()}};
        r.pass = e.p == 1 && e.q == 2 && std::abs(e.balance) <= kTolBalance * std::max(q11, q22);
        r.summary = "refused with not-invertible, witness (p,q) = (" + std::to_string(e.p) + "," +
                    std::to_string(e.q) + ")" + fmt(", balance %.2e", e.balance);
    } catch (const Error& e) {
        r.summary = std::string("wrong error: ") + e.what();
    }
    if (!refused && r.summary.empty()) r.summary = "synthesize accepted a degenerate anchor";
    r.seconds = seconds_since(t0);
    return r;
}

} // namespace

int acceptance_criterion_count() { return 12; }

CriterionResult run_criterion(int id, std::uint64_t seed) {
    try {
        switch (id) {
        case 1: return c1_free_spectrum();
        case 2: return c2_asymptotics();
        case 3: return c3_resonance();
        case 4: return c4_no_gap();
        case 5: return c5_unitarity(seed);
        case 6: return c6_order(seed);
        case 7: return c7_constant_q(seed);
        case 8: return c8_moment_round_trip(seed);
        case 9: return c9_right_inverse(seed);
        case 10: return c10_derivative(seed);
        case 11: return c11_synthesis(seed);
        case 12: return c12_degenerate_anchor();
        default: break;
        }
    } catch (const std::exception& e) {
        CriterionResult r = started(id, "criterion " + std::to_string(id));
        r.summary = std::string("unexpected error: ") + e.what();
        return r;
    }
    throw InputError("no acceptance criterion " + std::to_string(id));
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options,
                                            const std::function<void(const CriterionResult&)>& on_result) {
    std::vector<int> ids = options.only;
    if (ids.empty())
        for (int i = 1; i <= acceptance_criterion_count(); ++i) ids.push_back(i);
    std::vector<CriterionResult> out;
    for (int id : ids) {
        out.push_back(run_criterion(id, options.seed));
        if (on_result) on_result(out.back());
    }
    return out;
}

std::string format_result_line(const CriterionResult& r) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s %2d  %-40s (%.2f s)  ", r.pass ? "PASS" : "FAIL", r.id, r.title.c_str(),
                  r.seconds);
    return buf + r.summary;
}

json acceptance_summary(const std::vector<CriterionResult>& results, std::uint64_t seed) {
    json doc = make_document("acceptance");
    doc["seed"] = seed;
    json list = json::array();
    int passed = 0;
    for (const auto& r : results) {
        list.push_back({{"id", r.id}, {"title", r.title}, {"pass", r.pass}, {"summary", r.summary}, {"metrics", r.metrics}});
        passed += r.pass ? 1 : 0;
    }
    doc["criteria"] = list;
    doc["passed"] = passed;
    doc["total"] = results.size();
    return doc;
}

} // namespace qsteer
