#include "qsteer/control.hpp"
#include "qsteer/evolution.hpp"
#include "qsteer/moment.hpp"
#include "qsteer/spectral.hpp"
#include "qsteer/state.hpp"

#include <benchmark/benchmark.h>

#include <memory>
#include <random>

using namespace qsteer;

namespace {

std::shared_ptr<StateSpace> cosine_space(int M) {
    auto basis = std::make_shared<const TensorBasis>(
        assemble_tensor_basis({solve_eigens_1d(Potential1D("cos(2*pi*x)"), M)}, M, ScalarField::from_expression("x^2")));
    return std::make_shared<StateSpace>(basis, 4.0);
}

ControlSignal random_control(const ControlBasisPtr& basis, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Eigen::VectorXd c(basis->P());
    for (int p = 0; p < basis->P(); ++p) c(p) = g(rng);
    return ControlSignal(basis, c);
}

void BM_SolveEigens(benchmark::State& state) {
    const Potential1D V("cos(2*pi*x)");
    const int K = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(solve_eigens_1d(V, K));
}
BENCHMARK(BM_SolveEigens)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_AssembleTensor2D(benchmark::State& state) {
    const auto b = solve_eigens_1d(Potential1D("cos(2*pi*x)"), 12);
    const auto Q = ScalarField::from_expression("x1^2 + x2");
    const int M = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(assemble_tensor_basis({b, b}, M, Q));
}
BENCHMARK(BM_AssembleTensor2D)->Arg(30)->Arg(60)->Unit(benchmark::kMillisecond);

void BM_PropagateUnitTime(benchmark::State& state) {
    const auto sp = cosine_space(static_cast<int>(state.range(0)));
    const ControlSignal u = random_control(make_control_basis(4.0, 2, 6), 1);
    PropagateOptions opt;
    opt.record = false;
    opt.active_until = 1.0;
    for (auto _ : state) benchmark::DoNotOptimize(propagate(sp->basis(), sp->mode(0), u, 1.0, opt));
}
BENCHMARK(BM_PropagateUnitTime)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_MomentFactorAndSolve(benchmark::State& state) {
    const int R = static_cast<int>(state.range(0));
    std::vector<double> w;
    std::vector<std::complex<double>> d;
    for (int r = 0; r < R; ++r) {
        w.push_back(r);
        d.emplace_back(1.0 / (r + 1), r ? 0.5 : 0.0);
    }
    const auto basis = make_control_basis(30.0, 4, 4 * R);
    for (auto _ : state) benchmark::DoNotOptimize(MomentSolver(w, basis).solve(d));
}
BENCHMARK(BM_MomentFactorAndSolve)->Arg(30)->Arg(80)->Unit(benchmark::kMillisecond);

void BM_RightInverseApply(benchmark::State& state) {
    const auto sp = cosine_space(20);
    const LinearizedSetup setup = make_linearized_setup(*sp, sp->mode(0));
    const RightInverse A(setup, make_control_basis(1500.0, 4, 160));
    Eigen::VectorXcd c(sp->size());
    for (int m = 0; m < sp->size(); ++m) c(m) = std::complex<double>(0.0, 1.0) / std::pow(m + 1.0, 4);
    const State y = project_tangent(sp->make(c), setup.anchor);
    for (auto _ : state) benchmark::DoNotOptimize(A.apply(y));
}
BENCHMARK(BM_RightInverseApply)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
