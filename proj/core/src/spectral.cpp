#include "qsteer/spectral.hpp"

#include "qsteer/errors.hpp"
#include "qsteer/quadrature.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <sstream>

namespace qsteer {

namespace {

constexpr double kPi = std::numbers::pi;
const double kSqrt2 = std::sqrt(2.0);

std::uint64_t next_basis_id() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1);
}

// sqrt(2) sin(m pi x) for m = 1..modes, one row per point.
Eigen::MatrixXd sine_table(std::span<const double> x, int modes) {
    Eigen::MatrixXd S(static_cast<Eigen::Index>(x.size()), modes);
    for (std::size_t a = 0; a < x.size(); ++a)
        for (int m = 0; m < modes; ++m)
            S(static_cast<Eigen::Index>(a), m) = kSqrt2 * std::sin((m + 1) * kPi * x[a]);
    return S;
}

} // namespace

ScalarField ScalarField::from_expression(const std::string& expr) {
    Expression e(expr);
    return {expr, [e](std::span<const double> x) { return e(x); }};
}

ScalarField ScalarField::constant(double c) {
    std::ostringstream os;
    os.precision(17);
    os << c;
    return {os.str(), [c](std::span<const double>) { return c; }};
}

Potential1D::Potential1D() : source_("0"), f_([](double) { return 0.0; }) {}

Potential1D::Potential1D(const std::string& expr) : source_(expr) {
    Expression e(expr);
    if (e.arity() > 1)
        throw InputError("potential '" + expr + "' must depend on a single coordinate x");
    f_ = [e](double x) { return e(x); };
    init_mean();
}

Potential1D::Potential1D(std::string label, std::function<double(double)> f)
    : source_(std::move(label)), f_(std::move(f)) {
    init_mean();
}

Potential1D Potential1D::constant(double c) {
    std::ostringstream os;
    os.precision(17);
    os << c;
    return Potential1D(os.str(), [c](double) { return c; });
}

void Potential1D::init_mean() {
    const GaussRule rule = composite_gauss_legendre(16, 20, 0.0, 1.0);
    double s = 0.0;
    for (std::size_t a = 0; a < rule.nodes.size(); ++a) {
        const double v = f_(rule.nodes[a]);
        if (!std::isfinite(v))
            throw InputError("potential '" + source_ + "' is not finite at x=" + std::to_string(rule.nodes[a]));
        s += rule.weights[a] * v;
    }
    mean_ = s;
}

double SpectralBasis1D::value(int mode, double x) const {
    const auto c = coefficients.col(mode - 1);
    double s = 0.0;
    for (int m = 0; m < basis_size(); ++m) s += c(m) * std::sin((m + 1) * kPi * x);
    return kSqrt2 * s;
}

double SpectralBasis1D::derivative(int mode, double x) const {
    const auto c = coefficients.col(mode - 1);
    double s = 0.0;
    for (int m = 0; m < basis_size(); ++m) s += c(m) * (m + 1) * kPi * std::cos((m + 1) * kPi * x);
    return kSqrt2 * s;
}

Eigen::MatrixXd SpectralBasis1D::values(std::span<const double> x, int modes) const {
    return sine_table(x, basis_size()) * coefficients.leftCols(modes);
}

SpectralBasis1D solve_eigens_1d(const Potential1D& V, int K, int basis_size) {
    if (K < 1) throw ConfigurationError("eigen truncation K must be positive");
    if (basis_size == 0) basis_size = 4 * K;
    if (basis_size < 2 * K)
        throw ConfigurationError("basis_size " + std::to_string(basis_size) + " < 2K = " + std::to_string(2 * K));

    const int N = basis_size;
    const GaussRule rule = gauss_legendre(4 * N + 32);
    Eigen::VectorXd wv(static_cast<Eigen::Index>(rule.nodes.size()));
    for (std::size_t a = 0; a < rule.nodes.size(); ++a) {
        const double v = V(rule.nodes[a]);
        if (!std::isfinite(v))
            throw InputError("potential '" + V.source() + "' is not finite at quadrature node " +
                             std::to_string(rule.nodes[a]));
        wv(static_cast<Eigen::Index>(a)) = rule.weights[a] * v;
    }
    const Eigen::MatrixXd S = sine_table(rule.nodes, N);
    Eigen::MatrixXd H = S.transpose() * wv.asDiagonal() * S;
    for (int m = 0; m < N; ++m) H(m, m) += (m + 1.0) * (m + 1.0) * kPi * kPi;
    H = 0.5 * (H + H.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    if (es.info() != Eigen::Success) throw NumericalError("1D Galerkin eigensolver failed");

    SpectralBasis1D out;
    out.potential = V;
    out.eigenvalues = es.eigenvalues().head(K);
    out.coefficients = es.eigenvectors().leftCols(K);
    for (int k = 0; k < K; ++k) {
        auto c = out.coefficients.col(k);
        Eigen::Index lead = 0;
        c.cwiseAbs().maxCoeff(&lead);
        if (c(lead) < 0) c = -c;
    }
    for (int k = 1; k < K; ++k)
        if (!(out.eigenvalues(k) > out.eigenvalues(k - 1)))
            throw NumericalError("1D eigenvalues are not strictly increasing at k=" + std::to_string(k + 1));
    return out;
}

MultiIndex::MultiIndex(std::initializer_list<int> modes) {
    if (modes.size() < 1 || modes.size() > 3) throw InputError("multi-index must have 1 to 3 entries");
    dims = static_cast<int>(modes.size());
    int i = 0;
    for (int m : modes) j[i++] = m;
}

long long MultiIndex::cube_weight() const {
    long long w = 1;
    for (int i = 0; i < dims; ++i) w *= static_cast<long long>(j[i]) * j[i] * j[i];
    return w;
}

std::string MultiIndex::str() const {
    std::string s = "(";
    for (int i = 0; i < dims; ++i) {
        if (i) s += ",";
        s += std::to_string(j[i]);
    }
    return s + ")";
}

bool MultiIndex::operator==(const MultiIndex& o) const {
    if (dims != o.dims) return false;
    for (int i = 0; i < dims; ++i)
        if (j[i] != o.j[i]) return false;
    return true;
}

const Eigen::MatrixXd& TensorBasis::coupling() const {
    if (!has_coupling()) throw InputError("tensor basis was assembled without a coupling function Q");
    return coupling_;
}

int TensorBasis::position(const MultiIndex& m) const {
    for (int a = 0; a < size(); ++a)
        if (indices_[a] == m) return a;
    return -1;
}

TensorBasis TensorBasis::from_spectrum(const Eigen::VectorXd& lambda, const Eigen::MatrixXd& coupling,
                                       std::string label) {
    const Eigen::Index M = lambda.size();
    if (coupling.size() > 0 && (coupling.rows() != M || coupling.cols() != M))
        throw InputError("synthetic coupling must be M x M");
    if (coupling.size() > 0 && (coupling - coupling.transpose()).cwiseAbs().maxCoeff() > 0.0)
        throw InputError("synthetic coupling must be symmetric");
    for (Eigen::Index a = 1; a < M; ++a)
        if (lambda(a) < lambda(a - 1)) throw InputError("synthetic spectrum must be sorted ascending");
    TensorBasis b;
    b.dims_ = 1;
    b.lambda_ = lambda;
    b.coupling_ = coupling;
    b.q_source_ = std::move(label);
    b.indices_.resize(static_cast<std::size_t>(M));
    for (Eigen::Index a = 0; a < M; ++a) b.indices_[a] = MultiIndex{static_cast<int>(a + 1)};
    b.id_ = next_basis_id();
    return b;
}

namespace {

// Coupling matrix over the retained indices with `nodes[i]` Gauss-Legendre
// nodes in dimension i, contracting one dimension at a time.
Eigen::MatrixXd contract_coupling(const std::vector<SpectralBasis1D>& bases,
                                  const std::vector<MultiIndex>& idx, const std::vector<int>& kmax,
                                  const ScalarField& Q, const std::vector<int>& nodes) {
    const int d = static_cast<int>(bases.size());
    std::vector<GaussRule> rules;
    std::vector<Eigen::MatrixXd> A;  // P_i x n_i, P_i = kmax_i^2
    for (int i = 0; i < d; ++i) {
        rules.push_back(gauss_legendre(nodes[i]));
        const Eigen::MatrixXd E = bases[i].values(rules[i].nodes, kmax[i]);
        const int n = nodes[i], K = kmax[i];
        Eigen::MatrixXd Ai(K * K, n);
        for (int a = 0; a < n; ++a)
            for (int q = 0; q < K; ++q)
                for (int p = 0; p < K; ++p) Ai(p + K * q, a) = rules[i].weights[a] * E(a, p) * E(a, q);
        A.push_back(std::move(Ai));
    }

    long long total = 1;
    for (int i = 0; i < d; ++i) total *= nodes[i];
    Eigen::VectorXd G(total);
    std::array<double, 3> x{0.0, 0.0, 0.0};
    std::array<int, 3> c{0, 0, 0};
    for (long long flat = 0; flat < total; ++flat) {
        long long r = flat;
        for (int i = 0; i < d; ++i) {
            c[i] = static_cast<int>(r % nodes[i]);
            r /= nodes[i];
            x[i] = rules[i].nodes[c[i]];
        }
        const double v = Q(std::span<const double>(x.data(), 3));
        if (!std::isfinite(v))
            throw InputError("coupling function '" + Q.source + "' is not finite at a quadrature node");
        G(flat) = v;
    }

    // Column-major tensor (n_1, ..., n_d); each pass contracts the leading
    // axis and rotates it to the back as a pair index.
    Eigen::MatrixXd T = Eigen::Map<Eigen::MatrixXd>(G.data(), nodes[0], total / nodes[0]);
    long long remaining = total;
    for (int i = 0; i < d; ++i) {
        const Eigen::MatrixXd Y = A[i] * T;  // P_i x rest
        remaining = remaining / nodes[i] * (static_cast<long long>(kmax[i]) * kmax[i]);
        const Eigen::MatrixXd Yt = Y.transpose();
        if (i + 1 < d) {
            T = Eigen::Map<const Eigen::MatrixXd>(Yt.data(), nodes[i + 1], remaining / nodes[i + 1]);
        } else {
            T = Eigen::Map<const Eigen::MatrixXd>(Yt.data(), remaining, 1);
        }
    }
    // Layout is now (P_1, ..., P_d).

    const int M = static_cast<int>(idx.size());
    Eigen::MatrixXd C(M, M);
    for (int a = 0; a < M; ++a) {
        for (int b = 0; b < M; ++b) {
            long long flat = 0, stride = 1;
            for (int i = 0; i < d; ++i) {
                const int K = kmax[i];
                flat += stride * ((idx[a][i] - 1) + K * (idx[b][i] - 1));
                stride *= static_cast<long long>(K) * K;
            }
            C(a, b) = T(flat, 0);
        }
    }
    return C;
}

} // namespace

TensorBasis assemble_tensor_basis(std::vector<SpectralBasis1D> bases, int M,
                                  const std::optional<ScalarField>& Q, const CouplingOptions& options) {
    const int d = static_cast<int>(bases.size());
    if (d < 1 || d > 3) throw ConfigurationError("dimension must be 1, 2 or 3");
    if (M < 1) throw ConfigurationError("tensor truncation M must be positive");
    long long product = 1;
    for (const auto& b : bases) product *= b.K();
    if (M > product)
        throw ConfigurationError("M = " + std::to_string(M) + " exceeds the product of per-dimension truncations (" +
                                 std::to_string(product) + ")");

    struct Entry {
        double lambda;
        MultiIndex index;
    };
    std::vector<Entry> all;
    all.reserve(static_cast<std::size_t>(product));
    for (long long flat = 0; flat < product; ++flat) {
        Entry e;
        e.index.dims = d;
        e.lambda = 0.0;
        long long r = flat;
        for (int i = 0; i < d; ++i) {
            const int k = static_cast<int>(r % bases[i].K());
            r /= bases[i].K();
            e.index.j[i] = k + 1;
            e.lambda += bases[i].eigenvalues(k);
        }
        all.push_back(e);
    }
    std::sort(all.begin(), all.end(), [d](const Entry& a, const Entry& b) {
        if (a.lambda != b.lambda) return a.lambda < b.lambda;
        for (int i = 0; i < d; ++i)
            if (a.index.j[i] != b.index.j[i]) return a.index.j[i] < b.index.j[i];
        return false;
    });

    // Any index outside the per-dimension boxes has a larger eigenvalue than
    // this bound, so the M smallest are all enumerated iff lambda_M <= bound.
    const double lambda_M = all[M - 1].lambda;
    for (int i = 0; i < d && d > 1; ++i) {
        double bound = bases[i].eigenvalues(bases[i].K() - 1);
        for (int j = 0; j < d; ++j)
            if (j != i) bound += bases[j].eigenvalues(0);
        if (lambda_M > bound)
            throw ConfigurationError("per-dimension truncation K in dimension " + std::to_string(i + 1) +
                                     " is too small to resolve the lowest " + std::to_string(M) + " tensor modes");
    }

    TensorBasis tb;
    tb.dims_ = d;
    tb.indices_.resize(M);
    tb.lambda_.resize(M);
    for (int a = 0; a < M; ++a) {
        tb.indices_[a] = all[a].index;
        tb.lambda_(a) = all[a].lambda;
    }
    tb.id_ = next_basis_id();

    if (Q) {
        std::vector<int> kmax(d, 1), nodes(d);
        for (const auto& m : tb.indices_)
            for (int i = 0; i < d; ++i) kmax[i] = std::max(kmax[i], m.j[i]);
        for (int i = 0; i < d; ++i) nodes[i] = std::max(options.min_nodes, options.nodes_per_mode * kmax[i]);
        Eigen::MatrixXd C = contract_coupling(bases, tb.indices_, kmax, *Q, nodes);
        if (options.doubling_check) {
            // Double the node counts until the entries settle, a few times at most.
            constexpr int kMaxDoublings = 4;
            for (int attempt = 0;; ++attempt) {
                std::vector<int> doubled(nodes);
                for (int& n : doubled) n *= 2;
                const Eigen::MatrixXd C2 = contract_coupling(bases, tb.indices_, kmax, *Q, doubled);
                const double scale = std::max(1.0, C2.cwiseAbs().maxCoeff());
                tb.quadrature_change_ = (C2 - C).cwiseAbs().maxCoeff();
                C = C2;
                nodes = doubled;
                if (tb.quadrature_change_ <= options.tolerance * scale) break;
                if (attempt + 1 == kMaxDoublings) {
                    char buf[64];
                    std::snprintf(buf, sizeof buf, "%.3g", tb.quadrature_change_);
                    throw NumericalError(std::string("coupling quadrature did not converge: entries change by ") +
                                         buf + " when the node count doubles");
                }
            }
        }
        tb.coupling_ = 0.5 * (C + C.transpose());
        tb.q_source_ = Q->source;
        tb.quadrature_nodes_ = nodes;
    }
    tb.per_dim_ = std::move(bases);
    return tb;
}

double coupling_entry(const TensorBasis& basis, const MultiIndex& p, const MultiIndex& j) {
    const int a = basis.position(p);
    const int b = basis.position(j);
    if (a < 0 || b < 0)
        throw InputError("multi-index " + (a < 0 ? p.str() : j.str()) + " is not within the truncation");
    return basis.coupling()(a, b);
}

double min_frequency_gap(const Eigen::VectorXd& lambda, double tol_eq) {
    if (tol_eq < 0) tol_eq = 1e-9 * lambda.cwiseAbs().maxCoeff();
    std::vector<double> v(lambda.data(), lambda.data() + lambda.size());
    std::sort(v.begin(), v.end());
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t a = 1; a < v.size(); ++a) {
        const double g = v[a] - v[a - 1];
        if (g > tol_eq) gap = std::min(gap, g);
    }
    return gap;
}

ResonanceReport audit_resonances(const Eigen::VectorXd& lambda, double tol_eq, std::size_t max_listed) {
    const int M = static_cast<int>(lambda.size());
    if (M < 4) throw InsufficientDataError("resonance audit needs at least 4 eigenvalues, got " + std::to_string(M));
    ResonanceReport rep;
    rep.tolerance = tol_eq < 0 ? 1e-9 * lambda.cwiseAbs().maxCoeff() : tol_eq;
    const double tol = rep.tolerance;

    auto record = [&](ResonanceWitness w) {
        ++rep.violation_count;
        if (rep.violations.size() < max_listed) rep.violations.push_back(w);
    };

    struct Diff {
        double value;
        int i, j;
    };
    std::vector<Diff> diffs;
    diffs.reserve(static_cast<std::size_t>(M) * (M - 1) / 2);
    rep.min_gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i < M; ++i) {
        for (int j = 0; j < i; ++j) {
            const double v = lambda(i) - lambda(j);
            if (std::abs(v) <= tol) {
                // Degenerate pair: lambda_i - lambda_j equals lambda_1 - lambda_1.
                record({i + 1, j + 1, 1, 1, v, std::abs(v)});
                continue;
            }
            const double g = std::abs(v);
            if (g < rep.min_gap) {
                rep.min_gap = g;
                rep.min_gap_i = std::max(i, j) + 1;
                rep.min_gap_j = std::min(i, j) + 1;
            }
            if (v > 0) diffs.push_back({v, i + 1, j + 1});
            else diffs.push_back({-v, j + 1, i + 1});
        }
    }
    std::sort(diffs.begin(), diffs.end(), [](const Diff& a, const Diff& b) {
        if (a.value != b.value) return a.value > b.value;
        if (a.i != b.i) return a.i > b.i;
        return a.j > b.j;
    });
    std::vector<ResonanceWitness> found;
    for (std::size_t a = 1; a < diffs.size(); ++a) {
        const Diff& x = diffs[a - 1];
        const Diff& y = diffs[a];
        const double mismatch = std::abs(x.value - y.value);
        if (mismatch > tol) continue;
        const bool x_first = x.i > y.i || (x.i == y.i && x.j > y.j);
        const Diff& f = x_first ? x : y;
        const Diff& s = x_first ? y : x;
        found.push_back({f.i, f.j, s.i, s.j, f.value, mismatch});
    }
    // Resonances are listed by decreasing difference, degeneracies after them.
    std::vector<ResonanceWitness> degenerate = std::move(rep.violations);
    const long long degenerate_count = rep.violation_count;
    rep.violations.clear();
    rep.violation_count = 0;
    for (const auto& w : found) record(w);
    for (const auto& w : degenerate) record(w);
    rep.violation_count += degenerate_count - static_cast<long long>(degenerate.size());
    rep.ok = rep.violation_count == 0;
    if (!rep.ok) rep.witness = rep.violations.front();
    if (!std::isfinite(rep.min_gap)) rep.min_gap = 0.0;
    return rep;
}

ConditionReport audit_conditions(const TensorBasis& basis, double tol_eq) {
    const int M = basis.size();
    if (M < 4) throw InsufficientDataError("condition audit needs M >= 4, got " + std::to_string(M));
    const Eigen::MatrixXd& Q = basis.coupling();

    ConditionReport rep;
    rep.truncation = M;
    rep.max_mode.assign(basis.dims(), 0);
    for (const auto& m : basis.indices())
        for (int i = 0; i < basis.dims(); ++i) rep.max_mode[i] = std::max(rep.max_mode[i], m.j[i]);

    rep.cond_i_inf = std::numeric_limits<double>::infinity();
    for (int a = 0; a < M; ++a) {
        const double wa = static_cast<double>(basis.indices()[a].cube_weight());
        for (int b = 0; b < M; ++b) {
            const double wb = static_cast<double>(basis.indices()[b].cube_weight());
            const double v = wa * wb * std::abs(Q(a, b));
            if (v < rep.cond_i_inf) {
                rep.cond_i_inf = v;
                rep.cond_i_p = a + 1;
                rep.cond_i_j = b + 1;
            }
            rep.coupling_growth_bound = std::max(rep.coupling_growth_bound, wa / wb * std::abs(Q(b, a)));
        }
    }

    const ResonanceReport res = audit_resonances(basis.eigenvalues(), tol_eq);
    rep.cond_ii_ok = res.ok;
    rep.cond_ii_witness = res.witness;
    rep.cond_ii_violations = res.violations;
    rep.cond_ii_violation_count = res.violation_count;
    rep.min_gap = res.min_gap;
    rep.min_gap_i = res.min_gap_i;
    rep.min_gap_j = res.min_gap_j;
    rep.tolerance = res.tolerance;
    return rep;
}

AsymptoticsReport verify_asymptotics(const SpectralBasis1D& basis, const Potential1D& V) {
    const int K = basis.K();
    if (K < 10) throw InputError("asymptotics check needs K >= 10, got " + std::to_string(K));
    const int N = basis.basis_size();

    AsymptoticsReport rep;
    rep.grid_points = 16 * N + 1;
    std::vector<double> x(static_cast<std::size_t>(rep.grid_points));
    for (int g = 0; g < rep.grid_points; ++g) x[g] = static_cast<double>(g) / (rep.grid_points - 1);

    Eigen::MatrixXd S(rep.grid_points, N), dS(rep.grid_points, N);
    for (int g = 0; g < rep.grid_points; ++g) {
        for (int m = 0; m < N; ++m) {
            const double w = (m + 1) * kPi;
            S(g, m) = kSqrt2 * std::sin(w * x[g]);
            dS(g, m) = kSqrt2 * w * std::cos(w * x[g]);
        }
    }
    Eigen::MatrixXd delta = basis.coefficients;
    for (int k = 0; k < K; ++k) delta(k, k) -= 1.0;
    const Eigen::MatrixXd dev = S * delta;
    const Eigen::MatrixXd ddev = dS * delta;

    double sum = 0.0;
    for (int k = 1; k <= K; ++k) {
        const double r = basis.eigenvalues(k - 1) - k * k * kPi * kPi - V.mean();
        rep.r.push_back(r);
        sum += r * r;
        rep.partial_sums.push_back(sum);
        if (k > 50) rep.max_increment_past_50 = std::max(rep.max_increment_past_50, r * r);
        const double e = k * dev.col(k - 1).cwiseAbs().maxCoeff();
        const double de = ddev.col(k - 1).cwiseAbs().maxCoeff();
        rep.scaled_deviation.push_back(e);
        rep.derivative_deviation.push_back(de);
        rep.sup_scaled_deviation = std::max(rep.sup_scaled_deviation, e);
        rep.sup_derivative_deviation = std::max(rep.sup_derivative_deviation, de);
    }

    // Ordinary least squares of log(value) on log(k) over k >= slope_from.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (int k = rep.slope_from; k <= K; ++k) {
        const double v = rep.scaled_deviation[k - 1];
        if (!(v > 1e-300)) continue;
        const double lx = std::log(static_cast<double>(k)), ly = std::log(v);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n >= 2) rep.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return rep;
}

} // namespace qsteer
