#pragma once

#include "qsteer/expression.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qsteer {

// Real function on (0,1)^d used for potentials and for the coupling Q.
struct ScalarField {
    std::string source;
    std::function<double(std::span<const double>)> f;

    static ScalarField from_expression(const std::string& expr);
    static ScalarField constant(double c);

    double operator()(std::span<const double> x) const { return f(x); }
};

class Potential1D {
public:
    Potential1D();
    explicit Potential1D(const std::string& expr);
    Potential1D(std::string label, std::function<double(double)> f);
    static Potential1D constant(double c);

    double operator()(double x) const { return f_(x); }
    double mean() const noexcept { return mean_; }
    const std::string& source() const noexcept { return source_; }

private:
    void init_mean();

    std::string source_;
    std::function<double(double)> f_;
    double mean_ = 0.0;
};

// Dirichlet eigenpairs of -d^2/dx^2 + V on (0,1), with eigenfunctions
// expanded in sqrt(2) sin(m pi x), m = 1..basis_size.
struct SpectralBasis1D {
    Eigen::VectorXd eigenvalues;   // K, ascending
    Eigen::MatrixXd coefficients;  // basis_size x K
    Potential1D potential;

    int K() const { return static_cast<int>(eigenvalues.size()); }
    int basis_size() const { return static_cast<int>(coefficients.rows()); }

    // `mode` is 1-based.
    double value(int mode, double x) const;
    double derivative(int mode, double x) const;
    // Rows are points, columns modes 1..modes.
    Eigen::MatrixXd values(std::span<const double> x, int modes) const;
};

SpectralBasis1D solve_eigens_1d(const Potential1D& V, int K, int basis_size = 0);

struct MultiIndex {
    int dims = 1;
    std::array<int, 3> j{1, 1, 1};

    MultiIndex() = default;
    MultiIndex(std::initializer_list<int> modes);

    int operator[](int i) const { return j[i]; }
    long long cube_weight() const;  // (j_1 ... j_d)^3
    std::string str() const;
    bool operator==(const MultiIndex& o) const;
};

struct CouplingOptions {
    int min_nodes = 16;
    int nodes_per_mode = 4;
    double tolerance = 1e-10;   // relative to max(1, max|Q_pj|)
    bool doubling_check = true;
};

class TensorBasis {
public:
    int dims() const { return dims_; }
    int size() const { return static_cast<int>(indices_.size()); }
    const std::vector<SpectralBasis1D>& per_dim() const { return per_dim_; }
    const std::vector<MultiIndex>& indices() const { return indices_; }
    const Eigen::VectorXd& eigenvalues() const { return lambda_; }
    bool has_coupling() const { return coupling_.size() > 0; }
    const Eigen::MatrixXd& coupling() const;
    const std::string& coupling_source() const { return q_source_; }
    std::uint64_t id() const { return id_; }

    // Position of a multi-index in the sorted list, or -1.
    int position(const MultiIndex& m) const;
    // Largest change of any coupling entry when the node count was doubled.
    double quadrature_change() const { return quadrature_change_; }
    const std::vector<int>& quadrature_nodes() const { return quadrature_nodes_; }

    // A one-dimensional basis given directly by its spectrum and coupling,
    // for synthetic scenarios that do not come from a potential.
    static TensorBasis from_spectrum(const Eigen::VectorXd& lambda, const Eigen::MatrixXd& coupling,
                                     std::string label = "synthetic");

private:
    friend TensorBasis assemble_tensor_basis(std::vector<SpectralBasis1D>, int,
                                             const std::optional<ScalarField>&, const CouplingOptions&);
    int dims_ = 1;
    std::vector<SpectralBasis1D> per_dim_;
    std::vector<MultiIndex> indices_;
    Eigen::VectorXd lambda_;
    Eigen::MatrixXd coupling_;
    std::string q_source_;
    std::uint64_t id_ = 0;
    double quadrature_change_ = 0.0;
    std::vector<int> quadrature_nodes_;
};

TensorBasis assemble_tensor_basis(std::vector<SpectralBasis1D> bases, int M,
                                  const std::optional<ScalarField>& Q,
                                  const CouplingOptions& options = {});

double coupling_entry(const TensorBasis& basis, const MultiIndex& p, const MultiIndex& j);

// (i, j, p, q) are 1-based positions in the sorted eigenvalue list with
// lambda_i - lambda_j equal to lambda_p - lambda_q within tolerance.
struct ResonanceWitness {
    int i = 0, j = 0, p = 0, q = 0;
    double difference = 0.0;  // lambda_i - lambda_j
    double mismatch = 0.0;    // |(lambda_i - lambda_j) - (lambda_p - lambda_q)|
};

struct ResonanceReport {
    bool ok = true;
    std::optional<ResonanceWitness> witness;
    std::vector<ResonanceWitness> violations;  // capped list, largest differences first
    long long violation_count = 0;
    double min_gap = 0.0;
    int min_gap_i = 0, min_gap_j = 0;
    double tolerance = 0.0;
};

ResonanceReport audit_resonances(const Eigen::VectorXd& lambda, double tol_eq = -1.0,
                                 std::size_t max_listed = 64);

// Smallest positive |lambda_m - lambda_k| over the list.
double min_frequency_gap(const Eigen::VectorXd& lambda, double tol_eq = -1.0);

struct ConditionReport {
    double cond_i_inf = 0.0;
    int cond_i_p = 0, cond_i_j = 0;  // 1-based positions attaining the minimum
    bool cond_ii_ok = true;
    std::optional<ResonanceWitness> cond_ii_witness;
    std::vector<ResonanceWitness> cond_ii_violations;
    long long cond_ii_violation_count = 0;
    double min_gap = 0.0;
    int min_gap_i = 0, min_gap_j = 0;
    double tolerance = 0.0;
    int truncation = 0;               // number of retained modes
    std::vector<int> max_mode;        // largest retained index per dimension
    double coupling_growth_bound = 0.0;  // max |(prod m^3 / prod k^3) Q_km| on the truncation
};

ConditionReport audit_conditions(const TensorBasis& basis, double tol_eq = -1.0);

struct AsymptoticsReport {
    std::vector<double> r;                  // r_k, k = 1..K
    std::vector<double> partial_sums;       // sum_{k<=n} r_k^2
    std::vector<double> scaled_deviation;   // k * ||e_{k,V} - e_{k,0}||_inf
    std::vector<double> derivative_deviation;  // ||e'_{k,V} - e'_{k,0}||_inf
    double sup_scaled_deviation = 0.0;
    double sup_derivative_deviation = 0.0;
    double max_increment_past_50 = 0.0;
    double slope = 0.0;        // least-squares slope of log(scaled_deviation) vs log k
    int slope_from = 10;
    int grid_points = 0;
};

AsymptoticsReport verify_asymptotics(const SpectralBasis1D& basis, const Potential1D& V);

} // namespace qsteer
