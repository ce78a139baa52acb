#pragma once

#include "qsteer/spectral.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace qsteer {

using cd = std::complex<double>;

class State {
public:
    State() = default;
    State(Eigen::VectorXcd coeffs, std::uint64_t basis_id) : coeffs_(std::move(coeffs)), basis_id_(basis_id) {}

    const Eigen::VectorXcd& coeffs() const { return coeffs_; }
    Eigen::VectorXcd& coeffs() { return coeffs_; }
    std::uint64_t basis_id() const { return basis_id_; }
    int size() const { return static_cast<int>(coeffs_.size()); }
    cd operator[](int a) const { return coeffs_(a); }

    State& operator+=(const State& o);
    State& operator-=(const State& o);
    State& operator*=(cd c) {
        coeffs_ *= c;
        return *this;
    }

private:
    Eigen::VectorXcd coeffs_;
    std::uint64_t basis_id_ = 0;
};

State operator+(State a, const State& b);
State operator-(State a, const State& b);
State operator*(cd c, State a);

// <a, b> = sum a_k conj(b_k)
cd inner(const State& a, const State& b);

struct WeightTable {
    Eigen::VectorXd h;    // (j_1 ... j_d)^3
    Eigen::VectorXd hsv;  // lambda^{s/2}
    double s = 0.0;

    static WeightTable build(const TensorBasis& basis, double s);
};

enum class NormKind { L2, HsV, H, V };

struct NormSpec {
    NormKind kind = NormKind::L2;
    double s = 0.0;  // only for HsV; negative means "use the table's s"

    static NormSpec parse(const std::string& tag);
    std::string str() const;
};

// The basis a state lives on together with its weight tables.
class StateSpace {
public:
    StateSpace(std::shared_ptr<const TensorBasis> basis, double s);

    const TensorBasis& basis() const { return *basis_; }
    std::shared_ptr<const TensorBasis> basis_ptr() const { return basis_; }
    const WeightTable& weights() const { return weights_; }
    int size() const { return basis_->size(); }

    State zero() const;
    State mode(int position, cd value = 1.0) const;  // 0-based position
    State make(Eigen::VectorXcd coeffs) const;

    double norm(const State& z, NormSpec which) const;
    double norm(const State& z, const std::string& tag) const { return norm(z, NormSpec::parse(tag)); }
    double h_norm(const State& z) const { return norm(z, NormSpec{NormKind::H}); }
    void check(const State& z) const;

    // max_j h_j / lambda_j^{3d/2}: the constant in the per-basis inequality
    // ||e_j||_H <= C ||e_j||_{3d,V}.
    double embedding_constant() const;

private:
    std::shared_ptr<const TensorBasis> basis_;
    WeightTable weights_;
};

double l2_norm(const State& z);

State project_tangent(const State& z, const State& anchor, double tol = 1e-10);

enum class SpecialLabel { InE, InE0, Generic };

struct SpecialClassification {
    SpecialLabel label = SpecialLabel::Generic;
    bool in_E = false;
    bool in_E0 = false;
    std::vector<int> support;  // 0-based positions
    double balance = 0.0;      // |c_p|^2 Q_pp - |c_q|^2 Q_qq for two-mode support
    bool touches_truncation = false;
};

std::string to_string(SpecialLabel label);

// A coefficient counts as nonzero when |c| > tol * max|c|.  A state is in E
// when its support avoids the last retained mode (so the truncation does
// not clip it); E0 additionally needs exactly two modes with vanishing
// balance relative to tol.
SpecialClassification classify_special(const State& z, const Eigen::MatrixXd& coupling, double tol = 1e-10);

} // namespace qsteer
