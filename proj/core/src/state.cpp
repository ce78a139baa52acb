#include "qsteer/state.hpp"

#include "qsteer/errors.hpp"

#include <cmath>
#include <cstdlib>

namespace qsteer {

namespace {

void same_basis(const State& a, const State& b) {
    if (a.basis_id() != b.basis_id() || a.size() != b.size())
        throw InputError("states belong to different bases");
}

} // namespace

State& State::operator+=(const State& o) {
    same_basis(*this, o);
    coeffs_ += o.coeffs_;
    return *this;
}

State& State::operator-=(const State& o) {
    same_basis(*this, o);
    coeffs_ -= o.coeffs_;
    return *this;
}

State operator+(State a, const State& b) { return a += b; }
State operator-(State a, const State& b) { return a -= b; }
State operator*(cd c, State a) { return a *= c; }

cd inner(const State& a, const State& b) {
    same_basis(a, b);
    return b.coeffs().dot(a.coeffs());  // Eigen conjugates the left operand
}

double l2_norm(const State& z) { return z.coeffs().norm(); }

WeightTable WeightTable::build(const TensorBasis& basis, double s) {
    WeightTable w;
    w.s = s;
    const int M = basis.size();
    w.h.resize(M);
    w.hsv.resize(M);
    for (int a = 0; a < M; ++a) {
        w.h(a) = static_cast<double>(basis.indices()[a].cube_weight());
        const double lam = basis.eigenvalues()(a);
        if (!(lam > 0.0))
            throw InputError("H^s_(V) weights need positive eigenvalues; lambda_" + std::to_string(a + 1) + " = " +
                             std::to_string(lam));
        w.hsv(a) = std::pow(lam, 0.5 * s);
    }
    return w;
}

NormSpec NormSpec::parse(const std::string& tag) {
    if (tag == "L2") return {NormKind::L2, 0.0};
    if (tag == "H") return {NormKind::H, 0.0};
    if (tag == "V") return {NormKind::V, 0.0};
    if (tag == "HsV") return {NormKind::HsV, -1.0};
    if (tag.rfind("HsV(", 0) == 0 && tag.back() == ')') {
        const std::string inner = tag.substr(4, tag.size() - 5);
        char* end = nullptr;
        const double s = std::strtod(inner.c_str(), &end);
        if (end != inner.c_str() && *end == '\0') return {NormKind::HsV, s};
    }
    throw InputError("unknown norm tag '" + tag + "' (expected L2, H, V, HsV or HsV(s))");
}

std::string NormSpec::str() const {
    switch (kind) {
    case NormKind::L2: return "L2";
    case NormKind::H: return "H";
    case NormKind::V: return "V";
    case NormKind::HsV: return s < 0 ? "HsV" : "HsV(" + std::to_string(s) + ")";
    }
    return "?";
}

StateSpace::StateSpace(std::shared_ptr<const TensorBasis> basis, double s)
    : basis_(std::move(basis)), weights_(WeightTable::build(*basis_, s)) {}

State StateSpace::zero() const { return State(Eigen::VectorXcd::Zero(size()), basis_->id()); }

State StateSpace::mode(int position, cd value) const {
    if (position < 0 || position >= size()) throw InputError("mode position out of range");
    State z = zero();
    z.coeffs()(position) = value;
    return z;
}

State StateSpace::make(Eigen::VectorXcd coeffs) const {
    if (coeffs.size() != size())
        throw InputError("coefficient vector has length " + std::to_string(coeffs.size()) + ", basis has " +
                         std::to_string(size()));
    return State(std::move(coeffs), basis_->id());
}

void StateSpace::check(const State& z) const {
    if (z.basis_id() != basis_->id() || z.size() != size()) throw InputError("state does not belong to this basis");
}

double StateSpace::norm(const State& z, NormSpec which) const {
    check(z);
    const Eigen::VectorXd a = z.coeffs().cwiseAbs();
    switch (which.kind) {
    case NormKind::L2: return a.norm();
    case NormKind::H: return a.cwiseProduct(weights_.h).maxCoeff();
    case NormKind::V: return a.cwiseProduct(weights_.h).sum();
    case NormKind::HsV: {
        if (which.s < 0 || which.s == weights_.s) return a.cwiseProduct(weights_.hsv).norm();
        double acc = 0.0;
        for (int j = 0; j < size(); ++j) {
            const double w = std::pow(basis_->eigenvalues()(j), 0.5 * which.s);
            acc += w * w * a(j) * a(j);
        }
        return std::sqrt(acc);
    }
    }
    throw InputError("unknown norm kind");
}

double StateSpace::embedding_constant() const {
    const double p = 1.5 * basis_->dims();
    double c = 0.0;
    for (int j = 0; j < size(); ++j) c = std::max(c, weights_.h(j) / std::pow(basis_->eigenvalues()(j), p));
    return c;
}

State project_tangent(const State& z, const State& anchor, double tol) {
    const double n = l2_norm(anchor);
    if (std::abs(n - 1.0) > tol)
        throw InputError("tangent projection needs a normalized anchor, ||anchor|| = " + std::to_string(n));
    const double re = inner(z, anchor).real();
    State out = z;
    out.coeffs() -= re * anchor.coeffs();
    return out;
}

std::string to_string(SpecialLabel label) {
    switch (label) {
    case SpecialLabel::InE: return "in_E";
    case SpecialLabel::InE0: return "in_E0";
    case SpecialLabel::Generic: return "generic";
    }
    return "?";
}

SpecialClassification classify_special(const State& z, const Eigen::MatrixXd& coupling, double tol) {
    if (coupling.rows() != z.size()) throw InputError("coupling matrix does not match the state length");
    SpecialClassification out;
    const Eigen::VectorXd a = z.coeffs().cwiseAbs();
    const double peak = a.size() ? a.maxCoeff() : 0.0;
    for (int j = 0; j < z.size(); ++j)
        if (a(j) > tol * peak) out.support.push_back(j);
    out.touches_truncation = !out.support.empty() && out.support.back() == z.size() - 1;
    out.in_E = !out.support.empty() && !out.touches_truncation;
    if (out.support.size() == 2) {
        const int p = out.support[0], q = out.support[1];
        const double bp = a(p) * a(p) * coupling(p, p);
        const double bq = a(q) * a(q) * coupling(q, q);
        out.balance = bp - bq;
        const double scale = std::max({std::abs(bp), std::abs(bq), 1e-300});
        out.in_E0 = out.in_E && std::abs(out.balance) <= tol * scale;
    }
    if (out.in_E0) out.label = SpecialLabel::InE0;
    else if (out.in_E && out.support.size() == 1) out.label = SpecialLabel::InE;
    else out.label = SpecialLabel::Generic;
    return out;
}

} // namespace qsteer
