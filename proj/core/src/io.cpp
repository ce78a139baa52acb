#include "qsteer/io.hpp"

#include "qsteer/errors.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace qsteer {

std::string format_real(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

json make_document(const std::string& kind) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = kind;
    return j;
}

json to_json(const std::complex<double>& c) { return json::array({c.real(), c.imag()}); }

json to_json(const ResonanceWitness& w) {
    return {{"i", w.i}, {"j", w.j}, {"p", w.p}, {"q", w.q}, {"difference", w.difference}, {"mismatch", w.mismatch}};
}

json to_json(const ConditionReport& r) {
    json j;
    j["cond_i_inf_truncated"] = r.cond_i_inf;
    j["cond_i_witness"] = {r.cond_i_p, r.cond_i_j};
    j["cond_ii_ok"] = r.cond_ii_ok;
    j["cond_ii_witness"] = r.cond_ii_witness ? to_json(*r.cond_ii_witness) : json(nullptr);
    j["cond_ii_violation_count"] = r.cond_ii_violation_count;
    json v = json::array();
    for (const auto& w : r.cond_ii_violations) v.push_back(to_json(w));
    j["cond_ii_violations"] = v;
    j["min_gap"] = r.min_gap;
    j["min_gap_pair"] = {r.min_gap_i, r.min_gap_j};
    j["tolerance"] = r.tolerance;
    j["truncation"] = {{"modes", r.truncation}, {"max_index_per_dim", r.max_mode}};
    j["coupling_growth_bound_truncated"] = r.coupling_growth_bound;
    return j;
}

json to_json(const AsymptoticsReport& r) {
    return {{"r", r.r},
            {"partial_sums_r2", r.partial_sums},
            {"scaled_deviation", r.scaled_deviation},
            {"derivative_deviation", r.derivative_deviation},
            {"sup_scaled_deviation", r.sup_scaled_deviation},
            {"sup_derivative_deviation", r.sup_derivative_deviation},
            {"max_increment_past_50", r.max_increment_past_50},
            {"slope", r.slope},
            {"slope_from", r.slope_from},
            {"grid_points", r.grid_points}};
}

json to_json(const ReturnTimes& rt) {
    return {{"epsilon_phase", rt.epsilon_phase}, {"J", rt.J}, {"times", rt.times}, {"residuals", rt.residuals}};
}

json to_json(const MomentSolveReport& r, const std::vector<double>& frequencies) {
    return {{"frequencies", frequencies},
            {"residuals", r.residuals},
            {"reg_lambda", r.reg_lambda},
            {"basis_size", r.basis_size},
            {"sigma_max", r.sigma_max},
            {"sigma_min", r.sigma_min},
            {"objective", r.objective},
            {"degraded", r.degraded},
            {"coefficients", std::vector<double>(r.control.coeffs().data(),
                                                 r.control.coeffs().data() + r.control.coeffs().size())}};
}

json to_json(const SynthesisIteration& it) {
    return {{"iteration", it.iteration},
            {"h_residual", it.h_residual},
            {"control_norm_F", it.control_norm},
            {"moment_residual_max", it.moment_residual_max},
            {"cauchy_residual", it.cauchy_residual},
            {"return_time", it.return_time}};
}

json to_json(const DerivativeCheckReport& r) {
    return {{"epsilons", r.epsilons}, {"residuals", r.residuals}, {"slope", r.slope}, {"inconclusive", r.inconclusive}};
}

MomentSystem moment_system_from_json(const json& j) {
    MomentSystem sys;
    try {
        sys.frequencies = j.at("frequencies").get<std::vector<double>>();
        for (const auto& t : j.at("targets")) {
            if (t.is_number()) sys.targets.emplace_back(t.get<double>(), 0.0);
            else sys.targets.emplace_back(t.at(0).get<double>(), t.at(1).get<double>());
        }
        if (j.contains("labels"))
            for (const auto& l : j.at("labels")) {
                std::vector<std::pair<int, int>> pairs;
                for (const auto& p : l) pairs.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
                sys.labels.push_back(std::move(pairs));
            }
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed moment system: ") + e.what());
    }
    sys.validate();
    return sys;
}

json to_json(const MomentSystem& sys) {
    json t = json::array();
    for (const auto& d : sys.targets) t.push_back(to_json(d));
    json j{{"frequencies", sys.frequencies}, {"targets", t}};
    if (!sys.labels.empty()) j["labels"] = sys.labels;
    return j;
}

std::string spectrum_csv(const TensorBasis& basis) {
    std::ostringstream o;
    o << "position,index,lambda";
    for (int i = 0; i < basis.dims(); ++i) o << ",j" << i + 1;
    o << "\n";
    for (int a = 0; a < basis.size(); ++a) {
        const MultiIndex& m = basis.indices()[a];
        o << a + 1 << ",\"" << m.str() << "\"," << format_real(basis.eigenvalues()(a));
        for (int i = 0; i < basis.dims(); ++i) o << "," << m[i];
        o << "\n";
    }
    return o.str();
}

std::string state_csv(const TensorBasis& basis, const State& z) {
    std::ostringstream o;
    o << "position,index,re,im\n";
    for (int a = 0; a < z.size(); ++a)
        o << a + 1 << ",\"" << basis.indices()[a].str() << "\"," << format_real(z[a].real()) << ","
          << format_real(z[a].imag()) << "\n";
    return o.str();
}

std::string trajectory_csv(const Trajectory& traj) {
    std::ostringstream o;
    o << "t";
    const int M = traj.states.empty() ? 0 : traj.states.front().size();
    for (int a = 0; a < M; ++a) o << ",re" << a + 1 << ",im" << a + 1;
    o << ",l2\n";
    for (std::size_t n = 0; n < traj.times.size(); ++n) {
        o << format_real(traj.times[n]);
        for (int a = 0; a < M; ++a)
            o << "," << format_real(traj.states[n][a].real()) << "," << format_real(traj.states[n][a].imag());
        o << "," << format_real(traj.norms[n]) << "\n";
    }
    return o.str();
}

std::string control_csv(const ControlSignal& u) {
    std::ostringstream o;
    o << "coordinate,value\n";
    for (Eigen::Index p = 0; p < u.coeffs().size(); ++p) o << p << "," << format_real(u.coeffs()(p)) << "\n";
    return o.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << content;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError("'" + path + "' is not valid JSON: " + e.what());
    }
}

} // namespace qsteer
