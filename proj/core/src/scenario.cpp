#include "qsteer/scenario.hpp"

#include "qsteer/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace qsteer {

namespace pt = boost::property_tree;

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    return out;
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

template <class T>
T convert(const std::string& key, const std::string& raw) {
    std::istringstream in(raw);
    T v{};
    in >> v;
    if (in.fail() || !(in >> std::ws).eof())
        throw InputError("scenario key '" + key + "' has an invalid value '" + raw + "'");
    return v;
}

class Reader {
public:
    explicit Reader(const pt::ptree& tree) : tree_(tree) {}

    template <class T>
    void get(const std::string& key, T& out) const {
        if (auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'))) {
            if constexpr (std::is_same_v<T, std::string>) out = trim(*v);
            else out = convert<T>(key, trim(*v));
        }
    }

    template <class T>
    void get_list(const std::string& key, std::vector<T>& out) const {
        if (auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'))) {
            out.clear();
            for (const auto& item : split(*v, ','))
                if constexpr (std::is_same_v<T, std::string>) out.push_back(item);
                else out.push_back(convert<T>(key, item));
        }
    }

private:
    const pt::ptree& tree_;
};

const char* known_keys[] = {
    "scenario.name",        "scenario.seed",          "spectrum.dims",         "spectrum.potentials",
    "spectrum.coupling",    "spectrum.K",             "spectrum.basis_size",   "spectrum.M",
    "spectrum.tol_eq",      "state.s",                "state.anchor",          "state.target",
    "state.target_radius",  "state.sigma",            "control.beta",          "control.s_zero",
    "control.P",            "control.B_weight",       "evolution.dt",          "evolution.epsilon_phase",
    "evolution.return_J",   "evolution.return_count", "evolution.return_T_max", "evolution.tol_cauchy",
    "synthesis.newton_tol", "synthesis.max_iter",     "synthesis.stagnation_ratio", "linearize.probe_beta",
    "linearize.probe_P",    "linearize.epsilons",     "linearize.probe_scale",
};

void reject_unknown(const pt::ptree& tree) {
    for (const auto& [section, body] : tree) {
        for (const auto& [key, value] : body) {
            const std::string full = section + "." + key;
            bool ok = false;
            for (const char* k : known_keys) ok = ok || full == k;
            if (!ok) throw InputError("unknown scenario key '" + full + "'");
        }
        if (body.empty() && !body.data().empty()) throw InputError("scenario key '" + section + "' has no section");
    }
}

} // namespace

void Scenario::validate() const {
    if (dims < 1 || dims > 3) throw ConfigurationError("dims must be 1, 2 or 3");
    if (static_cast<int>(potentials.size()) != dims)
        throw ConfigurationError("need one potential per dimension");
    if (static_cast<int>(K.size()) != dims) throw ConfigurationError("need one K per dimension");
    for (int k : K)
        if (k < 1) throw ConfigurationError("truncations K must be positive");
    if (M < 1 || basis_size < 0 || P < 1 || probe_P < 1) throw ConfigurationError("truncations must be positive");
    if (!(beta > B_weight)) throw ConfigurationError("beta must exceed B_weight");
    if (!(probe_beta > B_weight)) throw ConfigurationError("probe_beta must exceed B_weight");
    if (s_zero < 1) throw ConfigurationError("s_zero must be at least 1");
    if (!(epsilon_phase > 0.0) || !(tol_cauchy > 0.0) || !(newton_tol > 0.0) || !(sigma > 0.0))
        throw ConfigurationError("tolerances must be positive");
    if (max_iter < 0 || return_count < 1 || return_J < 0) throw ConfigurationError("iteration counts out of range");
    if (target != "random" && target != "anchor" && target != "manufactured")
        throw ConfigurationError("target must be random, anchor or manufactured");
    if (epsilons.size() < 3) throw ConfigurationError("linearize.epsilons needs at least three values");
}

Scenario parse_scenario(const std::string& text) {
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw InputError(std::string("scenario parse error: ") + e.what());
    }
    reject_unknown(tree);
    const Reader r(tree);
    Scenario sc;
    r.get("scenario.name", sc.name);
    r.get("scenario.seed", sc.seed);
    r.get("spectrum.dims", sc.dims);
    r.get_list("spectrum.potentials", sc.potentials);
    r.get("spectrum.coupling", sc.coupling);
    r.get_list("spectrum.K", sc.K);
    r.get("spectrum.basis_size", sc.basis_size);
    r.get("spectrum.M", sc.M);
    r.get("spectrum.tol_eq", sc.tol_eq);
    r.get("state.s", sc.s);
    r.get("state.anchor", sc.anchor);
    r.get("state.target", sc.target);
    r.get("state.target_radius", sc.target_radius);
    r.get("state.sigma", sc.sigma);
    r.get("control.beta", sc.beta);
    r.get("control.s_zero", sc.s_zero);
    r.get("control.P", sc.P);
    r.get("control.B_weight", sc.B_weight);
    r.get("evolution.dt", sc.dt);
    r.get("evolution.epsilon_phase", sc.epsilon_phase);
    r.get("evolution.return_J", sc.return_J);
    r.get("evolution.return_count", sc.return_count);
    r.get("evolution.return_T_max", sc.return_T_max);
    r.get("evolution.tol_cauchy", sc.tol_cauchy);
    r.get("synthesis.newton_tol", sc.newton_tol);
    r.get("synthesis.max_iter", sc.max_iter);
    r.get("synthesis.stagnation_ratio", sc.stagnation_ratio);
    r.get("linearize.probe_beta", sc.probe_beta);
    r.get("linearize.probe_P", sc.probe_P);
    r.get_list("linearize.epsilons", sc.epsilons);
    r.get("linearize.probe_scale", sc.probe_scale);
    // A single K or potential is broadcast to every dimension.
    if (sc.K.size() == 1 && sc.dims > 1) sc.K.assign(sc.dims, sc.K.front());
    if (sc.potentials.size() == 1 && sc.dims > 1) sc.potentials.assign(sc.dims, sc.potentials.front());
    sc.validate();
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open scenario file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::string serialize(const Scenario& sc) {
    std::ostringstream o;
    auto join = [](const auto& v, auto f) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + f(v[i]);
        return s;
    };
    auto istr = [](int x) { return std::to_string(x); };
    auto sstr = [](const std::string& x) { return x; };
    o << "[scenario]\n"
      << "name = " << sc.name << "\n"
      << "seed = " << sc.seed << "\n\n"
      << "[spectrum]\n"
      << "dims = " << sc.dims << "\n"
      << "potentials = " << join(sc.potentials, sstr) << "\n"
      << "coupling = " << sc.coupling << "\n"
      << "K = " << join(sc.K, istr) << "\n"
      << "basis_size = " << sc.basis_size << "\n"
      << "M = " << sc.M << "\n"
      << "tol_eq = " << fmt(sc.tol_eq) << "\n\n"
      << "[state]\n"
      << "s = " << fmt(sc.s) << "\n"
      << "anchor = " << sc.anchor << "\n"
      << "target = " << sc.target << "\n"
      << "target_radius = " << fmt(sc.target_radius) << "\n"
      << "sigma = " << fmt(sc.sigma) << "\n\n"
      << "[control]\n"
      << "beta = " << fmt(sc.beta) << "\n"
      << "s_zero = " << sc.s_zero << "\n"
      << "P = " << sc.P << "\n"
      << "B_weight = " << fmt(sc.B_weight) << "\n\n"
      << "[evolution]\n"
      << "dt = " << fmt(sc.dt) << "\n"
      << "epsilon_phase = " << fmt(sc.epsilon_phase) << "\n"
      << "return_J = " << sc.return_J << "\n"
      << "return_count = " << sc.return_count << "\n"
      << "return_T_max = " << fmt(sc.return_T_max) << "\n"
      << "tol_cauchy = " << fmt(sc.tol_cauchy) << "\n\n"
      << "[synthesis]\n"
      << "newton_tol = " << fmt(sc.newton_tol) << "\n"
      << "max_iter = " << sc.max_iter << "\n"
      << "stagnation_ratio = " << fmt(sc.stagnation_ratio) << "\n\n"
      << "[linearize]\n"
      << "probe_beta = " << fmt(sc.probe_beta) << "\n"
      << "probe_P = " << sc.probe_P << "\n"
      << "epsilons = " << join(sc.epsilons, fmt) << "\n"
      << "probe_scale = " << fmt(sc.probe_scale) << "\n";
    return o.str();
}

ScenarioModel build_model(const Scenario& sc) {
    sc.validate();
    std::vector<SpectralBasis1D> bases;
    for (int i = 0; i < sc.dims; ++i) {
        const Potential1D V = sc.potentials[i].empty() ? Potential1D() : Potential1D(sc.potentials[i]);
        bases.push_back(solve_eigens_1d(V, sc.K[i], sc.basis_size));
    }
    std::optional<ScalarField> Q;
    if (!sc.coupling.empty()) Q = ScalarField::from_expression(sc.coupling);
    ScenarioModel m;
    m.basis = std::make_shared<const TensorBasis>(assemble_tensor_basis(std::move(bases), sc.M, Q));
    m.space = std::make_shared<StateSpace>(m.basis, sc.hs_order());
    return m;
}

State parse_anchor(const StateSpace& space, const std::string& spec) {
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(space.size());
    for (const auto& item : split(spec, ',')) {
        if (item.empty()) continue;
        const auto colon = item.find(':');
        const std::string pos = trim(item.substr(0, colon));
        const double w = colon == std::string::npos ? 1.0 : convert<double>("state.anchor", trim(item.substr(colon + 1)));
        const int p = convert<int>("state.anchor", pos);
        if (p < 1 || p > space.size())
            throw InputError("anchor position " + pos + " is outside the truncation 1.." + std::to_string(space.size()));
        c(p - 1) += w;
    }
    const double n = c.norm();
    if (!(n > 0.0)) throw InputError("anchor '" + spec + "' is empty");
    return space.make(c / n);
}

ControlBasisPtr synthesis_control_basis(const Scenario& sc) {
    return make_control_basis(sc.beta, sc.s_zero, sc.P, sc.B_weight);
}

PropagateOptions propagation_options(const Scenario& sc) {
    PropagateOptions opt;
    opt.dt = sc.dt;
    opt.record = false;
    return opt;
}

ReturnTimes scenario_return_times(const Scenario& sc, const TensorBasis& basis, int support_size) {
    const int J = sc.return_J > 0 ? sc.return_J : support_size;
    const Eigen::VectorXd& lam = basis.eigenvalues();
    return return_times(std::span<const double>(lam.data(), static_cast<std::size_t>(lam.size())), J,
                        sc.epsilon_phase, sc.return_T_max, sc.return_count);
}

State make_target(const Scenario& sc, const LinearizedSetup& setup, const ControlBasisPtr& basis,
                  const ReturnTimes& rt, std::mt19937_64& rng) {
    const StateSpace& sp = setup.space;
    std::normal_distribution<double> g;
    if (sc.target == "anchor") return setup.anchor;
    if (sc.target == "manufactured") {
        Eigen::VectorXd c(basis->P());
        for (int p = 0; p < basis->P(); ++p) c(p) = g(rng);
        ControlSignal hidden(basis, c);
        const double lin = sp.h_norm(linearized_response_infinite(setup, hidden));
        if (!(lin > 0.0)) throw NumericalError("manufactured control has no linear response");
        hidden *= sc.target_radius / lin;
        return infinite_time_state(sp.basis(), setup.anchor, hidden, rt, sc.tol_cauchy, propagation_options(sc)).limit;
    }
    Eigen::VectorXcd c(sp.size());
    for (int a = 0; a < sp.size(); ++a)
        c(a) = cd(g(rng), g(rng)) / static_cast<double>(sp.basis().indices()[a].cube_weight());
    State dz = project_tangent(sp.make(c), setup.anchor);
    dz *= sc.target_radius / sp.h_norm(dz);
    State z1 = setup.anchor + dz;
    z1 *= 1.0 / l2_norm(z1);
    return z1;
}

} // namespace qsteer
