#pragma once

#include "qsteer/control.hpp"
#include "qsteer/spectral.hpp"
#include "qsteer/state.hpp"

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace qsteer {

// Everything a CLI run needs, read from an INI file with one level of
// sections.  Unset keys keep the defaults below.
struct Scenario {
    std::string name = "default";
    std::uint64_t seed = 20240601;

    // [spectrum]
    int dims = 1;
    std::vector<std::string> potentials{"cos(2*pi*x)"};  // one per dimension
    std::string coupling = "x^2";
    std::vector<int> K{20};     // per dimension
    int basis_size = 0;         // 0: 4K per dimension
    int M = 20;                 // tensor truncation
    double tol_eq = -1.0;       // < 0: 1e-9 max|lambda|

    // [state]
    double s = -1.0;            // H^s_(V) order, < 0: 4d
    std::string anchor = "1";   // "p" or "p:c, q:c, ..." with 1-based positions
    std::string target = "random";  // random | anchor | manufactured
    double target_radius = 5e-3;    // H distance of the target from the anchor
    double sigma = 1e-2;

    // [control]
    double beta = 1500.0;
    int s_zero = 4;
    int P = 160;
    double B_weight = 1.0;

    // [evolution]
    double dt = 0.0;            // 0: 2 pi / (40 lambda_max)
    double epsilon_phase = 1e-3;
    int return_J = 0;           // 0: anchor support size
    int return_count = 6;
    double return_T_max = 1e4;
    double tol_cauchy = 1e-8;

    // [synthesis]
    double newton_tol = 1e-5;
    int max_iter = 8;
    double stagnation_ratio = 0.9;

    // [linearize]
    double probe_beta = 20.0;
    int probe_P = 10;
    std::vector<double> epsilons{1e-2, 1e-3, 1e-4};
    double probe_scale = 30.0;

    // Derived helpers.
    double hs_order() const { return s >= 0.0 ? s : 4.0 * dims; }
    void validate() const;
};

Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);
// Canonical text form: every key, fixed order, 17 significant digits.
std::string serialize(const Scenario& sc);

// Objects built from a scenario.
struct ScenarioModel {
    std::shared_ptr<const TensorBasis> basis;
    std::shared_ptr<StateSpace> space;
};

ScenarioModel build_model(const Scenario& sc);
State parse_anchor(const StateSpace& space, const std::string& spec);

ControlBasisPtr synthesis_control_basis(const Scenario& sc);
PropagateOptions propagation_options(const Scenario& sc);
// J defaults to the anchor support size.
ReturnTimes scenario_return_times(const Scenario& sc, const TensorBasis& basis, int support_size);

// The synthesis target named by `sc.target`, drawn from `rng` when random.
State make_target(const Scenario& sc, const LinearizedSetup& setup, const ControlBasisPtr& basis,
                  const ReturnTimes& rt, std::mt19937_64& rng);

} // namespace qsteer
