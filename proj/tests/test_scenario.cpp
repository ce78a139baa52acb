#include "qsteer/errors.hpp"
#include "qsteer/io.hpp"
#include "qsteer/scenario.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

using namespace qsteer;

TEST(Scenario, DefaultsValidateAndRoundTrip) {
    const Scenario sc = parse_scenario("");
    EXPECT_EQ(sc.dims, 1);
    EXPECT_EQ(sc.hs_order(), 4.0);
    const std::string text = serialize(sc);
    EXPECT_EQ(serialize(parse_scenario(text)), text);
}

TEST(Scenario, ParsesValuesAndBroadcasts) {
    const Scenario sc = parse_scenario(
        "[spectrum]\ndims = 2\nK = 6\npotentials = 0\ncoupling = x1*x2\nM = 12\n"
        "[control]\nbeta = 300\nP = 40\n"
        "[linearize]\nepsilons = 1e-1, 1e-2, 1e-3, 1e-4\n");
    EXPECT_EQ(sc.K, (std::vector<int>{6, 6}));
    EXPECT_EQ(sc.potentials, (std::vector<std::string>{"0", "0"}));
    EXPECT_EQ(sc.hs_order(), 8.0);
    EXPECT_EQ(sc.beta, 300.0);
    EXPECT_EQ(sc.epsilons.size(), 4u);
    const Scenario again = parse_scenario(serialize(sc));
    EXPECT_EQ(again.coupling, "x1*x2");
    EXPECT_EQ(again.K, sc.K);
}

TEST(Scenario, RejectsUnknownKeysAndBadValues) {
    EXPECT_THROW(parse_scenario("[control]\nbeat = 3\n"), InputError);
    EXPECT_THROW(parse_scenario("[control]\nbeta = fast\n"), InputError);
    EXPECT_THROW(parse_scenario("[control]\nbeta = 0.5\n"), ConfigurationError);
    EXPECT_THROW(parse_scenario("[spectrum]\ndims = 4\n"), ConfigurationError);
    EXPECT_THROW(parse_scenario("[spectrum]\ndims = 2\nK = 3, 4, 5\n"), ConfigurationError);
    EXPECT_THROW(parse_scenario("[state]\ntarget = somewhere\n"), ConfigurationError);
    EXPECT_THROW(parse_scenario("[linearize]\nepsilons = 1e-2, 1e-3\n"), ConfigurationError);
    EXPECT_THROW(load_scenario("/nonexistent/scenario.ini"), InputError);
}

TEST(Scenario, AnchorParsing) {
    const ScenarioModel m = build_model(parse_scenario("[spectrum]\nK = 8\nM = 8\n"));
    const State a = parse_anchor(*m.space, "1:3, 2:4");
    EXPECT_NEAR(a[0].real(), 0.6, 1e-15);
    EXPECT_NEAR(a[1].real(), 0.8, 1e-15);
    EXPECT_EQ(parse_anchor(*m.space, "3")[2], cd(1.0));
    EXPECT_THROW(parse_anchor(*m.space, "9"), InputError);
    EXPECT_THROW(parse_anchor(*m.space, ""), InputError);
}

TEST(Scenario, RandomTargetIsDeterministic) {
    const Scenario sc = parse_scenario("[spectrum]\nK = 8\nM = 8\n[control]\nbeta = 400\nP = 40\n");
    const ScenarioModel m = build_model(sc);
    const LinearizedSetup setup = make_linearized_setup(*m.space, parse_anchor(*m.space, sc.anchor));
    const ReturnTimes rt = scenario_return_times(sc, *m.basis, 1);
    std::mt19937_64 r1(sc.seed), r2(sc.seed);
    const auto basis = synthesis_control_basis(sc);
    const State a = make_target(sc, setup, basis, rt, r1);
    const State b = make_target(sc, setup, basis, rt, r2);
    EXPECT_EQ(l2_norm(a - b), 0.0);
    EXPECT_NEAR(l2_norm(a), 1.0, 1e-15);
    EXPECT_NEAR(m.space->h_norm(a - setup.anchor), sc.target_radius, 0.05 * sc.target_radius);
}

TEST(Io, DocumentsAndCsv) {
    const json d = make_document("spectrum");
    EXPECT_EQ(d.at("schema_version").get<int>(), kSchemaVersion);
    EXPECT_EQ(d.at("kind").get<std::string>(), "spectrum");

    const double x = 0.1 + 0.2;
    EXPECT_EQ(std::strtod(format_real(x).c_str(), nullptr), x);

    const ScenarioModel m = build_model(parse_scenario("[spectrum]\nK = 5\nM = 5\n"));
    const std::string csv = spectrum_csv(*m.basis);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "position,index,lambda,j1");
    std::istringstream lines(csv);
    std::string line;
    int rows = 0;
    while (std::getline(lines, line)) ++rows;
    EXPECT_EQ(rows, 6);
}

TEST(Io, MomentSystemRoundTrip) {
    const json j = json::parse(R"({"frequencies": [0, 1.5, 3], "targets": [0.5, [1, -2], [0, 0.25]]})");
    const MomentSystem sys = moment_system_from_json(j);
    ASSERT_EQ(sys.size(), 3);
    EXPECT_EQ(sys.targets[1], cd(1.0, -2.0));
    const MomentSystem again = moment_system_from_json(to_json(sys));
    EXPECT_EQ(again.frequencies, sys.frequencies);
    EXPECT_EQ(again.targets, sys.targets);
    EXPECT_THROW(moment_system_from_json(json::parse(R"({"frequencies": [1, 2], "targets": [1, 1]})")), InputError);
}
