#include "qsteer/acceptance.hpp"
#include "qsteer/errors.hpp"
#include "qsteer/io.hpp"
#include "qsteer/scenario.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <random>

namespace fs = std::filesystem;
using namespace qsteer;

namespace {

struct Context {
    Scenario sc;
    fs::path out;
    bool quiet = false;
    std::vector<std::string> written;

    void emit(const std::string& name, const std::string& content) {
        write_file((out / name).string(), content);
        written.push_back(name);
    }
    void emit_json(const std::string& name, const json& j) { emit(name, j.dump(2) + "\n"); }
    void say(const std::string& line) const {
        if (!quiet) std::cout << line << "\n";
    }
    json header(const std::string& kind) const {
        json d = make_document(kind);
        d["scenario"] = sc.name;
        d["seed"] = sc.seed;
        return d;
    }
};

void cmd_spectrum(Context& ctx) {
    const ScenarioModel m = build_model(ctx.sc);
    ctx.emit("spectrum.csv", spectrum_csv(*m.basis));
    json doc = ctx.header("spectrum");
    doc["modes"] = m.basis->size();
    json dims = json::array();
    for (int i = 0; i < m.basis->dims(); ++i) {
        const SpectralBasis1D& b = m.basis->per_dim()[i];
        json d{{"potential", b.potential.source()}, {"K", b.K()}, {"basis_size", b.basis_size()},
               {"eigenvalues", std::vector<double>(b.eigenvalues.data(), b.eigenvalues.data() + b.K())}};
        if (b.K() >= 10) d["asymptotics"] = to_json(verify_asymptotics(b, b.potential));
        else d["asymptotics"] = nullptr;
        dims.push_back(d);
    }
    doc["per_dim"] = dims;
    doc["quadrature_change"] = m.basis->quadrature_change();
    ctx.emit_json("spectrum.json", doc);
    ctx.say("spectrum: " + std::to_string(m.basis->size()) + " modes, lambda_1 = " +
            format_real(m.basis->eigenvalues()(0)));
}

void cmd_audit(Context& ctx) {
    const ScenarioModel m = build_model(ctx.sc);
    const ConditionReport rep = audit_conditions(*m.basis, ctx.sc.tol_eq);
    json doc = ctx.header("audit");
    doc["report"] = to_json(rep);
    ctx.emit_json("audit.json", doc);
    std::string line = std::string("audit: cond (ii) ") + (rep.cond_ii_ok ? "holds" : "violated");
    if (rep.cond_ii_witness) {
        const auto& w = *rep.cond_ii_witness;
        line += " with witness (" + std::to_string(w.i) + "," + std::to_string(w.j) + "," + std::to_string(w.p) +
                "," + std::to_string(w.q) + ")";
    }
    ctx.say(line + ", cond (i) truncated inf = " + format_real(rep.cond_i_inf));
}

void cmd_gaps(Context& ctx) {
    const std::vector<int> Ms{50, 100, 200, 500};
    std::string csv = "dims,potential,M,min_gap\n";
    json rows = json::array();
    for (int d = 1; d <= 3; ++d) {
        const int K = d == 1 ? Ms.back() : d == 2 ? 32 : 14;
        for (const std::string& pot : {std::string("0"), ctx.sc.potentials.front()}) {
            std::vector<SpectralBasis1D> bases(d, solve_eigens_1d(Potential1D(pot), K, 2 * K));
            const TensorBasis tb = assemble_tensor_basis(bases, Ms.back(), std::nullopt);
            for (int M : Ms) {
                const double g = min_frequency_gap(tb.eigenvalues().head(M));
                csv += std::to_string(d) + ",\"" + pot + "\"," + std::to_string(M) + "," + format_real(g) + "\n";
                rows.push_back({{"dims", d}, {"potential", pot}, {"M", M}, {"min_gap", g}});
            }
        }
    }
    ctx.emit("gaps.csv", csv);
    json doc = ctx.header("gaps");
    doc["rows"] = rows;
    ctx.emit_json("gaps.json", doc);
    ctx.say("gaps: " + std::to_string(rows.size()) + " rows written");
}

void cmd_returns(Context& ctx) {
    const ScenarioModel m = build_model(ctx.sc);
    const State anchor = parse_anchor(*m.space, ctx.sc.anchor);
    const auto cls = classify_special(anchor, m.basis->coupling());
    const ReturnTimes rt = scenario_return_times(ctx.sc, *m.basis, static_cast<int>(cls.support.size()));
    json doc = ctx.header("return_times");
    doc["return_times"] = to_json(rt);
    ctx.emit_json("returns.json", doc);
    ctx.say("returns: " + std::to_string(rt.times.size()) + " times for J = " + std::to_string(rt.J));
}

void cmd_moments(Context& ctx, const std::string& system_path) {
    if (system_path.empty()) throw InputError("moments needs --system <file.json>");
    const MomentSystem sys = moment_system_from_json(read_json_file(system_path));
    const MomentSolveReport rep = solve_moments(sys, synthesis_control_basis(ctx.sc));
    json doc = ctx.header("moments");
    doc["system"] = to_json(sys);
    doc["report"] = to_json(rep, sys.frequencies);
    ctx.emit_json("moments.json", doc);
    ctx.emit("control.csv", control_csv(rep.control));
    ctx.say("moments: max residual " +
            format_real(*std::max_element(rep.residuals.begin(), rep.residuals.end())) +
            (rep.degraded ? " (degraded)" : ""));
}

void cmd_linearize(Context& ctx) {
    const ScenarioModel m = build_model(ctx.sc);
    const LinearizedSetup setup = make_linearized_setup(*m.space, parse_anchor(*m.space, ctx.sc.anchor));
    std::mt19937_64 rng(ctx.sc.seed);
    std::normal_distribution<double> g;

    Eigen::VectorXcd c(m.space->size());
    for (int a = 0; a < m.space->size(); ++a)
        c(a) = cd(g(rng), g(rng)) / static_cast<double>(m.basis->indices()[a].cube_weight());
    const State y = project_tangent(m.space->make(c), setup.anchor);
    MomentSolveReport mrep;
    const RightInverse A(setup, synthesis_control_basis(ctx.sc));
    const ControlSignal u = A.apply(y, &mrep);
    const State back = linearized_response_infinite(setup, u);

    const ControlBasisPtr vb = make_control_basis(ctx.sc.probe_beta, ctx.sc.s_zero, ctx.sc.probe_P, ctx.sc.B_weight);
    Eigen::VectorXd vc(vb->P());
    for (int p = 0; p < vb->P(); ++p) vc(p) = g(rng);
    const ControlSignal v(vb, vc);
    const ControlSignal zero(vb);
    const DerivativeCheckReport dc =
        derivative_check(setup, zero, ctx.sc.probe_scale * v, ctx.sc.epsilons, propagation_options(ctx.sc));

    json doc = ctx.header("linearize");
    doc["anchor_support"] = setup.support;
    doc["right_inverse"] = {{"target_h_norm", m.space->h_norm(y)},
                            {"relative_h_error", m.space->h_norm(back - y) / m.space->h_norm(y)},
                            {"frequencies", A.frequencies().size()},
                            {"moment", to_json(mrep, A.frequencies())}};
    doc["derivative_check"] = to_json(dc);
    ctx.emit_json("linearize.json", doc);
    ctx.emit("response.csv", state_csv(*m.basis, back));
    ctx.say("linearize: right-inverse relative H error " +
            format_real(m.space->h_norm(back - y) / m.space->h_norm(y)) + ", derivative slope " +
            format_real(dc.slope));
}

void cmd_synthesize(Context& ctx) {
    const ScenarioModel m = build_model(ctx.sc);
    const LinearizedSetup setup = make_linearized_setup(*m.space, parse_anchor(*m.space, ctx.sc.anchor));
    const ControlBasisPtr basis = synthesis_control_basis(ctx.sc);
    const ReturnTimes rt = scenario_return_times(ctx.sc, *m.basis, static_cast<int>(setup.support.size()));
    std::mt19937_64 rng(ctx.sc.seed);
    const State z1 = make_target(ctx.sc, setup, basis, rt, rng);

    SynthesisOptions opt;
    opt.max_iter = ctx.sc.max_iter;
    opt.tol = ctx.sc.newton_tol;
    opt.sigma = ctx.sc.sigma;
    opt.tol_cauchy = ctx.sc.tol_cauchy;
    opt.stagnation_ratio = ctx.sc.stagnation_ratio;
    opt.propagation = propagation_options(ctx.sc);
    ctx.emit("target.csv", state_csv(*m.basis, z1));
    const SynthesisResult res = synthesize(setup, z1, rt, basis, opt);

    json doc = ctx.header("synthesis");
    json log = json::array();
    for (const auto& it : res.log) log.push_back(to_json(it));
    doc["log"] = log;
    doc["target"] = ctx.sc.target;
    doc["target_distance_h"] = m.space->h_norm(z1 - setup.anchor);
    doc["target_tail_norm_h"] = res.target_tail_norm;
    doc["final_h_residual"] = m.space->h_norm(res.limit.limit - z1);
    doc["return_time"] = res.limit.time;
    doc["lab_phase_residual"] = res.limit.phase_residual;
    ctx.emit_json("synthesis.json", doc);
    ctx.emit("control.csv", control_csv(res.control));
    ctx.emit("final_state.csv", state_csv(*m.basis, res.limit.limit));
    ctx.say("synthesize: converged in " + std::to_string(res.log.back().iteration) + " iterations, H residual " +
            format_real(res.log.back().h_residual));
}

int cmd_verify(Context& ctx) {
    AcceptanceOptions opt;
    opt.seed = ctx.sc.seed;
    const auto results = run_acceptance(opt, [&](const CriterionResult& r) { ctx.say(format_result_line(r)); });
    ctx.emit_json("acceptance.json", acceptance_summary(results, ctx.sc.seed));
    int passed = 0;
    for (const auto& r : results) passed += r.pass ? 1 : 0;
    ctx.say("verify: " + std::to_string(passed) + "/" + std::to_string(results.size()) + " criteria passed");
    return passed == static_cast<int>(results.size()) ? 0 : 1;
}

int report_error(Context& ctx, const std::string& command, const std::string& category, const std::string& kind,
                 const std::string& message, int code) {
    json doc = make_document("error");
    doc["command"] = command;
    doc["category"] = category;
    doc["error"] = kind;
    doc["message"] = message;
    doc["stale_artifacts"] = ctx.written;
    std::cerr << doc.dump() << "\n";
    try {
        if (!ctx.out.empty()) write_file((ctx.out / "error.json").string(), doc.dump(2) + "\n");
    } catch (const std::exception&) {
    }
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"qsteer: bilinear Schroedinger controllability at finite truncation"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir = ".", system_path;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
    app.add_option("--scenario", scenario_path, "scenario INI file (built-in defaults when omitted)");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "override the scenario seed");
    app.add_flag("--quiet", quiet, "suppress progress output");

    const std::vector<std::pair<std::string, std::string>> commands{
        {"spectrum", "eigen tables and asymptotics report"},
        {"audit", "condition (i)/(ii) report"},
        {"gaps", "min frequency gap versus truncation, d = 1..3"},
        {"returns", "near-return times"},
        {"moments", "solve a moment system file"},
        {"linearize", "right inverse residual and derivative check"},
        {"synthesize", "chord-Newton synthesis"},
        {"verify", "run the acceptance suite"},
        {"config", "print the canonical scenario"},
    };
    std::map<std::string, CLI::App*> sub;
    for (const auto& [name, help] : commands) sub[name] = app.add_subcommand(name, help);
    sub["moments"]->add_option("--system", system_path, "moment system JSON")->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    Context ctx;
    ctx.quiet = quiet;
    std::string command;
    for (const auto& [name, s] : sub)
        if (s->parsed()) command = name;
    try {
        ctx.sc = scenario_path.empty() ? parse_scenario("") : load_scenario(scenario_path);
        if (seed) ctx.sc.seed = *seed;
        ctx.out = out_dir;
        fs::create_directories(ctx.out);

        if (command == "spectrum") cmd_spectrum(ctx);
        else if (command == "audit") cmd_audit(ctx);
        else if (command == "gaps") cmd_gaps(ctx);
        else if (command == "returns") cmd_returns(ctx);
        else if (command == "moments") cmd_moments(ctx, system_path);
        else if (command == "linearize") cmd_linearize(ctx);
        else if (command == "synthesize") cmd_synthesize(ctx);
        else if (command == "verify") return cmd_verify(ctx);
        else if (command == "config") std::cout << serialize(ctx.sc);
        return 0;
    } catch (const Error& e) {
        const bool validation = e.category() == ErrorCategory::Validation;
        return report_error(ctx, command, validation ? "validation" : "numerical", e.kind(), e.what(),
                            validation ? 2 : 3);
    } catch (const fs::filesystem_error& e) {
        return report_error(ctx, command, "validation", "io", e.what(), 2);
    } catch (const std::exception& e) {
        return report_error(ctx, command, "numerical", "internal", e.what(), 3);
    }
}
