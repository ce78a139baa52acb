#pragma once

#include "qsteer/control.hpp"
#include "qsteer/evolution.hpp"
#include "qsteer/moment.hpp"
#include "qsteer/spectral.hpp"
#include "qsteer/state.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace qsteer {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// %.17g
std::string format_real(double x);

// {"schema_version": ..., "kind": kind} to be filled by the caller.
json make_document(const std::string& kind);

json to_json(const ResonanceWitness& w);
json to_json(const ConditionReport& r);
json to_json(const AsymptoticsReport& r);
json to_json(const ReturnTimes& rt);
json to_json(const MomentSolveReport& r, const std::vector<double>& frequencies);
json to_json(const SynthesisIteration& it);
json to_json(const DerivativeCheckReport& r);
json to_json(const std::complex<double>& c);  // [re, im]

MomentSystem moment_system_from_json(const json& j);
json to_json(const MomentSystem& sys);

// CSV tables with a header row.
std::string spectrum_csv(const TensorBasis& basis);
std::string state_csv(const TensorBasis& basis, const State& z);
std::string trajectory_csv(const Trajectory& traj);
std::string control_csv(const ControlSignal& u);

void write_file(const std::string& path, const std::string& content);
json read_json_file(const std::string& path);

} // namespace qsteer
