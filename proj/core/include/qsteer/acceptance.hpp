#pragma once

#include "qsteer/io.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace qsteer {

struct CriterionResult {
    int id = 0;
    std::string title;
    bool pass = false;
    double seconds = 0.0;
    std::string summary;  // one line of the key numbers
    json metrics = json::object();
};

struct AcceptanceOptions {
    std::uint64_t seed = 20240601;
    std::vector<int> only;  // empty: all criteria
};

int acceptance_criterion_count();

CriterionResult run_criterion(int id, std::uint64_t seed);

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options,
                                            const std::function<void(const CriterionResult&)>& on_result = {});

// "PASS  3  title  (0.01 s)  summary"
std::string format_result_line(const CriterionResult& r);

json acceptance_summary(const std::vector<CriterionResult>& results, std::uint64_t seed);

} // namespace qsteer
