#include "qsteer/acceptance.hpp"

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
    qsteer::AcceptanceOptions opt;
    for (int i = 1; i < argc; ++i) opt.only.push_back(std::atoi(argv[i]));
    int failed = 0;
    qsteer::run_acceptance(opt, [&](const qsteer::CriterionResult& r) {
        std::cout << qsteer::format_result_line(r) << std::endl;
        failed += r.pass ? 0 : 1;
    });
    return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
