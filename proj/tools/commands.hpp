#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qlitho::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kValidation = 2,
    kComputation = 3,
    kVerification = 4,
};

struct SuiteResult {
    std::string name;
    bool pass = false;
    double max_deviation = 0.0;
    std::string detail;
};

const std::vector<std::string>& suite_names();

// Runs one named suite, or every suite for "all". Unknown names throw
// std::invalid_argument.
std::vector<SuiteResult> run_suite(const std::string& name);

std::string format_suite_line(const SuiteResult& r);

// Entry point shared by the executable and the tests; args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qlitho::cli
