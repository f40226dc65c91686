#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "subpois/bernstein.hpp"
#include "subpois/validation.hpp"

namespace subpois::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidationFailed = 1;
inline constexpr int kExitUsage = 2;

inline constexpr const char* kEnvPrefix = "SUBPOIS_";

struct RunConfig {
    std::string command;
    std::string family = "gamma";
    double alpha = std::numeric_limits<double>::quiet_NaN();
    double theta = std::numeric_limits<double>::quiet_NaN();
    double rate2 = std::numeric_limits<double>::quiet_NaN();
    double lambda = 1.0;
    double t = 1.0;
    int kmax = 30;
    std::uint64_t samples = 0; // 0: command default
    std::uint64_t seed = 1;
    unsigned workers = 0;      // 0: hardware concurrency
    std::string out;           // empty: stdout
    std::string format = "csv";
    Thresholds thresholds{};

    // Command-specific.
    int k = 1;
    double s = std::numeric_limits<double>::quiet_NaN();
    std::vector<int> sizes;
    std::string method = "path";
    std::uint64_t n = 1;
    std::string suite = "all";
    double u = std::numeric_limits<double>::quiet_NaN();
    double smax = std::numeric_limits<double>::quiet_NaN();
    int points = 50;

    ProcessParams params() const;
};

// Every key accepted on the command line, in a config file, or as SUBPOIS_<KEY>
// (upper case, '-' as '_').
const std::vector<std::string>& known_keys();

// Parses `key=value` lines; '#' starts a comment. Unknown keys throw.
std::map<std::string, std::string> parse_config_text(const std::string& text);

// Merge order, later wins: defaults, config file, environment, flags.
RunConfig build_config(const std::string& command, const std::map<std::string, std::string>& values);

using EnvLookup = std::function<const char*(const char*)>;

// Full command-line entry point; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env);

} // namespace subpois::cli
