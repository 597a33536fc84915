#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace hyb {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

// Bad arguments or unreadable inputs; maps to exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string subcommand;
    // run-protocol
    std::string protocol;
    int n = 1;
    std::uint64_t seed = 0;
    bool exhaustive = false;
    std::string forced;   // "label=value,label=value"
    std::string input;    // gate input: 0, 1, +, - or comma-separated amplitudes
    std::string variant = "A";
    std::string theta = "1";
    std::string coeffs = "0.6,0.48i,0.64";
    // verify
    std::vector<std::string> fixtures;
    // cross-check
    std::vector<std::string> fragments;
    int rows = 1;
    std::uint64_t cap = 0;  // 0: default cap
    // syndrome-table / anyons
    std::string group = "D4";
    std::string probe = "both";
    std::string csv;
    std::string fixture;  // default fixture for syndrome-table / anyons; empty disables
    // common
    int jobs = 1;
    std::string dump_state;

    nlohmann::json to_json() const;
};

// Reports carry schema_version, tool, config, checks[] and status; exit code mirrors status.
nlohmann::json run_protocol_report(const RunConfig& cfg);
nlohmann::json verify_report(const RunConfig& cfg);
nlohmann::json cross_check_report(const RunConfig& cfg);
nlohmann::json syndrome_table_report(const RunConfig& cfg);
nlohmann::json anyons_report(const RunConfig& cfg);
nlohmann::json run_report(const RunConfig& cfg);  // dispatch on cfg.subcommand

int exit_code(const nlohmann::json& report);  // 0 pass, 1 check failure, 2 refused / usage

std::vector<std::string> protocol_names();
std::string default_fixture_dir();  // HYB_FIXTURE_DIR env var, else the source tree

}  // namespace hyb
