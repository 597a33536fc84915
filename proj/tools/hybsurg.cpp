#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "hyb/cli.hpp"
#include "hyb/lattice.hpp"
#include "hyb/protocols.hpp"

namespace {

void add_common(CLI::App* sub, hyb::RunConfig& cfg, std::string& output) {
    sub->add_option("--jobs", cfg.jobs, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("-o,--output", output, "Write the JSON report here instead of stdout");
    sub->add_option("--dump-state", cfg.dump_state, "Write raw state buffers with this path prefix");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid lattice surgery simulator and verifier"};
    app.require_subcommand(1);
    app.set_version_flag("--version", hyb::kToolVersion);
    hyb::RunConfig cfg;
    std::string output;

    auto* run = app.add_subcommand("run-protocol", "Run a surgery protocol at the logical level");
    run->add_option("protocol", cfg.protocol, "Protocol name")->required()->check(CLI::IsMember(hyb::protocol_names()));
    run->add_option("--n", cfg.n, "Hierarchy parameter n");
    run->add_option("--seed", cfg.seed, "Seed for sampled outcomes");
    run->add_flag("--exhaustive", cfg.exhaustive, "Enumerate every outcome branch");
    run->add_option("--forced", cfg.forced, "Outcome record, label=value,...");
    run->add_option("--input", cfg.input, "Gate input: 0, 1, +, - or comma-separated amplitudes");
    run->add_option("--variant", cfg.variant, "T-gate variant A or B")->check(CLI::IsMember({"A", "B"}));
    run->add_option("--theta", cfg.theta, "Qutrit phase theta (1, -1, i, ...)");
    run->add_option("--coeffs", cfg.coeffs, "Qutrit input coefficients");
    add_common(run, cfg, output);

    auto* ver = app.add_subcommand("verify", "Check fixture files line by line");
    ver->add_option("fixtures", cfg.fixtures, "Fixture files")->required();
    add_common(ver, cfg, output);

    auto* cc = app.add_subcommand("cross-check", "Compare lattice merge/split with the logical model");
    cc->add_option("--fragment", cfg.fragments, "Fragment name (repeatable; default all)");
    cc->add_option("--rows", cfg.rows, "Plaquette rows")->check(CLI::PositiveNumber);
    cc->add_option("--seed", cfg.seed, "Seed of the random logical input");
    cc->add_option("--cap-amplitudes", cfg.cap, "Largest state vector allowed (default: HYB_CAP_AMPLITUDES or 2^24)");
    add_common(cc, cfg, output);

    auto* st = app.add_subcommand("syndrome-table", "Single-edge errors on the minimal D4 patch");
    st->add_option("--probe", cfg.probe, "vertical, horizontal or both")->check(CLI::IsMember({"vertical", "horizontal", "both"}));
    st->add_option("--csv", cfg.csv, "Also write the table as CSV");
    st->add_option("--fixture", cfg.fixture, "Expected table (default: bundled; 'none' to skip)");
    add_common(st, cfg, output);

    auto* an = app.add_subcommand("anyons", "Anyon data of a quantum double");
    an->add_option("--group", cfg.group, "Group descriptor, e.g. D4, S3, Z2 x Z2");
    an->add_option("--fixture", cfg.fixture, "Expected anyon table (default: bundled if present; 'none' to skip)");
    add_common(an, cfg, output);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    for (auto* sub : app.get_subcommands()) cfg.subcommand = sub->get_name();

    nlohmann::json report;
    try {
        hyb::set_lattice_threads(cfg.jobs);
        report = hyb::run_report(cfg);
    } catch (const hyb::UsageError& e) {
        std::cerr << "hybsurg: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "hybsurg: " << e.what() << "\n";
        return 1;
    }

    std::string text = report.dump(2) + "\n";
    if (output.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(output);
        if (!out) {
            std::cerr << "hybsurg: cannot write " << output << "\n";
            return 2;
        }
        out << text;
    }
    int rc = hyb::exit_code(report);
    if (rc != 0) std::cerr << "hybsurg: status " << report["status"].get<std::string>() << "\n";
    return rc;
}
