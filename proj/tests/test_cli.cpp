#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "hyb/cli.hpp"

using namespace hyb;

namespace {

const std::string kFixtures = HYB_FIXTURE_DIR;

RunConfig config(const std::string& sub) {
    RunConfig c;
    c.subcommand = sub;
    return c;
}

const nlohmann::json* find_check(const nlohmann::json& rep, const std::string& name) {
    for (const auto& c : rep["checks"])
        if (c["name"] == name) return &c;
    return nullptr;
}

int run_binary(const std::string& args) {
    std::string cmd = std::string(HYBSURG_EXE) + " " + args + " > /dev/null 2>&1";
    int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "hybsurg-test";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

}  // namespace

TEST(RunProtocol, TMagicExhaustivePasses) {
    auto c = config("run-protocol");
    c.protocol = "t-magic";
    c.exhaustive = true;
    auto rep = run_report(c);
    EXPECT_EQ(rep["status"], "pass");
    EXPECT_EQ(rep["schema_version"], kReportSchemaVersion);
    ASSERT_NE(find_check(rep, "all-branches"), nullptr);
    EXPECT_GE((*find_check(rep, "all-branches"))["payload"]["min_fidelity"].get<double>(), 1.0 - 1e-9);
    EXPECT_EQ(rep["clifford_level"], 3);
}

TEST(RunProtocol, TGateOnBasisInput) {
    auto c = config("run-protocol");
    c.protocol = "t-gate";
    c.input = "0";
    auto rep = run_report(c);
    EXPECT_EQ(rep["status"], "pass") << rep.dump(2);
    ASSERT_NE(find_check(rep, "input-output"), nullptr);
}

TEST(RunProtocol, GateInputOnEveryBranch) {
    auto c = config("run-protocol");
    c.protocol = "two-qubit-gate";
    c.exhaustive = true;
    c.input = "0.5,0.5i,-0.5,0.5";
    auto rep = run_report(c);
    EXPECT_EQ(rep["status"], "pass");
    EXPECT_EQ((*find_check(rep, "input-output"))["payload"]["branches"].size(), 32u);
}

TEST(RunProtocol, SameConfigSameReport) {
    auto c = config("run-protocol");
    c.protocol = "t-magic";
    c.seed = 7;
    auto a = run_report(c), b = run_report(c);
    a.erase("generated_at");
    b.erase("generated_at");
    EXPECT_EQ(a.dump(), b.dump());
    c.seed = 8;
    auto d = run_report(c);
    d.erase("generated_at");
    EXPECT_EQ(d["config"]["seed"], 8);
}

TEST(RunProtocol, UsageErrors) {
    auto c = config("run-protocol");
    c.protocol = "nope";
    EXPECT_THROW(run_report(c), UsageError);
    c.protocol = "s-teleport";
    c.forced = "m_XX=0,bogus=1";
    EXPECT_THROW(run_report(c), UsageError);
    c.forced = "m_XX";
    EXPECT_THROW(run_report(c), UsageError);
    c.forced.clear();
    c.input = "0";
    EXPECT_THROW(run_report(c), UsageError);
}

TEST(Verify, BundledFixturesPass) {
    auto c = config("verify");
    c.fixtures = {kFixtures + "/anyons-d4.fixture", kFixtures + "/folded-lagrangians.fixture",
                  kFixtures + "/condensable-algebras.fixture", kFixtures + "/syndromes-d4.fixture"};
    c.jobs = 4;
    auto rep = run_report(c);
    EXPECT_EQ(rep["status"], "pass") << rep.dump(2);
    EXPECT_EQ(rep["fixtures"].size(), 4u);
    int anyon_rows = 0;
    for (const auto& ch : rep["checks"])
        if (ch["name"].get<std::string>().rfind("anyons-d4:", 0) == 0 && ch["name"] != "anyons-d4:row-count") ++anyon_rows;
    EXPECT_EQ(anyon_rows, 22);
}

TEST(Verify, CorruptedLineIsNamed) {
    auto path = temp_path("anyons-d4.fixture");
    {
        std::ifstream in(kFixtures + "/anyons-d4.fixture");
        std::ofstream out(path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.rfind("([r],i)", 0) == 0) line = "([r],i)      | s_RGB    | 2 | -i";
            out << line << "\n";
        }
    }
    auto c = config("verify");
    c.fixtures = {path};
    auto rep = run_report(c);
    EXPECT_EQ(rep["status"], "fail");
    EXPECT_EQ(exit_code(rep), 1);
    int failed = 0;
    for (const auto& ch : rep["checks"])
        if (ch["status"] == "fail") {
            ++failed;
            EXPECT_EQ(ch["name"], "anyons-d4:13");
        }
    EXPECT_EQ(failed, 1);
    EXPECT_EQ(run_binary("verify " + path), 1);
    std::filesystem::remove(path);
}

TEST(Verify, ParseErrorCarriesLineNumber) {
    auto path = temp_path("folded.fixture");
    {
        std::ofstream out(path);
        out << "# header\n\nbad ; Z2 ; Z2 ; 1 (+) q qbar ; 1\n";
    }
    auto c = config("verify");
    c.fixtures = {path};
    auto rep = run_report(c);
    EXPECT_EQ(rep["status"], "fail");
    EXPECT_NE(rep["checks"][0]["detail"].get<std::string>().find("line 3"), std::string::npos);
    std::filesystem::remove(path);
}

TEST(CrossCheck, SingleFragment) {
    auto c = config("cross-check");
    c.fragments = {"z4-d4"};
    auto rep = run_report(c);
    EXPECT_EQ(rep["status"], "pass");
    EXPECT_EQ(rep["checks"].size(), 1u);
    EXPECT_LT(rep["max_deviation"].get<double>(), 1e-9);
}

TEST(CrossCheck, CapRefusalReportsRequiredSize) {
    auto c = config("cross-check");
    c.fragments = {"d4-z2"};
    c.cap = 1000;
    auto rep = run_report(c);
    EXPECT_EQ(rep["status"], "refused");
    EXPECT_EQ(exit_code(rep), 2);
    EXPECT_GT(rep["checks"][0]["payload"]["required_amplitudes"].get<std::uint64_t>(), 1000u);
    EXPECT_EQ(run_binary("cross-check --fragment d4-z2 --cap-amplitudes 1000"), 2);
}

TEST(CrossCheck, DumpStateWritesSnapshot) {
    auto prefix = temp_path("dump");
    auto c = config("cross-check");
    c.fragments = {"z2-z2"};
    c.dump_state = prefix;
    EXPECT_EQ(run_report(c)["status"], "pass");
    EXPECT_TRUE(std::filesystem::exists(prefix + "-z2-z2.json"));
    EXPECT_TRUE(std::filesystem::exists(prefix + "-z2-z2.bin"));
    std::filesystem::remove(prefix + "-z2-z2.json");
    std::filesystem::remove(prefix + "-z2-z2.bin");
}

TEST(SyndromeTable, PassesAndWritesCsv) {
    auto csv = temp_path("syndromes.csv");
    auto c = config("syndrome-table");
    c.csv = csv;
    auto rep = run_report(c);
    EXPECT_EQ(rep["status"], "pass") << rep.dump(2);
    EXPECT_EQ(rep["tables"]["vertical"].size(), 8u);
    EXPECT_EQ(rep["tables"]["horizontal"].size(), 8u);
    std::ifstream in(csv);
    int lines = 0;
    for (std::string l; std::getline(in, l);) ++lines;
    EXPECT_EQ(lines, 17);
    std::filesystem::remove(csv);
}

TEST(Anyons, D4AgainstFixture) {
    auto rep = run_report(config("anyons"));
    EXPECT_EQ(rep["status"], "pass");
    EXPECT_EQ(rep["center"]["anyons"].size(), 22u);
    ASSERT_NE(find_check(rep, "anyons-d4:row-count"), nullptr);
    auto c = config("anyons");
    c.group = "S3";
    EXPECT_EQ(run_report(c)["status"], "pass");
}

TEST(Binary, ExitCodes) {
    EXPECT_EQ(run_binary("anyons"), 0);
    EXPECT_EQ(run_binary("no-such-subcommand"), 2);
    EXPECT_EQ(run_binary("run-protocol t-magic --forced nonsense"), 2);
    EXPECT_EQ(run_binary("verify /no/such/file"), 2);
    auto out = temp_path("report.json");
    EXPECT_EQ(run_binary("run-protocol s-teleport --exhaustive -o " + out), 0);
    std::ifstream in(out);
    auto rep = nlohmann::json::parse(in);
    EXPECT_EQ(rep["status"], "pass");
    std::filesystem::remove(out);
}
