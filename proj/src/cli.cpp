#include "hyb/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>

#include "hyb/center.hpp"
#include "hyb/lattice.hpp"
#include "hyb/protocols.hpp"
#include "hyb/syndrome.hpp"

#ifndef HYB_DEFAULT_FIXTURE_DIR
#define HYB_DEFAULT_FIXTURE_DIR "fixtures"
#endif

namespace hyb {

namespace {

std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

double parse_real(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        double x = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return x;
    } catch (const std::exception&) {
        throw UsageError("cannot parse " + what + " '" + s + "'");
    }
}

// "1", "-i", "0.48i", "0.3+0.4i", "-0.5-2i"
cplx parse_complex(std::string s) {
    s.erase(std::remove(s.begin(), s.end(), ' '), s.end());
    if (s.empty()) throw UsageError("empty complex number");
    if (s.back() != 'i') return parse_real(s, "number");
    s.pop_back();
    std::size_t cut = std::string::npos;
    for (std::size_t k = s.size(); k-- > 1;)
        if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
            cut = k;
            break;
        }
    std::string re = cut == std::string::npos ? "" : s.substr(0, cut);
    std::string im = cut == std::string::npos ? s : s.substr(cut);
    double y = im.empty() || im == "+" ? 1.0 : im == "-" ? -1.0 : parse_real(im, "imaginary part");
    return {re.empty() ? 0.0 : parse_real(re, "real part"), y};
}

CVector parse_input_vector(const std::string& text, int dim) {
    CVector v = CVector::Zero(dim);
    if (text == "0" || text == "1") {
        if (dim != 2) throw UsageError("basis shorthand needs a qubit input");
        v(text == "1") = 1.0;
    } else if (text == "+" || text == "-") {
        if (dim != 2) throw UsageError("basis shorthand needs a qubit input");
        v << 1.0, text == "+" ? 1.0 : -1.0;
    } else {
        auto parts = split(text, ',');
        if (static_cast<int>(parts.size()) != dim)
            throw UsageError("input needs " + std::to_string(dim) + " amplitudes, got " + std::to_string(parts.size()));
        for (int k = 0; k < dim; ++k) v(k) = parse_complex(parts[k]);
    }
    if (v.norm() < 1e-12) throw UsageError("input vector is zero");
    return v / v.norm();
}

ForcedRecord parse_forced(const std::string& text) {
    ForcedRecord rec;
    for (const auto& item : split(text, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos) throw UsageError("forced record entries look like label=value, got '" + item + "'");
        rec.emplace_back(trim(item.substr(0, eq)), static_cast<int>(parse_real(trim(item.substr(eq + 1)), "outcome")));
    }
    return rec;
}

ForcedRecord to_forced(const MeasurementRecord& r) {
    ForcedRecord out;
    for (const auto& e : r.entries) out.emplace_back(e.label, e.outcome);
    return out;
}

std::string timestamp() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

// FNV-1a over the file bytes; identifies the fixture version in reports.
std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::uint64_t h = 1469598103934665603ull;
    char c;
    while (in.get(c)) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

nlohmann::json new_report(const RunConfig& cfg) {
    return {{"schema_version", kReportSchemaVersion},
            {"tool", "hybsurg"},
            {"tool_version", kToolVersion},
            {"subcommand", cfg.subcommand},
            {"config", cfg.to_json()},
            {"fixtures", nlohmann::json::array()},
            {"checks", nlohmann::json::array()}};
}

void add_check(nlohmann::json& rep, const std::string& name, bool ok, nlohmann::json payload = nlohmann::json::object(),
               const std::string& detail = {}) {
    nlohmann::json c{{"name", name}, {"status", ok ? "pass" : "fail"}};
    if (!detail.empty()) c["detail"] = detail;
    if (!payload.is_null() && !payload.empty()) c["payload"] = std::move(payload);
    rep["checks"].push_back(std::move(c));
}

void note_fixture(nlohmann::json& rep, const std::string& path) {
    rep["fixtures"].push_back({{"path", std::filesystem::path(path).filename().string()}, {"digest", file_digest(path)}});
}

nlohmann::json finish(nlohmann::json rep) {
    if (!rep.contains("status")) {
        bool ok = !rep["checks"].empty();
        for (const auto& c : rep["checks"]) ok = ok && c["status"] == "pass";
        rep["status"] = ok ? "pass" : "fail";
    }
    int passed = 0;
    for (const auto& c : rep["checks"]) passed += c["status"] == "pass";
    rep["summary"] = {{"checks", rep["checks"].size()}, {"passed", passed}};
    rep["generated_at"] = timestamp();
    return rep;
}

// Runs f(0..n-1) on up to `jobs` threads; results stay in index order.
template <class F>
auto parallel_map(int n, int jobs, F f) -> std::vector<decltype(f(0))> {
    std::vector<decltype(f(0))> out(n);
    jobs = std::max(1, std::min(jobs, n));
    std::atomic<int> next{0};
    std::vector<std::future<void>> workers;
    for (int w = 0; w < jobs; ++w)
        workers.push_back(std::async(std::launch::async, [&] {
            for (int i = next++; i < n; i = next++) out[i] = f(i);
        }));
    for (auto& w : workers) w.get();
    return out;
}

std::string resolve_fixture(const RunConfig& cfg, const std::string& name) {
    if (cfg.fixture == "none") return {};
    if (!cfg.fixture.empty()) return cfg.fixture;
    auto p = std::filesystem::path(default_fixture_dir()) / name;
    return std::filesystem::exists(p) ? p.string() : std::string{};
}

std::vector<std::pair<int, std::string>> data_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open fixture " + path);
    std::vector<std::pair<int, std::string>> out;
    std::string line;
    for (int no = 1; std::getline(in, line); ++no) {
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        line = trim(line);
        if (!line.empty()) out.emplace_back(no, line);
    }
    return out;
}

// ---------------------------------------------------------------- run-protocol

ProtocolScript make_script(const RunConfig& cfg) {
    const auto& p = cfg.protocol;
    if (cfg.n < 1) throw UsageError("--n must be positive");
    if (p == "s-teleport") return teleport_S_script(cfg.n);
    if (p == "two-qubit-magic") return two_qubit_magic_script();
    if (p == "two-qubit-gate") return two_qubit_gate_script();
    if (p == "t-magic") return t_magic_script(cfg.n, default_generator(cfg.n));
    if (p == "t-gate") {
        if (cfg.variant != "A" && cfg.variant != "B") throw UsageError("--variant must be A or B");
        return t_gate_script(cfg.n, cfg.variant == "A" ? GateVariant::A : GateVariant::B);
    }
    if (p == "s3-qubit") return s3_qubit_script();
    if (p == "s3-qutrit") return s3_qutrit_script(parse_complex(cfg.theta), parse_input_vector(cfg.coeffs, 3));
    throw UsageError("unknown protocol '" + p + "'");
}

void check_gate_input(nlohmann::json& rep, const ProtocolScript& sc, const RunConfig& cfg,
                      const std::vector<BranchResult>& branches) {
    if (!sc.is_gate()) throw UsageError("--input needs a gate protocol");
    CVector psi = parse_input_vector(cfg.input, sc.input_group->order());
    CVector want = *sc.target_unitary * psi;
    double worst = 1.0;
    nlohmann::json outs = nlohmann::json::array();
    for (const auto& b : branches) {
        if (!b.heralded) continue;
        auto out = run_gate_on_input(sc, psi, to_forced(b.record));
        double f = fidelity(out.amps, want);
        worst = std::min(worst, f);
        outs.push_back({{"record", record_to_json(b.record)}, {"output", state_to_json(out)}, {"fidelity", f}});
    }
    LogicalState expected{LogicalSpace({sc.input_group}), want / want.norm(), true};
    add_check(rep, "input-output", worst >= 1.0 - 1e-9,
              {{"input", cfg.input}, {"expected", state_to_json(expected)}, {"min_fidelity", worst}, {"branches", outs}});
}

void dump_logical(const std::string& prefix, const LogicalState& s) {
    std::ofstream out(prefix + ".json");
    if (!out) throw UsageError("cannot write " + prefix + ".json");
    out << nlohmann::json{{"schema_version", kReportSchemaVersion}, {"state", state_to_json(s)}}.dump(2) << "\n";
}

// ---------------------------------------------------------------- verify

void verify_anyons(nlohmann::json& rep, const std::string& path) {
    auto stem = std::filesystem::path(path).stem().string();
    auto dash = stem.rfind('-');
    std::string gname = dash == std::string::npos ? "D4" : stem.substr(dash + 1);
    std::transform(gname.begin(), gname.end(), gname.begin(), ::toupper);
    auto C = make_center(parse_group(gname));
    auto lines = data_lines(path);
    add_check(rep, stem + ":row-count", static_cast<int>(lines.size()) == C->size(),
              {{"rows", lines.size()}, {"anyons", C->size()}});
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto [no, line] = lines[i];
        std::string name = stem + ":" + std::to_string(no);
        try {
            auto f = split(line, '|');
            if (f.size() != 4) throw std::invalid_argument("needs 4 fields");
            if (static_cast<int>(i) >= C->size()) throw std::invalid_argument("more rows than anyons");
            const auto& a = C->anyons[i];
            cplx T = parse_complex(f[3]);
            int dim = static_cast<int>(parse_real(f[2], "dimension"));
            std::string bad;
            if (a.label() != f[0]) bad = "label " + a.label() + " != " + f[0];
            else if (a.qdim != dim) bad = "dim " + std::to_string(a.qdim) + " != " + f[2];
            else if (std::abs(a.spin - T) > 1e-12) bad = "T mismatch for " + f[0];
            else if (parse_anyon_label(f[1], C).a != a.index) bad = "color label " + f[1] + " names another anyon";
            add_check(rep, name, bad.empty(), {{"label", f[0]}}, bad);
        } catch (const std::exception& e) {
            add_check(rep, name, false, {}, std::string("line ") + std::to_string(no) + ": " + e.what());
        }
    }
}

void verify_algebras(nlohmann::json& rep, const std::string& path, int jobs) {
    auto stem = std::filesystem::path(path).stem().string();
    auto lines = data_lines(path);
    struct Out {
        std::string name;
        bool ok = false;
        nlohmann::json payload;
        std::string detail;
    };
    auto results = parallel_map(static_cast<int>(lines.size()), jobs, [&](int i) {
        auto [no, line] = lines[i];
        Out o{stem + ":" + std::to_string(no), false, {}, {}};
        try {
            auto f = split(line, ';');
            if (f.size() != 5) throw std::invalid_argument("needs 5 ';'-separated fields");
            o.name = stem + ":" + f[0];
            auto L = make_center(parse_group(f[1]));
            AlgebraReport r;
            if (f[2].empty()) {
                r = check_condensable(parse_algebra(f[3], L, nullptr, f[0]));
                o.ok = r.condensable() && (!r.lagrangian || r.ok_lagrangian());
            } else {
                auto R = make_center(parse_group(f[2]));
                r = verify_folded_lagrangian(parse_algebra(f[3], L, R, f[0]), parse_algebra(f[4], L));
                o.ok = r.ok_lagrangian();
            }
            o.payload = r.to_json();
            if (!o.ok) o.detail = r.failures.empty() ? "check failed" : r.failures.front();
        } catch (const std::exception& e) {
            o.detail = "line " + std::to_string(no) + ": " + e.what();
        }
        return o;
    });
    for (auto& o : results) add_check(rep, o.name, o.ok, o.payload, o.detail);
}

void verify_syndromes(nlohmann::json& rep, const std::string& path) {
    auto stem = std::filesystem::path(path).stem().string();
    std::vector<SyndromeRow> rows;
    try {
        rows = read_syndrome_fixture(path);
    } catch (const std::exception& e) {
        add_check(rep, stem + ":parse", false, {}, e.what());
        return;
    }
    auto L = minimal_d4_patch();
    int e = canonical_probe_edge(*L);
    auto table = syndrome_table(L, e);
    for (const auto& row : rows)
        for (const auto& err : row.errors) {
            auto it = std::find_if(table.begin(), table.end(), [&](const SyndromeResult& r) { return r.error == err; });
            if (it == table.end()) {
                add_check(rep, stem + ":" + err, false, {}, "unsupported error " + err);
                continue;
            }
            auto chk = check_syndrome_row(*L, row, *it);
            add_check(rep, stem + ":" + err, chk.ok, it->to_json(), chk.detail);
        }
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j{{"subcommand", subcommand}, {"jobs", jobs}};
    if (subcommand == "run-protocol") {
        j.update({{"protocol", protocol}, {"n", n}, {"seed", seed}, {"exhaustive", exhaustive}, {"forced", forced},
                  {"input", input}, {"variant", variant}});
        if (protocol == "s3-qutrit") j.update({{"theta", theta}, {"coeffs", coeffs}});
    } else if (subcommand == "verify") {
        nlohmann::json names = nlohmann::json::array();
        for (const auto& f : fixtures) names.push_back(std::filesystem::path(f).filename().string());
        j["fixtures"] = names;
    } else if (subcommand == "cross-check") {
        j.update({{"fragments", fragments}, {"rows", rows}, {"seed", seed}, {"cap_amplitudes", cap}});
    } else if (subcommand == "syndrome-table") {
        j.update({{"probe", probe}, {"fixture", fixture.empty() ? "default" : std::filesystem::path(fixture).filename().string()}});
    } else if (subcommand == "anyons") {
        j.update({{"group", group}, {"fixture", fixture.empty() ? "default" : std::filesystem::path(fixture).filename().string()}});
    }
    if (!dump_state.empty()) j["dump_state"] = dump_state;
    return j;
}

std::vector<std::string> protocol_names() {
    return {"s-teleport", "two-qubit-magic", "two-qubit-gate", "t-magic", "t-gate", "s3-qubit", "s3-qutrit"};
}

std::string default_fixture_dir() {
    if (const char* env = std::getenv("HYB_FIXTURE_DIR"); env && *env) return env;
    return HYB_DEFAULT_FIXTURE_DIR;
}

nlohmann::json run_protocol_report(const RunConfig& cfg) {
    auto rep = new_report(cfg);
    ProtocolScript sc;
    try {
        sc = make_script(cfg);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    std::vector<BranchResult> branches;
    if (cfg.exhaustive) {
        auto run = run_exhaustive(sc);
        branches = run.branches;
        add_check(rep, "all-branches", run.ok,
                  {{"branch_count", run.branches.size()},
                   {"min_fidelity", run.min_fidelity},
                   {"total_probability", run.total_probability},
                   {"success_probability", run.success_probability}});
        rep["run"] = run_to_json(run);
    } else {
        BranchResult b;
        try {
            b = cfg.forced.empty() ? run_sampled(sc, cfg.seed) : run_forced(sc, parse_forced(cfg.forced));
        } catch (const std::invalid_argument& e) {
            throw UsageError(std::string("invalid forced record: ") + e.what());
        }
        add_check(rep, cfg.forced.empty() ? "sampled-branch" : "forced-branch", !b.heralded || b.matches_target,
                  {{"fidelity", b.fidelity}, {"heralded", b.heralded}});
        rep["branch"] = branch_to_json(b);
        branches.push_back(b);
    }
    if (cfg.protocol == "t-gate" || cfg.protocol == "t-magic") {
        int level = clifford_level(t_root_gate_target(cfg.n));
        rep["clifford_level"] = level;
    }
    if (!cfg.input.empty()) check_gate_input(rep, sc, cfg, branches);
    if (!cfg.dump_state.empty() && !branches.empty()) dump_logical(cfg.dump_state, branches.front().state);
    return finish(rep);
}

nlohmann::json verify_report(const RunConfig& cfg) {
    if (cfg.fixtures.empty()) throw UsageError("verify needs at least one fixture file");
    auto rep = new_report(cfg);
    for (const auto& path : cfg.fixtures) {
        if (!std::filesystem::exists(path)) throw UsageError("no such fixture: " + path);
        note_fixture(rep, path);
        auto name = std::filesystem::path(path).filename().string();
        if (name.find("anyons") != std::string::npos) verify_anyons(rep, path);
        else if (name.find("syndromes") != std::string::npos) verify_syndromes(rep, path);
        else verify_algebras(rep, path, cfg.jobs);
    }
    return finish(rep);
}

nlohmann::json cross_check_report(const RunConfig& cfg) {
    auto rep = new_report(cfg);
    auto names = cfg.fragments.empty() ? fragment_names() : cfg.fragments;
    if (cfg.rows < 1) throw UsageError("--rows must be positive");
    std::vector<Fragment> frags;
    for (const auto& n : names) {
        try {
            frags.push_back(fragment_by_name(n));
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
    }
    set_lattice_threads(std::max(1, cfg.jobs));
    std::uint64_t cap = cfg.cap ? cfg.cap : default_amplitude_cap();
    double worst = 0.0;
    bool refused = false;
    for (const auto& f : frags) {
        CrossCheckOptions opt;
        opt.rows = cfg.rows;
        opt.seed = cfg.seed;
        opt.cap = cap;
        try {
            auto r = lattice_vs_logical(f, opt);
            worst = std::max(worst, r.max_deviation);
            add_check(rep, "fragment:" + f.name, r.ok, r.to_json());
            if (!cfg.dump_state.empty()) {
                auto pair = build_pair(build_patch(f.left, 1, cfg.rows, std::nullopt, std::nullopt, cap),
                                       build_patch(f.right, 1, cfg.rows, std::nullopt, std::nullopt, cap), cap);
                auto spec = make_interface(f.left, f.right, f.generators, std::nullopt, f.name);
                auto s0 = encode_logical(pair, random_logical_state(LogicalSpace({f.left, f.right}), cfg.seed));
                MergeOptions mo;
                mo.cap = cap;
                write_snapshot(cfg.dump_state + "-" + f.name, merge(s0, spec, mo).state);
            }
        } catch (const CapExceeded& e) {
            refused = true;
            add_check(rep, "fragment:" + f.name, false, {{"required_amplitudes", e.required()}, {"cap_amplitudes", e.allowed()}},
                      "refused: needs " + std::to_string(e.required()) + " amplitudes, cap is " + std::to_string(e.allowed()));
        }
    }
    rep["max_deviation"] = worst;
    if (refused) rep["status"] = "refused";
    return finish(rep);
}

nlohmann::json syndrome_table_report(const RunConfig& cfg) {
    if (cfg.group != "D4") throw UsageError("syndrome-table is defined for D4 only");
    if (cfg.probe != "both" && cfg.probe != "vertical" && cfg.probe != "horizontal")
        throw UsageError("--probe must be vertical, horizontal or both");
    auto rep = new_report(cfg);
    set_lattice_threads(std::max(1, cfg.jobs));
    auto L = minimal_d4_patch();
    rep["layout"] = L->to_json();

    auto comm = commutator_relations(*L);
    add_check(rep, "commutator-relations", comm.ok, comm.to_json(), comm.failures.empty() ? "" : comm.failures.front());

    std::vector<SyndromeResult> all;
    nlohmann::json tables;
    for (const char* probe : {"vertical", "horizontal"}) {
        if (cfg.probe != "both" && cfg.probe != probe) continue;
        int e = std::string(probe) == "vertical" ? canonical_probe_edge(*L) : horizontal_probe_edge(*L);
        auto t = syndrome_table(L, e);
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& r : t) rows.push_back(r.to_json());
        tables[probe] = rows;
        all.insert(all.end(), t.begin(), t.end());
    }
    rep["tables"] = tables;

    if (auto path = resolve_fixture(cfg, "syndromes-d4.fixture"); !path.empty() && cfg.probe != "horizontal") {
        note_fixture(rep, path);
        verify_syndromes(rep, path);
    }
    if (!cfg.csv.empty()) {
        std::ofstream out(cfg.csv);
        if (!out) throw UsageError("cannot write " + cfg.csv);
        out << syndrome_csv(all);
    }
    return finish(rep);
}

nlohmann::json anyons_report(const RunConfig& cfg) {
    auto rep = new_report(cfg);
    GroupPtr G;
    try {
        G = parse_group(cfg.group);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    auto C = make_center(G);
    auto data = center_to_json(*C);
    double total = data["sum_qdim_squared"].get<double>();
    double order = G->order();
    add_check(rep, "sum-qdim-squared", std::abs(total - order * order) < 1e-9, {{"value", total}, {"expected", order * order}});
    double unit = (C->S * C->S.adjoint() - CMatrix::Identity(C->size(), C->size())).cwiseAbs().maxCoeff();
    add_check(rep, "s-unitary", unit < 1e-12, {{"deviation", unit}});
    add_check(rep, "fusion-integral", C->max_fusion_deviation() < 1e-9, {{"deviation", C->max_fusion_deviation()}});
    rep["center"] = data;
    std::string lower = G->name();
    std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
    if (auto path = resolve_fixture(cfg, "anyons-" + lower + ".fixture"); !path.empty()) {
        note_fixture(rep, path);
        verify_anyons(rep, path);
    }
    return finish(rep);
}

nlohmann::json run_report(const RunConfig& cfg) {
    if (cfg.subcommand == "run-protocol") return run_protocol_report(cfg);
    if (cfg.subcommand == "verify") return verify_report(cfg);
    if (cfg.subcommand == "cross-check") return cross_check_report(cfg);
    if (cfg.subcommand == "syndrome-table") return syndrome_table_report(cfg);
    if (cfg.subcommand == "anyons") return anyons_report(cfg);
    throw UsageError("unknown subcommand '" + cfg.subcommand + "'");
}

int exit_code(const nlohmann::json& report) {
    auto st = report.value("status", std::string("fail"));
    if (st == "pass") return 0;
    if (st == "refused") return 2;
    return 1;
}

}  // namespace hyb
