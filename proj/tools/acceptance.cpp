// One pass/fail line per acceptance criterion; exit status 0 iff all pass.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>

#include "hyb/center.hpp"
#include "hyb/lattice.hpp"
#include "hyb/protocols.hpp"
#include "hyb/syndrome.hpp"

using namespace hyb;

namespace {

std::string fixture_dir = HYB_FIXTURE_DIR;

const double kPiD = std::acos(-1.0);
const cplx w8 = std::polar(1.0, kPiD / 4.0);

struct Outcome {
    bool ok = false;
    std::string detail;
};

CMatrix mat2(cplx a, cplx b, cplx c, cplx d) { return (CMatrix(2, 2) << a, b, c, d).finished(); }
CMatrix Hd() { return mat2(1, 1, 1, -1) / std::sqrt(2.0); }
CMatrix Xd() { return mat2(0, 1, 1, 0); }
CMatrix Zd() { return mat2(1, 0, 0, -1); }
CMatrix Tpow(double frac) { return mat2(1, 0, 0, std::polar(1.0, kPiD / 4.0 * frac)); }

CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

CMatrix matpow(const CMatrix& m, int k) {
    CMatrix out = CMatrix::Identity(m.rows(), m.cols());
    for (int i = 0; i < k; ++i) out = out * m;
    return out;
}

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Every heralded branch must match `want` up to phase; returns the worst fidelity seen.
double worst_state_fidelity(const ProtocolRun& run, const CVector& want, int& checked) {
    double worst = 1.0;
    for (const auto& b : run.branches) {
        if (!b.heralded) continue;
        worst = std::min(worst, fidelity(b.state.amps, want));
        ++checked;
    }
    return worst;
}

bool all_unitaries_match(const ProtocolRun& run, const CMatrix& want, double tol, int& checked) {
    bool ok = !run.branches.empty();
    for (const auto& b : run.branches) {
        ok = ok && b.unitary && equal_up_to_global_phase(*b.unitary, want, tol).equal;
        ++checked;
    }
    return ok;
}

Outcome c1_teleport() {
    auto t0 = std::chrono::steady_clock::now();
    auto run = run_exhaustive(teleport_S_script(1));
    CVector want = CVector::Zero(8);
    auto D4 = parse_group("D4");
    want(D4->element("id")) = 0.5;
    want(D4->element("r")) = 0.5 * w8;
    want(D4->element("r^2")) = -0.5;
    want(D4->element("r^3")) = 0.5 * w8;
    int n = 0;
    double worst = worst_state_fidelity(run, want, n);
    double dt = seconds_since(t0);
    return {run.ok && worst >= 1 - 1e-9 && dt < 1.0,
            std::to_string(n) + " branches, min fidelity " + fmt("%.12f", worst) + ", " + fmt("%.3f", dt) + " s"};
}

Outcome c2_two_qubit_magic() {
    auto t0 = std::chrono::steady_clock::now();
    auto run = magic_state_two_qubit();
    CVector minus(2), t(2);
    minus << 1.0, -1.0;
    t << 1.0, w8;
    CMatrix CZ = CMatrix::Identity(4, 4);
    CZ(3, 3) = -1.0;
    CVector want = CZ * kron(minus, t);
    want /= want.norm();
    int n = 0;
    double worst = worst_state_fidelity(run, want, n);
    bool target_ok = (two_qubit_magic_state() - want).norm() < 1e-12;
    double dt = seconds_since(t0);
    return {run.ok && target_ok && worst >= 1 - 1e-9 && dt < 1.0,
            std::to_string(n) + " branches (all outcome combinations), min fidelity " + fmt("%.12f", worst) +
                ", CZ(|->|T>) built directly, " + fmt("%.3f", dt) + " s"};
}

Outcome c3_two_qubit_gate() {
    auto run = gate_teleport_two_qubit();
    CMatrix HH = kron(Hd(), Hd());
    CMatrix CZ = CMatrix::Identity(4, 4);
    CZ(3, 3) = -1.0;
    CMatrix want = w8 * HH * CZ * kron(Tpow(1).adjoint(), Zd()) * HH;
    int n = 0;
    bool ok = all_unitaries_match(run, want, 1e-9, n);
    return {ok && run.ok, std::to_string(n) + " branches equal e^{i pi/4}(HxH)CZ(T^dag x Z)(HxH) up to phase"};
}

Outcome c4_t_gate() {
    CMatrix want = mat2(1.0 + w8, -1.0 + w8, -1.0 + w8, 1.0 + w8) / 2.0;
    auto A = gate_teleport_single_qubit(1, GateVariant::A);
    auto B = gate_teleport_single_qubit(1, GateVariant::B);
    int n = 0;
    bool ok = all_unitaries_match(A, want, 1e-9, n) && all_unitaries_match(B, want, 1e-9, n);
    ok = ok && (w8 * Hd() * Tpow(1).adjoint() * Hd() - want).cwiseAbs().maxCoeff() < 1e-12;
    auto sb = t_gate_script(1, GateVariant::B);
    int agree = 0;
    for (const auto& ba : A.branches) {
        ForcedRecord rec;
        for (const auto& e : ba.record.entries) rec.emplace_back(e.label, e.outcome);
        auto bb = run_forced(sb, rec);
        bool same = ba.unitary && bb.unitary && equal_up_to_global_phase(*ba.unitary, *bb.unitary, 1e-9).equal &&
                    std::abs(ba.probability - bb.probability) < 1e-12;
        agree += same;
    }
    ok = ok && agree == static_cast<int>(A.branches.size());
    return {ok, std::to_string(n) + " branch unitaries match; variants A/B agree on " + std::to_string(agree) + "/" +
                    std::to_string(A.branches.size()) + " records"};
}

Outcome c5_t_roots() {
    auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::ostringstream os;
    for (int n = 1; n <= 4; ++n) {
        CVector state(2);
        state << 1.0, std::polar(1.0, kPiD / (4.0 * n));
        state /= std::sqrt(2.0);
        auto magic = magic_state_single_qubit(n);
        int cnt = 0;
        double worst = worst_state_fidelity(magic, state, cnt);
        CMatrix Xn = matpow(Xd(), n);
        CMatrix gate = Hd() * Xn * Tpow(1.0 / n) * Xn * Hd();
        auto g = gate_teleport_single_qubit(n);
        int gcnt = 0;
        bool gok = all_unitaries_match(g, gate, 1e-9, gcnt);
        ok = ok && magic.ok && worst >= 1 - 1e-9 && gok;
        os << "n=" << n << ": " << cnt << "+" << gcnt << " branches" << (gok ? "" : " GATE MISMATCH") << "; ";
    }
    int l1 = clifford_level(Hd() * Xd() * Tpow(1) * Xd() * Hd());
    int l2 = clifford_level(Hd() * Tpow(0.5) * Hd());
    int l4 = clifford_level(Hd() * Tpow(0.25) * Hd());
    ok = ok && l1 == 3 && l2 == 4 && l4 == 5;
    double dt = seconds_since(t0);
    ok = ok && dt < 10.0;
    os << "levels " << l1 << "/" << l2 << "/" << l4 << ", " << fmt("%.2f", dt) << " s";
    return {ok, os.str()};
}

Outcome c6_s3() {
    CVector q(2);
    q << 1.0, std::polar(1.0, 2.0 * kPiD / 3.0);
    q /= std::sqrt(2.0);
    auto run = s3_qubit_magic();
    int n = 0;
    double worst = worst_state_fidelity(run, q, n);
    bool ok = run.ok && worst >= 1 - 1e-9;
    CVector c(3);
    c << 0.6, cplx(0, 0.48), 0.64;
    std::ostringstream os;
    os << "qubit " << n << " branches; qutrit heralded";
    for (cplx theta : {cplx(1.0), cplx(-1.0), cplx(0.0, 1.0)}) {
        CVector want(3);
        for (int k = 0; k < 3; ++k) want(k) = c(k) + theta * c((k + 2) % 3);
        want /= want.norm();
        auto r = s3_qutrit_magic(theta, c);
        int h = 0;
        double wq = worst_state_fidelity(r, want, h);
        ok = ok && r.ok && h > 0 && wq >= 1 - 1e-9;
        os << " " << h;
    }
    return {ok, os.str() + " branches for theta=1,-1,i"};
}

Outcome c7_lattice() {
    auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    double worst = 0.0;
    std::ostringstream os;
    for (const char* name : {"z4-d4", "d4-z2z2", "d4-z2"}) {
        CrossCheckOptions opt;
        opt.rows = 1;
        opt.cap = std::uint64_t{1} << 24;
        auto r = lattice_vs_logical(fragment_by_name(name), opt);
        ok = ok && r.ok && r.max_deviation < 1e-9;
        worst = std::max(worst, r.max_deviation);
        os << name << " " << r.branches.size() << " branches; ";
    }
    double dt = seconds_since(t0);
    ok = ok && dt < 300.0;
    os << "max deviation " << fmt("%.2e", worst) << ", " << fmt("%.2f", dt) << " s";
    return {ok, os.str()};
}

Outcome c8_code_patch() {
    auto G = parse_group("D4");
    auto L = build_patch(G, 2, 1);
    int dim = code_space_dimension(*L);
    std::vector<LatticeState> phi;
    for (int g = 0; g < 8; ++g) phi.push_back(logical_basis_state(L, g));
    auto dist = [](const LatticeState& a, const LatticeState& b) {
        double d = 0.0;
        for (std::size_t i = 0; i < a.amps.size(); ++i) d = std::max(d, std::abs(a.amps[i] - b.amps[i]));
        return d;
    };
    double ortho = 0.0, right = 0.0, ribbon = 0.0;
    auto xi = horizontal_ribbon(*L, 0, 1);
    for (int g = 0; g < 8; ++g)
        for (int h = 0; h < 8; ++h) {
            ortho = std::max(ortho, std::abs(inner(phi[g], phi[h]) - (g == h ? 1.0 : 0.0)));
            right = std::max(right, dist(hyb::apply(logical_right(*L, 0, g), phi[h]), phi[G->mul(h, G->inv(g))]));
            auto out = hyb::apply(ribbon_op(*L, xi, 0, h), phi[g]);
            LatticeState want = phi[g];
            if (g != h)
                for (auto& a : want.amps) a = 0.0;
            ribbon = std::max(ribbon, dist(out, want));
        }
    bool ok = dim == 8 && ortho < 1e-12 && right < 1e-12 && ribbon < 1e-12;
    return {ok, "dim " + std::to_string(dim) + ", orthonormality " + fmt("%.1e", ortho) + ", right strings " +
                    fmt("%.1e", right) + ", ribbon " + fmt("%.1e", ribbon)};
}

Outcome c9_anyons() {
    auto C = make_center(parse_group("D4"));
    auto rows = read_anyon_fixture(fixture_dir + "/anyons-d4.fixture");
    int match = 0;
    for (std::size_t i = 0; i < rows.size() && i < C->anyons.size(); ++i) {
        const auto& a = C->anyons[i];
        match += a.label() == rows[i].label && a.qdim == rows[i].dim && std::abs(a.spin - rows[i].spin) < 1e-12;
    }
    double sum = 0.0;
    for (const auto& a : C->anyons) sum += a.qdim * a.qdim;
    double unit = (C->S * C->S.adjoint() - CMatrix::Identity(C->size(), C->size())).cwiseAbs().maxCoeff();
    bool ok = C->size() == 22 && rows.size() == 22 && match == 22 && std::abs(sum - 64.0) < 1e-12 && unit < 1e-12;
    return {ok, std::to_string(match) + "/22 rows, sum qdim^2 = " + fmt("%.0f", sum) + ", S unitarity " + fmt("%.1e", unit)};
}

Outcome c10_algebras() {
    bool ok = true;
    int canon = 0;
    for (const char* g : {"Z2", "Z3", "Z4", "Z2 x Z2", "D4", "S3", "D8"}) {
        auto G = parse_group(g);
        for (const auto& A : {rough_lagrangian(G), smooth_lagrangian(G)}) {
            auto r = check_condensable(A);
            ok = ok && r.ok_lagrangian();
            ++canon;
        }
    }
    bool z2s = false;
    for (const auto& f : read_algebra_fixture(fixture_dir + "/condensable-algebras.fixture"))
        if (f.name == "d4-z2s-lagr") z2s = check_condensable(parse_algebra(f.algebra, make_center(parse_group(f.left)))).ok_lagrangian();
    int folded = 0, folded_ok = 0;
    for (const auto& f : read_algebra_fixture(fixture_dir + "/folded-lagrangians.fixture")) {
        auto L = make_center(parse_group(f.left));
        auto R = make_center(parse_group(f.right));
        auto r = verify_folded_lagrangian(parse_algebra(f.algebra, L, R, f.name), parse_algebra(f.subalgebra, L));
        ++folded;
        folded_ok += r.ok_lagrangian() && r.spins_trivial && r.monodromy_trivial && r.contains_subalgebra;
    }
    ok = ok && z2s && folded_ok == folded && folded >= 8;
    return {ok, std::to_string(canon) + " canonical Lagrangians, L(Z2^s,1) " + (z2s ? "ok" : "FAILED") + ", folded " +
                    std::to_string(folded_ok) + "/" + std::to_string(folded)};
}

Outcome c11_syndromes() {
    auto L = minimal_d4_patch();
    auto rows = read_syndrome_fixture(fixture_dir + "/syndromes-d4.fixture");
    auto table = syndrome_table(L, canonical_probe_edge(*L));
    int rows_ok = 0;
    for (const auto& row : rows) {
        bool all = true;
        for (const auto& err : row.errors) {
            auto it = std::find_if(table.begin(), table.end(), [&](const SyndromeResult& r) { return r.error == err; });
            all = all && it != table.end() && check_syndrome_row(*L, row, *it).ok;
        }
        rows_ok += all;
    }
    auto comm = commutator_relations(*L);
    bool ok = rows.size() == 6 && rows_ok == 6 && comm.ok;
    return {ok, std::to_string(rows_ok) + "/6 rows, " + std::to_string(comm.relations.size()) + " relation instances, " +
                    std::to_string(comm.trivial_pairs) + " commuting pairs checked"};
}

Outcome c12_simultaneity() {
    auto rep = simultaneity_check();
    bool ok = rep.ok && rep.commutator_surgery < 1e-12 && rep.max_branch_deviation < 1e-12;
    return {ok, "commutator " + fmt("%.1e", rep.commutator_surgery) + ", order-swap deviation " +
                    fmt("%.1e", rep.max_branch_deviation) + " over " + std::to_string(rep.branches) + " records"};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc > 1) fixture_dir = argv[1];
    if (const char* env = std::getenv("HYB_FIXTURE_DIR"); env && *env && argc <= 1) fixture_dir = env;

    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    std::vector<Criterion> all{
        {1, "S-state teleportation Z4 -> D4", c1_teleport},
        {2, "two-qubit magic state", c2_two_qubit_magic},
        {3, "two-qubit gate teleportation", c3_two_qubit_gate},
        {4, "single-qubit T gate, variants A/B", c4_t_gate},
        {5, "T^(1/n) family and hierarchy levels", c5_t_roots},
        {6, "S3 qubit and qutrit protocols", c6_s3},
        {7, "lattice vs logical merge/split", c7_lattice},
        {8, "D(D4) code patch", c8_code_patch},
        {9, "D4 anyon data", c9_anyons},
        {10, "algebra fixtures", c10_algebras},
        {11, "D(D4) syndrome table and commutators", c11_syndromes},
        {12, "simultaneous surgery", c12_simultaneity},
    };
    int failed = 0;
    for (const auto& c : all) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.ok;
        std::printf("criterion %2d: %s  %s (%s)\n", c.id, o.ok ? "PASS" : "FAIL", c.name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
    return failed == 0 ? 0 : 1;
}
