#include "hyb/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace hyb {

namespace {

constexpr double kPi = M_PI;

int mod(long long a, int m) { return static_cast<int>(((a % m) + m) % m); }

cplx root(int num, int den) { return std::polar(1.0, 2.0 * kPi * num / den); }

Step measure_step(std::string label, LogicalOperator op, int order) {
    Step s;
    s.kind = Step::Kind::MeasureUnitary;
    s.label = std::move(label);
    s.op = std::move(op);
    s.order = order;
    return s;
}

Step readout_step(std::string label, int slot, std::vector<int> coarse = {}) {
    Step s;
    s.kind = Step::Kind::MeasureComputational;
    s.label = std::move(label);
    s.slot = slot;
    s.coarse = std::move(coarse);
    return s;
}

Step correct_step(std::string label, LogicalOperator op, int order, Exponent e) {
    Step s;
    s.kind = Step::Kind::Correct;
    s.label = std::move(label);
    s.op = std::move(op);
    s.order = order;
    s.exponent = std::move(e);
    return s;
}

Exponent linear(std::vector<ExpoTerm> terms) {
    Exponent e;
    e.terms = std::move(terms);
    return e;
}

ExpoTerm term(std::string label, int coef = 1, ExpoTerm::Part part = ExpoTerm::Part::Value) {
    return {std::move(label), coef, part};
}

// Rotation exponent j of r^j s^b, used as the coarse readout symbol.
std::vector<int> rotation_symbols(const FiniteGroup& G) {
    std::vector<int> out(G.order());
    for (int g = 0; g < G.order(); ++g) out[g] = G.dihedral_parts(g).first;
    return out;
}

// |r^j s^b> -> w^j with w = exp(2 pi i / N), N the rotation order.
LogicalOperator rotation_phase(const LogicalSpace& space, int slot) {
    const auto& G = *space.slot(slot);
    int N = G.rotation_order();
    return slot_diagonal(space, slot, [&](int g) { return root(G.dihedral_parts(g).first, N); });
}

CMatrix pauli_x() { return (CMatrix(2, 2) << 0, 1, 1, 0).finished(); }
CMatrix pauli_z() { return (CMatrix(2, 2) << 1, 0, 0, -1).finished(); }
CMatrix hadamard() { return (CMatrix(2, 2) << 1, 1, 1, -1).finished() / std::sqrt(2.0); }
CMatrix phase_gate(double angle) { return (CMatrix(2, 2) << 1, 0, 0, std::polar(1.0, angle)).finished(); }

CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

LogicalState slot_state(const GroupPtr& G, const CVector& amps) {
    return state_from_amplitudes(LogicalSpace({G}), amps);
}

LogicalState tensor_all(const std::vector<LogicalState>& parts) {
    LogicalState acc = parts.front();
    for (size_t i = 1; i < parts.size(); ++i) acc = tensor(acc, parts[i]);
    return acc;
}

CVector basis_vector(int dim, int i) {
    CVector v = CVector::Zero(dim);
    v(i) = 1.0;
    return v;
}

// ------------------------------------------------------------------ runner

struct Chooser {
    enum class Mode { Forced, Sampled } mode;
    const ForcedRecord* forced = nullptr;
    CounterRng* rng = nullptr;
};

int forced_outcome(const ForcedRecord& rec, const std::string& label) {
    for (const auto& [l, v] : rec)
        if (l == label) return v;
    throw std::invalid_argument("forced record has no outcome for '" + label + "'");
}

void validate_forced(const ProtocolScript& script, const ForcedRecord& rec) {
    std::set<std::string> known;
    for (const auto& s : script.steps)
        if (s.kind != Step::Kind::Correct) known.insert(s.label);
    for (const auto& [l, v] : rec) {
        if (!known.count(l)) throw std::invalid_argument("unknown measurement label '" + l + "' in forced record");
        for (const auto& s : script.steps)
            if (s.label == l && s.kind != Step::Kind::Correct && (v < 0 || v >= s.outcome_count()))
                throw std::invalid_argument("outcome " + std::to_string(v) + " out of range for '" + l + "'");
    }
}

// Probability of each outcome and the projected (unnormalized) state.
std::vector<std::pair<double, CVector>> outcome_branches(const Step& step, const LogicalState& s) {
    std::vector<std::pair<double, CVector>> out;
    double n2 = s.amps.squaredNorm();
    if (step.kind == Step::Kind::MeasureUnitary) {
        for (const auto& P : step.projectors) {
            CVector v = P.matrix() * s.amps;
            out.emplace_back(v.squaredNorm() / n2, std::move(v));
        }
    } else {
        int count = step.outcome_count();
        std::vector<CVector> parts(count, CVector::Zero(s.amps.size()));
        for (int i = 0; i < s.space.dim(); ++i) {
            int g = s.space.digit(i, step.slot);
            int sym = step.coarse.empty() ? g : step.coarse[g];
            parts[sym](i) = s.amps(i);
        }
        for (auto& v : parts) out.emplace_back(v.squaredNorm() / n2, std::move(v));
    }
    return out;
}

void apply_correction(const Step& step, LogicalState& s, const MeasurementRecord& rec) {
    int e = step.exponent.evaluate(rec, step.order);
    if (e != 0) s.amps = step.op.pow(e).matrix() * s.amps;
}

void finish_branch(const ProtocolScript& script, const LogicalState& pre, BranchResult& b, double tol) {
    b.heralded = !script.herald || script.herald(b.record);
    LogicalState s = pre.normalized_copy();
    std::vector<int> drop = script.discard;
    std::sort(drop.rbegin(), drop.rend());
    try {
        for (int slot : drop) s = discard_slot(s, slot, 1e-7);
    } catch (const std::runtime_error&) {
        if (b.heralded) throw;
        b.state = s;
        b.fidelity = 0.0;
        return;
    }
    s = s.normalized_copy();
    b.state = s;
    if (script.is_gate()) {
        int din = script.input_group->order();
        int dout = s.space.dim() / din;
        CMatrix M(dout, din);
        for (int i = 0; i < din; ++i)
            for (int j = 0; j < dout; ++j) M(j, i) = s.amps(i * dout + j);
        CMatrix U = M * std::sqrt(static_cast<double>(din));
        b.unitary = U;
        const CMatrix& T = *script.target_unitary;
        if (T.rows() == U.rows() && T.cols() == U.cols()) {
            b.fidelity = std::norm((T.adjoint() * U).trace()) / (double(din) * dout);
            auto pm = equal_up_to_global_phase(U, T, 1e-7);
            b.matches_target = pm.equal;
            b.phase = pm.theta;
        }
    } else if (script.target_state) {
        b.fidelity = fidelity(s.amps, *script.target_state);
        b.matches_target = b.fidelity > 1.0 - tol;
        if (b.matches_target) {
            auto pm = equal_up_to_global_phase(s.amps, *script.target_state, 1e-7);
            b.phase = pm.theta;
        }
    }
}

// Runs every step along the single path picked by the chooser.
BranchResult run_path(const ProtocolScript& script, LogicalState s, Chooser& ch, double tol) {
    BranchResult b;
    b.probability = 1.0;
    if (ch.rng) b.record.seed = ch.rng->seed();
    for (const auto& step : script.steps) {
        if (step.kind == Step::Kind::Correct) {
            apply_correction(step, s, b.record);
            continue;
        }
        auto branches = outcome_branches(step, s);
        int k = -1;
        if (ch.mode == Chooser::Mode::Forced) {
            k = forced_outcome(*ch.forced, step.label);
            if (branches[k].first < 1e-12)
                throw ZeroProbabilityOutcome("outcome " + std::to_string(k) + " of '" + step.label +
                                             "' has zero probability");
        } else {
            double u = ch.rng->uniform(), acc = 0.0;
            for (size_t j = 0; j < branches.size(); ++j) {
                if (branches[j].first < 1e-12) continue;
                k = static_cast<int>(j);
                acc += branches[j].first;
                if (u < acc) break;
            }
        }
        auto& [p, v] = branches[k];
        b.probability *= p;
        cplx ev = step.kind == Step::Kind::MeasureUnitary ? root(k, step.order) : cplx(1.0);
        b.record.entries.push_back({step.label, k, ev, p});
        s.amps = v / v.norm();
    }
    finish_branch(script, s, b, tol);
    return b;
}

void explore(const ProtocolScript& script, size_t i, LogicalState s, BranchResult partial, std::vector<BranchResult>& out,
             double tol) {
    for (; i < script.steps.size(); ++i) {
        const auto& step = script.steps[i];
        if (step.kind != Step::Kind::Correct) break;
        apply_correction(step, s, partial.record);
    }
    if (i == script.steps.size()) {
        finish_branch(script, s, partial, tol);
        out.push_back(std::move(partial));
        return;
    }
    const auto& step = script.steps[i];
    auto branches = outcome_branches(step, s);
    for (size_t k = 0; k < branches.size(); ++k) {
        auto& [p, v] = branches[k];
        if (p < 1e-12) continue;
        BranchResult next = partial;
        next.probability *= p;
        cplx ev = step.kind == Step::Kind::MeasureUnitary ? root(static_cast<int>(k), step.order) : cplx(1.0);
        next.record.entries.push_back({step.label, static_cast<int>(k), ev, p});
        LogicalState ns{s.space, v / v.norm(), true};
        explore(script, i + 1, std::move(ns), std::move(next), out, tol);
    }
}

LogicalState choi_initial(const ProtocolScript& script) {
    int d = script.input_group->order();
    LogicalSpace ref({script.input_group});
    CVector acc;
    LogicalSpace full;
    for (int i = 0; i < d; ++i) {
        auto part = tensor(basis_state(ref, {i}), script.prepare(basis_vector(d, i)));
        if (i == 0) {
            acc = part.amps;
            full = part.space;
        } else {
            acc += part.amps;
        }
    }
    return LogicalState{full, acc / acc.norm(), true};
}

LogicalState initial_state(const ProtocolScript& script) {
    if (script.is_gate()) return choi_initial(script);
    if (!script.initial) throw std::logic_error("protocol script has no initial state");
    return script.initial->normalized_copy();
}

}  // namespace

// ------------------------------------------------------------------ exponents and steps

int Exponent::evaluate(const MeasurementRecord& rec, int modulus) const {
    int parity = sign_const;
    for (const auto& l : sign_labels) parity += rec.value(l);
    int tau = (parity % 2 == 0) ? 1 : -1;
    long long sum = 0;
    for (const auto& t : terms) {
        int v = rec.value(t.label);
        if (t.part == ExpoTerm::Part::Bit0) v &= 1;
        if (t.part == ExpoTerm::Part::Bit1) v = (v >> 1) & 1;
        sum += static_cast<long long>(t.coef) * v;
    }
    return mod((tau == 1 ? offset_plus : offset_minus) + tau * sum, modulus);
}

std::vector<std::string> Exponent::labels() const {
    std::vector<std::string> out = sign_labels;
    for (const auto& t : terms) out.push_back(t.label);
    return out;
}

int Step::outcome_count() const {
    if (kind == Kind::MeasureUnitary) return order;
    if (kind == Kind::Correct) return 0;
    return coarse.empty() ? -1 : *std::max_element(coarse.begin(), coarse.end()) + 1;
}

void ProtocolScript::finalize() {
    std::set<std::string> seen;
    for (auto& s : steps) {
        if (s.kind == Step::Kind::Correct) {
            for (const auto& l : s.exponent.labels())
                if (!seen.count(l)) throw std::logic_error("correction '" + s.label + "' uses unmeasured '" + l + "'");
            continue;
        }
        if (!seen.insert(s.label).second) throw std::logic_error("duplicate measurement label '" + s.label + "'");
        if (s.kind == Step::Kind::MeasureComputational) {
            if (s.coarse.empty()) {
                int n = space.slot(s.slot)->order();
                s.coarse.resize(n);
                for (int g = 0; g < n; ++g) s.coarse[g] = g;
            }
            continue;
        }
        CMatrix check = s.op.pow(s.order).dense() - CMatrix::Identity(space.dim(), space.dim());
        if (check.cwiseAbs().maxCoeff() > 1e-9) throw std::logic_error("measured operator '" + s.label + "' has wrong order");
        s.projectors.clear();
        for (int k = 0; k < s.order; ++k) s.projectors.push_back(cyclic_eigenprojector(s.op, s.order, k));
    }
}

// ------------------------------------------------------------------ runners

ProtocolRun run_exhaustive(const ProtocolScript& script, double tol) {
    ProtocolRun run;
    run.name = script.name;
    explore(script, 0, initial_state(script), BranchResult{MeasurementRecord{}, 1.0, {}, true, 0.0, {}, 0.0, false},
            run.branches, tol);
    run.ok = true;
    for (const auto& b : run.branches) {
        run.total_probability += b.probability;
        if (!b.heralded) continue;
        run.success_probability += b.probability;
        run.min_fidelity = std::min(run.min_fidelity, b.fidelity);
        if (!b.matches_target) run.ok = false;
    }
    if (std::abs(run.total_probability - 1.0) > 1e-8 || run.success_probability <= 0.0) run.ok = false;
    return run;
}

BranchResult run_forced(const ProtocolScript& script, const ForcedRecord& record, double tol) {
    validate_forced(script, record);
    Chooser ch{Chooser::Mode::Forced, &record, nullptr};
    return run_path(script, initial_state(script), ch, tol);
}

BranchResult run_sampled(const ProtocolScript& script, std::uint64_t seed, double tol) {
    CounterRng rng(seed);
    Chooser ch{Chooser::Mode::Sampled, nullptr, &rng};
    return run_path(script, initial_state(script), ch, tol);
}

LogicalState run_gate_on_input(const ProtocolScript& script, const CVector& psi, const ForcedRecord& record) {
    if (!script.is_gate()) throw std::invalid_argument("run_gate_on_input needs a gate protocol");
    validate_forced(script, record);
    LogicalSpace ref({script.input_group});
    LogicalState init = tensor(basis_state(ref, {0}), script.prepare(psi)).normalized_copy();
    Chooser ch{Chooser::Mode::Forced, &record, nullptr};
    ProtocolScript plain = script;
    plain.target_unitary.reset();
    plain.prepare = nullptr;
    plain.initial = init;
    BranchResult b = run_path(plain, init, ch, 1e-9);
    return discard_slot(b.state, 0, 1e-7);
}

// ------------------------------------------------------------------ targets

LogicalState prepare_S_state(int n) {
    if (n < 1) throw std::invalid_argument("n must be positive");
    auto G = build_group(GroupDescriptor::cyclic(4 * n));
    CVector a(4 * n);
    for (int j = 0; j < 4 * n; ++j) a(j) = std::polar(1.0, kPi * j * j / (4.0 * n));
    return slot_state(G, a);
}

CVector dihedral_S_state(int n) {
    auto G = build_group(GroupDescriptor::dihedral(4 * n));
    CVector a = CVector::Zero(G->order());
    for (int j = 0; j < 4 * n; ++j) a(G->dihedral(j, 0)) = std::polar(1.0, kPi * j * j / (4.0 * n));
    return a / a.norm();
}

CVector t_root_state(int n) {
    CVector v(2);
    v << 1.0, std::polar(1.0, kPi / (4.0 * n));
    return v / std::sqrt(2.0);
}

CVector two_qubit_magic_state() {
    cplx w = std::polar(1.0, kPi / 4.0);
    CVector v(4);  // index 2 x_L + x_R
    v << 1.0, w, -1.0, w;
    return v / 2.0;
}

CMatrix two_qubit_gate_target() {
    CMatrix HH = kron(hadamard(), hadamard());
    CMatrix CZ = CMatrix::Identity(4, 4);
    CZ(3, 3) = -1.0;
    CMatrix TdZ = kron(phase_gate(-kPi / 4.0), pauli_z());
    return std::polar(1.0, kPi / 4.0) * HH * CZ * TdZ * HH;
}

CMatrix t_root_gate_target(int n) {
    CMatrix Xn = (n % 2) ? pauli_x() : CMatrix(CMatrix::Identity(2, 2));
    return hadamard() * Xn * phase_gate(kPi / (4.0 * n)) * Xn * hadamard();
}

CVector s3_qubit_target() {
    CVector v(2);
    v << 1.0, root(1, 3);
    return v / std::sqrt(2.0);
}

CVector s3_qutrit_target(cplx theta, const CVector& c) {
    if (c.size() != 3) throw std::invalid_argument("qutrit input needs three coefficients");
    CVector v(3);
    for (int k = 0; k < 3; ++k) v(k) = c(k) + theta * c((k + 2) % 3);
    return v / v.norm();
}

// ------------------------------------------------------------------ scripts

MergeGenerator default_generator(int n) { return n == 1 ? MergeGenerator::RInvS : MergeGenerator::RS; }

ProtocolScript teleport_S_script(int n) {
    if (n < 1) throw std::invalid_argument("n must be positive");
    auto Z = build_group(GroupDescriptor::cyclic(4 * n));
    auto D = build_group(GroupDescriptor::dihedral(4 * n));
    LogicalSpace sp({Z, D});
    int N = 4 * n;
    ProtocolScript sc;
    sc.name = "teleport-s";
    sc.space = sp;
    sc.initial = tensor(prepare_S_state(n), basis_state(LogicalSpace({D}), {0}));
    sc.steps.push_back(measure_step("m_XX", right_mult(sp, 0, Z->element("m")) * left_mult(sp, 1, D->element("r")), N));
    sc.steps.push_back(correct_step("Zbar", rotation_phase(sp, 1), N, linear({term("m_XX")})));
    sc.steps.push_back(readout_step("m_Z", 0));
    sc.steps.push_back(correct_step("Xbar", left_mult(sp, 1, D->element("r")), N, linear({term("m_Z")})));
    sc.discard = {0};
    sc.target_state = dihedral_S_state(n);
    sc.finalize();
    return sc;
}

namespace {

// Measurements shared by the two-qubit magic-state and gate protocols. Slots: D4 at d, Z2xZ2 at q.
void two_qubit_measurements(ProtocolScript& sc, int d, int q) {
    const auto& sp = sc.space;
    const auto& D = *sp.slot(d);
    const auto& Q = *sp.slot(q);
    sc.steps.push_back(measure_step("p", right_mult(sp, d, D.element("r^2")) * left_mult(sp, q, Q.element("m|id")), 2));
    sc.steps.push_back(measure_step("q", right_mult(sp, d, D.element("r^3s")) * left_mult(sp, q, Q.element("id|m")), 2));
    sc.steps.push_back(measure_step("m_x", right_mult(sp, d, D.element("s")), 2));
    sc.steps.push_back(readout_step("m_z", d, rotation_symbols(D)));
}

LogicalOperator qubit_pair_op(const LogicalSpace& sp, int slot, const CMatrix& left, const CMatrix& right) {
    return slot_operator(sp, slot, kron(left, right));
}

}  // namespace

ProtocolScript two_qubit_magic_script() {
    auto D = build_group(GroupDescriptor::dihedral(4));
    auto Q = parse_group("Z2 x Z2");
    LogicalSpace sp({D, Q});
    ProtocolScript sc;
    sc.name = "two-qubit-magic";
    sc.space = sp;
    sc.initial = tensor(slot_state(D, dihedral_S_state(1)), basis_state(LogicalSpace({Q}), {0}));
    two_qubit_measurements(sc, 0, 1);
    CMatrix I = CMatrix::Identity(2, 2);
    using P = ExpoTerm::Part;
    sc.steps.push_back(correct_step("Z_L", qubit_pair_op(sp, 1, pauli_z(), I), 2, linear({term("p")})));
    sc.steps.push_back(correct_step("Z_R", qubit_pair_op(sp, 1, I, pauli_z()), 2,
                                    linear({term("q"), term("m_x"), term("m_z", 1, P::Bit1)})));
    sc.steps.push_back(correct_step("X_L", qubit_pair_op(sp, 1, pauli_x(), I), 2, linear({term("m_z", 1, P::Bit0)})));
    sc.steps.push_back(correct_step("X_R", qubit_pair_op(sp, 1, I, pauli_x()), 2, linear({term("m_z", 1, P::Bit0)})));
    sc.discard = {0};
    sc.target_state = two_qubit_magic_state();
    sc.finalize();
    return sc;
}

ProtocolScript two_qubit_gate_script() {
    auto D = build_group(GroupDescriptor::dihedral(4));
    auto Q = parse_group("Z2 x Z2");
    LogicalSpace sp({Q, D, Q});
    ProtocolScript sc;
    sc.name = "two-qubit-gate";
    sc.space = sp;
    sc.input_group = Q;
    sc.prepare = [D, Q](const CVector& psi) { return tensor(slot_state(D, dihedral_S_state(1)), slot_state(Q, psi)); };
    two_qubit_measurements(sc, 1, 2);
    CMatrix I = CMatrix::Identity(2, 2);
    CMatrix rx = (I + cplx(0, 1) * pauli_x()) / std::sqrt(2.0);  // exp(i pi/4 X)
    using P = ExpoTerm::Part;
    sc.steps.push_back(correct_step("Rx_L", qubit_pair_op(sp, 2, rx, I), 8, linear({term("p")})));
    sc.steps.push_back(correct_step("X_R", qubit_pair_op(sp, 2, I, pauli_x()), 2,
                                    linear({term("p"), term("m_z", 1, P::Bit0)})));
    sc.steps.push_back(correct_step("X_L", qubit_pair_op(sp, 2, pauli_x(), I), 2,
                                    linear({term("q"), term("m_x"), term("m_z", 1, P::Bit1), term("m_z", 1, P::Bit0)})));
    sc.discard = {1};
    sc.target_unitary = two_qubit_gate_target();
    sc.finalize();
    return sc;
}

ProtocolScript t_magic_script(int n, MergeGenerator gen) {
    if (n < 1) throw std::invalid_argument("n must be positive");
    auto D = build_group(GroupDescriptor::dihedral(4 * n));
    auto Z2 = build_group(GroupDescriptor::cyclic(2));
    LogicalSpace sp({D, Z2});
    int N = 4 * n;
    int g = gen == MergeGenerator::RS ? D->dihedral(1, 1) : D->dihedral(N - 1, 1);
    ProtocolScript sc;
    sc.name = "t-magic";
    sc.space = sp;
    sc.initial = tensor(slot_state(D, dihedral_S_state(n)), basis_state(LogicalSpace({Z2}), {0}));
    sc.steps.push_back(measure_step("m_xx", right_mult(sp, 0, g) * left_mult(sp, 1, 1), 2));
    sc.steps.push_back(measure_step("m_x", right_mult(sp, 0, D->element("s")), 2));
    sc.steps.push_back(readout_step("m_z", 0, rotation_symbols(*D)));
    Exponent e = linear({term("m_z"), term("m_xx", 2 * n), term("m_x", 2 * n)});
    if (gen == MergeGenerator::RInvS) e.sign_const = 1;
    sc.steps.push_back(correct_step("P", slot_operator(sp, 1, phase_gate(kPi / (2.0 * n))), N, e));
    sc.discard = {0};
    sc.target_state = t_root_state(n);
    sc.finalize();
    return sc;
}

ProtocolScript t_gate_script(int n, GateVariant variant) {
    if (n < 1) throw std::invalid_argument("n must be positive");
    auto D = build_group(GroupDescriptor::dihedral(4 * n));
    auto Z2 = build_group(GroupDescriptor::cyclic(2));
    LogicalSpace sp({Z2, D, Z2});
    int N = 4 * n;
    ProtocolScript sc;
    sc.name = "t-gate";
    sc.space = sp;
    sc.input_group = Z2;
    sc.prepare = [D, Z2, n](const CVector& psi) { return tensor(slot_state(D, dihedral_S_state(n)), slot_state(Z2, psi)); };
    Step a = measure_step("a", right_mult(sp, 1, D->dihedral(1, 1)), 2);
    Step b = measure_step("b", right_mult(sp, 1, D->dihedral(2 * n + 1, 1)) * left_mult(sp, 2, 1), 2);
    if (variant == GateVariant::A) {
        sc.steps.push_back(a);
        sc.steps.push_back(b);
    } else {
        sc.steps.push_back(b);
        sc.steps.push_back(a);
    }
    sc.steps.push_back(measure_step("m_x", right_mult(sp, 1, D->element("s")), 2));
    sc.steps.push_back(readout_step("m_z", 1, rotation_symbols(*D)));
    Exponent e = linear({term("m_z"), term("m_x", 2 * n), term("a", 2 * n)});
    e.sign_labels = {"a", "b", "m_z"};
    e.sign_const = n;
    e.offset_plus = (n % 2) ? -1 : 0;
    e.offset_minus = (n % 2) ? 0 : 1;
    CMatrix HPH = hadamard() * phase_gate(kPi / (2.0 * n)) * hadamard();
    sc.steps.push_back(correct_step("HPH", slot_operator(sp, 2, HPH), N, e));
    sc.discard = {1};
    sc.target_unitary = t_root_gate_target(n);
    sc.finalize();
    return sc;
}

ProtocolScript s3_qubit_script() {
    auto Z3 = build_group(GroupDescriptor::cyclic(3));
    auto S3 = build_group(GroupDescriptor::symmetric3());
    auto Z2 = build_group(GroupDescriptor::cyclic(2));
    LogicalSpace sp({Z3, S3, Z2});
    CVector phi(3);
    for (int j = 0; j < 3; ++j) phi(j) = root(j, 3);
    ProtocolScript sc;
    sc.name = "s3-qubit";
    sc.space = sp;
    sc.initial = tensor_all({slot_state(Z3, phi), basis_state(LogicalSpace({S3}), {0}), basis_state(LogicalSpace({Z2}), {0})});
    int r = S3->element("r");
    sc.steps.push_back(measure_step("t", right_mult(sp, 0, 1) * left_mult(sp, 1, r), 3));
    sc.steps.push_back(correct_step("Dbar", rotation_phase(sp, 1), 3, linear({term("t")})));
    sc.steps.push_back(readout_step("l", 0));
    sc.steps.push_back(correct_step("L_r", left_mult(sp, 1, r), 3, linear({term("l", -1)})));
    sc.steps.push_back(measure_step("u", right_mult(sp, 1, S3->element("r^2s")) * left_mult(sp, 2, 1), 2));
    sc.steps.push_back(measure_step("v", right_mult(sp, 1, S3->element("s")), 2));
    sc.steps.push_back(readout_step("J", 1, rotation_symbols(*S3)));
    sc.steps.push_back(correct_step("Z", slot_operator(sp, 2, pauli_z()), 2, linear({term("u"), term("v")})));
    sc.discard = {0, 1};
    sc.target_state = s3_qubit_target();
    sc.finalize();
    return sc;
}

ProtocolScript s3_qutrit_script(cplx theta, const CVector& coeffs) {
    if (std::abs(std::abs(theta) - 1.0) > 1e-9) throw std::invalid_argument("theta must have unit modulus");
    if (coeffs.size() != 3 || coeffs.norm() < 1e-12) throw std::invalid_argument("qutrit input needs three coefficients");
    auto Z2 = build_group(GroupDescriptor::cyclic(2));
    auto S3 = build_group(GroupDescriptor::symmetric3());
    auto Z3 = build_group(GroupDescriptor::cyclic(3));
    LogicalSpace sp({Z2, S3, Z3});
    CVector q(2);
    q << 1.0, theta;
    ProtocolScript sc;
    sc.name = "s3-qutrit";
    sc.space = sp;
    sc.initial = tensor_all({slot_state(Z2, q), basis_state(LogicalSpace({S3}), {0}), slot_state(Z3, coeffs)});
    int r2s = S3->element("r^2s");
    sc.steps.push_back(measure_step("u", right_mult(sp, 0, 1) * left_mult(sp, 1, r2s), 2));
    sc.steps.push_back(readout_step("l", 0));
    sc.steps.push_back(correct_step("L_r2s", left_mult(sp, 1, r2s), 2, linear({term("l")})));
    auto sign = slot_diagonal(sp, 1, [&](int g) { return S3->dihedral_parts(g).second ? cplx(-1.0) : cplx(1.0); });
    sc.steps.push_back(correct_step("Z_P", sign, 2, linear({term("u")})));
    sc.steps.push_back(measure_step("t", right_mult(sp, 1, S3->element("r")) * left_mult(sp, 2, 1), 3));
    sc.steps.push_back(measure_step("v", right_mult(sp, 1, S3->element("s")), 2));
    sc.steps.push_back(readout_step("J", 1, rotation_symbols(*S3)));
    sc.herald = [](const MeasurementRecord& rec) { return rec.value("t") == 0 && rec.value("v") == 0 && rec.value("J") == 0; };
    sc.discard = {0, 1};
    sc.target_state = s3_qutrit_target(theta, coeffs);
    sc.finalize();
    return sc;
}

// ------------------------------------------------------------------ wrappers

LogicalState teleport_S_to_dihedral(int n, const ForcedRecord& record) {
    return run_forced(teleport_S_script(n), record).state;
}

ProtocolRun magic_state_two_qubit() { return run_exhaustive(two_qubit_magic_script()); }
ProtocolRun gate_teleport_two_qubit() { return run_exhaustive(two_qubit_gate_script()); }
ProtocolRun magic_state_single_qubit(int n) { return run_exhaustive(t_magic_script(n, default_generator(n))); }
ProtocolRun gate_teleport_single_qubit(int n, GateVariant v) { return run_exhaustive(t_gate_script(n, v)); }
ProtocolRun s3_qubit_magic() { return run_exhaustive(s3_qubit_script()); }
ProtocolRun s3_qutrit_magic(cplx theta, const CVector& coeffs) { return run_exhaustive(s3_qutrit_script(theta, coeffs)); }

// ------------------------------------------------------------------ simultaneity

SimultaneityReport simultaneity_check() {
    auto Z4 = build_group(GroupDescriptor::cyclic(4));
    auto D4 = build_group(GroupDescriptor::dihedral(4));
    auto Z2 = build_group(GroupDescriptor::cyclic(2));
    LogicalSpace sp({Z4, D4, Z2});
    int r = D4->element("r"), r3s = D4->element("r^3s");
    auto P1 = gauge_projector(sp, 0, 1, diagonal_from_generators(Z4, D4, {{1, r}}));
    auto P2 = gauge_projector(sp, 1, 2, diagonal_from_generators(D4, Z2, {{r3s, 1}}));
    auto T1 = gauge_projector(sp, 0, 1, trivial_diagonal(Z4, D4));
    auto T2 = gauge_projector(sp, 1, 2, trivial_diagonal(D4, Z2));
    auto comm = [](const LogicalOperator& A, const LogicalOperator& B) {
        SparseOp c = A.matrix() * B.matrix() - B.matrix() * A.matrix();
        double m = 0.0;
        for (int k = 0; k < c.outerSize(); ++k)
            for (SparseOp::InnerIterator it(c, k); it; ++it) m = std::max(m, std::abs(it.value()));
        return m;
    };
    SimultaneityReport rep;
    rep.commutator_surgery = comm(P1, P2);
    std::vector<LogicalOperator> readout;
    for (int x = 0; x < 4; ++x) readout.push_back(slot_diagonal(sp, 0, [x](int g) { return g == x ? cplx(1.0) : cplx(0.0); }));
    for (const auto& R : readout) rep.commutator_readout = std::max(rep.commutator_readout, comm(R, P2));
    rep.commutator_trivial = std::max({comm(T1, P1), comm(T1, P2), comm(T2, P1), comm(T2, P2)});

    // Outcome projectors of the three measurements; the merge with Z4 comes first in every ordering.
    auto XX = right_mult(sp, 0, 1) * left_mult(sp, 1, r);
    auto xx = right_mult(sp, 1, r3s) * left_mult(sp, 2, 1);
    std::vector<LogicalOperator> pXX, pxx;
    for (int k = 0; k < 4; ++k) pXX.push_back(cyclic_eigenprojector(XX, 4, k));
    for (int k = 0; k < 2; ++k) pxx.push_back(cyclic_eigenprojector(xx, 2, k));
    CVector psi = tensor_all({prepare_S_state(1), basis_state(LogicalSpace({D4}), {0}), basis_state(LogicalSpace({Z2}), {0})})
                      .amps;
    psi /= psi.norm();
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 4; ++c) {
                const SparseOp &A = pXX[a].matrix(), &B = pxx[b].matrix(), &C = readout[c].matrix();
                CVector v1 = B * (C * (A * psi));
                CVector v2 = C * (B * (A * psi));
                CVector v3 = C * (A * (B * psi));
                if (v1.norm() > 1e-9) ++rep.branches;
                rep.max_branch_deviation = std::max({rep.max_branch_deviation, (v1 - v2).norm(), (v1 - v3).norm()});
            }
    rep.ok = rep.commutator_surgery < 1e-12 && rep.commutator_readout < 1e-12 && rep.commutator_trivial < 1e-12 &&
             rep.max_branch_deviation < 1e-12 && rep.branches > 0;
    return rep;
}

// ------------------------------------------------------------------ Clifford hierarchy

namespace {

bool is_pauli(const CMatrix& V) {
    static const std::vector<CMatrix> paulis = [] {
        CMatrix Y(2, 2);
        Y << 0, cplx(0, -1), cplx(0, 1), 0;
        return std::vector<CMatrix>{CMatrix::Identity(2, 2), pauli_x(), Y, pauli_z()};
    }();
    for (const auto& P : paulis)
        if (equal_up_to_global_phase(V, P, 1e-8).equal) return true;
    return false;
}

bool in_level(const CMatrix& V, int k) {
    if (k == 1) return is_pauli(V);
    CMatrix Y(2, 2);
    Y << 0, cplx(0, -1), cplx(0, 1), 0;
    for (const CMatrix& P : {pauli_x(), Y, pauli_z()})
        if (!in_level(V * P * V.adjoint(), k - 1)) return false;
    return true;
}

}  // namespace

int clifford_level(const CMatrix& U, int max_level) {
    if (U.rows() != 2 || U.cols() != 2) throw std::invalid_argument("clifford_level expects a single-qubit unitary");
    for (int k = 1; k <= max_level; ++k)
        if (in_level(U, k)) return k;
    return 0;
}

// ------------------------------------------------------------------ JSON

nlohmann::json branch_to_json(const BranchResult& b) {
    nlohmann::json j;
    j["record"] = record_to_json(b.record);
    j["probability"] = b.probability;
    j["heralded"] = b.heralded;
    j["fidelity"] = b.fidelity;
    j["matches_target"] = b.matches_target;
    j["global_phase"] = b.phase;
    if (b.unitary) j["unitary"] = matrix_to_json(*b.unitary);
    else j["state"] = state_to_json(b.state);
    return j;
}

nlohmann::json run_to_json(const ProtocolRun& run) {
    nlohmann::json j;
    j["protocol"] = run.name;
    j["ok"] = run.ok;
    j["total_probability"] = run.total_probability;
    j["success_probability"] = run.success_probability;
    j["min_fidelity"] = run.min_fidelity;
    j["branch_count"] = run.branches.size();
    j["branches"] = nlohmann::json::array();
    for (const auto& b : run.branches) j["branches"].push_back(branch_to_json(b));
    return j;
}

}  // namespace hyb
