#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hyb/logical.hpp"

namespace hyb {

// Exponent of a correction operator as an affine function of recorded outcomes:
//   e = off(tau) + tau * sum(coef * part(outcome)),  tau = (-1)^(sign_const + sum of sign outcomes).
struct ExpoTerm {
    enum class Part { Value, Bit0, Bit1 };
    std::string label;
    int coef = 1;
    Part part = Part::Value;
};

struct Exponent {
    std::vector<ExpoTerm> terms;
    std::vector<std::string> sign_labels;
    int sign_const = 0;
    int offset_plus = 0;
    int offset_minus = 0;

    int evaluate(const MeasurementRecord& rec, int modulus) const;
    std::vector<std::string> labels() const;
};

struct Step {
    enum class Kind { MeasureUnitary, MeasureComputational, Correct };
    Kind kind = Kind::MeasureUnitary;
    std::string label;
    LogicalOperator op;  // measured unitary (op^order = 1) or correction base
    int order = 1;
    int slot = -1;            // computational readout
    std::vector<int> coarse;  // element -> symbol; empty = full readout
    Exponent exponent;        // corrections
    std::vector<LogicalOperator> projectors;  // filled by finalize()

    int outcome_count() const;
};

struct ProtocolScript {
    std::string name;
    LogicalSpace space;
    std::vector<Step> steps;
    std::vector<int> discard;  // slots removed at the end (any order)

    // Magic-state scripts: fixed initial state and target.
    std::optional<LogicalState> initial;
    std::optional<CVector> target_state;

    // Gate scripts: slot 0 is a reference copy of the input; prepare builds the other slots.
    std::function<LogicalState(const CVector&)> prepare;
    GroupPtr input_group;
    std::optional<CMatrix> target_unitary;

    // Optional success condition; branches failing it are reported, not corrected.
    std::function<bool(const MeasurementRecord&)> herald;

    bool is_gate() const { return static_cast<bool>(prepare); }
    void finalize();  // validates labels and caches projectors
};

struct BranchResult {
    MeasurementRecord record;
    double probability = 0.0;
    LogicalState state;  // normalized output; for gates the (reference, output) Choi state
    bool heralded = true;
    double fidelity = 0.0;  // state fidelity, or |tr(T^dag U)|^2 / d^2 for gates
    std::optional<CMatrix> unitary;
    double phase = 0.0;  // U = e^{i phase} T when equal up to phase
    bool matches_target = false;
};

struct ProtocolRun {
    std::string name;
    std::vector<BranchResult> branches;
    double total_probability = 0.0;
    double success_probability = 0.0;
    double min_fidelity = 1.0;  // over heralded branches
    bool ok = false;
};

using ForcedRecord = std::vector<std::pair<std::string, int>>;

ProtocolRun run_exhaustive(const ProtocolScript& script, double tol = 1e-9);
BranchResult run_forced(const ProtocolScript& script, const ForcedRecord& record, double tol = 1e-9);
BranchResult run_sampled(const ProtocolScript& script, std::uint64_t seed, double tol = 1e-9);
// Gate scripts only: output state for a given input and forced record.
LogicalState run_gate_on_input(const ProtocolScript& script, const CVector& psi, const ForcedRecord& record);

// --- states and gates used as targets

LogicalState prepare_S_state(int n);            // sum_j e^{i pi j^2 / 4n} |m^j> on Z_{4n}, unnormalized
CVector dihedral_S_state(int n);                // same amplitudes on r^j in D_{4n}
CVector t_root_state(int n);                    // (|0> + e^{i pi/4n}|1>)/sqrt2
CVector two_qubit_magic_state();                // |M>_{LR}
CMatrix two_qubit_gate_target();                // e^{i pi/4} HH CZ (T^dag x Z) HH
CMatrix t_root_gate_target(int n);              // H X^n T^{1/n} X^n H
CVector s3_qubit_target();                      // (|0> + w|1>)/sqrt2, w = e^{2 pi i/3}
CVector s3_qutrit_target(cplx theta, const CVector& coeffs);

// --- protocol scripts

enum class MergeGenerator { RS, RInvS };  // <(rs,m)> or <(r^{-1}s,m)>
enum class GateVariant { A, B };

ProtocolScript teleport_S_script(int n);
ProtocolScript two_qubit_magic_script();
ProtocolScript two_qubit_gate_script();
ProtocolScript t_magic_script(int n, MergeGenerator gen);
ProtocolScript t_gate_script(int n, GateVariant variant);
ProtocolScript s3_qubit_script();
ProtocolScript s3_qutrit_script(cplx theta, const CVector& coeffs);

// Default merge generator: r^3 s for n = 1, rs otherwise.
MergeGenerator default_generator(int n);

// --- convenience wrappers

LogicalState teleport_S_to_dihedral(int n, const ForcedRecord& record);
ProtocolRun magic_state_two_qubit();
ProtocolRun gate_teleport_two_qubit();
ProtocolRun magic_state_single_qubit(int n);
ProtocolRun gate_teleport_single_qubit(int n, GateVariant variant = GateVariant::A);
ProtocolRun s3_qubit_magic();
ProtocolRun s3_qutrit_magic(cplx theta, const CVector& coeffs);

struct SimultaneityReport {
    double commutator_surgery = 0.0;        // [P_{Z4|D4}, P_{D4|Z2}]
    double commutator_readout = 0.0;        // max over Z4 readout projectors vs P_{D4|Z2}
    double commutator_trivial = 0.0;        // trivial-K projectors vs both
    double max_branch_deviation = 0.0;      // order-swapped runs
    int branches = 0;
    bool ok = false;
};
SimultaneityReport simultaneity_check();

// Smallest Clifford-hierarchy level (1 = Pauli) of a single-qubit unitary, or 0 if above max_level.
int clifford_level(const CMatrix& U, int max_level = 8);

nlohmann::json run_to_json(const ProtocolRun& run);
nlohmann::json branch_to_json(const BranchResult& b);

}  // namespace hyb
