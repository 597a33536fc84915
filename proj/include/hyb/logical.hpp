#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <json.hpp>

#include "hyb/group.hpp"

namespace hyb {

using SparseOp = Eigen::SparseMatrix<cplx, Eigen::ColMajor>;

// Tensor product C[G_1] x ... x C[G_k]; slot 0 is the most significant digit.
class LogicalSpace {
public:
    LogicalSpace() = default;
    explicit LogicalSpace(std::vector<GroupPtr> slots);

    int num_slots() const { return static_cast<int>(slots_.size()); }
    const GroupPtr& slot(int i) const { return slots_.at(i); }
    const std::vector<GroupPtr>& slots() const { return slots_; }
    int dim() const { return dim_; }
    int stride(int i) const { return strides_.at(i); }

    int encode(const std::vector<int>& elems) const;
    std::vector<int> decode(int index) const;
    int digit(int index, int slot) const { return (index / strides_[slot]) % slots_[slot]->order(); }
    int with_digit(int index, int slot, int value) const {
        return index + (value - digit(index, slot)) * strides_[slot];
    }
    std::string basis_label(int index) const;

    LogicalSpace without(int slot) const;
    bool same_as(const LogicalSpace& other) const;

private:
    std::vector<GroupPtr> slots_;
    std::vector<int> strides_;
    int dim_ = 1;
};

struct LogicalState {
    LogicalSpace space;
    CVector amps;
    bool normalized = false;

    double norm() const { return amps.norm(); }
    LogicalState normalized_copy() const;
};

class LogicalOperator {
public:
    LogicalOperator() = default;
    LogicalOperator(LogicalSpace space, SparseOp m) : space_(std::move(space)), m_(std::move(m)) {}

    static LogicalOperator identity(const LogicalSpace& space);
    static LogicalOperator from_dense(const LogicalSpace& space, const CMatrix& m);

    const LogicalSpace& space() const { return space_; }
    const SparseOp& matrix() const { return m_; }
    CMatrix dense() const { return CMatrix(m_); }

    LogicalOperator operator*(const LogicalOperator& other) const;
    LogicalOperator operator+(const LogicalOperator& other) const;
    LogicalOperator operator-(const LogicalOperator& other) const;
    LogicalOperator scaled(cplx c) const;
    LogicalOperator adjoint() const;
    LogicalOperator pow(int e) const;  // e >= 0

    LogicalState apply(const LogicalState& s) const;
    bool is_normal(double tol = 1e-9) const;
    bool is_permutation() const;
    // Sparse action: for each column, the (row, coefficient) list.
    std::vector<std::vector<std::pair<int, cplx>>> columns() const;

private:
    LogicalSpace space_;
    SparseOp m_;
};

LogicalState basis_state(const LogicalSpace& space, const std::vector<int>& elems);
LogicalState state_from_amplitudes(const LogicalSpace& space, CVector amps);
LogicalState tensor(const LogicalState& a, const LogicalState& b);

// A local matrix (|G| x |G|, indexed by element) acting on one slot.
LogicalOperator slot_operator(const LogicalSpace& space, int slot, const CMatrix& local);
// Slot-diagonal operator |g> -> f(g)|g>.
LogicalOperator slot_diagonal(const LogicalSpace& space, int slot, const std::function<cplx(int)>& f);

LogicalOperator left_mult(const LogicalSpace& space, int slot, int g);   // |h> -> |gh>
LogicalOperator right_mult(const LogicalSpace& space, int slot, int g);  // |h> -> |h g^-1>
LogicalOperator irrep_diag(const LogicalSpace& space, int slot, const Irrep& R, int i, int j);

// (1/|K|) sum_k R^k on slot a times L^{p(k)} on slot b. The cocycle must be trivial here.
LogicalOperator gauge_projector(const LogicalSpace& space, int slot_a, int slot_b, const DiagonalSubgroup& diag,
                                const std::optional<Cocycle2>& phi = std::nullopt);

class ZeroProbabilityOutcome : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Counter-based generator (splitmix64 over seed + counter).
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed = 0) : seed_(seed) {}
    std::uint64_t next();
    double uniform();  // [0, 1)
    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

struct MeasureOutcome {
    cplx eigenvalue;
    LogicalState state;  // normalized
    double probability = 0.0;
};

struct EigenBranch {
    cplx eigenvalue;
    LogicalOperator projector;
};

// Spectral projectors of a normal operator; eigenvalues clustered within 1e-8.
std::vector<EigenBranch> spectral_projectors(const LogicalOperator& op);

MeasureOutcome measure(const LogicalState& s, const LogicalOperator& op, CounterRng& rng);
MeasureOutcome measure_forced(const LogicalState& s, const LogicalOperator& op, cplx eigenvalue);

// Projector onto the eigenvalue exp(2 pi i k / order) of a unitary with U^order = 1.
LogicalOperator cyclic_eigenprojector(const LogicalOperator& U, int order, int k);

struct ComputationalOutcome {
    int symbol = 0;
    LogicalState state;
    double probability = 0.0;
};

// symbol_of maps each element of the slot's group to a coarse symbol; empty means identity.
std::vector<double> computational_probabilities(const LogicalState& s, int slot, const std::vector<int>& symbol_of = {});
ComputationalOutcome measure_computational(const LogicalState& s, int slot, CounterRng& rng,
                                           const std::vector<int>& symbol_of = {});
ComputationalOutcome measure_computational_forced(const LogicalState& s, int slot, int symbol,
                                                  const std::vector<int>& symbol_of = {});

// Removes a slot carrying a product factor; throws if the slot is entangled.
LogicalState discard_slot(const LogicalState& s, int slot, double tol = 1e-9);

struct PhaseMatch {
    bool equal = false;
    double theta = 0.0;  // A = e^{i theta} B
};
PhaseMatch equal_up_to_global_phase(const CMatrix& A, const CMatrix& B, double tol = 1e-9);

// |<a|b>|^2 / (|a|^2 |b|^2)
double fidelity(const CVector& a, const CVector& b);

struct RecordEntry {
    std::string label;
    int outcome = 0;  // symbol, or k for the eigenvalue exp(2 pi i k / order)
    cplx eigenvalue{1.0, 0.0};
    double probability = 1.0;
};

struct MeasurementRecord {
    std::vector<RecordEntry> entries;
    std::uint64_t seed = 0;

    const RecordEntry* find(const std::string& label) const;
    int value(const std::string& label) const;  // throws if absent
};

nlohmann::json state_to_json(const LogicalState& s, double tol = 1e-12);
nlohmann::json record_to_json(const MeasurementRecord& r);
nlohmann::json matrix_to_json(const CMatrix& m);

}  // namespace hyb
