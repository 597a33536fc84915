#include "hyb/logical.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace hyb {

// ---------------------------------------------------------------- spaces

LogicalSpace::LogicalSpace(std::vector<GroupPtr> slots) : slots_(std::move(slots)) {
    strides_.assign(slots_.size(), 1);
    long long d = 1;
    for (int i = static_cast<int>(slots_.size()) - 1; i >= 0; --i) {
        strides_[i] = static_cast<int>(d);
        d *= slots_[i]->order();
        if (d > (1LL << 26)) throw std::invalid_argument("logical space too large");
    }
    dim_ = static_cast<int>(d);
}

int LogicalSpace::encode(const std::vector<int>& elems) const {
    if (elems.size() != slots_.size()) throw std::invalid_argument("slot/element count mismatch");
    int idx = 0;
    for (size_t i = 0; i < elems.size(); ++i) {
        if (elems[i] < 0 || elems[i] >= slots_[i]->order())
            throw std::invalid_argument("element out of range for slot " + std::to_string(i));
        idx += elems[i] * strides_[i];
    }
    return idx;
}

std::vector<int> LogicalSpace::decode(int index) const {
    std::vector<int> out(slots_.size());
    for (size_t i = 0; i < slots_.size(); ++i) out[i] = digit(index, static_cast<int>(i));
    return out;
}

std::string LogicalSpace::basis_label(int index) const {
    std::string out;
    for (int i = 0; i < num_slots(); ++i) {
        if (i) out += ",";
        out += slots_[i]->label(digit(index, i));
    }
    return out;
}

LogicalSpace LogicalSpace::without(int slot) const {
    auto s = slots_;
    s.erase(s.begin() + slot);
    return LogicalSpace(std::move(s));
}

bool LogicalSpace::same_as(const LogicalSpace& other) const {
    if (slots_.size() != other.slots_.size()) return false;
    for (size_t i = 0; i < slots_.size(); ++i)
        if (slots_[i]->name() != other.slots_[i]->name()) return false;
    return true;
}

LogicalState LogicalState::normalized_copy() const {
    double n = norm();
    if (n < 1e-300) throw ZeroProbabilityOutcome("cannot normalize the zero vector");
    return LogicalState{space, amps / n, true};
}

// ---------------------------------------------------------------- operators

LogicalOperator LogicalOperator::identity(const LogicalSpace& space) {
    SparseOp m(space.dim(), space.dim());
    m.setIdentity();
    return {space, m};
}

LogicalOperator LogicalOperator::from_dense(const LogicalSpace& space, const CMatrix& d) {
    if (d.rows() != space.dim() || d.cols() != space.dim()) throw std::invalid_argument("dense operator shape mismatch");
    return {space, d.sparseView(cplx(1.0), 1e-14)};
}

LogicalOperator LogicalOperator::operator*(const LogicalOperator& o) const {
    if (!space_.same_as(o.space_)) throw std::invalid_argument("operator spaces differ");
    SparseOp p = m_ * o.m_;
    p.prune(cplx(1.0), 1e-14);
    return {space_, p};
}

LogicalOperator LogicalOperator::operator+(const LogicalOperator& o) const {
    if (!space_.same_as(o.space_)) throw std::invalid_argument("operator spaces differ");
    return {space_, SparseOp(m_ + o.m_)};
}

LogicalOperator LogicalOperator::operator-(const LogicalOperator& o) const {
    if (!space_.same_as(o.space_)) throw std::invalid_argument("operator spaces differ");
    return {space_, SparseOp(m_ - o.m_)};
}

LogicalOperator LogicalOperator::scaled(cplx c) const { return {space_, SparseOp(m_ * c)}; }

LogicalOperator LogicalOperator::adjoint() const { return {space_, SparseOp(m_.adjoint())}; }

LogicalOperator LogicalOperator::pow(int e) const {
    if (e < 0) throw std::invalid_argument("negative operator power");
    LogicalOperator acc = identity(space_), base = *this;
    while (e) {
        if (e & 1) acc = acc * base;
        e >>= 1;
        if (e) base = base * base;
    }
    return acc;
}

LogicalState LogicalOperator::apply(const LogicalState& s) const {
    if (!space_.same_as(s.space)) throw std::invalid_argument("operator and state spaces differ");
    return LogicalState{s.space, m_ * s.amps, false};
}

bool LogicalOperator::is_normal(double tol) const {
    SparseOp a = m_ * m_.adjoint();
    SparseOp b = m_.adjoint() * m_;
    return CMatrix(a - b).cwiseAbs().maxCoeff() <= tol;
}

bool LogicalOperator::is_permutation() const {
    std::vector<int> row_hits(space_.dim(), 0);
    for (int k = 0; k < m_.outerSize(); ++k) {
        int nnz = 0;
        for (SparseOp::InnerIterator it(m_, k); it; ++it) {
            if (std::abs(it.value()) < 1e-14) continue;
            if (std::abs(it.value() - cplx(1.0)) > 1e-12) return false;
            ++nnz;
            ++row_hits[it.row()];
        }
        if (nnz != 1) return false;
    }
    return std::all_of(row_hits.begin(), row_hits.end(), [](int h) { return h == 1; });
}

std::vector<std::vector<std::pair<int, cplx>>> LogicalOperator::columns() const {
    std::vector<std::vector<std::pair<int, cplx>>> out(space_.dim());
    for (int k = 0; k < m_.outerSize(); ++k)
        for (SparseOp::InnerIterator it(m_, k); it; ++it) out[k].emplace_back(static_cast<int>(it.row()), it.value());
    return out;
}

LogicalState basis_state(const LogicalSpace& space, const std::vector<int>& elems) {
    LogicalState s{space, CVector::Zero(space.dim()), true};
    s.amps(space.encode(elems)) = 1.0;
    return s;
}

LogicalState state_from_amplitudes(const LogicalSpace& space, CVector amps) {
    if (amps.size() != space.dim()) throw std::invalid_argument("amplitude count does not match the space");
    return LogicalState{space, std::move(amps), false};
}

LogicalState tensor(const LogicalState& a, const LogicalState& b) {
    auto slots = a.space.slots();
    slots.insert(slots.end(), b.space.slots().begin(), b.space.slots().end());
    LogicalSpace sp(slots);
    CVector v(sp.dim());
    for (int i = 0; i < a.space.dim(); ++i) v.segment(i * b.space.dim(), b.space.dim()) = a.amps(i) * b.amps;
    return LogicalState{sp, v, a.normalized && b.normalized};
}

LogicalOperator slot_operator(const LogicalSpace& space, int slot, const CMatrix& local) {
    int n = space.slot(slot)->order();
    if (local.rows() != n || local.cols() != n) throw std::invalid_argument("local operator shape mismatch");
    std::vector<Eigen::Triplet<cplx>> trips;
    for (int col = 0; col < space.dim(); ++col) {
        int x = space.digit(col, slot);
        for (int y = 0; y < n; ++y) {
            cplx v = local(y, x);
            if (std::abs(v) > 1e-15) trips.emplace_back(space.with_digit(col, slot, y), col, v);
        }
    }
    SparseOp m(space.dim(), space.dim());
    m.setFromTriplets(trips.begin(), trips.end());
    return {space, m};
}

LogicalOperator slot_diagonal(const LogicalSpace& space, int slot, const std::function<cplx(int)>& f) {
    int n = space.slot(slot)->order();
    CMatrix local = CMatrix::Zero(n, n);
    for (int g = 0; g < n; ++g) local(g, g) = f(g);
    return slot_operator(space, slot, local);
}

LogicalOperator left_mult(const LogicalSpace& space, int slot, int g) {
    const auto& G = *space.slot(slot);
    CMatrix local = CMatrix::Zero(G.order(), G.order());
    for (int h = 0; h < G.order(); ++h) local(G.mul(g, h), h) = 1.0;
    return slot_operator(space, slot, local);
}

LogicalOperator right_mult(const LogicalSpace& space, int slot, int g) {
    const auto& G = *space.slot(slot);
    CMatrix local = CMatrix::Zero(G.order(), G.order());
    for (int h = 0; h < G.order(); ++h) local(G.mul(h, G.inv(g)), h) = 1.0;
    return slot_operator(space, slot, local);
}

LogicalOperator irrep_diag(const LogicalSpace& space, int slot, const Irrep& R, int i, int j) {
    if (i < 0 || j < 0 || i >= R.dim || j >= R.dim) throw std::invalid_argument("irrep matrix index out of range");
    if (R.domain.parent->name() != space.slot(slot)->name() || R.domain.size() != space.slot(slot)->order())
        throw std::invalid_argument("irrep does not belong to the slot's group");
    return slot_diagonal(space, slot, [&](int g) { return R.at(g)(i, j); });
}

LogicalOperator gauge_projector(const LogicalSpace& space, int slot_a, int slot_b, const DiagonalSubgroup& diag,
                                const std::optional<Cocycle2>& phi) {
    if (space.slot(slot_a)->name() != diag.left->name() || space.slot(slot_b)->name() != diag.right->name())
        throw std::invalid_argument("slot groups do not match the diagonal subgroup");
    if (phi && !phi->is_trivial())
        throw std::invalid_argument("logical gauge projector supports only the trivial cocycle");
    SparseOp acc(space.dim(), space.dim());
    for (auto [k, pk] : diag.pairs) acc += (right_mult(space, slot_a, k) * left_mult(space, slot_b, pk)).matrix();
    acc *= cplx(1.0 / diag.size());
    acc.prune(cplx(1.0), 1e-14);
    return {space, acc};
}

// ---------------------------------------------------------------- measurement

std::uint64_t CounterRng::next() {
    std::uint64_t z = seed_ + 0x9e3779b97f4a7c15ULL * (++counter_);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double CounterRng::uniform() { return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0); }

std::vector<EigenBranch> spectral_projectors(const LogicalOperator& op) {
    CMatrix A = op.dense();
    Eigen::ComplexEigenSolver<CMatrix> es(A, false);
    std::vector<cplx> distinct;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        cplx l = es.eigenvalues()(i);
        bool seen = false;
        for (auto& d : distinct)
            if (std::abs(d - l) < 1e-8) seen = true;
        if (!seen) distinct.push_back(l);
    }
    // Snap to nearby "nice" values so that outcomes compare exactly across runs.
    for (auto& d : distinct) {
        double re = std::round(d.real() * 1e9) / 1e9, im = std::round(d.imag() * 1e9) / 1e9;
        d = cplx(re == 0.0 ? 0.0 : re, im == 0.0 ? 0.0 : im);
    }
    std::sort(distinct.begin(), distinct.end(), [](cplx a, cplx b) {
        double pa = std::arg(a), pb = std::arg(b);
        if (pa < -1e-9) pa += 2 * M_PI;
        if (pb < -1e-9) pb += 2 * M_PI;
        if (std::abs(pa - pb) > 1e-9) return pa < pb;
        return std::abs(a) < std::abs(b);
    });
    std::vector<EigenBranch> out;
    CMatrix I = CMatrix::Identity(A.rows(), A.cols());
    for (auto l : distinct) {
        CMatrix P = I;
        for (auto m : distinct)
            if (m != l) P = P * (A - m * I) / (l - m);
        out.push_back({l, LogicalOperator::from_dense(op.space(), P)});
    }
    return out;
}

namespace {

MeasureOutcome project(const LogicalState& s, const LogicalOperator& P, cplx eigenvalue) {
    LogicalState post = P.apply(s);
    double n0 = s.norm();
    double n1 = post.norm();
    double p = (n1 * n1) / (n0 * n0);
    if (p < 1e-14) throw ZeroProbabilityOutcome("outcome has zero probability");
    return {eigenvalue, post.normalized_copy(), p};
}

}  // namespace

MeasureOutcome measure(const LogicalState& s, const LogicalOperator& op, CounterRng& rng) {
    auto branches = spectral_projectors(op);
    double u = rng.uniform(), acc = 0.0;
    double n0 = s.norm();
    for (size_t i = 0; i < branches.size(); ++i) {
        double n1 = branches[i].projector.apply(s).norm();
        acc += n1 * n1 / (n0 * n0);
        if (u < acc || i + 1 == branches.size()) {
            if (n1 < 1e-12) continue;
            return project(s, branches[i].projector, branches[i].eigenvalue);
        }
    }
    // Roundoff pushed u past the last non-empty branch.
    for (auto it = branches.rbegin(); it != branches.rend(); ++it)
        if (it->projector.apply(s).norm() > 1e-12) return project(s, it->projector, it->eigenvalue);
    throw ZeroProbabilityOutcome("no outcome with positive probability");
}

MeasureOutcome measure_forced(const LogicalState& s, const LogicalOperator& op, cplx eigenvalue) {
    for (auto& b : spectral_projectors(op))
        if (std::abs(b.eigenvalue - eigenvalue) < 1e-8) return project(s, b.projector, b.eigenvalue);
    throw ZeroProbabilityOutcome("requested eigenvalue is not in the spectrum");
}

LogicalOperator cyclic_eigenprojector(const LogicalOperator& U, int order, int k) {
    SparseOp acc(U.space().dim(), U.space().dim());
    LogicalOperator power = LogicalOperator::identity(U.space());
    for (int j = 0; j < order; ++j) {
        double ang = -2.0 * M_PI * static_cast<double>((static_cast<long long>(j) * k) % order) / order;
        acc += power.matrix() * std::polar(1.0, ang);
        power = U * power;
    }
    acc *= cplx(1.0 / order);
    acc.prune(cplx(1.0), 1e-13);
    return {U.space(), acc};
}

namespace {

int symbol_for(const std::vector<int>& symbol_of, int g) { return symbol_of.empty() ? g : symbol_of.at(g); }

int symbol_count(const LogicalState& s, int slot, const std::vector<int>& symbol_of) {
    if (symbol_of.empty()) return s.space.slot(slot)->order();
    if (static_cast<int>(symbol_of.size()) != s.space.slot(slot)->order())
        throw std::invalid_argument("coarse map must cover every group element");
    return *std::max_element(symbol_of.begin(), symbol_of.end()) + 1;
}

}  // namespace

std::vector<double> computational_probabilities(const LogicalState& s, int slot, const std::vector<int>& symbol_of) {
    std::vector<double> p(symbol_count(s, slot, symbol_of), 0.0);
    double n2 = s.amps.squaredNorm();
    for (int i = 0; i < s.space.dim(); ++i) p[symbol_for(symbol_of, s.space.digit(i, slot))] += std::norm(s.amps(i)) / n2;
    return p;
}

ComputationalOutcome measure_computational_forced(const LogicalState& s, int slot, int symbol,
                                                  const std::vector<int>& symbol_of) {
    LogicalState post{s.space, s.amps, false};
    for (int i = 0; i < s.space.dim(); ++i)
        if (symbol_for(symbol_of, s.space.digit(i, slot)) != symbol) post.amps(i) = 0.0;
    double p = post.amps.squaredNorm() / s.amps.squaredNorm();
    if (p < 1e-14) throw ZeroProbabilityOutcome("computational outcome has zero probability");
    return {symbol, post.normalized_copy(), p};
}

ComputationalOutcome measure_computational(const LogicalState& s, int slot, CounterRng& rng,
                                           const std::vector<int>& symbol_of) {
    auto probs = computational_probabilities(s, slot, symbol_of);
    double u = rng.uniform(), acc = 0.0;
    int last = -1;
    for (size_t k = 0; k < probs.size(); ++k) {
        if (probs[k] < 1e-14) continue;
        last = static_cast<int>(k);
        acc += probs[k];
        if (u < acc) return measure_computational_forced(s, slot, last, symbol_of);
    }
    if (last < 0) throw ZeroProbabilityOutcome("state has zero norm");
    return measure_computational_forced(s, slot, last, symbol_of);
}

LogicalState discard_slot(const LogicalState& s, int slot, double tol) {
    LogicalSpace rest = s.space.without(slot);
    int n = s.space.slot(slot)->order();
    CMatrix M = CMatrix::Zero(n, rest.dim());
    for (int i = 0; i < s.space.dim(); ++i) {
        auto e = s.space.decode(i);
        int x = e[slot];
        e.erase(e.begin() + slot);
        M(x, rest.encode(e)) = s.amps(i);
    }
    Eigen::Index best = 0;
    M.rowwise().norm().maxCoeff(&best);
    CVector v = M.row(best).transpose();
    double vn2 = v.squaredNorm();
    if (vn2 < 1e-300) throw ZeroProbabilityOutcome("cannot discard a slot of the zero vector");
    double resid = 0.0;
    for (int x = 0; x < n; ++x) {
        cplx c = v.dot(M.row(x).transpose()) / vn2;
        resid = std::max(resid, (M.row(x).transpose() - c * v).norm());
    }
    if (resid > tol * std::max(1.0, s.norm())) throw std::runtime_error("slot is entangled with the rest; cannot discard");
    LogicalState out{rest, v, false};
    return s.normalized ? out.normalized_copy() : out;
}

PhaseMatch equal_up_to_global_phase(const CMatrix& A, const CMatrix& B, double tol) {
    if (A.rows() != B.rows() || A.cols() != B.cols()) return {};
    Eigen::Index r = 0, c = 0;
    B.cwiseAbs().maxCoeff(&r, &c);
    if (std::abs(B(r, c)) < 1e-300) return {A.cwiseAbs().maxCoeff() <= tol, 0.0};
    cplx ph = A(r, c) / B(r, c);
    if (std::abs(std::abs(ph) - 1.0) > tol) return {};
    ph /= std::abs(ph);
    if ((A - ph * B).cwiseAbs().maxCoeff() > tol) return {};
    return {true, std::arg(ph)};
}

double fidelity(const CVector& a, const CVector& b) {
    double na = a.squaredNorm(), nb = b.squaredNorm();
    if (na < 1e-300 || nb < 1e-300) return 0.0;
    return std::norm(a.dot(b)) / (na * nb);
}

const RecordEntry* MeasurementRecord::find(const std::string& label) const {
    for (const auto& e : entries)
        if (e.label == label) return &e;
    return nullptr;
}

int MeasurementRecord::value(const std::string& label) const {
    const auto* e = find(label);
    if (!e) throw std::out_of_range("measurement '" + label + "' not in record");
    return e->outcome;
}

// ---------------------------------------------------------------- json

namespace {

double clean(double x) { return std::abs(x) < 1e-15 ? 0.0 : x; }

}  // namespace

nlohmann::json state_to_json(const LogicalState& s, double tol) {
    nlohmann::json slots = nlohmann::json::array();
    for (const auto& g : s.space.slots()) slots.push_back(g->name());
    nlohmann::json amps = nlohmann::json::array();
    for (int i = 0; i < s.space.dim(); ++i)
        if (std::abs(s.amps(i)) > tol)
            amps.push_back(nlohmann::json::array({s.space.basis_label(i), clean(s.amps(i).real()), clean(s.amps(i).imag())}));
    return {{"slots", slots}, {"amplitudes", amps}};
}

nlohmann::json record_to_json(const MeasurementRecord& r) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& e : r.entries)
        out.push_back({{"label", e.label},
                       {"outcome", e.outcome},
                       {"eigenvalue", {clean(e.eigenvalue.real()), clean(e.eigenvalue.imag())}},
                       {"probability", e.probability}});
    return out;
}

nlohmann::json matrix_to_json(const CMatrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({clean(m(i, j).real()), clean(m(i, j).imag())});
        rows.push_back(row);
    }
    return rows;
}

}  // namespace hyb
