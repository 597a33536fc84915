#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hyb/group.hpp"
#include "hyb/logical.hpp"

namespace hyb {

// ---------------------------------------------------------------- limits

inline constexpr std::uint64_t kDefaultAmplitudeCap = std::uint64_t{1} << 24;

// kDefaultAmplitudeCap unless HYB_CAP_AMPLITUDES is set.
std::uint64_t default_amplitude_cap();

class CapExceeded : public std::runtime_error {
public:
    CapExceeded(std::uint64_t required, std::uint64_t allowed);
    std::uint64_t required() const { return required_; }
    std::uint64_t allowed() const { return allowed_; }

private:
    std::uint64_t required_, allowed_;
};

// Worker threads used by state-vector kernels (1 = serial). Results do not depend on it.
void set_lattice_threads(int n);
int lattice_threads();

// ---------------------------------------------------------------- layout

// Boundary (K, phi) on a rough side: adds a column of vertical G-edges with B^K and A~^{K,phi}.
struct BoundaryCondition {
    Subgroup K;
    std::optional<Cocycle2> phi;
};

struct LatticeEdge {
    int index = 0;
    bool vertical = false;
    int patch = -1;  // -1 on the interface
    int line = 0;    // vertical edges: vertex column; horizontal edges: segment column
    int row = 0;     // vertical edges: lower row
    int tail = -1, head = -1;  // -1 for dangling rough ends
    GroupPtr group;
};

// factor -1 acts with the full vertex group element, 0 / 1 with a product component.
struct StarEntry {
    int edge = 0;
    bool outgoing = false;
    int factor = -1;
};

struct LatticeVertex {
    int index = 0;
    int patch = -1;
    int line = 0;
    int row = 0;
    GroupPtr group;
    std::vector<StarEntry> star;
    int boundary_line = -1;  // index into Layout::boundary_lines, -1 for an ordinary vertex
    int down = -1, up = -1;  // vertical edges
};

struct WalkEntry {
    int edge = 0;
    bool forward = true;  // orientation agrees with the clockwise walk
    int factor = -1;
};

struct LatticePlaquette {
    int index = 0;
    int patch = 0;
    int col = 0;
    int row = 0;
    GroupPtr group;
    std::vector<WalkEntry> walk;  // clockwise from the left edge
};

// A vertex column carrying a (K, phi) term: a rough-side override or the merge interface.
struct BoundaryLine {
    GroupPtr group;
    Subgroup K;
    std::optional<Cocycle2> phi;
    std::vector<int> vertices;  // bottom to top
    std::vector<int> edges;     // vertical edges, bottom to top
    bool interface = false;
};

struct PatchInfo {
    GroupPtr group;
    int w = 1, h = 1;
    int first_edge = 0, num_edges = 0;
    std::vector<int> left_column, right_column;  // horizontal edges by row, bottom to top
    std::vector<int> top_row;                     // horizontal edges of the top row, left to right
    std::optional<BoundaryCondition> left_bc, right_bc;
};

class Layout;
using LayoutPtr = std::shared_ptr<const Layout>;

class Layout : public std::enable_shared_from_this<Layout> {
public:
    enum class Kind { Patch, Pair, Hybrid };

    Kind kind() const { return kind_; }
    const std::vector<LatticeEdge>& edges() const { return edges_; }
    const std::vector<LatticeVertex>& vertices() const { return vertices_; }
    const std::vector<LatticePlaquette>& plaquettes() const { return plaquettes_; }
    const std::vector<BoundaryLine>& boundary_lines() const { return lines_; }
    const std::vector<PatchInfo>& patches() const { return patches_; }
    // Patch-only layouts of each patch (a Patch layout returns itself).
    LayoutPtr standalone(int patch) const;
    // Hybrid: the disjoint pair it was merged from.
    const LayoutPtr& base() const { return base_; }
    // Hybrid: generators of K^diag used for outcome measurements.
    const std::vector<int>& interface_generators() const { return generators_; }

    int num_edges() const { return static_cast<int>(edges_.size()); }
    int radix(int e) const { return edges_[e].group->order(); }
    std::uint64_t stride(int e) const { return strides_[e]; }
    std::uint64_t dimension() const { return dim_; }
    int digit(std::uint64_t index, int e) const { return static_cast<int>((index / strides_[e]) % radix(e)); }

    int plaquette_at(int patch, int col, int row) const;
    int vertex_at(int patch, int line, int row) const;  // patch -1 for the interface line
    int interface_edge(int row) const;

    std::string describe() const;
    nlohmann::json to_json() const;
    // Builder arguments; enough to rebuild the layout.
    const nlohmann::json& recipe() const { return recipe_; }

private:
    friend struct LayoutBuilder;
    Kind kind_ = Kind::Patch;
    std::vector<LatticeEdge> edges_;
    std::vector<LatticeVertex> vertices_;
    std::vector<LatticePlaquette> plaquettes_;
    std::vector<BoundaryLine> lines_;
    std::vector<PatchInfo> patches_;
    std::vector<LayoutPtr> standalone_;
    LayoutPtr base_;
    std::vector<int> generators_;
    std::vector<std::uint64_t> strides_;
    std::uint64_t dim_ = 1;
    nlohmann::json recipe_;
};

// w plaquette columns, h plaquette rows. Smooth top/bottom, rough left/right unless overridden.
// Edges are numbered row by row from the bottom; in each row the vertical edges above it come
// before its horizontal edges.
LayoutPtr build_patch(const GroupPtr& G, int w, int h, const std::optional<BoundaryCondition>& left = std::nullopt,
                      const std::optional<BoundaryCondition>& right = std::nullopt,
                      std::uint64_t cap = default_amplitude_cap());

// Two patches side by side with equal h; edges of the left patch first.
LayoutPtr build_pair(const LayoutPtr& left, const LayoutPtr& right, std::uint64_t cap = default_amplitude_cap());

struct InterfaceSpec {
    DiagonalSubgroup diag;
    GroupPtr product;             // G x G'
    Subgroup K;                   // K^diag inside G x G'
    std::optional<Cocycle2> phi;  // on K^diag as a subgroup of G x G'
    std::vector<int> generators;  // elements of G x G' generating K^diag
    std::string name;
};

InterfaceSpec make_interface(const GroupPtr& G, const GroupPtr& Gp, const std::vector<std::pair<int, int>>& gens,
                             std::optional<Cocycle2> phi = std::nullopt, std::string name = {});

// Pair layout plus one column of (G x G')-edges between the patches.
LayoutPtr build_hybrid(const LayoutPtr& pair, const InterfaceSpec& spec, std::uint64_t cap = default_amplitude_cap());

LayoutPtr layout_from_recipe(const nlohmann::json& recipe, std::uint64_t cap = default_amplitude_cap());

// ---------------------------------------------------------------- operators

// Generalized permutation with coefficients on the configurations of a few edges.
struct LocalOp {
    std::vector<int> edges;
    std::vector<int> radix;
    std::vector<int> target;  // local configuration -> local configuration (a permutation)
    std::vector<cplx> coeff;  // coefficient of each source configuration

    int local_dim() const { return static_cast<int>(target.size()); }
    std::vector<int> decode(int local) const;
    int encode(const std::vector<int>& digits) const;
};

using ConfigMap = std::function<cplx(std::vector<int>& digits)>;  // rewrites digits, returns coefficient

LocalOp make_local_op(const Layout& L, std::vector<int> edges, const ConfigMap& f);
LocalOp identity_op(const Layout& L, std::vector<int> edges = {});
LocalOp compose(const LocalOp& a, const LocalOp& b);  // a after b
LocalOp inverse(const LocalOp& a);                    // requires nonzero coefficients
LocalOp group_commutator(const LocalOp& a, const LocalOp& b);  // a b a^-1 b^-1
double op_distance(const LocalOp& a, const LocalOp& b);        // max entry difference on the joint support

struct OpTerm {
    cplx weight;
    LocalOp op;
};
using OpSum = std::vector<OpTerm>;

LocalOp edge_left(const Layout& L, int e, int g);
LocalOp edge_right(const Layout& L, int e, int g);
LocalOp edge_diagonal(const Layout& L, int e, const std::function<cplx(int)>& f);

// A_v^(g): L^g on outgoing, R^g on incoming edges of the (truncated) star.
LocalOp vertex_op(const Layout& L, int v, int g);
// A~_v^(k) with the cocycle phases phi(x, k^-1) phi(k, y); x, y the vertical edges below and above.
LocalOp boundary_vertex_op(const Layout& L, int v, int k);
// B_p^(g): projector onto clockwise holonomy g.
LocalOp plaquette_op(const Layout& L, int p, int g);
int plaquette_holonomy(const Layout& L, int p, const std::vector<int>& edge_values);

OpSum vertex_projector(const Layout& L, int v);  // A_v or A~_v^{K,phi}
OpSum boundary_edge_projector(const Layout& L, int line, int e);  // B^K on a boundary edge

// Logical strings: L^g on the left column, R^g on the right column of a patch.
LocalOp logical_left(const Layout& L, int patch, int g);
LocalOp logical_right(const Layout& L, int patch, int g);

// ---------------------------------------------------------------- ribbons

struct RibbonStep {
    int edge = 0;
    bool direct = true;
    // direct: edge points along the ribbon; dual: edge points away from the direct path.
    bool forward = true;
};

struct Ribbon {
    std::vector<RibbonStep> steps;
};

// Along the horizontal edges of a row, crossing the vertical edges below it (above it for row 0).
Ribbon horizontal_ribbon(const Layout& L, int patch, int row);
// Bottom to top along vertex column `line`, crossing the horizontal edges to its right.
Ribbon vertical_ribbon(const Layout& L, int patch, int line);
void validate_ribbon(const Layout& L, const Ribbon& xi);

// F^{h,g}: projects the direct-path product onto g, multiplies dual edges by ^{y^-1}h.
LocalOp ribbon_op(const Layout& L, const Ribbon& xi, int h, int g);

// Anyon-basis ribbon for ([g], pi) with u = (i, j), v = (i', j'). Coset representatives are the
// minimal-index element of each coset of C_g.
struct RibbonLabel {
    int class_rep = 0;
    int irrep = 0;  // index into centralizer_irreps(G, class_rep).irreps
    int i = 0, j = 0, ip = 0, jp = 0;
};
OpSum ribbon_anyon_op(const Layout& L, const Ribbon& xi, const RibbonLabel& a);
std::vector<int> coset_representatives(const GroupPtr& G, int g);

// Hybrid horizontal logical T^{(h,h')}: sum over K^diag of the top-row projectors.
OpSum hybrid_t_operator(const Layout& L, int h, int hp);

// ---------------------------------------------------------------- states

struct LatticeState {
    LayoutPtr layout;
    std::vector<cplx> amps;

    double norm() const;
    void normalize();
};

LatticeState basis_product_state(const LayoutPtr& L, const std::vector<int>& edge_values = {});
LatticeState apply(const LocalOp& op, const LatticeState& s);
LatticeState apply(const OpSum& op, const LatticeState& s);
cplx inner(const LatticeState& a, const LatticeState& b);
cplx expectation(const LatticeState& s, const LocalOp& op);
cplx expectation(const LatticeState& s, const OpSum& op);

// (prod A_v)|id...> normalized; for a pair, the product of the two fiducial states.
LatticeState fiducial_state(const LayoutPtr& L);
// L-bar^g |Phi_id> on a single patch.
LatticeState logical_basis_state(const LayoutPtr& L, int g);

// Patch and pair layouts only; slot i is patch i.
LatticeState encode_logical(const LayoutPtr& L, const LogicalState& s);
LogicalState decode_logical(const LatticeState& s, double* residual = nullptr);

struct TermCheck {
    std::string name;
    cplx value;
};
std::vector<TermCheck> term_expectations(const LatticeState& s);
double max_term_violation(const LatticeState& s);  // max |1 - <P>| over all projector terms

// Counts flat configurations weighted by the stabilizer trace; exact for small layouts.
int code_space_dimension(const Layout& L);

// ---------------------------------------------------------------- surgery

struct MergeOptions {
    enum class Mode { Project, Measure };
    Mode mode = Mode::Project;
    // Measure mode: outcome exponents per interface vertex (bottom to top) and generator.
    std::optional<std::vector<std::vector<int>>> forced;
    std::uint64_t seed = 0;
    std::uint64_t cap = default_amplitude_cap();
};

struct MergeResult {
    LatticeState state;  // on the hybrid layout, normalized
    std::vector<std::vector<int>> outcomes;  // m_v per vertex and generator (eigenvalue exp(2 pi i m / ord))
    std::vector<int> totals;                 // sum over vertices per generator
    double probability = 1.0;
};

MergeResult merge(const LatticeState& pair, const InterfaceSpec& spec, const MergeOptions& opt = {});

struct FluxFlag {
    int plaquette = 0;
    int patch = 0;
    int holonomy = -1;  // definite holonomy, -1 if the state mixes several
};

struct CorrectionOp {
    int patch = 0;
    int edge = 0;
    bool left = false;  // L^g (true) or R^g
    int element = 0;
};

struct SplitOptions {
    std::optional<std::vector<int>> forced;  // interface edge values (elements of G x G'), bottom to top
    std::uint64_t seed = 0;
    bool correct = true;
};

struct SplitResult {
    LatticeState state;  // on the pair layout, normalized
    std::vector<int> outcomes;
    std::vector<FluxFlag> flagged;  // violated plaquettes before corrections
    std::vector<CorrectionOp> corrections;
    double probability = 1.0;
};

SplitResult split(const LatticeState& hybrid, const SplitOptions& opt = {});

// Plaquettes whose B^(id) term is violated, with the holonomy when it is definite.
std::vector<FluxFlag> flux_flags(const LatticeState& s, double tol = 1e-9);

// ---------------------------------------------------------------- vertex measurement

struct VertexBranch {
    int eigen = 0;   // A_v^(g) eigenvalue exp(2 pi i eigen / ord(g))
    int coset = 0;   // ancilla coset representative of <g> (0 for the direct measurement)
    double probability = 0.0;
    LatticeState state;
};

std::vector<VertexBranch> direct_vertex_measurement(const LatticeState& s, int v, int g);
// Ancilla prepared in the trivial irrep, controlled multiplications, ancilla read in the L^g eigenbasis.
std::vector<VertexBranch> ancilla_vertex_measurement(const LatticeState& s, int v, int g);

// ---------------------------------------------------------------- cross-check

struct Fragment {
    std::string name;
    GroupPtr left, right;
    std::vector<std::pair<int, int>> generators;
};

std::vector<std::string> fragment_names();
Fragment fragment_by_name(const std::string& name);

struct CrossCheckOptions {
    int rows = 1;
    int left_width = 1;
    int right_width = 1;
    std::uint64_t seed = 7;
    std::optional<LogicalState> initial;  // default: seeded random state
    std::uint64_t cap = default_amplitude_cap();
};

struct CrossBranch {
    std::vector<std::vector<int>> vertex_outcomes;
    std::vector<int> totals;
    std::vector<int> split_outcomes;
    double probability = 0.0;
    double deviation = 0.0;  // lattice vs logical, after phase alignment
    double residual = 0.0;   // weight outside the logical basis
    double violation = 0.0;  // worst stabilizer term after corrections
};

struct CrossCheckReport {
    std::string fragment;
    int rows = 1;
    std::uint64_t amplitudes = 0;
    std::vector<CrossBranch> branches;
    double max_deviation = 0.0;
    double max_probability_deviation = 0.0;
    double max_residual = 0.0;
    double max_violation = 0.0;
    double total_probability = 0.0;
    bool ok = false;

    nlohmann::json to_json() const;
};

LogicalState random_logical_state(const LogicalSpace& space, std::uint64_t seed);
CrossCheckReport lattice_vs_logical(const Fragment& f, const CrossCheckOptions& opt = {});

// ---------------------------------------------------------------- snapshots

// <prefix>.json (layout and metadata) and <prefix>.bin (little-endian complex64 amplitudes).
void write_snapshot(const std::string& prefix, const LatticeState& s);
LatticeState read_snapshot(const std::string& prefix);

}  // namespace hyb
