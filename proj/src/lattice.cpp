#include "hyb/lattice.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

namespace hyb {

namespace {

std::atomic<int> g_threads{1};
constexpr std::uint64_t kBlock = std::uint64_t{1} << 14;

// body(begin, end) over fixed-size blocks; the partition does not depend on the thread count.
template <class F>
void for_blocks(std::uint64_t n, F&& body) {
    std::uint64_t nblocks = (n + kBlock - 1) / kBlock;
    int t = static_cast<int>(std::min<std::uint64_t>(static_cast<std::uint64_t>(lattice_threads()), nblocks));
    if (t <= 1) {
        for (std::uint64_t b = 0; b < nblocks; ++b) body(b * kBlock, std::min(n, (b + 1) * kBlock));
        return;
    }
    std::atomic<std::uint64_t> next{0};
    std::vector<std::thread> pool;
    for (int k = 0; k < t; ++k)
        pool.emplace_back([&] {
            for (std::uint64_t b; (b = next++) < nblocks;) body(b * kBlock, std::min(n, (b + 1) * kBlock));
        });
    for (auto& th : pool) th.join();
}

template <class T, class F>
T reduce_blocks(std::uint64_t n, F&& partial) {
    std::uint64_t nblocks = (n + kBlock - 1) / kBlock;
    std::vector<T> parts(nblocks, T{});
    for_blocks(n, [&](std::uint64_t a, std::uint64_t b) { parts[a / kBlock] = partial(a, b); });
    T total{};
    for (const auto& p : parts) total += p;
    return total;
}

// Global-index view of a LocalOp.
struct Kernel {
    std::vector<std::uint64_t> strides;
    std::vector<int> radix, lstride;
    std::vector<std::uint64_t> off;

    int local(std::uint64_t i) const {
        int lc = 0;
        for (size_t j = 0; j < strides.size(); ++j) lc += static_cast<int>((i / strides[j]) % radix[j]) * lstride[j];
        return lc;
    }
};

Kernel make_kernel(const Layout& L, const LocalOp& op) {
    Kernel k;
    k.radix = op.radix;
    k.lstride.assign(op.edges.size(), 1);
    for (int j = static_cast<int>(op.edges.size()) - 2; j >= 0; --j) k.lstride[j] = k.lstride[j + 1] * op.radix[j + 1];
    for (int e : op.edges) {
        if (e < 0 || e >= L.num_edges()) throw std::out_of_range("operator edge outside the layout");
        k.strides.push_back(L.stride(e));
    }
    k.off.resize(op.target.size());
    for (int lc = 0; lc < op.local_dim(); ++lc) {
        std::uint64_t o = 0;
        auto d = op.decode(lc);
        for (size_t j = 0; j < d.size(); ++j) o += static_cast<std::uint64_t>(d[j]) * k.strides[j];
        k.off[lc] = o;
    }
    return k;
}

int component(const FiniteGroup& G, int g, int factor) {
    if (factor < 0) return g;
    auto [a, b] = G.split(g);
    return factor == 0 ? a : b;
}

int act_on_edge(const FiniteGroup& eg, int x, int a, bool outgoing) {
    return outgoing ? eg.mul(a, x) : eg.mul(x, eg.inv(a));
}

int walk_holonomy(const Layout& L, const LatticePlaquette& P, const std::vector<int>& vals) {
    const FiniteGroup& G = *P.group;
    int h = 0;
    for (size_t j = 0; j < P.walk.size(); ++j) {
        const auto& w = P.walk[j];
        int c = component(*L.edges()[w.edge].group, vals[j], w.factor);
        h = G.mul(h, w.forward ? c : G.inv(c));
    }
    return h;
}

std::vector<int> union_edges(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> u(a);
    u.insert(u.end(), b.begin(), b.end());
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    return u;
}

std::vector<int> union_radix(const std::vector<int>& U, const LocalOp& a, const LocalOp& b) {
    std::vector<int> r;
    for (int e : U) {
        auto ia = std::find(a.edges.begin(), a.edges.end(), e);
        if (ia != a.edges.end()) r.push_back(a.radix[ia - a.edges.begin()]);
        else r.push_back(b.radix[std::find(b.edges.begin(), b.edges.end(), e) - b.edges.begin()]);
    }
    return r;
}

std::vector<int> local_strides(const std::vector<int>& radix) {
    std::vector<int> st(radix.size(), 1);
    for (int j = static_cast<int>(radix.size()) - 2; j >= 0; --j) st[j] = st[j + 1] * radix[j + 1];
    return st;
}

// Advances digits in odometer order; acc tracks sum of digit * weight.
void advance(std::vector<int>& d, const std::vector<int>& radix, const std::vector<int>& weight, int& acc) {
    for (int j = static_cast<int>(d.size()) - 1; j >= 0; --j) {
        ++d[j];
        acc += weight[j];
        if (d[j] < radix[j]) return;
        acc -= weight[j] * radix[j];
        d[j] = 0;
    }
}

LocalOp extend(const LocalOp& a, const std::vector<int>& U, const std::vector<int>& R) {
    if (a.edges == U) return a;
    LocalOp out;
    out.edges = U;
    out.radix = R;
    const int n = static_cast<int>(U.size());
    const int dim = std::accumulate(R.begin(), R.end(), 1, std::multiplies<int>());
    auto ustride = local_strides(R);
    auto astride = local_strides(a.radix);
    std::vector<int> to_a(n, 0), pos;
    for (size_t k = 0; k < a.edges.size(); ++k) {
        pos.push_back(static_cast<int>(std::find(U.begin(), U.end(), a.edges[k]) - U.begin()));
        to_a[pos.back()] = astride[k];
    }
    std::vector<int> a_off(a.local_dim(), 0);
    for (int t = 0; t < a.local_dim(); ++t) {
        auto td = a.decode(t);
        for (size_t k = 0; k < td.size(); ++k) a_off[t] += td[k] * ustride[pos[k]];
    }
    out.target.resize(dim);
    out.coeff.resize(dim);
    std::vector<int> d(n, 0);
    int slc = 0;
    for (int lc = 0; lc < dim; ++lc) {
        out.target[lc] = lc - a_off[slc] + a_off[a.target[slc]];
        out.coeff[lc] = a.coeff[slc];
        advance(d, R, to_a, slc);
    }
    return out;
}

nlohmann::json bc_to_json(const std::optional<BoundaryCondition>& bc) {
    if (!bc) return nullptr;
    nlohmann::json j;
    for (int m : bc->K.members) j["K"].push_back(bc->K.parent->label(m));
    if (bc->phi) {
        for (cplx v : bc->phi->values) j["phi"].push_back({v.real(), v.imag()});
    } else {
        j["phi"] = nullptr;
    }
    return j;
}

std::optional<Cocycle2> phi_from_json(const nlohmann::json& j, const Subgroup& K) {
    if (j.is_null()) return std::nullopt;
    Cocycle2 phi{K, {}};
    for (const auto& v : j) phi.values.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
    if (phi.values.size() != static_cast<size_t>(K.size()) * K.size())
        throw std::invalid_argument("cocycle table has the wrong size");
    return phi;
}

std::optional<BoundaryCondition> bc_from_json(const nlohmann::json& j, const GroupPtr& G) {
    if (j.is_null()) return std::nullopt;
    std::vector<int> members;
    for (const auto& l : j.at("K")) members.push_back(G->element(l.get<std::string>()));
    Subgroup K = make_subgroup(G, members);
    return BoundaryCondition{K, phi_from_json(j.value("phi", nlohmann::json()), K)};
}

void check_phi(const std::optional<Cocycle2>& phi, const Subgroup& K) {
    if (!phi) return;
    if (phi->domain.members != K.members) throw std::invalid_argument("cocycle domain differs from K");
    auto rep = verify_cocycle(Cocycle2{K, phi->values});
    if (!rep.ok()) throw std::invalid_argument("boundary cocycle fails: " + rep.summary());
}

const char* kind_name(Layout::Kind k) {
    switch (k) {
        case Layout::Kind::Patch: return "patch";
        case Layout::Kind::Pair: return "pair";
        default: return "hybrid";
    }
}

int find_edge(const Layout& L, int patch, bool vertical, int line, int row) {
    for (const auto& e : L.edges())
        if (e.patch == patch && e.vertical == vertical && e.line == line && e.row == row) return e.index;
    return -1;
}

}  // namespace

// ---------------------------------------------------------------- limits

std::uint64_t default_amplitude_cap() {
    if (const char* env = std::getenv("HYB_CAP_AMPLITUDES")) {
        try {
            size_t used = 0;
            std::string s(env);
            auto v = std::stoull(s, &used);
            if (used == s.size() && v > 0) return v;
        } catch (const std::exception&) {
        }
        throw std::invalid_argument(std::string("HYB_CAP_AMPLITUDES is not a positive integer: ") + env);
    }
    return kDefaultAmplitudeCap;
}

CapExceeded::CapExceeded(std::uint64_t required, std::uint64_t allowed)
    : std::runtime_error("state needs " + std::to_string(required) + " amplitudes, cap is " + std::to_string(allowed)),
      required_(required),
      allowed_(allowed) {}

void set_lattice_threads(int n) { g_threads = std::max(1, n); }
int lattice_threads() { return g_threads; }

// ---------------------------------------------------------------- layout

struct LayoutBuilder {
    static std::shared_ptr<Layout> fresh(Layout::Kind k) {
        auto L = std::make_shared<Layout>();
        L->kind_ = k;
        return L;
    }

    static void add_patch(Layout& L, const GroupPtr& G, int w, int h, std::optional<BoundaryCondition> left,
                          std::optional<BoundaryCondition> right) {
        if (w < 1 || h < 1) throw std::invalid_argument("patch needs w >= 1 and h >= 1");
        for (auto* bc : {&left, &right}) {
            if (!*bc) continue;
            if ((*bc)->K.parent->name() != G->name()) throw std::invalid_argument("boundary K is not a subgroup of the patch group");
            (*bc)->K.parent = G;
            check_phi((*bc)->phi, (*bc)->K);
            if ((*bc)->phi) (*bc)->phi->domain = (*bc)->K;
        }
        const int patch = static_cast<int>(L.patches_.size());
        PatchInfo P;
        P.group = G;
        P.w = w;
        P.h = h;
        P.first_edge = L.num_edges();
        P.left_bc = left;
        P.right_bc = right;
        auto has_line = [&](int c) { return (c >= 1 && c <= w - 1) || (c == 0 && left) || (c == w && right); };

        int lineL = -1, lineR = -1;
        if (left) {
            lineL = static_cast<int>(L.lines_.size());
            L.lines_.push_back(BoundaryLine{G, left->K, left->phi, {}, {}, false});
        }
        if (right) {
            lineR = static_cast<int>(L.lines_.size());
            L.lines_.push_back(BoundaryLine{G, right->K, right->phi, {}, {}, false});
        }
        auto line_of = [&](int c) { return c == 0 && left ? lineL : (c == w && right ? lineR : -1); };

        std::vector<int> vid((w + 1) * (h + 1), -1);
        auto V = [&](int c, int y) { return vid[y * (w + 1) + c]; };
        for (int y = 0; y <= h; ++y)
            for (int c = 0; c <= w; ++c) {
                if (!has_line(c)) continue;
                LatticeVertex v;
                v.index = static_cast<int>(L.vertices_.size());
                v.patch = patch;
                v.line = c;
                v.row = y;
                v.group = G;
                v.boundary_line = line_of(c);
                if (v.boundary_line >= 0) L.lines_[v.boundary_line].vertices.push_back(v.index);
                vid[y * (w + 1) + c] = v.index;
                L.vertices_.push_back(v);
            }

        std::vector<int> vert((w + 1) * h, -1), hor(w * (h + 1), -1);
        auto add_edge = [&](bool vertical, int line, int row, int tail, int head) {
            LatticeEdge e;
            e.index = L.num_edges();
            e.vertical = vertical;
            e.patch = patch;
            e.line = line;
            e.row = row;
            e.tail = tail;
            e.head = head;
            e.group = G;
            L.edges_.push_back(e);
            return e.index;
        };
        for (int y = 0; y <= h; ++y) {
            if (y < h)
                for (int c = 0; c <= w; ++c) {
                    if (!has_line(c)) continue;
                    int e = add_edge(true, c, y, V(c, y), V(c, y + 1));
                    vert[y * (w + 1) + c] = e;
                    if (line_of(c) >= 0) L.lines_[line_of(c)].edges.push_back(e);
                }
            for (int c = 0; c < w; ++c) hor[y * w + c] = add_edge(false, c, y, V(c, y), V(c + 1, y));
        }
        auto VE = [&](int c, int y) { return vert[y * (w + 1) + c]; };
        auto HE = [&](int c, int y) { return hor[y * w + c]; };

        for (auto& v : L.vertices_) {
            if (v.patch != patch) continue;
            int c = v.line, y = v.row;
            if (c >= 1) v.star.push_back({HE(c - 1, y), false, -1});
            if (y >= 1) {
                v.down = VE(c, y - 1);
                v.star.push_back({v.down, false, -1});
            }
            if (c <= w - 1) v.star.push_back({HE(c, y), true, -1});
            if (y < h) {
                v.up = VE(c, y);
                v.star.push_back({v.up, true, -1});
            }
        }

        for (int y = 0; y < h; ++y)
            for (int c = 0; c < w; ++c) {
                LatticePlaquette p;
                p.index = static_cast<int>(L.plaquettes_.size());
                p.patch = patch;
                p.col = c;
                p.row = y;
                p.group = G;
                if (VE(c, y) >= 0) p.walk.push_back({VE(c, y), true, -1});
                p.walk.push_back({HE(c, y + 1), true, -1});
                if (VE(c + 1, y) >= 0) p.walk.push_back({VE(c + 1, y), false, -1});
                p.walk.push_back({HE(c, y), false, -1});
                L.plaquettes_.push_back(p);
            }

        P.num_edges = L.num_edges() - P.first_edge;
        for (int y = 0; y <= h; ++y) {
            P.left_column.push_back(HE(0, y));
            P.right_column.push_back(HE(w - 1, y));
        }
        for (int c = 0; c < w; ++c) P.top_row.push_back(HE(c, h));
        L.patches_.push_back(P);
    }

    static void finalize(Layout& L, std::uint64_t cap) {
        long double req = 1.0L;
        for (const auto& e : L.edges_) req *= e.group->order();
        if (req > static_cast<long double>(cap)) {
            auto r = req >= 1.8e19L ? std::numeric_limits<std::uint64_t>::max() : static_cast<std::uint64_t>(req);
            throw CapExceeded(r, cap);
        }
        L.strides_.assign(L.edges_.size(), 1);
        std::uint64_t s = 1;
        for (int e = L.num_edges() - 1; e >= 0; --e) {
            L.strides_[e] = s;
            s *= static_cast<std::uint64_t>(L.radix(e));
        }
        L.dim_ = s;
    }

    static LayoutPtr patch(const GroupPtr& G, int w, int h, const std::optional<BoundaryCondition>& left,
                           const std::optional<BoundaryCondition>& right, std::uint64_t cap) {
        auto L = fresh(Layout::Kind::Patch);
        add_patch(*L, G, w, h, left, right);
        L->recipe_ = {{"kind", "patch"}, {"group", G->name()}, {"w", w}, {"h", h},
                      {"left", bc_to_json(left)}, {"right", bc_to_json(right)}};
        finalize(*L, cap);
        return L;
    }

    static LayoutPtr pair(const LayoutPtr& a, const LayoutPtr& b, std::uint64_t cap) {
        if (!a || !b || a->kind() != Layout::Kind::Patch || b->kind() != Layout::Kind::Patch)
            throw std::invalid_argument("pair needs two patch layouts");
        const auto& pa = a->patches()[0];
        const auto& pb = b->patches()[0];
        if (pa.h != pb.h) throw std::invalid_argument("paired patches need the same height");
        auto L = fresh(Layout::Kind::Pair);
        add_patch(*L, pa.group, pa.w, pa.h, pa.left_bc, pa.right_bc);
        add_patch(*L, pb.group, pb.w, pb.h, pb.left_bc, pb.right_bc);
        L->standalone_ = {a, b};
        L->recipe_ = {{"kind", "pair"}, {"left", a->recipe()}, {"right", b->recipe()}};
        finalize(*L, cap);
        return L;
    }

    static LayoutPtr hybrid(const LayoutPtr& pr, const InterfaceSpec& spec, std::uint64_t cap) {
        if (!pr || pr->kind() != Layout::Kind::Pair) throw std::invalid_argument("merge needs a pair layout");
        const auto& P0 = pr->patches()[0];
        const auto& P1 = pr->patches()[1];
        if (spec.diag.left->name() != P0.group->name() || spec.diag.right->name() != P1.group->name())
            throw std::invalid_argument("interface groups do not match the patches");
        if (P0.right_bc || P1.left_bc) throw std::invalid_argument("merged sides must be rough");
        check_phi(spec.phi, spec.K);

        auto L = fresh(Layout::Kind::Hybrid);
        L->edges_ = pr->edges_;
        L->vertices_ = pr->vertices_;
        L->plaquettes_ = pr->plaquettes_;
        L->lines_ = pr->lines_;
        L->patches_ = pr->patches_;
        L->standalone_ = pr->standalone_;
        L->base_ = pr;
        L->generators_ = spec.generators;

        const GroupPtr& PG = spec.product;
        const int h = P0.h;
        const int li = static_cast<int>(L->lines_.size());
        BoundaryLine line{PG, spec.K, spec.phi, {}, {}, true};
        if (line.phi) line.phi->domain = spec.K;

        std::vector<int> vid;
        for (int y = 0; y <= h; ++y) {
            LatticeVertex v;
            v.index = static_cast<int>(L->vertices_.size());
            v.patch = -1;
            v.line = 0;
            v.row = y;
            v.group = PG;
            v.boundary_line = li;
            vid.push_back(v.index);
            line.vertices.push_back(v.index);
            L->vertices_.push_back(v);
        }
        std::vector<int> ie;
        for (int y = 0; y < h; ++y) {
            LatticeEdge e;
            e.index = L->num_edges();
            e.vertical = true;
            e.patch = -1;
            e.line = 0;
            e.row = y;
            e.tail = vid[y];
            e.head = vid[y + 1];
            e.group = PG;
            ie.push_back(e.index);
            line.edges.push_back(e.index);
            L->edges_.push_back(e);
        }
        for (int y = 0; y <= h; ++y) {
            auto& v = L->vertices_[vid[y]];
            int rc = P0.right_column[y], lc = P1.left_column[y];
            L->edges_[rc].head = v.index;
            L->edges_[lc].tail = v.index;
            v.star.push_back({rc, false, 0});
            if (y >= 1) {
                v.down = ie[y - 1];
                v.star.push_back({v.down, false, -1});
            }
            v.star.push_back({lc, true, 1});
            if (y < h) {
                v.up = ie[y];
                v.star.push_back({v.up, true, -1});
            }
        }
        for (auto& p : L->plaquettes_) {
            if (p.patch == 0 && p.col == P0.w - 1) p.walk.insert(p.walk.end() - 1, WalkEntry{ie[p.row], false, 0});
            if (p.patch == 1 && p.col == 0) p.walk.insert(p.walk.begin(), WalkEntry{ie[p.row], true, 1});
        }
        L->lines_.push_back(line);

        nlohmann::json gens = nlohmann::json::array();
        for (int g : spec.generators) {
            auto [a, b] = PG->split(g);
            gens.push_back({P0.group->label(a), P1.group->label(b)});
        }
        nlohmann::json phi = nullptr;
        if (spec.phi)
            for (cplx v : spec.phi->values) phi.push_back({v.real(), v.imag()});
        L->recipe_ = {{"kind", "hybrid"}, {"pair", pr->recipe()}, {"generators", gens}, {"phi", phi}, {"name", spec.name}};
        finalize(*L, cap);
        return L;
    }
};

LayoutPtr Layout::standalone(int patch) const {
    if (kind_ == Kind::Patch) {
        if (patch != 0) throw std::out_of_range("patch layout has one patch");
        return shared_from_this();
    }
    return standalone_.at(patch);
}

int Layout::plaquette_at(int patch, int col, int row) const {
    for (const auto& p : plaquettes_)
        if (p.patch == patch && p.col == col && p.row == row) return p.index;
    return -1;
}

int Layout::vertex_at(int patch, int line, int row) const {
    for (const auto& v : vertices_)
        if (v.patch == patch && v.line == line && v.row == row) return v.index;
    return -1;
}

int Layout::interface_edge(int row) const {
    for (const auto& e : edges_)
        if (e.patch == -1 && e.row == row) return e.index;
    return -1;
}

std::string Layout::describe() const {
    std::ostringstream os;
    os << kind_name(kind_);
    for (const auto& p : patches_) {
        os << " [" << p.group->name() << " w=" << p.w << " h=" << p.h;
        if (p.left_bc) os << " left K|" << p.left_bc->K.size();
        if (p.right_bc) os << " right K|" << p.right_bc->K.size();
        os << "]";
    }
    os << ": " << edges_.size() << " edges, " << vertices_.size() << " vertices, " << plaquettes_.size()
       << " plaquettes, " << dim_ << " amplitudes";
    return os.str();
}

nlohmann::json Layout::to_json() const {
    nlohmann::json j{{"kind", kind_name(kind_)},
                     {"recipe", recipe_},
                     {"num_edges", edges_.size()},
                     {"num_vertices", vertices_.size()},
                     {"num_plaquettes", plaquettes_.size()},
                     {"dimension", dim_}};
    j["edges"] = nlohmann::json::array();
    for (const auto& e : edges_)
        j["edges"].push_back({{"index", e.index}, {"vertical", e.vertical}, {"patch", e.patch}, {"line", e.line},
                              {"row", e.row}, {"group", e.group->name()}});
    return j;
}

LayoutPtr build_patch(const GroupPtr& G, int w, int h, const std::optional<BoundaryCondition>& left,
                      const std::optional<BoundaryCondition>& right, std::uint64_t cap) {
    return LayoutBuilder::patch(G, w, h, left, right, cap);
}

LayoutPtr build_pair(const LayoutPtr& left, const LayoutPtr& right, std::uint64_t cap) {
    return LayoutBuilder::pair(left, right, cap);
}

InterfaceSpec make_interface(const GroupPtr& G, const GroupPtr& Gp, const std::vector<std::pair<int, int>>& gens,
                             std::optional<Cocycle2> phi, std::string name) {
    InterfaceSpec s;
    s.diag = diagonal_from_generators(G, Gp, gens);
    s.product = make_product(G, Gp);
    std::vector<int> members;
    for (auto [a, b] : s.diag.pairs) members.push_back(s.product->combine(a, b));
    s.K = make_subgroup(s.product, members);
    for (auto [a, b] : gens) s.generators.push_back(s.product->combine(a, b));
    if (phi) {
        check_phi(phi, s.K);
        phi->domain = s.K;
    }
    s.phi = std::move(phi);
    s.name = name.empty() ? G->name() + "|" + Gp->name() : std::move(name);
    return s;
}

LayoutPtr build_hybrid(const LayoutPtr& pair, const InterfaceSpec& spec, std::uint64_t cap) {
    return LayoutBuilder::hybrid(pair, spec, cap);
}

LayoutPtr layout_from_recipe(const nlohmann::json& r, std::uint64_t cap) {
    const std::string kind = r.at("kind").get<std::string>();
    if (kind == "patch") {
        auto G = parse_group(r.at("group").get<std::string>());
        return build_patch(G, r.at("w").get<int>(), r.at("h").get<int>(), bc_from_json(r.value("left", nlohmann::json()), G),
                           bc_from_json(r.value("right", nlohmann::json()), G), cap);
    }
    if (kind == "pair") return build_pair(layout_from_recipe(r.at("left"), cap), layout_from_recipe(r.at("right"), cap), cap);
    if (kind == "hybrid") {
        auto pr = layout_from_recipe(r.at("pair"), cap);
        auto G = pr->patches()[0].group, Gp = pr->patches()[1].group;
        std::vector<std::pair<int, int>> gens;
        for (const auto& g : r.at("generators"))
            gens.emplace_back(G->element(g.at(0).get<std::string>()), Gp->element(g.at(1).get<std::string>()));
        auto spec = make_interface(G, Gp, gens, std::nullopt, r.value("name", std::string()));
        spec.phi = phi_from_json(r.value("phi", nlohmann::json()), spec.K);
        return build_hybrid(pr, spec, cap);
    }
    throw std::invalid_argument("unknown layout kind '" + kind + "'");
}

// ---------------------------------------------------------------- operators

std::vector<int> LocalOp::decode(int local) const {
    std::vector<int> d(radix.size());
    for (int j = static_cast<int>(radix.size()) - 1; j >= 0; --j) {
        d[j] = local % radix[j];
        local /= radix[j];
    }
    return d;
}

int LocalOp::encode(const std::vector<int>& digits) const {
    int lc = 0;
    for (size_t j = 0; j < radix.size(); ++j) lc = lc * radix[j] + digits[j];
    return lc;
}

LocalOp make_local_op(const Layout& L, std::vector<int> edges, const ConfigMap& f) {
    LocalOp op;
    for (size_t i = 0; i < edges.size(); ++i) {
        if (edges[i] < 0 || edges[i] >= L.num_edges()) throw std::out_of_range("edge outside the layout");
        for (size_t j = 0; j < i; ++j)
            if (edges[j] == edges[i]) throw std::invalid_argument("repeated edge in operator support");
        op.radix.push_back(L.radix(edges[i]));
    }
    op.edges = std::move(edges);
    int dim = std::accumulate(op.radix.begin(), op.radix.end(), 1, std::multiplies<int>());
    op.target.resize(dim);
    op.coeff.resize(dim);
    std::vector<char> seen(dim, 0);
    std::vector<int> d(op.radix.size(), 0), work, unit(op.radix.size(), 0);
    int dummy = 0;
    for (int lc = 0; lc < dim; ++lc) {
        work = d;
        cplx c = f(work);
        int t = op.encode(work);
        if (seen[t]) throw std::logic_error("local map is not a permutation");
        seen[t] = 1;
        op.target[lc] = t;
        op.coeff[lc] = c;
        advance(d, op.radix, unit, dummy);
    }
    return op;
}

LocalOp identity_op(const Layout& L, std::vector<int> edges) {
    return make_local_op(L, std::move(edges), [](std::vector<int>&) { return cplx(1.0); });
}

LocalOp compose(const LocalOp& a, const LocalOp& b) {
    auto U = union_edges(a.edges, b.edges);
    auto R = union_radix(U, a, b);
    auto A = extend(a, U, R), B = extend(b, U, R);
    LocalOp out = B;
    for (int lc = 0; lc < B.local_dim(); ++lc) {
        int mid = B.target[lc];
        out.target[lc] = A.target[mid];
        out.coeff[lc] = B.coeff[lc] * A.coeff[mid];
    }
    return out;
}

LocalOp inverse(const LocalOp& a) {
    LocalOp out = a;
    for (int lc = 0; lc < a.local_dim(); ++lc) {
        if (std::abs(a.coeff[lc]) < 1e-300) throw std::invalid_argument("operator is not invertible");
        out.target[a.target[lc]] = lc;
        out.coeff[a.target[lc]] = 1.0 / a.coeff[lc];
    }
    return out;
}

LocalOp group_commutator(const LocalOp& a, const LocalOp& b) {
    return compose(a, compose(b, compose(inverse(a), inverse(b))));
}

double op_distance(const LocalOp& a, const LocalOp& b) {
    auto U = union_edges(a.edges, b.edges);
    auto R = union_radix(U, a, b);
    auto A = extend(a, U, R), B = extend(b, U, R);
    double d = 0.0;
    for (int lc = 0; lc < A.local_dim(); ++lc) {
        if (A.target[lc] == B.target[lc]) d = std::max(d, std::abs(A.coeff[lc] - B.coeff[lc]));
        else d = std::max({d, std::abs(A.coeff[lc]), std::abs(B.coeff[lc])});
    }
    return d;
}

LocalOp edge_left(const Layout& L, int e, int g) {
    const FiniteGroup& G = *L.edges().at(e).group;
    return make_local_op(L, {e}, [&](std::vector<int>& d) {
        d[0] = G.mul(g, d[0]);
        return cplx(1.0);
    });
}

LocalOp edge_right(const Layout& L, int e, int g) {
    const FiniteGroup& G = *L.edges().at(e).group;
    return make_local_op(L, {e}, [&](std::vector<int>& d) {
        d[0] = G.mul(d[0], G.inv(g));
        return cplx(1.0);
    });
}

LocalOp edge_diagonal(const Layout& L, int e, const std::function<cplx(int)>& f) {
    return make_local_op(L, {e}, [&](std::vector<int>& d) { return f(d[0]); });
}

namespace {

LocalOp star_op(const Layout& L, const LatticeVertex& V, int g, const BoundaryLine* line) {
    std::vector<int> edges;
    int pd = -1, pu = -1;
    for (size_t j = 0; j < V.star.size(); ++j) {
        edges.push_back(V.star[j].edge);
        if (V.star[j].edge == V.down) pd = static_cast<int>(j);
        if (V.star[j].edge == V.up) pu = static_cast<int>(j);
    }
    const FiniteGroup& VG = *V.group;
    return make_local_op(L, edges, [&](std::vector<int>& d) {
        cplx phase(1.0);
        if (line && line->phi) {
            int x = pd >= 0 ? d[pd] : 0, y = pu >= 0 ? d[pu] : 0;
            if (line->K.contains(x) && line->K.contains(y)) phase = (*line->phi)(x, VG.inv(g)) * (*line->phi)(g, y);
        }
        for (size_t j = 0; j < V.star.size(); ++j) {
            const auto& s = V.star[j];
            const FiniteGroup& eg = *L.edges()[s.edge].group;
            d[j] = act_on_edge(eg, d[j], component(VG, g, s.factor), s.outgoing);
        }
        return phase;
    });
}

}  // namespace

LocalOp vertex_op(const Layout& L, int v, int g) {
    const auto& V = L.vertices().at(v);
    if (g < 0 || g >= V.group->order()) throw std::out_of_range("vertex element outside the group");
    return star_op(L, V, g, nullptr);
}

LocalOp boundary_vertex_op(const Layout& L, int v, int k) {
    const auto& V = L.vertices().at(v);
    if (V.boundary_line < 0) throw std::invalid_argument("vertex is not on a boundary line");
    const auto& line = L.boundary_lines()[V.boundary_line];
    if (k < 0 || k >= V.group->order() || !line.K.contains(k))
        throw std::invalid_argument("element " + std::to_string(k) + " is not in K");
    return star_op(L, V, k, &line);
}

LocalOp plaquette_op(const Layout& L, int p, int g) {
    const auto& P = L.plaquettes().at(p);
    std::vector<int> edges;
    for (const auto& w : P.walk) edges.push_back(w.edge);
    return make_local_op(L, edges, [&](std::vector<int>& d) { return walk_holonomy(L, P, d) == g ? cplx(1.0) : cplx(0.0); });
}

int plaquette_holonomy(const Layout& L, int p, const std::vector<int>& edge_values) {
    const auto& P = L.plaquettes().at(p);
    std::vector<int> vals;
    for (const auto& w : P.walk) vals.push_back(edge_values.at(w.edge));
    return walk_holonomy(L, P, vals);
}

OpSum vertex_projector(const Layout& L, int v) {
    const auto& V = L.vertices().at(v);
    OpSum out;
    if (V.boundary_line < 0) {
        int n = V.group->order();
        for (int g = 0; g < n; ++g) out.push_back({cplx(1.0 / n), vertex_op(L, v, g)});
    } else {
        const auto& K = L.boundary_lines()[V.boundary_line].K;
        for (int k : K.members) out.push_back({cplx(1.0 / K.size()), boundary_vertex_op(L, v, k)});
    }
    return out;
}

OpSum boundary_edge_projector(const Layout& L, int line, int e) {
    const auto& K = L.boundary_lines().at(line).K;
    return {{cplx(1.0), edge_diagonal(L, e, [&](int x) { return K.contains(x) ? cplx(1.0) : cplx(0.0); })}};
}

LocalOp logical_left(const Layout& L, int patch, int g) {
    const auto& P = L.patches().at(patch);
    const FiniteGroup& G = *P.group;
    return make_local_op(L, P.left_column, [&](std::vector<int>& d) {
        for (int& x : d) x = G.mul(g, x);
        return cplx(1.0);
    });
}

LocalOp logical_right(const Layout& L, int patch, int g) {
    const auto& P = L.patches().at(patch);
    const FiniteGroup& G = *P.group;
    return make_local_op(L, P.right_column, [&](std::vector<int>& d) {
        for (int& x : d) x = G.mul(x, G.inv(g));
        return cplx(1.0);
    });
}

// ---------------------------------------------------------------- ribbons

Ribbon horizontal_ribbon(const Layout& L, int patch, int row) {
    const auto& P = L.patches().at(patch);
    if (row < 0 || row > P.h) throw std::out_of_range("ribbon row outside the patch");
    Ribbon r;
    for (int c = 0; c <= P.w; ++c) {
        int ve = find_edge(L, patch, true, c, row > 0 ? row - 1 : 0);
        if (ve >= 0) r.steps.push_back({ve, false, row == 0});
        if (c < P.w) r.steps.push_back({find_edge(L, patch, false, c, row), true, true});
    }
    return r;
}

Ribbon vertical_ribbon(const Layout& L, int patch, int line) {
    const auto& P = L.patches().at(patch);
    if (find_edge(L, patch, true, line, 0) < 0) throw std::out_of_range("no vertex column at that line");
    Ribbon r;
    for (int y = 0; y <= P.h; ++y) {
        if (line < P.w) r.steps.push_back({find_edge(L, patch, false, line, y), false, true});
        else r.steps.push_back({find_edge(L, patch, false, line - 1, y), false, false});
        if (y < P.h) r.steps.push_back({find_edge(L, patch, true, line, y), true, true});
    }
    return r;
}

void validate_ribbon(const Layout& L, const Ribbon& xi) {
    std::vector<int> seen;
    std::vector<int> path;
    int last_end = -2;
    for (const auto& s : xi.steps) {
        if (s.edge < 0 || s.edge >= L.num_edges()) throw std::invalid_argument("ribbon edge outside the layout");
        if (std::find(seen.begin(), seen.end(), s.edge) != seen.end()) throw std::invalid_argument("ribbon repeats an edge");
        seen.push_back(s.edge);
        if (!s.direct) continue;
        const auto& e = L.edges()[s.edge];
        int a = s.forward ? e.tail : e.head, b = s.forward ? e.head : e.tail;
        if (last_end != -2 && (a < 0 || a != last_end)) throw std::invalid_argument("ribbon direct path is not connected");
        last_end = b;
        if (a >= 0) path.push_back(a);
        if (b >= 0) path.push_back(b);
    }
    for (const auto& s : xi.steps) {
        if (s.direct) continue;
        const auto& e = L.edges()[s.edge];
        int anchor = s.forward ? e.tail : e.head;
        if (std::find(path.begin(), path.end(), anchor) == path.end())
            throw std::invalid_argument("dual ribbon edge does not meet the direct path as declared");
    }
}

LocalOp ribbon_op(const Layout& L, const Ribbon& xi, int h, int g) {
    if (xi.steps.empty()) throw std::invalid_argument("empty ribbon");
    const FiniteGroup& G = *L.edges().at(xi.steps[0].edge).group;
    std::vector<int> edges;
    for (const auto& s : xi.steps) {
        if (L.edges().at(s.edge).group->name() != G.name()) throw std::invalid_argument("ribbon crosses group domains");
        edges.push_back(s.edge);
    }
    return make_local_op(L, edges, [&](std::vector<int>& d) {
        int y = 0;
        for (size_t j = 0; j < xi.steps.size(); ++j) {
            const auto& s = xi.steps[j];
            if (s.direct) {
                y = G.mul(y, s.forward ? d[j] : G.inv(d[j]));
            } else {
                int c = G.mul(G.mul(G.inv(y), h), y);
                d[j] = s.forward ? G.mul(c, d[j]) : G.mul(d[j], G.inv(c));
            }
        }
        return y == g ? cplx(1.0) : cplx(0.0);
    });
}

std::vector<int> coset_representatives(const GroupPtr& G, int g) {
    auto C = centralizer(G, g);
    std::vector<char> covered(G->order(), 0);
    std::vector<int> reps;
    for (int x = 0; x < G->order(); ++x) {
        if (covered[x]) continue;
        reps.push_back(x);
        for (int c : C.members) covered[G->mul(x, c)] = 1;
    }
    return reps;
}

OpSum ribbon_anyon_op(const Layout& L, const Ribbon& xi, const RibbonLabel& a) {
    if (xi.steps.empty()) throw std::invalid_argument("empty ribbon");
    const GroupPtr& G = L.edges().at(xi.steps[0].edge).group;
    auto ci = centralizer_irreps(G, a.class_rep);
    const Irrep& R = ci.irreps.at(a.irrep);
    auto reps = coset_representatives(G, a.class_rep);
    int n = static_cast<int>(reps.size());
    if (a.i < 0 || a.i >= n || a.ip < 0 || a.ip >= n || a.j < 0 || a.j >= R.dim || a.jp < 0 || a.jp >= R.dim)
        throw std::out_of_range("ribbon label index out of range");
    int ci_ = G->conj(reps[a.i], a.class_rep);
    OpSum out;
    for (int k : ci.centralizer.members) {
        cplx w = double(R.dim) / ci.centralizer.size() * R.at(G->inv(k))(a.j, a.jp);
        if (std::abs(w) < 1e-14) continue;
        int gp = G->mul(G->mul(reps[a.i], k), G->inv(reps[a.ip]));
        out.push_back({w, ribbon_op(L, xi, G->inv(ci_), gp)});
    }
    return out;
}

OpSum hybrid_t_operator(const Layout& L, int h, int hp) {
    if (L.kind() != Layout::Kind::Hybrid) throw std::invalid_argument("T operator needs a hybrid layout");
    const auto& P0 = L.patches()[0];
    const auto& P1 = L.patches()[1];
    const FiniteGroup& G = *P0.group;
    const FiniteGroup& Gp = *P1.group;
    const BoundaryLine* line = nullptr;
    for (const auto& l : L.boundary_lines())
        if (l.interface) line = &l;
    std::vector<std::pair<int, int>> pairs;
    for (int k : line->K.members) pairs.push_back(line->group->split(k));
    std::vector<int> edges = P0.top_row;
    edges.insert(edges.end(), P1.top_row.begin(), P1.top_row.end());
    const size_t nl = P0.top_row.size();
    auto op = make_local_op(L, edges, [&](std::vector<int>& d) {
        int a = 0, b = 0;
        for (size_t j = 0; j < nl; ++j) a = G.mul(a, d[j]);
        for (size_t j = nl; j < d.size(); ++j) b = Gp.mul(b, d[j]);
        int count = 0;
        for (auto [l, lp] : pairs)
            if (a == G.mul(h, G.inv(l)) && b == Gp.mul(lp, Gp.inv(hp))) ++count;
        return cplx(count);
    });
    return {{cplx(1.0), op}};
}

// ---------------------------------------------------------------- states

double LatticeState::norm() const {
    return std::sqrt(reduce_blocks<double>(amps.size(), [&](std::uint64_t a, std::uint64_t b) {
        double s = 0.0;
        for (auto i = a; i < b; ++i) s += std::norm(amps[i]);
        return s;
    }));
}

void LatticeState::normalize() {
    double n = norm();
    if (n == 0.0) throw std::domain_error("cannot normalize the zero state");
    for (auto& a : amps) a /= n;
}

LatticeState basis_product_state(const LayoutPtr& L, const std::vector<int>& edge_values) {
    if (!edge_values.empty() && static_cast<int>(edge_values.size()) != L->num_edges())
        throw std::invalid_argument("need one value per edge");
    LatticeState s{L, std::vector<cplx>(L->dimension(), cplx(0.0))};
    std::uint64_t idx = 0;
    for (size_t e = 0; e < edge_values.size(); ++e) {
        if (edge_values[e] < 0 || edge_values[e] >= L->radix(static_cast<int>(e))) throw std::out_of_range("edge value");
        idx += static_cast<std::uint64_t>(edge_values[e]) * L->stride(static_cast<int>(e));
    }
    s.amps[idx] = 1.0;
    return s;
}

LatticeState apply(const LocalOp& op, const LatticeState& s) {
    auto k = make_kernel(*s.layout, op);
    LatticeState out{s.layout, std::vector<cplx>(s.amps.size())};
    for_blocks(s.amps.size(), [&](std::uint64_t a, std::uint64_t b) {
        for (auto i = a; i < b; ++i) {
            int lc = k.local(i);
            out.amps[i - k.off[lc] + k.off[op.target[lc]]] = op.coeff[lc] * s.amps[i];
        }
    });
    return out;
}

LatticeState apply(const OpSum& op, const LatticeState& s) {
    LatticeState out{s.layout, std::vector<cplx>(s.amps.size(), cplx(0.0))};
    for (const auto& t : op) {
        auto k = make_kernel(*s.layout, t.op);
        for_blocks(s.amps.size(), [&](std::uint64_t a, std::uint64_t b) {
            for (auto i = a; i < b; ++i) {
                int lc = k.local(i);
                out.amps[i - k.off[lc] + k.off[t.op.target[lc]]] += t.weight * t.op.coeff[lc] * s.amps[i];
            }
        });
    }
    return out;
}

cplx inner(const LatticeState& a, const LatticeState& b) {
    if (a.amps.size() != b.amps.size()) throw std::invalid_argument("states live on different layouts");
    return reduce_blocks<cplx>(a.amps.size(), [&](std::uint64_t x, std::uint64_t y) {
        cplx s(0.0);
        for (auto i = x; i < y; ++i) s += std::conj(a.amps[i]) * b.amps[i];
        return s;
    });
}

cplx expectation(const LatticeState& s, const LocalOp& op) { return inner(s, hyb::apply(op, s)); }
cplx expectation(const LatticeState& s, const OpSum& op) { return inner(s, hyb::apply(op, s)); }

LatticeState fiducial_state(const LayoutPtr& L) {
    auto s = basis_product_state(L);
    for (const auto& v : L->vertices()) s = hyb::apply(vertex_projector(*L, v.index), s);
    s.normalize();
    return s;
}

LatticeState logical_basis_state(const LayoutPtr& L, int g) {
    if (L->kind() != Layout::Kind::Patch) throw std::invalid_argument("logical basis states live on a single patch");
    return hyb::apply(logical_left(*L, 0, g), fiducial_state(L));
}

namespace {

CMatrix basis_matrix(const LayoutPtr& patch) {
    int n = patch->patches()[0].group->order();
    CMatrix M(static_cast<Eigen::Index>(patch->dimension()), n);
    for (int g = 0; g < n; ++g) {
        auto s = logical_basis_state(patch, g);
        for (std::uint64_t i = 0; i < s.amps.size(); ++i) M(static_cast<Eigen::Index>(i), g) = s.amps[i];
    }
    return M;
}

LogicalSpace space_of(const Layout& L) {
    std::vector<GroupPtr> slots;
    for (const auto& p : L.patches()) slots.push_back(p.group);
    return LogicalSpace(slots);
}

}  // namespace

LatticeState encode_logical(const LayoutPtr& L, const LogicalState& s) {
    auto space = space_of(*L);
    if (L->kind() == Layout::Kind::Hybrid) throw std::invalid_argument("encoding needs a patch or pair layout");
    if (!space.same_as(s.space)) throw std::invalid_argument("logical space does not match the layout");
    if (L->kind() == Layout::Kind::Patch) {
        CMatrix B = basis_matrix(L);
        CVector v = B * s.amps;
        return LatticeState{L, std::vector<cplx>(v.data(), v.data() + v.size())};
    }
    CMatrix A = basis_matrix(L->standalone(0)), B = basis_matrix(L->standalone(1));
    int gb = static_cast<int>(B.cols());
    CMatrix C = Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        s.amps.data(), A.cols(), gb);
    CMatrix T = A * C;  // NA x gB
    LatticeState out{L, std::vector<cplx>(L->dimension())};
    const auto NB = B.rows();
    for (Eigen::Index ia = 0; ia < A.rows(); ++ia)
        for (Eigen::Index ib = 0; ib < NB; ++ib) {
            cplx v(0.0);
            for (int b = 0; b < gb; ++b) v += T(ia, b) * B(ib, b);
            out.amps[static_cast<size_t>(ia * NB + ib)] = v;
        }
    return out;
}

LogicalState decode_logical(const LatticeState& s, double* residual) {
    const auto& L = s.layout;
    auto space = space_of(*L);
    double n = s.norm();
    if (n == 0.0) throw std::domain_error("cannot decode the zero state");
    LogicalState out{space, CVector::Zero(space.dim()), false};
    if (L->kind() == Layout::Kind::Patch) {
        CMatrix B = basis_matrix(L);
        Eigen::Map<const CVector> v(s.amps.data(), static_cast<Eigen::Index>(s.amps.size()));
        out.amps = B.adjoint() * v / n;
    } else if (L->kind() == Layout::Kind::Pair) {
        CMatrix A = basis_matrix(L->standalone(0)), B = basis_matrix(L->standalone(1));
        Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> psi(s.amps.data(), A.rows(),
                                                                                                   B.rows());
        CMatrix c = A.adjoint() * (psi * B.conjugate()) / n;
        for (Eigen::Index a = 0; a < c.rows(); ++a)
            for (Eigen::Index b = 0; b < c.cols(); ++b) out.amps(a * c.cols() + b) = c(a, b);
    } else {
        throw std::invalid_argument("decoding needs a patch or pair layout");
    }
    if (residual) *residual = std::sqrt(std::max(0.0, 1.0 - out.amps.squaredNorm()));
    return out;
}

std::vector<TermCheck> term_expectations(const LatticeState& s) {
    const Layout& L = *s.layout;
    double n2 = std::pow(s.norm(), 2);
    std::vector<TermCheck> out;
    for (const auto& v : L.vertices())
        out.push_back({(v.boundary_line < 0 ? "A_v" : "A~_v") + std::to_string(v.index),
                       expectation(s, vertex_projector(L, v.index)) / n2});
    for (const auto& p : L.plaquettes())
        out.push_back({"B_p" + std::to_string(p.index), expectation(s, plaquette_op(L, p.index, 0)) / n2});
    for (size_t li = 0; li < L.boundary_lines().size(); ++li)
        for (int e : L.boundary_lines()[li].edges)
            out.push_back({"B^K_e" + std::to_string(e),
                           expectation(s, boundary_edge_projector(L, static_cast<int>(li), e)) / n2});
    return out;
}

double max_term_violation(const LatticeState& s) {
    double worst = 0.0;
    for (const auto& t : term_expectations(s)) worst = std::max(worst, std::abs(1.0 - t.value));
    return worst;
}

int code_space_dimension(const Layout& L) {
    struct VertexOps {
        std::vector<LocalOp> ops;
        std::vector<Kernel> kernels;
    };
    std::vector<VertexOps> vs;
    double work = static_cast<double>(L.dimension());
    for (const auto& v : L.vertices()) {
        VertexOps vo;
        for (const auto& t : vertex_projector(L, v.index)) {
            vo.kernels.push_back(make_kernel(L, t.op));
            vo.ops.push_back(t.op);
        }
        work *= vo.ops.size();
        vs.push_back(std::move(vo));
    }
    if (work > 1 << 28) throw std::runtime_error("layout too large for an exact code-space count");

    std::vector<int> vals(L.num_edges());
    cplx trace(0.0);
    for (std::uint64_t i = 0; i < L.dimension(); ++i) {
        for (int e = 0; e < L.num_edges(); ++e) vals[e] = L.digit(i, e);
        bool flat = true;
        for (const auto& p : L.plaquettes())
            if (plaquette_holonomy(L, p.index, vals) != 0) flat = false;
        for (const auto& line : L.boundary_lines())
            for (int e : line.edges)
                if (!line.K.contains(vals[e])) flat = false;
        if (!flat) continue;
        // Sum over all tuples of vertex group elements of <i| O_1 ... O_n |i>.
        std::function<void(size_t, std::uint64_t, cplx)> rec = [&](size_t k, std::uint64_t idx, cplx c) {
            if (k == vs.size()) {
                if (idx == i) trace += c;
                return;
            }
            double w = 1.0 / vs[k].ops.size();
            for (size_t t = 0; t < vs[k].ops.size(); ++t) {
                const auto& kr = vs[k].kernels[t];
                const auto& op = vs[k].ops[t];
                int lc = kr.local(idx);
                rec(k + 1, idx - kr.off[lc] + kr.off[op.target[lc]], c * w * op.coeff[lc]);
            }
        };
        rec(0, i, cplx(1.0));
    }
    return static_cast<int>(std::lround(trace.real()));
}

}  // namespace hyb
