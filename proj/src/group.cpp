#include "hyb/group.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace hyb {

namespace {

constexpr double kPi = 3.14159265358979323846;

cplx root_of_unity(long long num, long long den) {
    long long r = ((num % den) + den) % den;
    double a = 2.0 * kPi * static_cast<double>(r) / static_cast<double>(den);
    // Snap the exact quarter turns so that characters like i and -1 are exact.
    if (4 * r % den == 0) {
        switch (4 * r / den) {
            case 0: return {1.0, 0.0};
            case 1: return {0.0, 1.0};
            case 2: return {-1.0, 0.0};
            default: return {0.0, -1.0};
        }
    }
    return {std::cos(a), std::sin(a)};
}

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string power_label(const std::string& base, int e) {
    if (e == 0) return "";
    if (e == 1) return base;
    return base + "^" + std::to_string(e);
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

CMatrix scalar(cplx c) {
    CMatrix m(1, 1);
    m(0, 0) = c;
    return m;
}

}  // namespace

// ---------------------------------------------------------------- descriptors

GroupDescriptor GroupDescriptor::cyclic(int n) {
    if (n <= 0) throw std::invalid_argument("cyclic group order must be positive");
    GroupDescriptor d;
    d.kind = Kind::Cyclic;
    d.n = n;
    return d;
}

GroupDescriptor GroupDescriptor::dihedral(int k) {
    if (k <= 0) throw std::invalid_argument("dihedral half-order must be positive");
    GroupDescriptor d;
    d.kind = Kind::Dihedral;
    d.n = k;
    return d;
}

GroupDescriptor GroupDescriptor::symmetric3() {
    GroupDescriptor d;
    d.kind = Kind::Symmetric3;
    d.n = 3;
    return d;
}

GroupDescriptor GroupDescriptor::product(GroupDescriptor a, GroupDescriptor b) {
    GroupDescriptor d;
    d.kind = Kind::Product;
    d.n = 0;
    d.factors = {std::move(a), std::move(b)};
    return d;
}

std::string GroupDescriptor::to_string() const {
    switch (kind) {
        case Kind::Cyclic: return "Z" + std::to_string(n);
        case Kind::Dihedral: return "D" + std::to_string(n);
        case Kind::Symmetric3: return "S3";
        case Kind::Product: {
            auto wrap = [](const GroupDescriptor& f) {
                return f.kind == Kind::Product ? "(" + f.to_string() + ")" : f.to_string();
            };
            return factors[0].to_string() + " x " + wrap(factors[1]);
        }
    }
    return {};
}

int GroupDescriptor::order() const {
    switch (kind) {
        case Kind::Cyclic: return n;
        case Kind::Dihedral: return 2 * n;
        case Kind::Symmetric3: return 6;
        case Kind::Product: return factors[0].order() * factors[1].order();
    }
    return 0;
}

namespace {

GroupDescriptor parse_atom(const std::string& tok) {
    if (tok.empty()) throw std::invalid_argument("empty group token");
    if (tok == "S3") return GroupDescriptor::symmetric3();
    char head = tok[0];
    if ((head != 'Z' && head != 'D') || tok.size() < 2)
        throw std::invalid_argument("unknown group token '" + tok + "'");
    for (size_t i = 1; i < tok.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(tok[i])))
            throw std::invalid_argument("bad group order in '" + tok + "'");
    int n = std::stoi(tok.substr(1));
    return head == 'Z' ? GroupDescriptor::cyclic(n) : GroupDescriptor::dihedral(n);
}

GroupDescriptor parse_expr(std::string_view text);

GroupDescriptor parse_term(std::string_view text) {
    std::string t = trim(text);
    if (!t.empty() && t.front() == '(' && t.back() == ')') return parse_expr(std::string_view(t).substr(1, t.size() - 2));
    return parse_atom(t);
}

// Products are left-associative: "A x B x C" = (A x B) x C.
GroupDescriptor parse_expr(std::string_view text) {
    std::vector<std::string_view> parts;
    int depth = 0;
    size_t start = 0;
    for (size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c == '(') ++depth;
        else if (c == ')') --depth;
        else if (c == 'x' && depth == 0) {
            parts.push_back(text.substr(start, i - start));
            start = i + 1;
        }
        if (depth < 0) throw std::invalid_argument("unbalanced parentheses in group descriptor");
    }
    if (depth != 0) throw std::invalid_argument("unbalanced parentheses in group descriptor");
    parts.push_back(text.substr(start));
    GroupDescriptor d = parse_term(parts[0]);
    for (size_t i = 1; i < parts.size(); ++i) d = GroupDescriptor::product(d, parse_term(parts[i]));
    return d;
}

}  // namespace

GroupDescriptor parse_group_descriptor(std::string_view text) { return parse_expr(text); }

// ---------------------------------------------------------------- FiniteGroup

int FiniteGroup::power(int g, int e) const {
    int n = element_order(g);
    e %= n;
    if (e < 0) e += n;
    int acc = 0;
    for (int i = 0; i < e; ++i) acc = mul(acc, g);
    return acc;
}

int FiniteGroup::element_order(int g) const {
    int acc = g, k = 1;
    while (acc != 0) {
        acc = mul(acc, g);
        ++k;
    }
    return k;
}

std::optional<int> FiniteGroup::find(std::string_view label) const {
    std::string want = trim(label);
    for (int g = 0; g < order_; ++g)
        if (labels_[g] == want) return g;
    // "1" and "e" are accepted as spellings of the identity.
    if (want == "1" || want == "e") return 0;
    return std::nullopt;
}

int FiniteGroup::element(std::string_view label) const {
    auto g = find(label);
    if (!g) throw std::invalid_argument("unknown element '" + std::string(label) + "' in " + name());
    return *g;
}

bool FiniteGroup::is_abelian() const {
    for (int a = 0; a < order_; ++a)
        for (int b = 0; b < order_; ++b)
            if (mul(a, b) != mul(b, a)) return false;
    return true;
}

std::pair<int, int> FiniteGroup::split(int g) const {
    if (desc_.kind != GroupDescriptor::Kind::Product) throw std::logic_error(name() + " is not a product group");
    int nb = factors_[1]->order();
    return {g / nb, g % nb};
}

int FiniteGroup::combine(int a, int b) const {
    if (desc_.kind != GroupDescriptor::Kind::Product) throw std::logic_error(name() + " is not a product group");
    return a * factors_[1]->order() + b;
}

bool FiniteGroup::is_dihedral_like() const {
    return desc_.kind == GroupDescriptor::Kind::Dihedral || desc_.kind == GroupDescriptor::Kind::Symmetric3;
}

int FiniteGroup::dihedral(int a, int b) const {
    if (!is_dihedral_like()) throw std::logic_error(name() + " is not dihedral");
    int k = desc_.n;
    return (b & 1) * k + ((a % k) + k) % k;
}

std::pair<int, int> FiniteGroup::dihedral_parts(int g) const {
    if (!is_dihedral_like()) throw std::logic_error(name() + " is not dihedral");
    return {g % desc_.n, g / desc_.n};
}

bool FiniteGroup::is_central(int g) const {
    for (int x = 0; x < order_; ++x)
        if (mul(x, g) != mul(g, x)) return false;
    return true;
}

GroupPtr build_group(const GroupDescriptor& desc, int cap) {
    if (desc.kind == GroupDescriptor::Kind::Product) {
        GroupPtr a = build_group(desc.factors.at(0), cap);
        GroupPtr b = build_group(desc.factors.at(1), cap);
        return make_product(a, b, cap);
    }
    int order = desc.order();
    if (order <= 0) throw std::invalid_argument("group order must be positive");
    if (order > cap)
        throw std::invalid_argument("group " + desc.to_string() + " has order " + std::to_string(order) +
                                    " above the cap " + std::to_string(cap));
    auto G = std::make_shared<FiniteGroup>();
    G->order_ = order;
    G->desc_ = desc;
    G->mul_.assign(static_cast<size_t>(order) * order, 0);
    G->inv_.assign(order, 0);
    G->labels_.resize(order);
    if (desc.kind == GroupDescriptor::Kind::Cyclic) {
        int n = desc.n;
        for (int a = 0; a < n; ++a) {
            for (int b = 0; b < n; ++b) G->mul_[a * n + b] = (a + b) % n;
            G->inv_[a] = (n - a) % n;
            G->labels_[a] = a == 0 ? "id" : power_label("m", a);
        }
    } else {
        int k = desc.n;
        auto idx = [k](int a, int b) { return b * k + ((a % k) + k) % k; };
        for (int g = 0; g < order; ++g) {
            int a = g % k, b = g / k;
            for (int h = 0; h < order; ++h) {
                int c = h % k, d = h / k;
                // (r^a s^b)(r^c s^d) = r^{a + (-1)^b c} s^{b+d}
                G->mul_[g * order + h] = idx(b ? a - c : a + c, (b + d) & 1);
            }
            G->inv_[g] = b ? g : idx(-a, 0);
            std::string lab = power_label("r", a) + (b ? "s" : "");
            G->labels_[g] = lab.empty() ? "id" : lab;
        }
    }
    std::string why;
    if (!check_group_axioms(*G, &why)) throw std::logic_error("group construction failed: " + why);
    return G;
}

GroupPtr parse_group(std::string_view text, int cap) { return build_group(parse_group_descriptor(text), cap); }

GroupPtr make_product(const GroupPtr& a, const GroupPtr& b, int cap) {
    long long order = static_cast<long long>(a->order()) * b->order();
    if (order > cap)
        throw std::invalid_argument("product " + a->name() + " x " + b->name() + " has order " +
                                    std::to_string(order) + " above the cap " + std::to_string(cap));
    auto G = std::make_shared<FiniteGroup>();
    int n = static_cast<int>(order), nb = b->order();
    G->order_ = n;
    G->desc_ = GroupDescriptor::product(a->descriptor(), b->descriptor());
    G->factors_ = {a, b};
    G->mul_.assign(static_cast<size_t>(n) * n, 0);
    G->inv_.assign(n, 0);
    G->labels_.resize(n);
    for (int x = 0; x < n; ++x) {
        int xa = x / nb, xb = x % nb;
        for (int y = 0; y < n; ++y) G->mul_[x * n + y] = a->mul(xa, y / nb) * nb + b->mul(xb, y % nb);
        G->inv_[x] = a->inv(xa) * nb + b->inv(xb);
        G->labels_[x] = a->label(xa) + "|" + b->label(xb);
    }
    return G;
}

bool check_group_axioms(const FiniteGroup& G, std::string* why) {
    auto fail = [why](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    int n = G.order();
    for (int g = 0; g < n; ++g) {
        if (G.mul(0, g) != g || G.mul(g, 0) != g) return fail("identity law fails at " + G.label(g));
        if (G.mul(g, G.inv(g)) != 0 || G.mul(G.inv(g), g) != 0) return fail("inverse law fails at " + G.label(g));
    }
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
                if (G.mul(G.mul(a, b), c) != G.mul(a, G.mul(b, c)))
                    return fail("associativity fails at (" + G.label(a) + "," + G.label(b) + "," + G.label(c) + ")");
    return true;
}

// ---------------------------------------------------------------- subgroups

bool Subgroup::contains(int g) const { return std::binary_search(members.begin(), members.end(), g); }

int Subgroup::position(int g) const {
    auto it = std::lower_bound(members.begin(), members.end(), g);
    if (it == members.end() || *it != g) return -1;
    return static_cast<int>(it - members.begin());
}

Subgroup whole_group(const GroupPtr& G) {
    Subgroup s{G, std::vector<int>(G->order())};
    std::iota(s.members.begin(), s.members.end(), 0);
    return s;
}

Subgroup trivial_subgroup(const GroupPtr& G) { return Subgroup{G, {0}}; }

Subgroup generated_subgroup(const GroupPtr& G, const std::vector<int>& gens) {
    std::set<int> seen{0};
    std::vector<int> frontier{0};
    while (!frontier.empty()) {
        std::vector<int> next;
        for (int x : frontier)
            for (int g : gens) {
                int y = G->mul(x, g);
                if (seen.insert(y).second) next.push_back(y);
            }
        frontier = std::move(next);
    }
    return Subgroup{G, std::vector<int>(seen.begin(), seen.end())};
}

Subgroup make_subgroup(const GroupPtr& G, std::vector<int> members) {
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    Subgroup s{G, std::move(members)};
    if (s.members.empty() || s.members.front() != 0) throw std::invalid_argument("subgroup must contain the identity");
    for (int a : s.members) {
        if (a < 0 || a >= G->order()) throw std::invalid_argument("subgroup element out of range");
        if (!s.contains(G->inv(a))) throw std::invalid_argument("subgroup not closed under inverses");
        for (int b : s.members)
            if (!s.contains(G->mul(a, b))) throw std::invalid_argument("subgroup not closed under multiplication");
    }
    return s;
}

bool is_normal(const Subgroup& N, const Subgroup& K) {
    const auto& G = *K.parent;
    for (int n : N.members) {
        if (!K.contains(n)) return false;
        for (int k : K.members)
            if (!N.contains(G.conj(k, n))) return false;
    }
    return true;
}

// ---------------------------------------------------------------- classes

std::vector<ConjugacyClass> conjugacy_classes(const FiniteGroup& G) {
    int n = G.order();
    std::vector<char> done(n, 0);
    std::vector<ConjugacyClass> out;
    for (int g = 0; g < n; ++g) {
        if (done[g]) continue;
        std::set<int> cls;
        for (int x = 0; x < n; ++x) cls.insert(G.conj(x, g));
        for (int c : cls) done[c] = 1;
        out.emplace_back(cls.begin(), cls.end());
    }
    std::stable_sort(out.begin(), out.end(), [](const ConjugacyClass& a, const ConjugacyClass& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a.front() < b.front();
    });
    return out;
}

int class_of(const std::vector<ConjugacyClass>& classes, int g) {
    for (size_t i = 0; i < classes.size(); ++i)
        if (std::binary_search(classes[i].begin(), classes[i].end(), g)) return static_cast<int>(i);
    throw std::invalid_argument("element not found in any conjugacy class");
}

Subgroup centralizer(const GroupPtr& G, int g) {
    Subgroup s{G, {}};
    for (int h = 0; h < G->order(); ++h)
        if (G->mul(h, g) == G->mul(g, h)) s.members.push_back(h);
    return s;
}

// ---------------------------------------------------------------- homomorphisms

Subgroup GroupHom::kernel() const {
    Subgroup k{source.parent, {}};
    for (int h : source.members)
        if (map[h] == 0) k.members.push_back(h);
    return k;
}

GroupHom hom_from_generators(const GroupPtr& G, const std::vector<std::pair<int, int>>& gen_images,
                             const GroupPtr& target) {
    GroupHom p{Subgroup{G, {}}, target, std::vector<int>(G->order(), -1)};
    p.map[0] = 0;
    std::vector<int> frontier{0};
    while (!frontier.empty()) {
        std::vector<int> next;
        for (int x : frontier)
            for (auto [h, ph] : gen_images) {
                int y = G->mul(x, h);
                int img = target->mul(p.map[x], ph);
                if (p.map[y] == -1) {
                    p.map[y] = img;
                    next.push_back(y);
                } else if (p.map[y] != img) {
                    throw std::invalid_argument("generator images do not define a homomorphism (conflict at " +
                                                G->label(y) + ")");
                }
            }
        frontier = std::move(next);
    }
    for (int g = 0; g < G->order(); ++g)
        if (p.map[g] != -1) p.source.members.push_back(g);
    return p;
}

bool DiagonalSubgroup::factorizes() const {
    std::set<int> k1, k2;
    for (auto [h, ph] : pairs) {
        k1.insert(h);
        k2.insert(ph);
    }
    return k1.size() * k2.size() == pairs.size();
}

DiagonalSubgroup diagonal_subgroup(const GroupPtr& G, const GroupPtr& Gp, const Subgroup& K, const GroupHom& p) {
    if (K.parent.get() != G.get()) throw std::invalid_argument("K is not a subgroup of the left group");
    if (p.target.get() != Gp.get()) throw std::invalid_argument("p does not map into the right group");
    for (int h : K.members)
        if (p.map.at(h) < 0 || p.map[h] >= Gp->order())
            throw std::invalid_argument("p undefined on " + G->label(h));
    for (int a : K.members)
        for (int b : K.members)
            if (p.map[G->mul(a, b)] != Gp->mul(p.map[a], p.map[b]))
                throw std::invalid_argument("p is not a homomorphism at (" + G->label(a) + "," + G->label(b) + ")");
    Subgroup N = p.kernel();
    if (!is_normal(N, K)) throw std::invalid_argument("kernel of p is not normal in K");
    DiagonalSubgroup d{G, Gp, K, p, {}};
    for (int h : K.members) d.pairs.emplace_back(h, p.map[h]);
    return d;
}

DiagonalSubgroup diagonal_from_generators(const GroupPtr& G, const GroupPtr& Gp,
                                          const std::vector<std::pair<int, int>>& gens) {
    GroupHom p = hom_from_generators(G, gens, Gp);
    return diagonal_subgroup(G, Gp, p.source, p);
}

DiagonalSubgroup trivial_diagonal(const GroupPtr& G, const GroupPtr& Gp) { return diagonal_from_generators(G, Gp, {}); }

// ---------------------------------------------------------------- cocycles

cplx Cocycle2::operator()(int g, int h) const {
    int a = domain.position(g), b = domain.position(h);
    if (a < 0 || b < 0) throw std::invalid_argument("cocycle argument outside its domain");
    return values[static_cast<size_t>(a) * domain.size() + b];
}

Cocycle2 Cocycle2::trivial(const Subgroup& K) {
    return Cocycle2{K, std::vector<cplx>(static_cast<size_t>(K.size()) * K.size(), cplx(1.0, 0.0))};
}

bool Cocycle2::is_trivial(double tol) const {
    return std::all_of(values.begin(), values.end(), [tol](cplx v) { return std::abs(v - cplx(1.0)) <= tol; });
}

bool CocycleReport::ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

std::string CocycleReport::summary() const {
    std::ostringstream os;
    for (const auto& c : checks) {
        os << (c.passed ? "pass " : "FAIL ") << c.name;
        if (!c.passed) os << " at " << c.witness;
        os << "\n";
    }
    return os.str();
}

CocycleReport verify_cocycle(const Cocycle2& phi, double tol) {
    const auto& K = phi.domain;
    const auto& G = *K.parent;
    auto lab = [&](int g) { return G.label(g); };
    CocycleReport rep;
    if (phi.values.size() != static_cast<size_t>(K.size()) * K.size())
        throw std::invalid_argument("cocycle table has the wrong size");

    CocycleReport::Check cocyc{"2-cocycle condition", true, ""};
    for (int a : K.members) {
        for (int b : K.members) {
            for (int c : K.members) {
                cplx lhs = phi(a, b) * phi(G.mul(a, b), c);
                cplx rhs = phi(a, G.mul(b, c)) * phi(b, c);
                if (std::abs(lhs - rhs) > tol) {
                    cocyc.passed = false;
                    cocyc.witness = "(" + lab(a) + "," + lab(b) + "," + lab(c) + ")";
                    break;
                }
            }
            if (!cocyc.passed) break;
        }
        if (!cocyc.passed) break;
    }
    rep.checks.push_back(cocyc);

    CocycleReport::Check norm{"normalization phi(id,g)=phi(g,id)=1", true, ""};
    for (int g : K.members)
        if (std::abs(phi(0, g) - 1.0) > tol || std::abs(phi(g, 0) - 1.0) > tol) {
            norm.passed = false;
            norm.witness = lab(g);
            break;
        }
    rep.checks.push_back(norm);

    CocycleReport::Check inv{"representative convention phi(g,g^-1)=1", true, ""};
    for (int g : K.members)
        if (std::abs(phi(g, G.inv(g)) - 1.0) > tol) {
            inv.passed = false;
            inv.witness = lab(g);
            break;
        }
    rep.checks.push_back(inv);

    CocycleReport::Check unit{"unit modulus", true, ""};
    for (int g : K.members) {
        for (int h : K.members)
            if (std::abs(std::abs(phi(g, h)) - 1.0) > tol) {
                unit.passed = false;
                unit.witness = "(" + lab(g) + "," + lab(h) + ")";
                break;
            }
        if (!unit.passed) break;
    }
    rep.checks.push_back(unit);

    CocycleReport::Check sym{"phi(g^-1,h^-1)=phi(h,g)^-1", true, ""};
    for (int g : K.members) {
        for (int h : K.members)
            if (std::abs(phi(G.inv(g), G.inv(h)) * phi(h, g) - 1.0) > tol) {
                sym.passed = false;
                sym.witness = "(" + lab(g) + "," + lab(h) + ")";
                break;
            }
        if (!sym.passed) break;
    }
    rep.checks.push_back(sym);
    return rep;
}

// ---------------------------------------------------------------- irreps

namespace {

Irrep one_dim(const std::string& name, const Subgroup& dom, const std::function<cplx(int)>& chi) {
    Irrep R{name, 1, dom, {}};
    for (int g : dom.members) R.mats.push_back(scalar(chi(g)));
    return R;
}

std::string cyclic_irrep_name(int a) {
    if (a == 0) return "1";
    return power_label("e", a);
}

// Irreps of a dihedral-like group (D_k or S3) on the whole group.
std::vector<Irrep> dihedral_irreps(const GroupPtr& G) {
    int k = G->rotation_order();
    Subgroup dom = whole_group(G);
    bool s3 = G->descriptor().kind == GroupDescriptor::Kind::Symmetric3;
    std::vector<Irrep> out;
    auto parts = [&](int g) { return G->dihedral_parts(g); };
    out.push_back(one_dim("1", dom, [](int) { return cplx(1.0); }));
    out.push_back(one_dim(s3 ? "P" : "1_r", dom, [&](int g) { return cplx(parts(g).second ? -1.0 : 1.0); }));
    if (k % 2 == 0) {
        out.push_back(one_dim("1_s", dom, [&](int g) {
            auto [a, b] = parts(g);
            return cplx((a % 2) ? -1.0 : 1.0);
        }));
        out.push_back(one_dim("1_rs", dom, [&](int g) {
            auto [a, b] = parts(g);
            return cplx(((a + b) % 2) ? -1.0 : 1.0);
        }));
    }
    int count2 = (k - 1) / 2;
    for (int j = 1; j <= count2; ++j) {
        std::string name = count2 == 1 ? "E" : "E" + std::to_string(j);
        Irrep R{name, 2, dom, {}};
        for (int g : dom.members) {
            auto [a, b] = parts(g);
            CMatrix m = CMatrix::Zero(2, 2);
            cplx w = root_of_unity(static_cast<long long>(j) * a, k);
            cplx wc = std::conj(w);
            if (b == 0) {
                m(0, 0) = w;
                m(1, 1) = wc;
            } else {
                m(0, 1) = w;
                m(1, 0) = wc;
            }
            R.mats.push_back(m);
        }
        out.push_back(std::move(R));
    }
    return out;
}

std::vector<Irrep> cyclic_irreps(const Subgroup& dom, int n, const std::function<int(int)>& exponent,
                                 const std::function<std::string(int)>& namer) {
    std::vector<Irrep> out;
    for (int a = 0; a < n; ++a)
        out.push_back(one_dim(namer(a), dom, [&](int g) { return root_of_unity(static_cast<long long>(a) * exponent(g), n); }));
    return out;
}

// Tensor-product irreps over a product subgroup whose members are combine(x, y).
std::vector<Irrep> tensor_irreps(const Subgroup& dom, const FiniteGroup& P, const std::vector<Irrep>& A,
                                 const std::vector<Irrep>& B) {
    std::vector<Irrep> out;
    for (const auto& ra : A)
        for (const auto& rb : B) {
            Irrep R{ra.name + "|" + rb.name, ra.dim * rb.dim, dom, {}};
            for (int g : dom.members) {
                auto [x, y] = P.split(g);
                R.mats.push_back(kron(ra.at(x), rb.at(y)));
            }
            out.push_back(std::move(R));
        }
    std::stable_sort(out.begin(), out.end(), [](const Irrep& a, const Irrep& b) { return a.dim < b.dim; });
    return out;
}

void validate_irreps(const std::vector<Irrep>& reps, int order, const std::string& what) {
    long long sum = 0;
    for (const auto& r : reps) sum += static_cast<long long>(r.dim) * r.dim;
    if (sum != order)
        throw std::logic_error("irreps of " + what + ": sum of squared dimensions " + std::to_string(sum) +
                               " != " + std::to_string(order));
    double dev = schur_deviation(reps);
    if (dev > 1e-9) throw std::logic_error("irreps of " + what + " violate Schur orthogonality by " + std::to_string(dev));
}

}  // namespace

std::vector<Irrep> irreps(const GroupPtr& G) {
    std::vector<Irrep> out;
    switch (G->descriptor().kind) {
        case GroupDescriptor::Kind::Cyclic:
            out = cyclic_irreps(whole_group(G), G->order(), [](int g) { return g; }, cyclic_irrep_name);
            break;
        case GroupDescriptor::Kind::Dihedral:
        case GroupDescriptor::Kind::Symmetric3:
            out = dihedral_irreps(G);
            break;
        case GroupDescriptor::Kind::Product:
            out = tensor_irreps(whole_group(G), *G, irreps(G->factor(0)), irreps(G->factor(1)));
            break;
    }
    validate_irreps(out, G->order(), G->name());
    return out;
}

CentralizerIrreps centralizer_irreps(const GroupPtr& G, int g) {
    CentralizerIrreps out{centralizer(G, g), {}};
    const auto& C = out.centralizer;
    if (G->is_central(g)) {
        out.irreps = irreps(G);
        return out;
    }
    if (G->descriptor().kind == GroupDescriptor::Kind::Product) {
        auto [a, b] = G->split(g);
        auto ca = centralizer_irreps(G->factor(0), a);
        auto cb = centralizer_irreps(G->factor(1), b);
        out.irreps = tensor_irreps(C, *G, ca.irreps, cb.irreps);
        validate_irreps(out.irreps, C.size(), "C(" + G->label(g) + ")");
        return out;
    }
    if (!G->is_dihedral_like()) throw std::logic_error("non-central element in an abelian group");
    int k = G->rotation_order();
    auto [j, b] = G->dihedral_parts(g);
    if (b == 0) {
        // C = <r>; characters indexed by the value on r.
        auto namer = [k](int a) -> std::string {
            if (k == 4) {
                static const char* names[] = {"1", "i", "-1", "-i"};
                return names[a];
            }
            if (a == 0) return "1";
            return a == 1 ? "w" : "w" + std::to_string(a);
        };
        auto expo = [G](int h) { return G->dihedral_parts(h).first; };
        out.irreps = cyclic_irreps(C, k, expo, namer);
    } else if (k % 2 == 1) {
        out.irreps.push_back(one_dim("+", C, [](int) { return cplx(1.0); }));
        out.irreps.push_back(one_dim("-", C, [g](int h) { return cplx(h == g ? -1.0 : 1.0); }));
    } else {
        // C = {id, g, z, zg} with z = r^{k/2}; labels (chi(g), chi(z)).
        int z = G->dihedral(k / 2, 0);
        // Row order of the D4 anyon table: ++, +-, --, -+.
        for (auto [sg, sz] : {std::pair{1, 1}, {1, -1}, {-1, -1}, {-1, 1}}) {
            std::string name = std::string(sg > 0 ? "+" : "-") + (sz > 0 ? "+" : "-");
            out.irreps.push_back(one_dim(name, C, [=](int h) {
                double v = 1.0;
                if (h == g || h == G->mul(z, g)) v *= sg;
                if (h == z || h == G->mul(z, g)) v *= sz;
                return cplx(v);
            }));
        }
    }
    validate_irreps(out.irreps, C.size(), "C(" + G->label(g) + ")");
    return out;
}

double schur_deviation(const std::vector<Irrep>& reps) {
    if (reps.empty()) return 0.0;
    const auto& dom = reps.front().domain;
    const auto& G = *dom.parent;
    double n = dom.size();
    double worst = 0.0;
    for (const auto& R : reps) {
        // Homomorphism property on the domain.
        for (int a : dom.members)
            for (int b : dom.members)
                worst = std::max(worst, (R.at(a) * R.at(b) - R.at(G.mul(a, b))).cwiseAbs().maxCoeff());
        worst = std::max(worst, (R.at(0) - CMatrix::Identity(R.dim, R.dim)).cwiseAbs().maxCoeff());
    }
    for (size_t r1 = 0; r1 < reps.size(); ++r1)
        for (size_t r2 = 0; r2 < reps.size(); ++r2) {
            const auto& A = reps[r1];
            const auto& B = reps[r2];
            for (int i = 0; i < A.dim; ++i)
                for (int j = 0; j < A.dim; ++j)
                    for (int k = 0; k < B.dim; ++k)
                        for (int l = 0; l < B.dim; ++l) {
                            cplx s = 0;
                            for (int g : dom.members) s += A.at(g)(i, j) * std::conj(B.at(g)(k, l));
                            double expect = (r1 == r2 && i == k && j == l) ? n / A.dim : 0.0;
                            worst = std::max(worst, std::abs(s - expect));
                        }
        }
    return worst;
}

}  // namespace hyb
