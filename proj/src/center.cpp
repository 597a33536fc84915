#include "hyb/center.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

namespace hyb {

namespace {

constexpr double kSpinTol = 1e-9;

bool near(cplx a, cplx b, double tol = kSpinTol) { return std::abs(a - b) < tol; }

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

// Color labels of the D4 anyon table (three copies of the toric code).
const std::map<std::string, std::pair<std::string, std::string>>& d4_color_labels() {
    static const std::map<std::string, std::pair<std::string, std::string>> m = {
        {"e_RG", {"id", "1_r"}},   {"e_R", {"id", "1_s"}},     {"e_G", {"id", "1_rs"}},  {"m_B", {"id", "E"}},
        {"e_RGB", {"r^2", "1"}},   {"e_B", {"r^2", "1_r"}},    {"e_GB", {"r^2", "1_s"}}, {"e_RB", {"r^2", "1_rs"}},
        {"f_B", {"r^2", "E"}},     {"m_RG", {"r", "1"}},       {"s_RGB", {"r", "i"}},    {"f_RG", {"r", "-1"}},
        {"sbar_RGB", {"r", "-i"}}, {"m_GB", {"s", "++"}},      {"m_G", {"s", "+-"}},     {"f_G", {"s", "--"}},
        {"f_GB", {"s", "-+"}},     {"m_RB", {"rs", "++"}},     {"m_R", {"rs", "+-"}},    {"f_R", {"rs", "--"}},
        {"f_RB", {"rs", "-+"}},
    };
    return m;
}

std::string normalize_irrep(std::string s) {
    if (s.size() >= 2 && s.front() == '{' && s.back() == '}') s = s.substr(1, s.size() - 2);
    if (s == "omega" || s == "\\omega") return "w";
    if (s == "omega^2" || s == "\\omega^2" || s == "w^2") return "w2";
    if (s == "+,+") return "++";
    if (s == "+,-") return "+-";
    if (s == "-,+") return "-+";
    if (s == "-,-") return "--";
    return s;
}

int irrep_by_name(const std::vector<Irrep>& reps, const std::string& name) {
    for (size_t i = 0; i < reps.size(); ++i)
        if (reps[i].name == name) return static_cast<int>(i);
    return -1;
}

bool is_abelian_cyclic_family(const FiniteGroup& G) {
    using K = GroupDescriptor::Kind;
    const auto& d = G.descriptor();
    if (d.kind == K::Cyclic) return true;
    return d.kind == K::Product && d.factors.size() == 2 && d.factors[0].kind == K::Cyclic && d.factors[1].kind == K::Cyclic;
}

// e^a m^b monomials (with _L/_R subscripts for a product of two cyclic groups).
int parse_monomial(const std::string& tok, const Center& C, std::size_t pos) {
    const auto& G = *C.group;
    bool product = G.descriptor().kind == GroupDescriptor::Kind::Product;
    int e[2] = {0, 0}, m[2] = {0, 0};
    size_t i = 0;
    while (i < tok.size()) {
        char c = tok[i];
        if (c != 'e' && c != 'm') throw LabelError("unexpected '" + std::string(1, c) + "' in '" + tok + "'", pos + i);
        ++i;
        int side = 0;
        if (i < tok.size() && tok[i] == '_') {
            if (i + 1 >= tok.size() || (tok[i + 1] != 'L' && tok[i + 1] != 'R'))
                throw LabelError("expected _L or _R in '" + tok + "'", pos + i);
            side = tok[i + 1] == 'L' ? 0 : 1;
            i += 2;
            if (!product) throw LabelError("subscript _L/_R needs a product group", pos + i - 2);
        } else if (product) {
            throw LabelError("missing _L/_R subscript in '" + tok + "'", pos + i);
        }
        int k = 1;
        if (i < tok.size() && tok[i] == '^') {
            size_t j = i + 1;
            while (j < tok.size() && std::isdigit(static_cast<unsigned char>(tok[j]))) ++j;
            if (j == i + 1) throw LabelError("missing exponent in '" + tok + "'", pos + i);
            k = std::stoi(tok.substr(i + 1, j - i - 1));
            i = j;
        }
        (c == 'e' ? e : m)[side] += k;
    }
    auto element = [](const FiniteGroup& F, int k) { return F.power(F.find("m").value_or(0), k); };
    int g, irrep;
    if (!product) {
        g = element(G, m[0]);
        irrep = e[0] % G.order();
    } else {
        const auto& A = *G.factor(0);
        const auto& B = *G.factor(1);
        g = G.combine(element(A, m[0]), element(B, m[1]));
        auto ra = irreps(G.factor(0)), rb = irreps(G.factor(1));
        std::string name = ra[e[0] % A.order()].name + "|" + rb[e[1] % B.order()].name;
        irrep = irrep_by_name(C.centralizers[class_of(C.classes, g)].irreps, name);
    }
    return C.find(class_of(C.classes, g), irrep);
}

int parse_single(const std::string& tok, const Center& C, std::size_t pos) {
    if (tok.empty()) throw LabelError("empty anyon label", pos);
    if (tok == "1") return 0;
    const auto& G = *C.group;
    const auto& d = G.descriptor();
    if (d.kind == GroupDescriptor::Kind::Dihedral && d.n == 4) {
        auto it = d4_color_labels().find(tok);
        if (it != d4_color_labels().end()) {
            int cls = class_of(C.classes, G.element(it->second.first));
            return C.find(cls, irrep_by_name(C.centralizers[cls].irreps, it->second.second));
        }
    }
    if (tok.front() == '[') {
        auto close = tok.find(']');
        if (close == std::string::npos) throw LabelError("unterminated class token", pos);
        std::string word = tok.substr(1, close - 1);
        auto g = G.find(word);
        if (!g) throw LabelError("unknown group element '" + word + "'", pos + 1);
        int cls = class_of(C.classes, *g);
        std::string rest = tok.substr(close + 1);
        if (!rest.empty() && rest.front() == '_') rest = rest.substr(1);
        rest = normalize_irrep(rest);
        if (rest.empty()) return C.find(cls, 0);
        int r = irrep_by_name(C.centralizers[cls].irreps, rest);
        if (r < 0) throw LabelError("unknown irrep '" + rest + "' for class [" + word + "]", pos + close + 1);
        return C.find(cls, r);
    }
    int r = irrep_by_name(C.centralizers[0].irreps, normalize_irrep(tok));
    if (r >= 0) return C.find(0, r);
    if (is_abelian_cyclic_family(G)) return parse_monomial(tok, C, pos);
    throw LabelError("unknown anyon label '" + tok + "'", pos);
}

struct Token {
    std::string text;
    std::size_t pos;
};

std::vector<Token> split_ws(std::string_view s, std::size_t offset) {
    std::vector<Token> out;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
        if (j > i) out.push_back({std::string(s.substr(i, j - i)), offset + i});
        i = j;
    }
    return out;
}

bool strip_bar(std::string& tok) {
    if (tok.size() > 3 && tok.compare(tok.size() - 3, 3, "bar") == 0) {
        tok.resize(tok.size() - 3);
        return true;
    }
    return false;
}

ParsedAnyon parse_label_at(std::string_view text, std::size_t offset, const CenterPtr& left, const CenterPtr& right) {
    auto toks = split_ws(text, offset);
    if (toks.empty()) throw LabelError("empty anyon label", offset);
    if (toks.size() > 2 || (toks.size() == 2 && !right))
        throw LabelError("too many factors in '" + trim(text) + "'", toks.back().pos);
    ParsedAnyon out;
    std::string first = toks[0].text;
    if (strip_bar(first)) throw LabelError("bar is only allowed on the second factor", toks[0].pos);
    out.a = parse_single(first, *left, toks[0].pos);
    if (right) {
        if (toks.size() == 1) {
            out.b = 0;
        } else {
            std::string second = toks[1].text;
            bool barred = strip_bar(second);
            int b = parse_single(second, *right, toks[1].pos);
            // An unbarred second factor is written with the bar already applied as complex conjugation.
            out.b = barred ? b : right->character_conjugate(b);
        }
    }
    return out;
}

cplx character_at(const Irrep& R, int g) { return R.character(g); }

}  // namespace

// ------------------------------------------------------------------ anyons

std::string Anyon::label() const { return "(" + class_label + "," + irrep_name + ")"; }

std::string Anyon::short_label() const {
    bool trivial_class = class_label == "[id]";
    if (trivial_class) return irrep_name;
    if (irrep_name == "1") return class_label;
    return class_label + "_" + irrep_name;
}

int Center::find(int cls, int irrep) const {
    for (const auto& a : anyons)
        if (a.cls == cls && a.irrep == irrep) return a.index;
    throw std::invalid_argument("no anyon for class " + std::to_string(cls) + " irrep " + std::to_string(irrep));
}

int Center::character_conjugate(int a) const {
    const auto& x = anyons.at(a);
    const auto& reps = centralizers[x.cls].irreps;
    const auto& R = reps[x.irrep];
    for (size_t j = 0; j < reps.size(); ++j) {
        bool same = reps[j].dim == R.dim;
        for (int g : R.domain.members) {
            if (!same) break;
            same = near(reps[j].character(g), std::conj(R.character(g)));
        }
        if (same) return find(x.cls, static_cast<int>(j));
    }
    throw std::logic_error("conjugate irrep not found");
}

int Center::dual(int a) const {
    const auto& G = *group;
    const auto& x = anyons.at(a);
    int ginv = G.inv(x.rep);
    int cls = class_of(classes, ginv);
    int rep2 = classes[cls].front();
    int t = -1;  // t ginv t^-1 = rep2
    for (int y = 0; y < G.order() && t < 0; ++y)
        if (G.conj(y, ginv) == rep2) t = y;
    const auto& R = centralizers[x.cls].irreps[x.irrep];
    const auto& reps = centralizers[cls].irreps;
    for (size_t j = 0; j < reps.size(); ++j) {
        bool same = reps[j].dim == R.dim;
        for (int h : reps[j].domain.members) {
            if (!same) break;
            int back = G.conj(G.inv(t), h);  // t^-1 h t in C(g)
            same = near(reps[j].character(h), std::conj(R.character(back)));
        }
        if (same) return find(cls, static_cast<int>(j));
    }
    throw std::logic_error("dual anyon not found");
}

int Center::fusion(int a, int b, int c) const {
    int n = size();
    return fusion_.at((static_cast<size_t>(a) * n + b) * n + c);
}

double Center::max_fusion_deviation() const { return fusion_dev_; }

CenterPtr make_center(const GroupPtr& G) {
    static std::mutex mu;
    static std::map<std::string, CenterPtr> cache;
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(G->name());
        if (it != cache.end()) return it->second;
    }
    auto C = std::make_shared<Center>();
    C->group = G;
    C->classes = conjugacy_classes(*G);
    const int n = G->order();
    for (const auto& cls : C->classes) C->centralizers.push_back(centralizer_irreps(G, cls.front()));
    for (size_t c = 0; c < C->classes.size(); ++c) {
        int rep = C->classes[c].front();
        const auto& reps = C->centralizers[c].irreps;
        for (size_t j = 0; j < reps.size(); ++j) {
            Anyon a;
            a.index = static_cast<int>(C->anyons.size());
            a.cls = static_cast<int>(c);
            a.rep = rep;
            a.irrep = static_cast<int>(j);
            a.class_label = "[" + G->label(rep) + "]";
            a.irrep_name = reps[j].name;
            a.qdim = static_cast<int>(C->classes[c].size()) * reps[j].dim;
            a.spin = character_at(reps[j], rep) / double(reps[j].dim);
            C->anyons.push_back(a);
        }
    }
    // x[g] with x g0 x^-1 = g for the class representative g0.
    std::vector<int> transporter(n, -1);
    for (const auto& cls : C->classes)
        for (int x = 0; x < n; ++x) {
            int g = G->conj(x, cls.front());
            if (transporter[g] < 0) transporter[g] = x;
        }
    const int m = C->size();
    C->S = CMatrix::Zero(m, m);
    for (const auto& A : C->anyons)
        for (const auto& B : C->anyons) {
            if (B.index < A.index) continue;
            const auto& RA = C->centralizers[A.cls].irreps[A.irrep];
            const auto& RB = C->centralizers[B.cls].irreps[B.irrep];
            cplx s = 0.0;
            for (int g : C->classes[A.cls])
                for (int h : C->classes[B.cls]) {
                    if (G->mul(g, h) != G->mul(h, g)) continue;
                    int xg = transporter[g], xh = transporter[h];
                    int hh = G->conj(G->inv(xg), h);  // x_g^-1 h x_g in C(g0)
                    int gg = G->conj(G->inv(xh), g);
                    s += std::conj(RA.character(hh)) * std::conj(RB.character(gg));
                }
            s /= double(n);
            C->S(A.index, B.index) = s;
            C->S(B.index, A.index) = s;
        }
    C->T = CVector(m);
    for (const auto& a : C->anyons) C->T(a.index) = a.spin;

    C->fusion_.assign(static_cast<size_t>(m) * m * m, 0);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            for (int c = 0; c < m; ++c) {
                cplx v = 0.0;
                for (int x = 0; x < m; ++x) v += C->S(a, x) * C->S(b, x) * std::conj(C->S(c, x)) / C->S(0, x);
                double r = std::round(v.real());
                C->fusion_dev_ = std::max(C->fusion_dev_, std::abs(v - r));
                C->fusion_[(static_cast<size_t>(a) * m + b) * m + c] = static_cast<int>(r);
            }

    std::lock_guard<std::mutex> lock(mu);
    auto [it, inserted] = cache.emplace(G->name(), C);
    return it->second;
}

std::vector<Anyon> anyons(const GroupPtr& G) { return make_center(G)->anyons; }

CMatrix s_matrix(const GroupPtr& G) { return make_center(G)->S; }

// ------------------------------------------------------------------ algebras

double AlgebraObject::total_dim() const {
    double d = 0.0;
    for (const auto& t : terms) d += t.mult * left->anyons[t.a].qdim * (folded() ? right->anyons[t.b].qdim : 1);
    return d;
}

int AlgebraObject::ambient_order() const { return left->group->order() * (folded() ? right->group->order() : 1); }

std::string AlgebraObject::to_string() const {
    std::string out;
    for (const auto& t : terms) {
        if (!out.empty()) out += " (+) ";
        if (t.mult > 1) out += std::to_string(t.mult) + "*";
        out += left->anyons[t.a].short_label();
        if (folded()) out += " " + right->anyons[t.b].short_label() + "bar";
    }
    return out;
}

AlgebraObject rough_lagrangian(const GroupPtr& G) {
    AlgebraObject A{"rough(" + G->name() + ")", make_center(G), nullptr, {}};
    const auto& reps = A.left->centralizers[0].irreps;
    for (size_t j = 0; j < reps.size(); ++j) A.terms.push_back({A.left->find(0, static_cast<int>(j)), -1, reps[j].dim});
    return A;
}

AlgebraObject smooth_lagrangian(const GroupPtr& G) {
    AlgebraObject A{"smooth(" + G->name() + ")", make_center(G), nullptr, {}};
    for (size_t c = 0; c < A.left->classes.size(); ++c) A.terms.push_back({A.left->find(static_cast<int>(c), 0), -1, 1});
    return A;
}

nlohmann::json AlgebraReport::to_json() const {
    return {{"name", name},
            {"total_dim", total_dim},
            {"has_vacuum", has_vacuum},
            {"spins_trivial", spins_trivial},
            {"monodromy_trivial", monodromy_trivial},
            {"fusion_closed", fusion_closed},
            {"integer_dim", integer_dim},
            {"lagrangian", lagrangian},
            {"s_invariant", s_invariant},
            {"contains_subalgebra", contains_subalgebra},
            {"condensable", condensable()},
            {"failures", failures}};
}

AlgebraReport check_condensable(const AlgebraObject& A) {
    AlgebraReport rep;
    rep.name = A.name;
    const auto& L = *A.left;
    const bool folded = A.folded();
    auto spin = [&](const AlgebraTerm& t) {
        cplx s = L.anyons[t.a].spin;
        if (folded) s *= std::conj(A.right->anyons[t.b].spin);
        return s;
    };
    auto fuse = [&](const AlgebraTerm& x, const AlgebraTerm& y, const AlgebraTerm& z) {
        int n = L.fusion(x.a, y.a, z.a);
        if (folded && n) n *= A.right->fusion(x.b, y.b, z.b);
        return n;
    };
    auto name = [&](const AlgebraTerm& t) {
        return L.anyons[t.a].short_label() + (folded ? " " + A.right->anyons[t.b].short_label() + "bar" : "");
    };

    rep.total_dim = A.total_dim();
    rep.integer_dim = rep.total_dim > 0 && std::abs(rep.total_dim - std::round(rep.total_dim)) < 1e-9;
    for (const auto& t : A.terms)
        if (t.a == 0 && (!folded || t.b == 0)) rep.has_vacuum = t.mult == 1;
    if (!rep.has_vacuum) rep.failures.push_back("vacuum missing or repeated");

    rep.spins_trivial = true;
    for (const auto& t : A.terms)
        if (!near(spin(t), 1.0)) {
            rep.spins_trivial = false;
            rep.failures.push_back("nontrivial spin: " + name(t));
        }

    rep.fusion_closed = true;
    rep.monodromy_trivial = true;
    for (size_t i = 0; i < A.terms.size(); ++i)
        for (size_t j = i; j < A.terms.size(); ++j) {
            const auto &x = A.terms[i], &y = A.terms[j];
            bool any = false;
            for (const auto& z : A.terms) {
                if (!fuse(x, y, z)) continue;
                any = true;
                if (!near(spin(z), spin(x) * spin(y))) {
                    rep.monodromy_trivial = false;
                    rep.failures.push_back("nontrivial monodromy: " + name(x) + " with " + name(y));
                }
            }
            if (!any) {
                rep.fusion_closed = false;
                rep.failures.push_back("no condensed fusion channel: " + name(x) + " x " + name(y));
            }
        }

    rep.lagrangian = std::abs(rep.total_dim - A.ambient_order()) < 1e-9;
    if (!folded) {
        CVector n = CVector::Zero(L.size());
        for (const auto& t : A.terms) n(t.a) += t.mult;
        rep.s_invariant = (L.S * n - n).cwiseAbs().maxCoeff() < 1e-9;
    } else {
        CMatrix M = CMatrix::Zero(L.size(), A.right->size());
        for (const auto& t : A.terms) M(t.a, t.b) += double(t.mult);
        CMatrix SM = L.S * M * A.right->S.adjoint();
        rep.s_invariant = (SM - M).cwiseAbs().maxCoeff() < 1e-9;
    }
    if (rep.lagrangian && !rep.s_invariant) rep.failures.push_back("multiplicity vector is not S-invariant");
    return rep;
}

AlgebraReport verify_folded_lagrangian(const AlgebraObject& listed, const AlgebraObject& sub) {
    if (!listed.folded()) throw std::invalid_argument("verify_folded_lagrangian expects a folded object");
    if (sub.left->group->name() != listed.left->group->name())
        throw std::invalid_argument("subalgebra lives in a different center");
    AlgebraReport rep = check_condensable(listed);
    if (!rep.lagrangian) rep.failures.push_back("total dimension " + std::to_string(rep.total_dim) + " differs from |G||G'| = " +
                                                std::to_string(listed.ambient_order()));
    for (const auto& s : sub.terms) {
        int have = 0;
        for (const auto& t : listed.terms)
            if (t.a == s.a && t.b == 0) have += t.mult;
        if (have < s.mult) {
            rep.contains_subalgebra = false;
            rep.failures.push_back("missing " + sub.left->anyons[s.a].short_label() + " x 1");
        }
    }
    return rep;
}

// ------------------------------------------------------------------ parsing

ParsedAnyon parse_anyon_label(std::string_view text, const CenterPtr& left, const CenterPtr& right) {
    return parse_label_at(text, 0, left, right);
}

AlgebraObject parse_algebra(std::string_view text, const CenterPtr& left, const CenterPtr& right, std::string name) {
    AlgebraObject A{std::move(name), left, right, {}};
    std::size_t start = 0;
    const std::string_view sep = "(+)";
    while (true) {
        std::size_t end = text.find(sep, start);
        std::string_view part = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
        std::size_t offset = start;
        // Optional "k*" multiplicity.
        int mult = 1;
        auto star = part.find('*');
        if (star != std::string_view::npos) {
            std::string k = trim(part.substr(0, star));
            if (k.empty() || !std::all_of(k.begin(), k.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
                throw LabelError("bad multiplicity '" + k + "'", offset);
            mult = std::stoi(k);
            if (mult < 1) throw LabelError("multiplicity must be positive", offset);
            offset += star + 1;
            part = part.substr(star + 1);
        }
        auto p = parse_label_at(part, offset, left, right);
        bool merged = false;
        for (auto& t : A.terms)
            if (t.a == p.a && t.b == p.b) {
                t.mult += mult;
                merged = true;
            }
        if (!merged) A.terms.push_back({p.a, p.b, mult});
        if (end == std::string_view::npos) break;
        start = end + sep.size();
    }
    return A;
}

// ------------------------------------------------------------------ fixtures

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::vector<std::string> fixture_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open fixture " + path);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

cplx parse_phase(const std::string& s) {
    if (s == "1") return 1.0;
    if (s == "-1") return -1.0;
    if (s == "i") return {0.0, 1.0};
    if (s == "-i") return {0.0, -1.0};
    throw std::invalid_argument("unsupported phase '" + s + "'");
}

}  // namespace

std::vector<FixtureAlgebra> read_algebra_fixture(const std::string& path) {
    std::vector<FixtureAlgebra> out;
    for (const auto& line : fixture_lines(path)) {
        auto f = split(line, ';');
        if (f.size() != 5) throw std::runtime_error("algebra fixture line needs 5 fields: " + line);
        out.push_back({f[0], f[1], f[2], f[3], f[4]});
    }
    return out;
}

std::vector<AnyonRow> read_anyon_fixture(const std::string& path) {
    std::vector<AnyonRow> out;
    for (const auto& line : fixture_lines(path)) {
        auto f = split(line, '|');
        if (f.size() != 4) throw std::runtime_error("anyon fixture line needs 4 fields: " + line);
        out.push_back({f[0], f[1], std::stoi(f[2]), parse_phase(f[3])});
    }
    return out;
}

nlohmann::json center_to_json(const Center& C) {
    nlohmann::json j;
    j["group"] = C.group->name();
    j["anyons"] = nlohmann::json::array();
    double total = 0.0;
    for (const auto& a : C.anyons) {
        j["anyons"].push_back({{"label", a.label()},
                               {"short", a.short_label()},
                               {"qdim", a.qdim},
                               {"spin", {std::abs(a.spin.real()) < 1e-15 ? 0.0 : a.spin.real(),
                                         std::abs(a.spin.imag()) < 1e-15 ? 0.0 : a.spin.imag()}}});
        total += double(a.qdim) * a.qdim;
    }
    j["sum_qdim_squared"] = total;
    nlohmann::json S = nlohmann::json::array();
    for (int r = 0; r < C.S.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < C.S.cols(); ++c) row.push_back({C.S(r, c).real(), C.S(r, c).imag()});
        S.push_back(row);
    }
    j["S"] = S;
    return j;
}

}  // namespace hyb
