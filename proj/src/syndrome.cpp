#include "hyb/syndrome.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <future>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace hyb {

namespace {

constexpr double kSyndromeTol = 1e-9;

const FiniteGroup& d4_edge_group(const Layout& L, int e) {
    if (e < 0 || e >= L.num_edges()) throw std::out_of_range("edge " + std::to_string(e) + " out of range");
    const auto& G = *L.edges()[e].group;
    const auto& d = G.descriptor();
    if (d.kind != GroupDescriptor::Kind::Dihedral || d.n != 4)
        throw std::invalid_argument("edge " + std::to_string(e) + " carries " + G.name() + ", not D4");
    return G;
}

int mod4(int x) { return ((x % 4) + 4) % 4; }

cplx ipow(int n) {
    static const cplx table[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    return table[mod4(n)];
}

// f rewrites (j, b) in place and returns the coefficient.
template <class F>
LocalOp on_edge(const Layout& L, int e, F f) {
    const auto& G = d4_edge_group(L, e);
    return make_local_op(L, {e}, [&](std::vector<int>& d) {
        auto [j, b] = G.dihedral_parts(d[0]);
        cplx c = f(j, b);
        d[0] = G.dihedral(mod4(j), b & 1);
        return c;
    });
}

LocalOp product(const Layout& L, const std::vector<LocalOp>& ops) {
    LocalOp out = identity_op(L);
    for (const auto& op : ops) out = compose(op, out);
    return out;
}

void require_plain_d4(const Layout& L) {
    if (!L.boundary_lines().empty())
        throw std::invalid_argument("D4 stabilizers need plain rough/smooth boundaries without (K, phi) lines");
    for (int e = 0; e < L.num_edges(); ++e) d4_edge_group(L, e);
}

// Plaquette edges in the order left, top, right, bottom; -1 where missing.
std::array<int, 4> plaquette_sides(const Layout& L, int p) {
    const auto& P = L.plaquettes().at(p);
    std::array<int, 4> side{-1, -1, -1, -1};
    for (const auto& w : P.walk) {
        const auto& E = L.edges()[w.edge];
        int pos = E.vertical ? (E.line == P.col ? 0 : 2) : (E.row == P.row ? 3 : 1);
        if ((pos < 2) != w.forward) throw std::logic_error("unexpected plaquette orientation");
        side[pos] = w.edge;
    }
    return side;
}

LocalOp vertex_generator(const Layout& L, int v, bool s_type) {
    std::vector<LocalOp> ops;
    for (const auto& st : L.vertices().at(v).star) {
        if (st.factor != -1) throw std::invalid_argument("product-group vertices have no D4 generators");
        if (s_type) ops.push_back(st.outgoing ? compose(qudit_c(L, st.edge), qubit_x(L, st.edge)) : qubit_x(L, st.edge));
        else ops.push_back(st.outgoing ? qudit_x(L, st.edge, 1) : qudit_x_controlled(L, st.edge));
    }
    return product(L, ops);
}

LocalOp plaquette_r(const Layout& L, int p) {
    auto side = plaquette_sides(L, p);
    std::vector<int> edges;
    std::array<int, 4> slot{-1, -1, -1, -1};
    for (int k = 0; k < 4; ++k)
        if (side[k] >= 0) {
            slot[k] = static_cast<int>(edges.size());
            edges.push_back(side[k]);
        }
    const auto& G = *L.plaquettes().at(p).group;
    return make_local_op(L, edges, [&](std::vector<int>& d) {
        int j[4] = {0, 0, 0, 0}, z[4] = {1, 1, 1, 1};
        for (int k = 0; k < 4; ++k)
            if (slot[k] >= 0) {
                auto [a, b] = G.dihedral_parts(d[slot[k]]);
                j[k] = a;
                z[k] = b ? -1 : 1;
            }
        return ipow(j[0] + z[0] * j[1] - z[3] * j[2] - j[3]);
    });
}

LocalOp plaquette_s(const Layout& L, int p) {
    std::vector<LocalOp> ops;
    for (int e : plaquette_sides(L, p))
        if (e >= 0) ops.push_back(qubit_z(L, e));
    return product(L, ops);
}

std::vector<int> adjacent_sites(const Layout& L, int e, bool vertex) {
    std::vector<int> out;
    if (vertex) {
        for (int v : {L.edges()[e].tail, L.edges()[e].head})
            if (v >= 0) out.push_back(v);
    } else {
        for (const auto& p : L.plaquettes())
            for (const auto& w : p.walk)
                if (w.edge == e) out.push_back(p.index);
    }
    std::sort(out.begin(), out.end());
    return out;
}

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
    return out;
}

std::string site_tag(const SyndromeEntry& e) {
    return generator_name(e.kind) + "@" + (is_vertex_kind(e.kind) ? "v" : "p") + std::to_string(e.site);
}

nlohmann::json cplx_json(cplx c) {
    auto clean = [](double x) { return std::abs(x) < 1e-12 ? 0.0 : x; };
    return {clean(c.real()), clean(c.imag())};
}

}  // namespace

// ---------------------------------------------------------------- edge operators

LocalOp qudit_x(const Layout& L, int e, int power) {
    return on_edge(L, e, [power](int& j, int&) { j += power; return cplx(1.0); });
}

LocalOp qudit_z(const Layout& L, int e, int power) {
    return on_edge(L, e, [power](int& j, int&) { return ipow(power * j); });
}

LocalOp qudit_c(const Layout& L, int e) {
    return on_edge(L, e, [](int& j, int&) { j = -j; return cplx(1.0); });
}

LocalOp qubit_x(const Layout& L, int e) {
    return on_edge(L, e, [](int&, int& b) { b ^= 1; return cplx(1.0); });
}

LocalOp qubit_z(const Layout& L, int e) {
    return on_edge(L, e, [](int&, int& b) { return cplx(b ? -1.0 : 1.0); });
}

LocalOp qudit_x_controlled(const Layout& L, int e) {
    return on_edge(L, e, [](int& j, int& b) { j -= b ? -1 : 1; return cplx(1.0); });
}

const std::vector<std::string>& error_names() {
    static const std::vector<std::string> names{"Z", "Zq", "Zq^2", "Zq^3", "X", "Xq", "Xq^2", "Xq^3"};
    return names;
}

LocalOp edge_error(const Layout& L, const std::string& name, int e) {
    if (name == "Z") return qubit_z(L, e);
    if (name == "X") return qubit_x(L, e);
    int power = 1;
    std::string base = name;
    if (auto caret = name.find('^'); caret != std::string::npos) {
        base = name.substr(0, caret);
        std::string p = name.substr(caret + 1);
        if (p.size() != 1 || p[0] < '1' || p[0] > '3') throw std::invalid_argument("unsupported error '" + name + "'");
        power = p[0] - '0';
    }
    if (base == "Zq") return qudit_z(L, e, power);
    if (base == "Xq") return qudit_x(L, e, power);
    throw std::invalid_argument("unsupported error '" + name + "'");
}

// ---------------------------------------------------------------- generators

std::string generator_name(GeneratorKind k) {
    switch (k) {
        case GeneratorKind::VertexR: return "A_v^(r)";
        case GeneratorKind::VertexS: return "A_v^(s)";
        case GeneratorKind::VertexR2: return "A_v^(r^2)";
        case GeneratorKind::PlaquetteR: return "S_p^(r)";
        case GeneratorKind::PlaquetteS: return "S_p^(s)";
        case GeneratorKind::PlaquetteR2: return "S_p^(r^2)";
    }
    return "?";
}

GeneratorKind parse_generator_kind(const std::string& name) {
    for (auto k : {GeneratorKind::VertexR, GeneratorKind::VertexS, GeneratorKind::VertexR2, GeneratorKind::PlaquetteR,
                   GeneratorKind::PlaquetteS, GeneratorKind::PlaquetteR2})
        if (generator_name(k) == trim(name)) return k;
    throw std::invalid_argument("unknown stabilizer generator '" + name + "'");
}

bool is_vertex_kind(GeneratorKind k) {
    return k == GeneratorKind::VertexR || k == GeneratorKind::VertexS || k == GeneratorKind::VertexR2;
}

bool is_sector_kind(GeneratorKind k) {
    return k == GeneratorKind::VertexR2 || k == GeneratorKind::PlaquetteR2 || k == GeneratorKind::PlaquetteS;
}

std::string StabilizerGenerator::name() const {
    return generator_name(kind) + "@" + (is_vertex_kind(kind) ? "v" : "p") + std::to_string(site);
}

StabilizerGenerator d4_generator(const Layout& L, GeneratorKind kind, int site) {
    require_plain_d4(L);
    StabilizerGenerator g{kind, site, {}};
    switch (kind) {
        case GeneratorKind::VertexR: g.op = vertex_generator(L, site, false); break;
        case GeneratorKind::VertexS: g.op = vertex_generator(L, site, true); break;
        case GeneratorKind::VertexR2: {
            auto a = vertex_generator(L, site, false);
            g.op = compose(a, a);
            break;
        }
        case GeneratorKind::PlaquetteR: g.op = plaquette_r(L, site); break;
        case GeneratorKind::PlaquetteS: g.op = plaquette_s(L, site); break;
        case GeneratorKind::PlaquetteR2: {
            auto s = plaquette_r(L, site);
            g.op = compose(s, s);
            break;
        }
    }
    return g;
}

std::vector<StabilizerGenerator> d4_stabilizers(const Layout& L) {
    std::vector<StabilizerGenerator> out;
    for (const auto& v : L.vertices()) {
        out.push_back(d4_generator(L, GeneratorKind::VertexR, v.index));
        out.push_back(d4_generator(L, GeneratorKind::VertexS, v.index));
    }
    for (const auto& p : L.plaquettes()) {
        out.push_back(d4_generator(L, GeneratorKind::PlaquetteR, p.index));
        out.push_back(d4_generator(L, GeneratorKind::PlaquetteS, p.index));
    }
    return out;
}

// ---------------------------------------------------------------- commutators

nlohmann::json CommutatorReport::to_json() const {
    nlohmann::json rel = nlohmann::json::array();
    for (const auto& c : relations)
        rel.push_back({{"relation", c.relation},
                       {"vertex", c.vertex},
                       {"plaquette", c.plaquette},
                       {"deviation", c.deviation},
                       {"ok", c.ok}});
    return {{"relations", rel},
            {"trivial_pairs", trivial_pairs},
            {"failed_trivial_pairs", failed_trivial_pairs},
            {"max_deviation", max_deviation},
            {"failures", failures},
            {"ok", ok}};
}

CommutatorReport commutator_relations(const Layout& L) {
    auto gens = d4_stabilizers(L);
    std::map<std::pair<GeneratorKind, int>, int> index;
    for (int i = 0; i < static_cast<int>(gens.size()); ++i) index[{gens[i].kind, gens[i].site}] = i;
    auto op_of = [&](GeneratorKind k, int site) { return gens[index.at({k, site})].op; };

    CommutatorReport rep;
    std::set<std::pair<int, int>> related;
    auto check = [&](const std::string& rel, GeneratorKind a, int sa, GeneratorKind b, int sb, GeneratorKind c, int sc,
                     int v, int p) {
        double d = op_distance(group_commutator(op_of(a, sa), op_of(b, sb)), d4_generator(L, c, sc).op);
        CommutatorCheck chk{rel, v, p, d, d < 1e-12};
        if (!chk.ok) rep.failures.push_back(rel + " at v" + std::to_string(v) + (p >= 0 ? " p" + std::to_string(p) : ""));
        rep.max_deviation = std::max(rep.max_deviation, d);
        rep.relations.push_back(chk);
        int i = index.at({a, sa}), j = index.at({b, sb});
        related.insert({std::min(i, j), std::max(i, j)});
    };

    for (const auto& v : L.vertices()) {
        check("[A_v^(r), A_v^(s)] = A_v^(r^2)", GeneratorKind::VertexR, v.index, GeneratorKind::VertexS, v.index,
              GeneratorKind::VertexR2, v.index, v.index, -1);
        if (int p = L.plaquette_at(v.patch, v.line, v.row); p >= 0)
            check("[A_v^(s), S_pNE^(r)] = S_pNE^(r^2)", GeneratorKind::VertexS, v.index, GeneratorKind::PlaquetteR, p,
                  GeneratorKind::PlaquetteR2, p, v.index, p);
        if (int p = L.plaquette_at(v.patch, v.line - 1, v.row - 1); p >= 0)
            check("[A_v^(r), S_pSW^(r)] = S_pSW^(s)", GeneratorKind::VertexR, v.index, GeneratorKind::PlaquetteR, p,
                  GeneratorKind::PlaquetteS, p, v.index, p);
    }

    // Pairs with disjoint supports commute as tensor factors; everything overlapping is computed.
    for (int i = 0; i < static_cast<int>(gens.size()); ++i)
        for (int j = i + 1; j < static_cast<int>(gens.size()); ++j) {
            if (related.count({i, j})) continue;
            const auto& a = gens[i].op.edges;
            const auto& b = gens[j].op.edges;
            bool overlap = std::any_of(a.begin(), a.end(), [&](int e) { return std::find(b.begin(), b.end(), e) != b.end(); });
            if (!overlap) continue;
            ++rep.trivial_pairs;
            double d = op_distance(group_commutator(gens[i].op, gens[j].op), identity_op(L));
            rep.max_deviation = std::max(rep.max_deviation, d);
            if (d >= 1e-12) {
                ++rep.failed_trivial_pairs;
                rep.failures.push_back("[" + gens[i].name() + ", " + gens[j].name() + "] != 1");
            }
        }
    rep.ok = rep.failures.empty();
    return rep;
}

// ---------------------------------------------------------------- syndromes

bool SyndromeEntry::violated() const { return std::abs(value - cplx(1.0)) > kSyndromeTol; }

const SyndromeEntry& SyndromeVector::at(GeneratorKind k, int site) const {
    for (const auto& e : entries)
        if (e.kind == k && e.site == site) return e;
    throw std::out_of_range("no " + generator_name(k) + " at site " + std::to_string(site));
}

std::vector<GeneratorKind> SyndromeResult::flagged_kinds() const {
    std::set<GeneratorKind> ks;
    for (const auto& e : flagged) ks.insert(e.kind);
    return {ks.begin(), ks.end()};
}

nlohmann::json SyndromeResult::to_json() const {
    nlohmann::json fl = nlohmann::json::array();
    for (const auto& e : flagged)
        fl.push_back({{"generator", generator_name(e.kind)},
                      {"site", e.site},
                      {"value", cplx_json(e.value)},
                      {"definite", e.definite}});
    nlohmann::json all = nlohmann::json::array();
    for (const auto& e : syndrome.entries)
        all.push_back({{"generator", generator_name(e.kind)}, {"site", e.site}, {"value", cplx_json(e.value)}});
    return {{"error", error},  {"edge", edge},  {"probe", vertical ? "vertical" : "horizontal"},
            {"abelian_sector", syndrome.abelian_sector}, {"flagged", fl}, {"anyon", anyon}, {"expectations", all}};
}

SyndromeVector evaluate_syndrome(const LatticeState& s) {
    const Layout& L = *s.layout;
    require_plain_d4(L);
    SyndromeVector out;
    auto add = [&](GeneratorKind k, int site) {
        cplx v = expectation(s, d4_generator(L, k, site).op);
        out.entries.push_back({k, site, v, std::abs(std::abs(v) - 1.0) < kSyndromeTol});
    };
    for (const auto& v : L.vertices())
        for (auto k : {GeneratorKind::VertexR, GeneratorKind::VertexS, GeneratorKind::VertexR2}) add(k, v.index);
    for (const auto& p : L.plaquettes())
        for (auto k : {GeneratorKind::PlaquetteR, GeneratorKind::PlaquetteS, GeneratorKind::PlaquetteR2}) add(k, p.index);
    out.abelian_sector = std::none_of(out.entries.begin(), out.entries.end(),
                                      [](const SyndromeEntry& e) { return is_sector_kind(e.kind) && e.violated(); });
    return out;
}

SyndromeResult classify_syndrome(const SyndromeVector& v) {
    SyndromeResult r;
    r.syndrome = v;
    for (const auto& e : v.entries)
        if (e.violated() && (v.abelian_sector || is_sector_kind(e.kind))) r.flagged.push_back(e);
    if (!v.abelian_sector) {
        r.anyon = "non-Abelian";
        return r;
    }
    std::set<std::string> charges, fluxes;
    bool definite = true;
    std::set<int> charged;
    for (const auto& e : r.flagged) {
        if (!e.definite) definite = false;
        if (is_vertex_kind(e.kind)) charged.insert(e.site);
        else if (e.kind == GeneratorKind::PlaquetteR) {
            if (std::abs(e.value + 1.0) < kSyndromeTol) fluxes.insert("r^2");
            else definite = false;
        }
    }
    for (int site : charged) {
        double ar = v.at(GeneratorKind::VertexR, site).value.real();
        double as = v.at(GeneratorKind::VertexS, site).value.real();
        bool r_odd = ar < 0, s_odd = as < 0;
        charges.insert(r_odd && s_odd ? "1_rs" : r_odd ? "1_s" : "1_r");
    }
    if (!definite || charges.size() > 1 || fluxes.size() > 1) {
        r.anyon = "composite";
        return r;
    }
    r.anyon = "([" + (fluxes.empty() ? std::string("id") : *fluxes.begin()) + "]," +
              (charges.empty() ? std::string("1") : *charges.begin()) + ")";
    return r;
}

SyndromeResult syndrome_of_state(const LatticeState& s) { return classify_syndrome(evaluate_syndrome(s)); }

SyndromeResult syndrome_of_error(const LayoutPtr& L, const std::string& error, int edge) {
    auto op = edge_error(*L, error, edge);
    auto r = syndrome_of_state(hyb::apply(op, fiducial_state(L)));
    r.error = error;
    r.edge = edge;
    r.vertical = L->edges()[edge].vertical;
    return r;
}

LayoutPtr minimal_d4_patch() { return build_patch(parse_group("D4"), 2, 1); }

int canonical_probe_edge(const Layout& L) {
    for (const auto& e : L.edges())
        if (e.vertical && e.tail >= 0 && e.head >= 0) return e.index;
    throw std::invalid_argument("layout has no bulk vertical edge");
}

int horizontal_probe_edge(const Layout& L) {
    int best = -1;
    for (const auto& e : L.edges()) {
        if (e.vertical) continue;
        if (e.tail >= 0 && e.head >= 0) return e.index;
        if (best < 0 && (e.tail >= 0 || e.head >= 0)) best = e.index;
    }
    if (best < 0) throw std::invalid_argument("layout has no horizontal edge touching a vertex");
    return best;
}

std::vector<SyndromeResult> syndrome_table(const LayoutPtr& L, int edge) {
    std::vector<std::future<SyndromeResult>> jobs;
    for (const auto& name : error_names())
        jobs.push_back(std::async(std::launch::async, [&, name] { return syndrome_of_error(L, name, edge); }));
    std::vector<SyndromeResult> out;
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

std::vector<SyndromeRow> read_syndrome_fixture(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<SyndromeRow> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto f = split(line, '|');
        auto where = path + ":" + std::to_string(lineno) + ": ";
        if (f.size() != 4) throw std::runtime_error(where + "syndrome fixture line needs 4 fields");
        SyndromeRow row;
        row.errors = split(f[0], ',');
        for (const auto& k : split(f[1], ',')) {
            try {
                row.flagged.push_back(parse_generator_kind(k));
            } catch (const std::invalid_argument& e) {
                throw std::runtime_error(where + e.what());
            }
        }
        std::sort(row.flagged.begin(), row.flagged.end());
        if (f[2] != "abelian" && f[2] != "non-abelian") throw std::runtime_error(where + "sector must be abelian or non-abelian");
        row.abelian = f[2] == "abelian";
        row.anyon = f[3];
        out.push_back(row);
    }
    return out;
}

RowCheck check_syndrome_row(const Layout& L, const SyndromeRow& row, const SyndromeResult& r) {
    RowCheck c{r.error, false, {}};
    if (r.syndrome.abelian_sector != row.abelian) {
        c.detail = std::string("abelian sector flag is ") + (r.syndrome.abelian_sector ? "true" : "false");
        return c;
    }
    if (r.flagged_kinds() != row.flagged) {
        std::string got;
        for (auto k : r.flagged_kinds()) got += (got.empty() ? "" : ", ") + generator_name(k);
        c.detail = "flagged kinds {" + got + "}";
        return c;
    }
    for (auto k : row.flagged) {
        std::vector<int> sites;
        for (const auto& e : r.flagged)
            if (e.kind == k) sites.push_back(e.site);
        std::sort(sites.begin(), sites.end());
        if (sites != adjacent_sites(L, r.edge, is_vertex_kind(k))) {
            c.detail = generator_name(k) + " flagged away from the sites touching edge " + std::to_string(r.edge);
            return c;
        }
        if (row.abelian)
            for (const auto& e : r.flagged)
                if (e.kind == k && std::abs(e.value + 1.0) > kSyndromeTol) {
                    c.detail = site_tag(e) + " is not -1";
                    return c;
                }
    }
    if (r.anyon != row.anyon) {
        c.detail = "anyon " + r.anyon;
        return c;
    }
    c.ok = true;
    return c;
}

std::string syndrome_csv(const std::vector<SyndromeResult>& rows) {
    std::ostringstream os;
    os << "error,probe,edge,abelian_sector,flagged,anyon\n";
    for (const auto& r : rows) {
        std::string fl;
        for (const auto& e : r.flagged) fl += (fl.empty() ? "" : ";") + site_tag(e);
        os << r.error << ',' << (r.vertical ? "vertical" : "horizontal") << ',' << r.edge << ','
           << (r.syndrome.abelian_sector ? "true" : "false") << ',' << fl << ",\"" << r.anyon << "\"\n";
    }
    return os.str();
}

}  // namespace hyb
