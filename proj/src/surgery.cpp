#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>

#include "hyb/lattice.hpp"

namespace hyb {

namespace {

const BoundaryLine& interface_line(const Layout& L) {
    for (const auto& l : L.boundary_lines())
        if (l.interface) return l;
    throw std::invalid_argument("layout has no interface");
}

LatticeState scaled_sum(const std::vector<LatticeState>& terms, const std::vector<cplx>& w) {
    LatticeState out{terms[0].layout, std::vector<cplx>(terms[0].amps.size(), cplx(0.0))};
    for (size_t t = 0; t < terms.size(); ++t)
        for (size_t i = 0; i < out.amps.size(); ++i) out.amps[i] += w[t] * terms[t].amps[i];
    return out;
}

// Spectral branches of a cyclic unitary given its powers applied to the state.
std::vector<LatticeState> cyclic_branches(const std::vector<LatticeState>& powers) {
    const int N = static_cast<int>(powers.size());
    std::vector<LatticeState> out;
    for (int m = 0; m < N; ++m) {
        std::vector<cplx> w(N);
        for (int t = 0; t < N; ++t) w[t] = std::polar(1.0 / N, -2.0 * std::numbers::pi * t * m / N);
        out.push_back(scaled_sum(powers, w));
    }
    return out;
}

int pick(const std::vector<double>& probs, CounterRng& rng) {
    double total = 0.0;
    for (double p : probs) total += p;
    double u = rng.uniform() * total, acc = 0.0;
    int last = -1;
    for (size_t k = 0; k < probs.size(); ++k) {
        if (probs[k] < 1e-14) continue;
        last = static_cast<int>(k);
        acc += probs[k];
        if (u < acc) return last;
    }
    if (last < 0) throw ZeroProbabilityOutcome("no outcome has nonzero probability");
    return last;
}

}  // namespace

// ---------------------------------------------------------------- surgery

MergeResult merge(const LatticeState& pair, const InterfaceSpec& spec, const MergeOptions& opt) {
    if (!pair.layout || pair.layout->kind() != Layout::Kind::Pair) throw std::invalid_argument("merge needs a pair state");
    auto H = build_hybrid(pair.layout, spec, opt.cap);
    const std::uint64_t IF = H->dimension() / pair.layout->dimension();
    MergeResult r{LatticeState{H, std::vector<cplx>(H->dimension(), cplx(0.0))}, {}, {}, 1.0};
    for (std::uint64_t i = 0; i < pair.amps.size(); ++i) r.state.amps[i * IF] = pair.amps[i];
    r.state.normalize();

    const auto& line = interface_line(*H);
    const auto& gens = H->interface_generators();
    r.totals.assign(gens.size(), 0);

    if (opt.mode == MergeOptions::Mode::Project) {
        for (int v : line.vertices) r.state = hyb::apply(vertex_projector(*H, v), r.state);
        double n = r.state.norm();
        if (n < 1e-7) throw ZeroProbabilityOutcome("merge projection annihilates the state");
        r.probability = n * n;
        r.state.normalize();
        r.outcomes.assign(line.vertices.size(), std::vector<int>(gens.size(), 0));
        return r;
    }

    const FiniteGroup& PG = *line.group;
    for (int a : line.K.members)
        for (int b : line.K.members)
            if (PG.mul(a, b) != PG.mul(b, a)) throw std::invalid_argument("measured merge needs an abelian K");
    if (opt.forced) {
        if (opt.forced->size() != line.vertices.size()) throw std::invalid_argument("forced outcomes: one row per interface vertex");
        for (const auto& row : *opt.forced)
            if (row.size() != gens.size()) throw std::invalid_argument("forced outcomes: one entry per generator");
    }

    CounterRng rng(opt.seed);
    for (size_t vi = 0; vi < line.vertices.size(); ++vi) {
        int v = line.vertices[vi];
        std::vector<int> row;
        for (size_t j = 0; j < gens.size(); ++j) {
            const int N = PG.element_order(gens[j]);
            std::vector<LatticeState> powers;
            for (int t = 0; t < N; ++t) powers.push_back(hyb::apply(boundary_vertex_op(*H, v, PG.power(gens[j], t)), r.state));
            auto branches = cyclic_branches(powers);
            std::vector<double> probs;
            for (const auto& b : branches) probs.push_back(std::pow(b.norm(), 2));
            int m;
            if (opt.forced) {
                m = (((*opt.forced)[vi][j] % N) + N) % N;
                if (probs[m] < 1e-14) throw ZeroProbabilityOutcome("forced merge outcome has zero probability");
            } else {
                m = pick(probs, rng);
            }
            r.probability *= probs[m];
            r.state = std::move(branches[m]);
            r.state.normalize();
            row.push_back(m);
            r.totals[j] = (r.totals[j] + m) % N;
        }
        r.outcomes.push_back(row);
    }
    return r;
}

SplitResult split(const LatticeState& merged, const SplitOptions& opt) {
    const auto& H = merged.layout;
    if (!H || H->kind() != Layout::Kind::Hybrid) throw std::invalid_argument("split needs a hybrid state");
    const auto& P = H->base();
    const auto& line = interface_line(*H);
    const FiniteGroup& PG = *line.group;
    const std::uint64_t IF = H->dimension() / P->dimension(), NP = P->dimension();
    const int h = static_cast<int>(line.edges.size());
    const int R = PG.order();

    double n2 = std::pow(merged.norm(), 2);
    if (n2 == 0.0) throw std::domain_error("cannot split the zero state");
    std::vector<double> probs(IF, 0.0);
    for (std::uint64_t i = 0; i < NP; ++i)
        for (std::uint64_t f = 0; f < IF; ++f) probs[f] += std::norm(merged.amps[i * IF + f]) / n2;

    std::uint64_t f = 0;
    if (opt.forced) {
        if (static_cast<int>(opt.forced->size()) != h) throw std::invalid_argument("forced split: one value per interface edge");
        for (int d : *opt.forced) {
            if (d < 0 || d >= R) throw std::out_of_range("forced split value outside G x G'");
            f = f * R + d;
        }
        if (probs[f] < 1e-14) throw ZeroProbabilityOutcome("forced split outcome has zero probability");
    } else {
        CounterRng rng(opt.seed);
        f = static_cast<std::uint64_t>(pick(probs, rng));
    }

    SplitResult r{LatticeState{P, std::vector<cplx>(NP)}, {}, {}, {}, probs[f]};
    for (std::uint64_t i = 0; i < NP; ++i) r.state.amps[i] = merged.amps[i * IF + f];
    r.state.normalize();
    r.outcomes.assign(h, 0);
    for (int y = h - 1, rest = static_cast<int>(f); y >= 0; --y, rest /= R) r.outcomes[y] = rest % R;
    r.flagged = flux_flags(r.state);

    if (opt.correct) {
        const auto& P0 = P->patches()[0];
        const auto& P1 = P->patches()[1];
        int acc = 0;
        for (int y = 0; y <= h; ++y) {
            auto [a, b] = PG.split(acc);
            if (a != 0) {
                r.state = hyb::apply(edge_right(*P, P0.right_column[y], a), r.state);
                r.corrections.push_back({0, P0.right_column[y], false, a});
            }
            if (b != 0) {
                r.state = hyb::apply(edge_left(*P, P1.left_column[y], b), r.state);
                r.corrections.push_back({1, P1.left_column[y], true, b});
            }
            if (y < h) acc = PG.mul(acc, r.outcomes[y]);
        }
    }
    return r;
}

std::vector<FluxFlag> flux_flags(const LatticeState& s, double tol) {
    const Layout& L = *s.layout;
    double n2 = std::pow(s.norm(), 2);
    std::vector<FluxFlag> out;
    std::vector<int> vals(L.num_edges());
    std::vector<std::vector<double>> w(L.plaquettes().size());
    for (const auto& p : L.plaquettes()) w[p.index].assign(p.group->order(), 0.0);
    for (std::uint64_t i = 0; i < s.amps.size(); ++i) {
        double a = std::norm(s.amps[i]);
        if (a == 0.0) continue;
        for (int e = 0; e < L.num_edges(); ++e) vals[e] = L.digit(i, e);
        for (const auto& p : L.plaquettes()) w[p.index][plaquette_holonomy(L, p.index, vals)] += a / n2;
    }
    for (const auto& p : L.plaquettes()) {
        const auto& d = w[p.index];
        if (d[0] >= 1.0 - tol) continue;
        auto best = std::max_element(d.begin(), d.end());
        out.push_back({p.index, p.patch, *best >= 1.0 - tol ? static_cast<int>(best - d.begin()) : -1});
    }
    return out;
}

// ---------------------------------------------------------------- vertex measurement

std::vector<VertexBranch> direct_vertex_measurement(const LatticeState& s, int v, int g) {
    const Layout& L = *s.layout;
    const FiniteGroup& G = *L.vertices().at(v).group;
    const int N = G.element_order(g);
    std::vector<LatticeState> powers;
    for (int t = 0; t < N; ++t) powers.push_back(hyb::apply(vertex_op(L, v, G.power(g, t)), s));
    double n2 = std::pow(s.norm(), 2);
    std::vector<VertexBranch> out;
    auto branches = cyclic_branches(powers);
    for (int m = 0; m < N; ++m) {
        double p = std::pow(branches[m].norm(), 2) / n2;
        if (p < 1e-14) continue;
        branches[m].normalize();
        out.push_back({m, 0, p, std::move(branches[m])});
    }
    return out;
}

std::vector<VertexBranch> ancilla_vertex_measurement(const LatticeState& s, int v, int g) {
    const Layout& L = *s.layout;
    const FiniteGroup& G = *L.vertices().at(v).group;
    const int n = G.order(), N = G.element_order(g);
    // Controlled A_v^(h) on the uniform ancilla: one branch per ancilla basis state.
    std::vector<LatticeState> phi;
    for (int h = 0; h < n; ++h) {
        auto t = hyb::apply(vertex_op(L, v, h), s);
        for (auto& a : t.amps) a /= std::sqrt(double(n));
        phi.push_back(std::move(t));
    }
    std::vector<int> reps;
    std::vector<char> covered(n, 0);
    for (int c = 0; c < n; ++c) {
        if (covered[c]) continue;
        reps.push_back(c);
        for (int j = 0; j < N; ++j) covered[G.mul(G.power(g, j), c)] = 1;
    }
    double n2 = std::pow(s.norm(), 2);
    std::vector<VertexBranch> out;
    for (size_t ci = 0; ci < reps.size(); ++ci)
        for (int m = 0; m < N; ++m) {
            // Ancilla eigenvector of L^g with eigenvalue exp(2 pi i m / N) on the coset <g> c.
            std::vector<LatticeState> terms;
            std::vector<cplx> w;
            for (int j = 0; j < N; ++j) {
                terms.push_back(phi[G.mul(G.power(g, j), reps[ci])]);
                w.push_back(std::polar(1.0 / std::sqrt(double(N)), 2.0 * std::numbers::pi * j * m / N));
            }
            auto b = scaled_sum(terms, w);
            double p = std::pow(b.norm(), 2) / n2;
            if (p < 1e-14) continue;
            b.normalize();
            out.push_back({(N - m) % N, static_cast<int>(ci), p, std::move(b)});
        }
    return out;
}

// ---------------------------------------------------------------- cross-check

std::vector<std::string> fragment_names() { return {"z4-d4", "d4-z2z2", "d4-z2", "z2-z2", "trivial"}; }

Fragment fragment_by_name(const std::string& name) {
    auto pairs = [](const GroupPtr& A, const GroupPtr& B, std::vector<std::pair<std::string, std::string>> labels) {
        std::vector<std::pair<int, int>> out;
        for (const auto& [a, b] : labels) out.emplace_back(A->element(a), B->element(b));
        return out;
    };
    if (name == "z4-d4") {
        auto A = parse_group("Z4"), B = parse_group("D4");
        return {name, A, B, pairs(A, B, {{"m", "r"}})};
    }
    if (name == "d4-z2z2") {
        auto A = parse_group("D4"), B = parse_group("Z2 x Z2");
        return {name, A, B, pairs(A, B, {{"r^2", "m|id"}, {"r^3s", "id|m"}})};
    }
    if (name == "d4-z2") {
        auto A = parse_group("D4"), B = parse_group("Z2");
        return {name, A, B, pairs(A, B, {{"r^3s", "m"}})};
    }
    if (name == "z2-z2") {
        auto A = parse_group("Z2"), B = parse_group("Z2");
        return {name, A, B, pairs(A, B, {{"m", "m"}})};
    }
    if (name == "trivial") {
        auto A = parse_group("Z2"), B = parse_group("Z2");
        return {name, A, B, {}};
    }
    throw std::invalid_argument("unknown fragment '" + name + "'");
}

LogicalState random_logical_state(const LogicalSpace& space, std::uint64_t seed) {
    CounterRng rng(seed);
    CVector v(space.dim());
    for (int i = 0; i < space.dim(); ++i) {
        double re = 2.0 * rng.uniform() - 1.0;
        double im = 2.0 * rng.uniform() - 1.0;
        v(i) = cplx(re, im);
    }
    v.normalize();
    return LogicalState{space, v, true};
}

nlohmann::json CrossCheckReport::to_json() const {
    nlohmann::json j{{"fragment", fragment},
                     {"rows", rows},
                     {"amplitudes", amplitudes},
                     {"num_branches", branches.size()},
                     {"max_deviation", max_deviation},
                     {"max_probability_deviation", max_probability_deviation},
                     {"max_residual", max_residual},
                     {"max_violation", max_violation},
                     {"total_probability", total_probability},
                     {"ok", ok}};
    j["branches"] = nlohmann::json::array();
    for (const auto& b : branches)
        j["branches"].push_back({{"vertex_outcomes", b.vertex_outcomes},
                                 {"totals", b.totals},
                                 {"split_outcomes", b.split_outcomes},
                                 {"probability", b.probability},
                                 {"deviation", b.deviation},
                                 {"residual", b.residual},
                                 {"violation", b.violation}});
    return j;
}

CrossCheckReport lattice_vs_logical(const Fragment& f, const CrossCheckOptions& opt) {
    auto PA = build_patch(f.left, opt.left_width, opt.rows, std::nullopt, std::nullopt, opt.cap);
    auto PB = build_patch(f.right, opt.right_width, opt.rows, std::nullopt, std::nullopt, opt.cap);
    auto pair = build_pair(PA, PB, opt.cap);
    auto spec = make_interface(f.left, f.right, f.generators, std::nullopt, f.name);
    auto H = build_hybrid(pair, spec, opt.cap);

    CrossCheckReport rep;
    rep.fragment = f.name;
    rep.rows = opt.rows;
    rep.amplitudes = H->dimension();

    LogicalSpace space({f.left, f.right});
    LogicalState init = opt.initial ? opt.initial->normalized_copy() : random_logical_state(space, opt.seed);
    auto s0 = encode_logical(pair, init);

    const FiniteGroup& PG = *spec.product;
    std::vector<int> orders;
    std::vector<LogicalOperator> U;
    for (int g : spec.generators) {
        orders.push_back(PG.element_order(g));
        auto [a, b] = PG.split(g);
        U.push_back(right_mult(space, 0, a) * left_mult(space, 1, b));
    }
    const int nv = opt.rows + 1;
    std::uint64_t tuples = 1;
    for (int o : orders)
        for (int v = 0; v < nv; ++v) tuples *= o;

    std::map<std::vector<int>, double> lattice_prob;
    std::map<std::vector<int>, LogicalState> expected;

    for (std::uint64_t t = 0; t < tuples; ++t) {
        std::vector<std::vector<int>> forced(nv, std::vector<int>(orders.size()));
        std::uint64_t rest = t;
        for (int v = nv - 1; v >= 0; --v)
            for (int j = static_cast<int>(orders.size()) - 1; j >= 0; --j) {
                forced[v][j] = static_cast<int>(rest % orders[j]);
                rest /= orders[j];
            }
        MergeOptions mo;
        mo.mode = MergeOptions::Mode::Measure;
        mo.forced = forced;
        mo.cap = opt.cap;
        MergeResult m;
        try {
            m = merge(s0, spec, mo);
        } catch (const ZeroProbabilityOutcome&) {
            continue;
        }
        if (!expected.count(m.totals)) {
            LogicalState e = init;
            for (size_t j = 0; j < U.size(); ++j) e = cyclic_eigenprojector(U[j], orders[j], m.totals[j]).apply(e);
            expected.emplace(m.totals, e);
        }
        const LogicalState& e = expected.at(m.totals);
        const double pe = e.amps.squaredNorm();

        std::vector<int> split_vals(opt.rows, 0);
        const int kn = spec.K.size();
        std::uint64_t ksplits = 1;
        for (int r = 0; r < opt.rows; ++r) ksplits *= kn;
        for (std::uint64_t q = 0; q < ksplits; ++q) {
            std::uint64_t qr = q;
            for (int r = opt.rows - 1; r >= 0; --r) {
                split_vals[r] = spec.K.members[qr % kn];
                qr /= kn;
            }
            SplitOptions so;
            so.forced = split_vals;
            SplitResult s;
            try {
                s = split(m.state, so);
            } catch (const ZeroProbabilityOutcome&) {
                continue;
            }
            CrossBranch b;
            b.vertex_outcomes = m.outcomes;
            b.totals = m.totals;
            b.split_outcomes = s.outcomes;
            b.probability = m.probability * s.probability;
            auto d = decode_logical(s.state, &b.residual);
            if (pe < 1e-14) {
                b.deviation = 1.0;
            } else {
                CVector en = e.amps / std::sqrt(pe);
                cplx ov = en.dot(d.amps);
                cplx phase = std::abs(ov) > 0 ? ov / std::abs(ov) : cplx(1.0);
                b.deviation = (d.amps - phase * en).cwiseAbs().maxCoeff();
            }
            b.violation = max_term_violation(s.state);
            lattice_prob[m.totals] += b.probability;
            rep.total_probability += b.probability;
            rep.max_deviation = std::max(rep.max_deviation, b.deviation);
            rep.max_residual = std::max(rep.max_residual, b.residual);
            rep.max_violation = std::max(rep.max_violation, b.violation);
            rep.branches.push_back(std::move(b));
        }
    }
    for (const auto& [tot, e] : expected)
        rep.max_probability_deviation =
            std::max(rep.max_probability_deviation, std::abs(lattice_prob[tot] - e.amps.squaredNorm()));
    const double tol = 1e-8;
    rep.ok = !rep.branches.empty() && rep.max_deviation < tol && rep.max_probability_deviation < tol &&
             rep.max_residual < 1e-6 && rep.max_violation < tol && std::abs(rep.total_probability - 1.0) < tol;
    return rep;
}

// ---------------------------------------------------------------- snapshots

namespace {

template <class T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        std::reverse(b, b + sizeof(T));
        std::memcpy(&v, b, sizeof(T));
    }
    return v;
}

}  // namespace

void write_snapshot(const std::string& prefix, const LatticeState& s) {
    nlohmann::json j{{"schema_version", 1},
                     {"format", "complex64-le"},
                     {"binary", prefix + ".bin"},
                     {"amplitudes", s.amps.size()},
                     {"norm", s.norm()},
                     {"layout", s.layout->recipe()},
                     {"description", s.layout->describe()}};
    std::ofstream js(prefix + ".json");
    if (!js) throw std::runtime_error("cannot write " + prefix + ".json");
    js << j.dump(2) << "\n";
    std::ofstream bin(prefix + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error("cannot write " + prefix + ".bin");
    for (cplx a : s.amps) {
        float re = to_little(static_cast<float>(a.real())), im = to_little(static_cast<float>(a.imag()));
        bin.write(reinterpret_cast<const char*>(&re), sizeof re);
        bin.write(reinterpret_cast<const char*>(&im), sizeof im);
    }
}

LatticeState read_snapshot(const std::string& prefix) {
    std::ifstream js(prefix + ".json");
    if (!js) throw std::runtime_error("cannot read " + prefix + ".json");
    auto j = nlohmann::json::parse(js);
    if (j.value("schema_version", 0) != 1) throw std::runtime_error("unsupported snapshot schema");
    auto L = layout_from_recipe(j.at("layout"), std::max<std::uint64_t>(default_amplitude_cap(), j.at("amplitudes").get<std::uint64_t>()));
    if (L->dimension() != j.at("amplitudes").get<std::uint64_t>()) throw std::runtime_error("snapshot size does not match its layout");
    std::ifstream bin(prefix + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error("cannot read " + prefix + ".bin");
    LatticeState s{L, std::vector<cplx>(L->dimension())};
    for (auto& a : s.amps) {
        float re, im;
        if (!bin.read(reinterpret_cast<char*>(&re), sizeof re) || !bin.read(reinterpret_cast<char*>(&im), sizeof im))
            throw std::runtime_error("snapshot binary is truncated");
        a = cplx(to_little(re), to_little(im));
    }
    return s;
}

}  // namespace hyb
