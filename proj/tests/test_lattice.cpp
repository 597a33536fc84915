#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "hyb/lattice.hpp"

using namespace hyb;

namespace {

double state_distance(const LatticeState& a, const LatticeState& b) {
    double d = 0.0;
    for (size_t i = 0; i < a.amps.size(); ++i) d = std::max(d, std::abs(a.amps[i] - b.amps[i]));
    return d;
}

double phase_distance(const LatticeState& a, const LatticeState& b) {
    cplx ov = inner(a, b);
    cplx ph = std::abs(ov) > 0 ? ov / std::abs(ov) : cplx(1.0);
    double d = 0.0;
    for (size_t i = 0; i < a.amps.size(); ++i) d = std::max(d, std::abs(ph * a.amps[i] - b.amps[i]));
    return d;
}

bool commute(const LocalOp& a, const LocalOp& b) { return op_distance(compose(a, b), compose(b, a)) < 1e-12; }

Cocycle2 pauli_cocycle(const GroupPtr& V) {
    CMatrix X(2, 2), Z(2, 2), Y(2, 2), I = CMatrix::Identity(2, 2);
    X << 0, 1, 1, 0;
    Z << 1, 0, 0, -1;
    Y << 0, cplx(0, -1), cplx(0, 1), 0;
    std::vector<CMatrix> P{I, Z, X, Y};
    Cocycle2 phi{whole_group(V), {}};
    for (int g = 0; g < 4; ++g)
        for (int h = 0; h < 4; ++h) {
            CMatrix prod = P[g] * P[h];
            const CMatrix& base = P[V->mul(g, h)];
            phi.values.push_back(prod(0, 0) != 0.0 ? prod(0, 0) / base(0, 0) : prod(0, 1) / base(0, 1));
        }
    return phi;
}

}  // namespace

TEST(Layout, EdgeCounts) {
    auto a = build_patch(parse_group("D4"), 1, 1);
    EXPECT_EQ(a->num_edges(), 2);
    EXPECT_TRUE(a->vertices().empty());
    EXPECT_EQ(a->dimension(), 64u);
    auto b = build_patch(parse_group("Z4"), 1, 2);
    EXPECT_EQ(b->num_edges(), 3);
    auto c = build_patch(parse_group("D4"), 2, 1);
    EXPECT_EQ(c->num_edges(), 5);
    EXPECT_EQ(c->dimension(), 32768u);
    EXPECT_EQ(c->vertices().size(), 2u);
    EXPECT_EQ(c->plaquettes().size(), 2u);
    auto d = build_patch(parse_group("Z2"), 2, 2);
    EXPECT_EQ(d->num_edges(), 8);
    EXPECT_NE(c->describe().find("32768 amplitudes"), std::string::npos);
}

TEST(Layout, CodeSpaceDimensionIsGroupOrder) {
    struct Case {
        const char* g;
        int w, h, dim;
    };
    for (auto c : {Case{"Z2", 2, 2, 2}, Case{"D4", 1, 1, 8}, Case{"Z4", 1, 2, 4}, Case{"D4", 2, 1, 8}, Case{"S3", 2, 1, 6}})
        EXPECT_EQ(code_space_dimension(*build_patch(parse_group(c.g), c.w, c.h)), c.dim) << c.g << " " << c.w << "x" << c.h;
}

TEST(Layout, CapIsEnforced) {
    try {
        build_patch(parse_group("D4"), 3, 2);
        FAIL();
    } catch (const CapExceeded& e) {
        EXPECT_EQ(e.required(), std::uint64_t{1} << 39);
        EXPECT_EQ(e.allowed(), kDefaultAmplitudeCap);
    }
    EXPECT_THROW(build_patch(parse_group("D4"), 2, 1, std::nullopt, std::nullopt, 1000), CapExceeded);
}

TEST(Operators, VertexOperatorsRepresentTheGroup) {
    auto G = parse_group("D4");
    auto L = build_patch(G, 2, 1);
    for (const auto& v : L->vertices())
        for (int g = 0; g < 8; ++g)
            for (int h = 0; h < 8; ++h)
                EXPECT_LT(op_distance(compose(vertex_op(*L, v.index, g), vertex_op(*L, v.index, h)),
                                      vertex_op(*L, v.index, G->mul(g, h))),
                          1e-14);
}

TEST(Operators, PlaquetteProjectorsResolveIdentity) {
    auto L = build_patch(parse_group("S3"), 2, 1);
    for (const auto& p : L->plaquettes()) {
        std::vector<cplx> total(plaquette_op(*L, p.index, 0).local_dim(), cplx(0.0));
        for (int g = 0; g < 6; ++g) {
            auto op = plaquette_op(*L, p.index, g);
            for (int lc = 0; lc < op.local_dim(); ++lc) {
                EXPECT_EQ(op.target[lc], lc);
                total[lc] += op.coeff[lc];
            }
        }
        for (cplx t : total) EXPECT_LT(std::abs(t - 1.0), 1e-14);
    }
}

TEST(Operators, VerticesCommuteWithFlatness) {
    auto L = build_patch(parse_group("D4"), 2, 2);
    for (const auto& v : L->vertices())
        for (const auto& p : L->plaquettes())
            for (int g = 0; g < 8; ++g) EXPECT_TRUE(commute(vertex_op(*L, v.index, g), plaquette_op(*L, p.index, 0)));
}

TEST(Operators, TwistedBoundaryVertexComposes) {
    auto V = parse_group("Z2 x Z2");
    auto phi = pauli_cocycle(V);
    auto L = build_patch(V, 1, 2, BoundaryCondition{whole_group(V), phi});
    ASSERT_EQ(L->boundary_lines().size(), 1u);
    const auto& line = L->boundary_lines()[0].vertices;
    ASSERT_EQ(line.size(), 3u);
    for (int k = 0; k < 4; ++k)
        for (int k2 = 0; k2 < 4; ++k2) {
            // Full star: a genuine representation.
            int mid = line[1];
            EXPECT_LT(op_distance(compose(boundary_vertex_op(*L, mid, k), boundary_vertex_op(*L, mid, k2)),
                                  boundary_vertex_op(*L, mid, V->mul(k, k2))),
                      1e-14);
            // Corners where the line meets a smooth side: projective with the cocycle itself.
            auto bottom = boundary_vertex_op(*L, line[0], V->mul(k, k2));
            for (auto& c : bottom.coeff) c *= phi(k, k2);
            EXPECT_LT(op_distance(compose(boundary_vertex_op(*L, line[0], k), boundary_vertex_op(*L, line[0], k2)), bottom), 1e-14);
            auto top = boundary_vertex_op(*L, line[2], V->mul(k, k2));
            for (auto& c : top.coeff) c /= phi(k, k2);
            EXPECT_LT(op_distance(compose(boundary_vertex_op(*L, line[2], k), boundary_vertex_op(*L, line[2], k2)), top), 1e-14);
            // Neighbouring terms still commute.
            for (int a = 0; a + 1 < 3; ++a)
                EXPECT_TRUE(commute(boundary_vertex_op(*L, line[a], k), boundary_vertex_op(*L, line[a + 1], k2)));
        }
    for (int v : line)
        for (int k = 0; k < 4; ++k) {
            auto Ak = boundary_vertex_op(*L, v, k);
            EXPECT_LT(op_distance(inverse(Ak), boundary_vertex_op(*L, v, V->inv(k))), 1e-14) << v << " " << k;
            for (const auto& p : L->plaquettes()) EXPECT_TRUE(commute(Ak, plaquette_op(*L, p.index, 0)));
        }
    EXPECT_THROW(boundary_vertex_op(*L, L->vertices()[0].index, 7), std::invalid_argument);
}

TEST(Operators, RestrictedBoundaryKeepsOnlyK) {
    auto G = parse_group("D4");
    auto K = generated_subgroup(G, {G->element("s")});
    auto L = build_patch(G, 1, 1, BoundaryCondition{K, std::nullopt});
    EXPECT_LT(max_term_violation(fiducial_state(L)), 1e-12);
    EXPECT_EQ(code_space_dimension(*L), 4);
}

TEST(CodeSpace, LogicalBasisIsOrthonormal) {
    auto G = parse_group("D4");
    auto L = build_patch(G, 2, 1);
    std::vector<LatticeState> phi;
    for (int g = 0; g < 8; ++g) phi.push_back(logical_basis_state(L, g));
    for (int g = 0; g < 8; ++g) {
        EXPECT_LT(max_term_violation(phi[g]), 1e-12);
        for (int h = 0; h < 8; ++h) EXPECT_LT(std::abs(inner(phi[g], phi[h]) - (g == h ? 1.0 : 0.0)), 1e-12);
    }
}

TEST(CodeSpace, RightStringActsByInverse) {
    auto G = parse_group("D4");
    auto L = build_patch(G, 2, 1);
    for (int h = 0; h < 8; ++h)
        for (int g = 0; g < 8; ++g)
            EXPECT_LT(state_distance(hyb::apply(logical_right(*L, 0, g), logical_basis_state(L, h)),
                                     logical_basis_state(L, G->mul(h, G->inv(g)))),
                      1e-12);
}

TEST(CodeSpace, EncodeDecodeRoundTrip) {
    auto A = parse_group("D4"), B = parse_group("Z2");
    auto pair = build_pair(build_patch(A, 1, 1), build_patch(B, 2, 1));
    LogicalSpace space({A, B});
    auto s = random_logical_state(space, 3);
    auto lat = encode_logical(pair, s);
    EXPECT_NEAR(lat.norm(), 1.0, 1e-12);
    EXPECT_LT(max_term_violation(lat), 1e-12);
    double res = 1.0;
    auto back = decode_logical(lat, &res);
    EXPECT_LT((back.amps - s.amps).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(res, 1e-6);
}

TEST(Ribbons, HorizontalProjectsOntoLogicalValue) {
    auto G = parse_group("D4");
    auto L = build_patch(G, 2, 1);
    for (int row = 0; row <= 1; ++row) {
        auto xi = horizontal_ribbon(*L, 0, row);
        validate_ribbon(*L, xi);
        for (int g = 0; g < 8; ++g)
            for (int h = 0; h < 8; ++h) {
                auto phi = logical_basis_state(L, g);
                auto out = hyb::apply(ribbon_op(*L, xi, 0, h), phi);
                EXPECT_LT(std::abs(inner(phi, out) - (g == h ? 1.0 : 0.0)), 1e-12);
            }
    }
}

TEST(Ribbons, CommuteWithStabilizersAwayFromEnds) {
    auto G = parse_group("D4");
    auto L = build_patch(G, 2, 2);
    std::vector<Ribbon> ribbons{horizontal_ribbon(*L, 0, 0), horizontal_ribbon(*L, 0, 1), horizontal_ribbon(*L, 0, 2),
                                vertical_ribbon(*L, 0, 1)};
    for (const auto& xi : ribbons) {
        validate_ribbon(*L, xi);
        for (int h : {1, 5})
            for (int g = 0; g < 8; ++g) {
                auto F = ribbon_op(*L, xi, h, g);
                for (const auto& p : L->plaquettes()) {
                    int crossed = 0;
                    for (const auto& w : p.walk)
                        for (const auto& st : xi.steps) crossed += !st.direct && st.edge == w.edge;
                    if (crossed == 1) continue;  // flux end of the dual path
                    EXPECT_TRUE(commute(F, plaquette_op(*L, p.index, 0)));
                }
                for (const auto& v : L->vertices()) {
                    bool touches = false;
                    for (const auto& s : v.star)
                        for (const auto& st : xi.steps) touches |= s.edge == st.edge;
                    if (!touches) continue;
                    // Interior vertices of the direct path.
                    std::vector<int> direct;
                    for (const auto& st : xi.steps)
                        if (st.direct) direct.push_back(st.edge);
                    bool end = L->edges()[direct.front()].tail == v.index || L->edges()[direct.back()].head == v.index;
                    if (end) continue;
                    for (int k = 0; k < 8; ++k) EXPECT_TRUE(commute(F, vertex_op(*L, v.index, k)));
                }
            }
    }
}

TEST(Ribbons, ChargeRibbonMatchesIrrepFourierSum) {
    auto G = parse_group("D4");
    auto L = build_patch(G, 2, 1);
    auto xi = horizontal_ribbon(*L, 0, 1);
    auto reps = centralizer_irreps(G, 0).irreps;
    LogicalSpace space({G});
    for (int r = 0; r < static_cast<int>(reps.size()); ++r) {
        const auto& R = reps[r];
        for (int j = 0; j < R.dim; ++j)
            for (int jp = 0; jp < R.dim; ++jp) {
                auto op = ribbon_anyon_op(*L, xi, RibbonLabel{0, r, 0, j, 0, jp});
                CMatrix logical = irrep_diag(space, 0, R, jp, j).dense();
                for (int g = 0; g < 8; ++g) {
                    auto phi = logical_basis_state(L, g);
                    cplx want = double(R.dim) / 8.0 * std::conj(logical(g, g));
                    EXPECT_LT(state_distance(hyb::apply(op, phi), LatticeState{L, [&] {
                                                 auto a = phi.amps;
                                                 for (auto& x : a) x *= want;
                                                 return a;
                                             }()}),
                              1e-12);
                }
            }
    }
}

TEST(Ribbons, AbelianVerticalRibbonIsLeftString) {
    auto G = parse_group("Z4");
    auto L = build_patch(G, 2, 2);
    auto xi = vertical_ribbon(*L, 0, 1);
    for (int h = 0; h < 4; ++h) {
        OpSum sum;
        for (int g = 0; g < 4; ++g) sum.push_back({cplx(1.0), ribbon_op(*L, xi, h, g)});
        for (int x = 0; x < 4; ++x) {
            auto phi = logical_basis_state(L, x);
            EXPECT_LT(state_distance(hyb::apply(sum, phi), hyb::apply(logical_left(*L, 0, h), phi)), 1e-12);
        }
    }
}

TEST(Ribbons, CosetRepresentativesAreMinimal) {
    auto G = parse_group("D4");
    auto reps = coset_representatives(G, G->element("s"));
    EXPECT_EQ(reps, (std::vector<int>{0, 1}));
}

TEST(Surgery, CrossChecksAgreeWithLogicalModel) {
    for (const auto& name : fragment_names()) {
        auto rep = lattice_vs_logical(fragment_by_name(name));
        EXPECT_TRUE(rep.ok) << name << " " << rep.to_json().dump();
        EXPECT_NEAR(rep.total_probability, 1.0, 1e-9) << name;
        EXPECT_EQ(rep.amplitudes, name == "z4-d4" || name == "d4-z2z2" ? 32768u : rep.amplitudes);
    }
}

TEST(Surgery, CrossCheckTwoRows) {
    CrossCheckOptions opt;
    opt.rows = 2;
    opt.right_width = 2;
    auto rep = lattice_vs_logical(fragment_by_name("z2-z2"), opt);
    EXPECT_TRUE(rep.ok) << rep.to_json().dump();
    opt.right_width = 1;
    auto rep2 = lattice_vs_logical(fragment_by_name("d4-z2"), opt);
    EXPECT_TRUE(rep2.ok) << rep2.to_json().dump();
    EXPECT_THROW(lattice_vs_logical(fragment_by_name("z4-d4"), opt), CapExceeded);
}

TEST(Surgery, SplitFlagsMatchOutcome) {
    auto f = fragment_by_name("z4-d4");
    auto pair = build_pair(build_patch(f.left, 1, 1), build_patch(f.right, 1, 1));
    auto spec = make_interface(f.left, f.right, f.generators);
    auto s = encode_logical(pair, random_logical_state(LogicalSpace({f.left, f.right}), 11));
    auto m = merge(s, spec);
    EXPECT_LT(max_term_violation(m.state), 1e-12);
    const auto& PG = *spec.product;
    for (int j = 0; j < 4; ++j) {
        int d = PG.combine(f.left->power(f.left->element("m"), j), f.right->power(f.right->element("r"), j));
        SplitOptions so;
        so.forced = std::vector<int>{d};
        so.correct = false;
        auto sp = split(m.state, so);
        if (j == 0) {
            EXPECT_TRUE(sp.flagged.empty());
            continue;
        }
        ASSERT_EQ(sp.flagged.size(), 2u) << j;
        EXPECT_EQ(sp.flagged[0].patch, 0);
        EXPECT_EQ(sp.flagged[0].holonomy, f.left->power(f.left->element("m"), j));
        EXPECT_EQ(sp.flagged[1].patch, 1);
        EXPECT_EQ(sp.flagged[1].holonomy, f.right->power(f.right->element("r"), 4 - j));
        so.correct = true;
        auto fixed = split(m.state, so);
        EXPECT_LT(max_term_violation(fixed.state), 1e-12);
        EXPECT_EQ(fixed.corrections.size(), 2u);
    }
}

TEST(Surgery, HybridHorizontalLogical) {
    auto f = fragment_by_name("d4-z2");
    auto pair = build_pair(build_patch(f.left, 1, 1), build_patch(f.right, 1, 1));
    auto spec = make_interface(f.left, f.right, f.generators);
    const auto& G = *f.left;
    const auto& Gp = *f.right;
    for (int g = 0; g < 8; ++g)
        for (int gp = 0; gp < 2; ++gp) {
            LogicalSpace space({f.left, f.right});
            auto s = encode_logical(pair, basis_state(space, {g, gp}));
            auto m = merge(s, spec);
            for (int h = 0; h < 8; ++h)
                for (int hp = 0; hp < 2; ++hp) {
                    auto T = hybrid_t_operator(*m.state.layout, h, hp);
                    int q = G.mul(G.inv(g), h);
                    bool want = spec.diag.K.contains(q) && spec.diag.p(q) == Gp.mul(gp, hp);
                    auto out = hyb::apply(T, m.state);
                    EXPECT_LT(state_distance(out, want ? m.state : LatticeState{out.layout, std::vector<cplx>(out.amps.size())}), 1e-12)
                        << g << gp << h << hp;
                }
        }
}

TEST(Surgery, TwistedInterfaceTermsCompose) {
    auto V = parse_group("Z2 x Z2");
    auto pair = build_pair(build_patch(V, 1, 2), build_patch(V, 1, 2));
    std::vector<std::pair<int, int>> gens{{V->element("m|id"), V->element("m|id")}, {V->element("id|m"), V->element("id|m")}};
    auto plain = make_interface(V, V, gens);
    auto kq = plain.product;
    // Pauli cocycle transported to K^diag through its left projection.
    auto base = pauli_cocycle(V);
    Cocycle2 phi{plain.K, {}};
    for (int a : plain.K.members)
        for (int b : plain.K.members) phi.values.push_back(base(kq->split(a).first, kq->split(b).first));
    auto spec = make_interface(V, V, gens, phi);
    auto H = build_hybrid(pair, spec);
    const auto& line = H->boundary_lines().back();
    ASSERT_TRUE(line.interface);
    ASSERT_EQ(line.vertices.size(), 3u);
    int mid = line.vertices[1];
    // Terms commute on the B^K subspace of the interface edges.
    LocalOp BK = identity_op(*H);
    for (int e : line.edges) BK = compose(BK, boundary_edge_projector(*H, H->boundary_lines().size() - 1, e)[0].op);
    for (int k : spec.K.members)
        for (int k2 : spec.K.members) {
            EXPECT_LT(op_distance(compose(boundary_vertex_op(*H, mid, k), boundary_vertex_op(*H, mid, k2)),
                                  boundary_vertex_op(*H, mid, kq->mul(k, k2))),
                      1e-14);
            for (int end : {line.vertices[0], line.vertices[2]}) {
                auto a = boundary_vertex_op(*H, end, k), b = boundary_vertex_op(*H, mid, k2);
                EXPECT_LT(op_distance(compose(BK, compose(a, b)), compose(BK, compose(b, a))), 1e-14);
            }
        }
    for (int v : line.vertices)
        for (int k : spec.K.members)
            for (const auto& p : H->plaquettes()) EXPECT_TRUE(commute(boundary_vertex_op(*H, v, k), plaquette_op(*H, p.index, 0)));
    EXPECT_THROW(make_interface(V, V, gens, Cocycle2{plain.K, std::vector<cplx>(16, cplx(0.0, 1.0))}), std::invalid_argument);
}

TEST(VertexMeasurement, AncillaMatchesDirect) {
    auto G = parse_group("D4");
    auto L = build_patch(G, 2, 2);
    auto Lsmall = build_patch(G, 2, 1);
    CounterRng rng(9);
    LatticeState s{Lsmall, std::vector<cplx>(Lsmall->dimension())};
    for (auto& a : s.amps) a = cplx(rng.uniform() - 0.5, rng.uniform() - 0.5);
    s.normalize();
    int v = Lsmall->vertices()[0].index;
    for (int g : {G->element("r"), G->element("s"), G->element("rs")}) {
        auto anc = ancilla_vertex_measurement(s, v, g);
        double total = 0.0;
        for (const auto& b : anc) total += b.probability;
        EXPECT_NEAR(total, 1.0, 1e-12);
        // Coset representatives of <g>, in the order the ancilla uses.
        std::vector<int> reps;
        std::vector<char> seen(8, 0);
        for (int c = 0; c < 8; ++c) {
            if (seen[c]) continue;
            reps.push_back(c);
            for (int j = 0; j < G->element_order(g); ++j) seen[G->mul(G->power(g, j), c)] = 1;
        }
        const double scale = double(G->element_order(g)) / 8.0;
        for (const auto& b : anc) {
            auto shifted = hyb::apply(vertex_op(*Lsmall, v, reps[b.coset]), s);
            auto direct = direct_vertex_measurement(shifted, v, g);
            bool found = false;
            for (const auto& d : direct)
                if (d.eigen == b.eigen) {
                    found = true;
                    EXPECT_NEAR(b.probability, scale * d.probability, 1e-12);
                    EXPECT_LT(phase_distance(d.state, b.state), 1e-10);
                }
            EXPECT_TRUE(found);
        }
    }
    (void)L;
}

TEST(State, ThreadCountDoesNotChangeResults) {
    auto L = build_patch(parse_group("D4"), 2, 1);
    auto f = fiducial_state(L);
    auto op = vertex_projector(*L, 0);
    set_lattice_threads(1);
    auto a = hyb::apply(op, f);
    double na = a.norm();
    set_lattice_threads(4);
    auto b = hyb::apply(op, f);
    double nb = b.norm();
    set_lattice_threads(1);
    EXPECT_EQ(a.amps, b.amps);
    EXPECT_EQ(na, nb);
}

TEST(State, SnapshotRoundTrip) {
    auto f = fragment_by_name("d4-z2");
    auto pair = build_pair(build_patch(f.left, 1, 1), build_patch(f.right, 1, 1));
    auto m = merge(encode_logical(pair, random_logical_state(LogicalSpace({f.left, f.right}), 2)),
                   make_interface(f.left, f.right, f.generators));
    auto dir = std::filesystem::temp_directory_path() / "hyb_snapshot_test";
    std::filesystem::create_directories(dir);
    auto prefix = (dir / "state").string();
    write_snapshot(prefix, m.state);
    auto back = read_snapshot(prefix);
    EXPECT_EQ(back.layout->dimension(), m.state.layout->dimension());
    EXPECT_EQ(back.layout->kind(), Layout::Kind::Hybrid);
    EXPECT_LT(state_distance(back, LatticeState{back.layout, m.state.amps}), 1e-6);
    EXPECT_EQ(std::filesystem::file_size(prefix + ".bin"), m.state.amps.size() * 8);
    std::filesystem::remove_all(dir);
}
