#include <gtest/gtest.h>

#include <numeric>

#include "hyb/group.hpp"

using namespace hyb;

namespace {

std::vector<std::string> labels_of(const FiniteGroup& G, const std::vector<int>& xs) {
    std::vector<std::string> out;
    for (int x : xs) out.push_back(G.label(x));
    return out;
}

}  // namespace

TEST(GroupBuild, DihedralFourLabels) {
    auto G = parse_group("D4");
    EXPECT_EQ(G->order(), 8);
    std::vector<std::string> want{"id", "r", "r^2", "r^3", "s", "rs", "r^2s", "r^3s"};
    EXPECT_EQ(G->labels(), want);
    int r = G->element("r"), s = G->element("s");
    EXPECT_EQ(G->power(r, 4), 0);
    EXPECT_EQ(G->mul(s, s), 0);
    EXPECT_EQ(G->mul(G->mul(s, r), s), G->element("r^3"));
    EXPECT_EQ(G->mul(r, s), G->element("rs"));
}

TEST(GroupBuild, TrivialGroup) {
    auto G = parse_group("Z1");
    EXPECT_EQ(G->order(), 1);
    EXPECT_EQ(G->mul(0, 0), 0);
}

TEST(GroupBuild, ProductOrders) {
    auto G = parse_group("Z4 x D4");
    EXPECT_EQ(G->order(), 32);
    int g = G->element("m|r");
    EXPECT_EQ(G->element_order(g), 4);
    EXPECT_EQ(G->element_order(G->element("m^2|s")), 2);
    EXPECT_EQ(G->label(G->combine(1, 4)), "m|s");
}

TEST(GroupBuild, DescriptorRoundTrip) {
    for (std::string s : {"Z2", "D4", "S3", "Z2 x Z2", "D16", "Z4 x D4", "Z2 x Z2 x Z3"}) {
        auto d = parse_group_descriptor(s);
        EXPECT_EQ(parse_group_descriptor(d.to_string()).to_string(), d.to_string());
    }
    EXPECT_EQ(parse_group_descriptor("Z2 x (Z2 x Z3)").to_string(), "Z2 x (Z2 x Z3)");
    auto G = parse_group("Z2 x D4");
    for (int g = 0; g < G->order(); ++g) EXPECT_EQ(G->element(G->label(g)), g);
}

TEST(GroupBuild, Rejections) {
    EXPECT_THROW(parse_group("Z0"), std::invalid_argument);
    EXPECT_THROW(parse_group("D0"), std::invalid_argument);
    EXPECT_THROW(parse_group("Q8"), std::invalid_argument);
    EXPECT_THROW(parse_group("D100"), std::invalid_argument);
    EXPECT_THROW(parse_group("Z8 x D16"), std::invalid_argument);
    EXPECT_NO_THROW(parse_group("Z8 x D16", 512));
}

TEST(GroupBuild, AxiomsForAllFamilies) {
    for (std::string s : {"Z1", "Z2", "Z4", "Z7", "D3", "D4", "D8", "D16", "S3", "Z2 x Z2", "Z4 x D4", "D4 x Z2"}) {
        auto G = parse_group(s);
        std::string why;
        EXPECT_TRUE(check_group_axioms(*G, &why)) << s << ": " << why;
    }
}

TEST(Classes, DihedralFour) {
    auto G = parse_group("D4");
    auto cls = conjugacy_classes(*G);
    ASSERT_EQ(cls.size(), 5u);
    std::vector<std::vector<std::string>> want{{"id"}, {"r^2"}, {"r", "r^3"}, {"s", "r^2s"}, {"rs", "r^3s"}};
    for (size_t i = 0; i < cls.size(); ++i) EXPECT_EQ(labels_of(*G, cls[i]), want[i]);
}

TEST(Classes, CyclicAndS3) {
    EXPECT_EQ(conjugacy_classes(*parse_group("Z4")).size(), 4u);
    auto S = parse_group("S3");
    auto cls = conjugacy_classes(*S);
    ASSERT_EQ(cls.size(), 3u);
    EXPECT_EQ(labels_of(*S, cls[1]), (std::vector<std::string>{"r", "r^2"}));
    EXPECT_EQ(labels_of(*S, cls[2]), (std::vector<std::string>{"s", "rs", "r^2s"}));
}

TEST(Classes, ClassEquation) {
    for (std::string s : {"D4", "S3", "D8", "Z4 x D4", "D3 x Z2"}) {
        auto G = parse_group(s);
        auto cls = conjugacy_classes(*G);
        size_t total = 0;
        for (const auto& c : cls) {
            total += c.size();
            EXPECT_EQ(c.size() * centralizer(G, c.front()).size(), static_cast<size_t>(G->order()));
        }
        EXPECT_EQ(total, static_cast<size_t>(G->order()));
    }
}

TEST(Centralizer, Examples) {
    auto D = parse_group("D4");
    auto C = centralizer(D, D->element("r"));
    EXPECT_EQ(labels_of(*D, C.members), (std::vector<std::string>{"id", "r", "r^2", "r^3"}));
    EXPECT_EQ(centralizer(D, 0).size(), 8);
    auto S = parse_group("S3");
    EXPECT_EQ(labels_of(*S, centralizer(S, S->element("s")).members), (std::vector<std::string>{"id", "s"}));
}

TEST(Subgroups, ClosureAndNormality) {
    auto D = parse_group("D4");
    auto K = generated_subgroup(D, {D->element("r^2"), D->element("r^3s")});
    EXPECT_EQ(labels_of(*D, K.members), (std::vector<std::string>{"id", "r^2", "rs", "r^3s"}));
    EXPECT_THROW(make_subgroup(D, {0, D->element("r")}), std::invalid_argument);
    EXPECT_TRUE(is_normal(make_subgroup(D, {0, D->element("r^2")}), whole_group(D)));
    EXPECT_FALSE(is_normal(make_subgroup(D, {0, D->element("s")}), whole_group(D)));
}

TEST(Diagonal, ZFourIntoDFour) {
    auto Z = parse_group("Z4");
    auto D = parse_group("D4");
    auto diag = diagonal_from_generators(Z, D, {{Z->element("m"), D->element("r")}});
    ASSERT_EQ(diag.size(), 4);
    for (auto [h, ph] : diag.pairs) EXPECT_EQ(ph, D->power(D->element("r"), h));
    EXPECT_FALSE(diag.factorizes());
}

TEST(Diagonal, DFourIntoKleinFour) {
    auto D = parse_group("D4");
    auto V = parse_group("Z2 x Z2");
    int mL = V->element("m|id"), mR = V->element("id|m");
    auto diag = diagonal_from_generators(D, V, {{D->element("r^2"), mL}, {D->element("r^3s"), mR}});
    EXPECT_EQ(diag.size(), 4);
    EXPECT_EQ(diag.p(D->element("rs")), V->mul(mL, mR));
    EXPECT_FALSE(diag.factorizes());
    EXPECT_TRUE(diag.p.kernel().size() == 1);
}

TEST(Diagonal, TrivialAndRejections) {
    auto D = parse_group("D4");
    auto Z = parse_group("Z2");
    EXPECT_EQ(trivial_diagonal(D, Z).size(), 1);
    // r has order 4 but m has order 2: consistent, kernel <r^2>.
    auto ok = diagonal_from_generators(D, Z, {{D->element("r"), Z->element("m")}});
    EXPECT_EQ(ok.p.kernel().size(), 2);
    // (r^2)(s) = r^2 s forces p(r^2 s) = m, contradicting the listed image id.
    EXPECT_THROW(diagonal_from_generators(D, Z, {{D->element("s"), Z->element("m")}, {D->element("r^2s"), 0},
                                                 {D->element("r^2"), 0}}),
                 std::invalid_argument);
    // A map that is not a homomorphism is rejected by the explicit constructor.
    auto K = whole_group(Z);
    GroupHom bad{K, D, {0, D->element("r")}};
    EXPECT_THROW(diagonal_subgroup(Z, D, K, bad), std::invalid_argument);
}

TEST(Cocycle, TrivialPasses) {
    auto V = parse_group("Z2 x Z2");
    auto rep = verify_cocycle(Cocycle2::trivial(whole_group(V)));
    EXPECT_TRUE(rep.ok()) << rep.summary();
}

TEST(Cocycle, BilinearFailsRepresentativeConvention) {
    auto V = parse_group("Z2 x Z2");
    auto K = whole_group(V);
    Cocycle2 phi{K, {}};
    for (int g : K.members)
        for (int h : K.members) {
            auto [g1, g2] = V->split(g);
            auto [h1, h2] = V->split(h);
            phi.values.push_back((g2 * h1) % 2 ? -1.0 : 1.0);
        }
    auto rep = verify_cocycle(phi);
    EXPECT_FALSE(rep.ok());
    EXPECT_TRUE(rep.checks[0].passed);
    EXPECT_TRUE(rep.checks[1].passed);
    EXPECT_FALSE(rep.checks[2].passed);
    EXPECT_EQ(rep.checks[2].witness, "m|m");
}

TEST(Cocycle, CorruptedEntryFailsCocycleCondition) {
    auto V = parse_group("Z2 x Z2");
    auto phi = Cocycle2::trivial(whole_group(V));
    phi.values[1 * 4 + 2] = -1.0;
    auto rep = verify_cocycle(phi);
    EXPECT_FALSE(rep.checks[0].passed);
    EXPECT_FALSE(rep.checks[0].witness.empty());
}

TEST(Cocycle, PauliRepresentativesPass) {
    auto V = parse_group("Z2 x Z2");
    auto K = whole_group(V);
    // (a,b) -> X^a Z^b up to the phase that makes it Hermitian: I, Z, X, Y.
    CMatrix X(2, 2), Z(2, 2), Y(2, 2), I = CMatrix::Identity(2, 2);
    X << 0, 1, 1, 0;
    Z << 1, 0, 0, -1;
    Y << 0, cplx(0, -1), cplx(0, 1), 0;
    std::vector<CMatrix> P{I, Z, X, Y};
    Cocycle2 phi{K, {}};
    for (int g = 0; g < 4; ++g)
        for (int h = 0; h < 4; ++h) {
            CMatrix prod = P[g] * P[h];
            const CMatrix& base = P[V->mul(g, h)];
            phi.values.push_back(prod(0, 0) != 0.0 ? prod(0, 0) / base(0, 0) : prod(0, 1) / base(0, 1));
        }
    EXPECT_FALSE(phi.is_trivial());
    auto rep = verify_cocycle(phi);
    EXPECT_TRUE(rep.ok()) << rep.summary();
}

TEST(Irreps, DihedralFourCharacters) {
    auto D = parse_group("D4");
    auto reps = irreps(D);
    ASSERT_EQ(reps.size(), 5u);
    std::vector<int> dims;
    for (auto& R : reps) dims.push_back(R.dim);
    EXPECT_EQ(dims, (std::vector<int>{1, 1, 1, 1, 2}));
    EXPECT_EQ(reps[4].name, "E");
    auto cls = conjugacy_classes(*D);
    std::vector<double> wantE{2, -2, 0, 0, 0};
    for (size_t c = 0; c < cls.size(); ++c)
        EXPECT_NEAR(std::abs(reps[4].character(cls[c].front()) - wantE[c]), 0.0, 1e-12);
    // Z_E^{1,1} on r is i.
    EXPECT_NEAR(std::abs(reps[4].at(D->element("r"))(0, 0) - cplx(0, 1)), 0.0, 1e-12);
    // 1_r: trivial on r, -1 on s.
    EXPECT_EQ(reps[1].name, "1_r");
    EXPECT_NEAR(reps[1].character(D->element("r")).real(), 1.0, 1e-12);
    EXPECT_NEAR(reps[1].character(D->element("s")).real(), -1.0, 1e-12);
    EXPECT_NEAR(reps[2].character(D->element("r")).real(), -1.0, 1e-12);
    EXPECT_NEAR(reps[2].character(D->element("s")).real(), 1.0, 1e-12);
}

TEST(Irreps, CyclicAndS3) {
    auto Z = parse_group("Z5");
    auto reps = irreps(Z);
    ASSERT_EQ(reps.size(), 5u);
    for (int a = 0; a < 5; ++a)
        for (int j = 0; j < 5; ++j)
            EXPECT_NEAR(std::abs(reps[a].character(j) - std::polar(1.0, 2 * M_PI * a * j / 5)), 0.0, 1e-12);
    auto S = parse_group("S3");
    auto sr = irreps(S);
    ASSERT_EQ(sr.size(), 3u);
    EXPECT_EQ(sr[2].dim, 2);
    EXPECT_NEAR(sr[2].character(S->element("r")).real(), -1.0, 1e-12);
    EXPECT_NEAR(sr[1].character(S->element("s")).real(), -1.0, 1e-12);
}

TEST(Irreps, SchurAndColumnOrthogonality) {
    for (std::string s : {"Z4", "D4", "S3", "D16", "D3", "Z2 x Z2", "Z4 x D4", "D4 x Z2"}) {
        auto G = parse_group(s);
        auto reps = irreps(G);
        EXPECT_LT(schur_deviation(reps), 1e-10) << s;
        int sum = 0;
        for (auto& R : reps) sum += R.dim * R.dim;
        EXPECT_EQ(sum, G->order()) << s;
        auto cls = conjugacy_classes(*G);
        EXPECT_EQ(reps.size(), cls.size()) << s;
        for (const auto& c : cls) {
            double col = 0;
            for (auto& R : reps) col += std::norm(R.character(c.front()));
            EXPECT_NEAR(col, centralizer(G, c.front()).size(), 1e-9) << s;
        }
    }
}

TEST(Irreps, CentralizerLabels) {
    auto D = parse_group("D4");
    auto cr = centralizer_irreps(D, D->element("r"));
    ASSERT_EQ(cr.irreps.size(), 4u);
    EXPECT_EQ(cr.irreps[1].name, "i");
    EXPECT_NEAR(std::abs(cr.irreps[1].character(D->element("r")) - cplx(0, 1)), 0.0, 1e-12);
    auto cs = centralizer_irreps(D, D->element("rs"));
    ASSERT_EQ(cs.irreps.size(), 4u);
    EXPECT_EQ(cs.irreps[1].name, "+-");
    EXPECT_NEAR(cs.irreps[1].character(D->element("rs")).real(), 1.0, 1e-12);
    EXPECT_NEAR(cs.irreps[1].character(D->element("r^2")).real(), -1.0, 1e-12);
    auto S = parse_group("S3");
    auto ss = centralizer_irreps(S, S->element("s"));
    EXPECT_EQ(ss.irreps.size(), 2u);
    EXPECT_EQ(ss.irreps[1].name, "-");
    auto P = parse_group("Z4 x D4");
    auto cp = centralizer_irreps(P, P->element("m|r"));
    EXPECT_EQ(cp.centralizer.size(), 16);
    EXPECT_LT(schur_deviation(cp.irreps), 1e-10);
}
