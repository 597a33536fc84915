#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "hyb/center.hpp"

using namespace hyb;

namespace {

const std::string kFixtures = HYB_FIXTURE_DIR;

CMatrix T_of(const Center& C) { return C.T.asDiagonal(); }

double proportionality_residual(const CMatrix& A, const CMatrix& B) {
    Eigen::Index r = 0, c = 0;
    B.cwiseAbs().maxCoeff(&r, &c);
    cplx k = A(r, c) / B(r, c);
    return (A - k * B).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(Anyons, CountsAndDimensions) {
    struct Case {
        const char* group;
        int count;
    };
    for (auto [g, count] : {Case{"Z2", 4}, Case{"Z4", 16}, Case{"S3", 8}, Case{"D4", 22}, Case{"Z2 x Z2", 16}}) {
        auto C = make_center(parse_group(g));
        EXPECT_EQ(C->size(), count) << g;
        double sum = 0.0;
        for (const auto& a : C->anyons) sum += double(a.qdim) * a.qdim;
        int n = C->group->order();
        EXPECT_DOUBLE_EQ(sum, double(n) * n) << g;
    }
}

TEST(Anyons, D4TableRowForRow) {
    auto rows = read_anyon_fixture(kFixtures + "/anyons-d4.fixture");
    auto C = make_center(parse_group("D4"));
    ASSERT_EQ(rows.size(), 22u);
    for (size_t i = 0; i < rows.size(); ++i) {
        const auto& a = C->anyons[i];
        EXPECT_EQ(a.label(), rows[i].label);
        EXPECT_EQ(a.qdim, rows[i].dim) << rows[i].label;
        EXPECT_LT(std::abs(a.spin - rows[i].spin), 1e-12) << rows[i].label;
        EXPECT_EQ(parse_anyon_label(rows[i].color, C).a, a.index) << rows[i].color;
    }
}

TEST(Anyons, S3ReflectionFluxHasDimensionThree) {
    auto C = make_center(parse_group("S3"));
    auto p = parse_anyon_label("[s]_-", C);
    EXPECT_EQ(C->anyons[p.a].qdim, 3);
    EXPECT_LT(std::abs(C->anyons[p.a].spin + 1.0), 1e-12);
}

TEST(Anyons, SpinDoesNotDependOnRepresentative) {
    for (const char* g : {"D4", "S3", "D3 x Z2"}) {
        auto G = parse_group(g);
        auto C = make_center(G);
        for (size_t c = 0; c < C->classes.size(); ++c) {
            std::multiset<std::pair<long, long>> ref;
            for (const auto& a : C->anyons)
                if (a.cls == static_cast<int>(c))
                    ref.insert({std::lround(a.spin.real() * 1e6), std::lround(a.spin.imag() * 1e6)});
            for (int other : C->classes[c]) {
                auto ci = centralizer_irreps(G, other);
                std::multiset<std::pair<long, long>> got;
                for (const auto& R : ci.irreps) {
                    cplx s = R.character(other) / double(R.dim);
                    got.insert({std::lround(s.real() * 1e6), std::lround(s.imag() * 1e6)});
                }
                EXPECT_EQ(got, ref) << g << " class " << c;
            }
        }
    }
}

TEST(SMatrix, ToricCode) {
    CMatrix expect(4, 4);
    expect << 1, 1, 1, 1, 1, 1, -1, -1, 1, -1, 1, -1, 1, -1, -1, 1;
    expect /= 2.0;
    EXPECT_LT((s_matrix(parse_group("Z2")) - expect).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(SMatrix, UnitaryAndModular) {
    for (const char* g : {"Z2", "Z3", "Z4", "S3", "D4", "Z2 x Z2"}) {
        auto C = make_center(parse_group(g));
        const CMatrix& S = C->S;
        int n = C->size();
        EXPECT_LT((S.adjoint() * S - CMatrix::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-12) << g;
        CMatrix ST = S * T_of(*C);
        EXPECT_LT(proportionality_residual(ST * ST * ST, S * S), 1e-9) << g;
        EXPECT_LT(C->max_fusion_deviation(), 1e-6) << g;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c) EXPECT_GE(C->fusion(a, b, c), 0);
    }
}

TEST(SMatrix, FirstRowIsDimensionOverOrder) {
    auto C = make_center(parse_group("D4"));
    for (const auto& a : C->anyons) EXPECT_NEAR(std::abs(C->S(0, a.index) - a.qdim / 8.0), 0.0, 1e-12);
}

TEST(SMatrix, FusionOfFluxes) {
    auto C = make_center(parse_group("S3"));
    int E = parse_anyon_label("E", C).a;
    int one = 0, P = parse_anyon_label("P", C).a;
    EXPECT_EQ(C->fusion(E, E, one), 1);
    EXPECT_EQ(C->fusion(E, E, P), 1);
    EXPECT_EQ(C->fusion(E, E, E), 1);
}

TEST(Lagrangians, Canonical) {
    for (const char* g : {"Z2", "Z4", "S3", "D4", "Z2 x Z2"}) {
        auto G = parse_group(g);
        for (const auto& A : {rough_lagrangian(G), smooth_lagrangian(G)}) {
            auto rep = check_condensable(A);
            EXPECT_TRUE(rep.ok_lagrangian()) << A.name << ": " << (rep.failures.empty() ? "" : rep.failures[0]);
            EXPECT_DOUBLE_EQ(rep.total_dim, G->order());
        }
    }
    auto D4 = parse_group("D4");
    EXPECT_EQ(rough_lagrangian(D4).to_string(), "1 (+) 1_r (+) 1_s (+) 1_rs (+) 2*E");
    EXPECT_EQ(smooth_lagrangian(parse_group("Z2")).to_string(), "1 (+) [m]");
    EXPECT_DOUBLE_EQ(smooth_lagrangian(parse_group("S3")).total_dim(), 6.0);
}

TEST(Lagrangians, ListedCondensableAlgebras) {
    for (const auto& f : read_algebra_fixture(kFixtures + "/condensable-algebras.fixture")) {
        auto C = make_center(parse_group(f.left));
        auto A = parse_algebra(f.algebra, C, nullptr, f.name);
        auto rep = check_condensable(A);
        EXPECT_TRUE(rep.condensable()) << f.name;
        if (f.name == "d4-z2s-lagr") EXPECT_TRUE(rep.ok_lagrangian());
        else EXPECT_FALSE(rep.lagrangian) << f.name;
    }
}

TEST(Lagrangians, FermionIsRejected) {
    auto C = make_center(parse_group("Z2"));
    auto rep = check_condensable(parse_algebra("1 (+) em", C));
    EXPECT_FALSE(rep.spins_trivial);
    EXPECT_FALSE(rep.condensable());
}

TEST(Folded, PaperListedObjects) {
    auto fixtures = read_algebra_fixture(kFixtures + "/folded-lagrangians.fixture");
    EXPECT_EQ(fixtures.size(), 9u);
    for (const auto& f : fixtures) {
        auto L = make_center(parse_group(f.left));
        auto R = make_center(parse_group(f.right));
        auto listed = parse_algebra(f.algebra, L, R, f.name);
        auto sub = parse_algebra(f.subalgebra, L);
        auto rep = verify_folded_lagrangian(listed, sub);
        EXPECT_TRUE(rep.ok_lagrangian()) << f.name << ": " << (rep.failures.empty() ? "" : rep.failures[0]);
        EXPECT_DOUBLE_EQ(rep.total_dim, L->group->order() * R->group->order()) << f.name;
    }
}

TEST(Folded, MutationBreaksSpin) {
    auto L = make_center(parse_group("D4"));
    auto R = make_center(parse_group("Z4"));
    auto good = parse_algebra("1 (+) 1_r (+) [r]_i embar", L, R);
    EXPECT_TRUE(check_condensable(good).spins_trivial);
    auto bad = parse_algebra("1 (+) 1_r (+) [r]_-i embar", L, R);
    EXPECT_FALSE(check_condensable(bad).spins_trivial);
}

TEST(Folded, MissingSubalgebraIsReported) {
    auto L = make_center(parse_group("Z2"));
    auto listed = parse_algebra("1 (+) m mbar (+) e ebar (+) em embar", L, L);
    auto rep = verify_folded_lagrangian(listed, parse_algebra("1 (+) e", L));
    EXPECT_FALSE(rep.contains_subalgebra);
    EXPECT_TRUE(rep.lagrangian);
}

TEST(Labels, ParsesNotationVariants) {
    auto D4 = make_center(parse_group("D4"));
    auto a = parse_anyon_label("[r]_i", D4);
    EXPECT_EQ(D4->anyons[a.a].qdim, 2);
    EXPECT_LT(std::abs(D4->anyons[a.a].spin - cplx(0, 1)), 1e-12);
    EXPECT_EQ(parse_anyon_label("1", D4).a, 0);
    EXPECT_EQ(parse_anyon_label("[r^3]_i", D4).a, a.a);
    EXPECT_EQ(parse_anyon_label("s_RGB", D4).a, a.a);
    EXPECT_EQ(parse_anyon_label("[rs]_{++}", D4).a, parse_anyon_label("m_RB", D4).a);
    EXPECT_EQ(parse_anyon_label("[r^2]1_rs", D4).a, parse_anyon_label("e_RB", D4).a);

    auto Z4 = make_center(parse_group("Z4"));
    auto p = parse_anyon_label("E ebar", D4, Z4);
    EXPECT_EQ(D4->anyons[p.a].irrep_name, "E");
    EXPECT_EQ(Z4->anyons[p.b].label(), "([id],e)");
    auto q = parse_anyon_label("E e^3", D4, Z4);
    EXPECT_EQ(q.b, p.b);

    auto Q = make_center(parse_group("Z2 x Z2"));
    EXPECT_EQ(Q->anyons[parse_anyon_label("e_Le_Rm_L", Q).a].label(), "([m|id],e|e)");

    auto S3 = make_center(parse_group("S3"));
    EXPECT_EQ(parse_anyon_label("[r]_omega", S3).a, parse_anyon_label("[r]_w", S3).a);
}

TEST(Labels, ErrorsCarryPosition) {
    auto D4 = make_center(parse_group("D4"));
    try {
        parse_algebra("1 (+) [q]_i", D4);
        FAIL();
    } catch (const LabelError& e) {
        EXPECT_EQ(e.position(), 7u);
    }
    try {
        parse_anyon_label("[r]_x", D4);
        FAIL();
    } catch (const LabelError& e) {
        EXPECT_EQ(e.position(), 3u);
    }
    EXPECT_THROW(parse_anyon_label("E E", D4), LabelError);
    auto Z2 = make_center(parse_group("Z2"));
    EXPECT_THROW(parse_anyon_label("em_L", Z2), LabelError);
}

TEST(Json, CenterDump) {
    auto j = center_to_json(*make_center(parse_group("D4")));
    EXPECT_EQ(j["anyons"].size(), 22u);
    EXPECT_DOUBLE_EQ(j["sum_qdim_squared"].get<double>(), 64.0);
}
