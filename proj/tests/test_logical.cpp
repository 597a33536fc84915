#include <gtest/gtest.h>

#include <cmath>

#include "hyb/logical.hpp"

using namespace hyb;

namespace {

const cplx I1(0.0, 1.0);
const cplx w8 = std::polar(1.0, M_PI / 4);

CMatrix hadamard() {
    CMatrix h(2, 2);
    h << 1, 1, 1, -1;
    return h / std::sqrt(2.0);
}

CMatrix tgate(bool dagger = false) {
    CMatrix t = CMatrix::Identity(2, 2);
    t(1, 1) = dagger ? std::conj(w8) : w8;
    return t;
}

CMatrix pauli_x() {
    CMatrix x = CMatrix::Zero(2, 2);
    x(0, 1) = x(1, 0) = 1.0;
    return x;
}

double max_abs(const CMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST(LogicalSpace, BasisStatesAndRoundTrip) {
    auto D = parse_group("D4");
    auto Z = parse_group("Z4");
    LogicalSpace one({D});
    auto s = basis_state(one, {0});
    EXPECT_EQ(s.amps(0), cplx(1.0));
    LogicalSpace two({Z, D});
    auto t = basis_state(two, {Z->element("m^2"), D->element("r^3s")});
    int idx = two.encode({2, 7});
    EXPECT_EQ(t.amps(idx), cplx(1.0));
    EXPECT_NEAR(t.amps.norm(), 1.0, 1e-15);
    for (int i = 0; i < two.dim(); ++i) EXPECT_EQ(two.encode(two.decode(i)), i);
    EXPECT_THROW(basis_state(two, {0}), std::invalid_argument);
    EXPECT_EQ(two.basis_label(idx), "m^2,r^3s");
}

TEST(LogicalOps, MultiplicationExamples) {
    auto D = parse_group("D4");
    LogicalSpace sp({D});
    auto out = left_mult(sp, 0, D->element("r")).apply(basis_state(sp, {D->element("s")}));
    EXPECT_EQ(out.amps(D->element("rs")), cplx(1.0));
    auto out2 = right_mult(sp, 0, D->element("r")).apply(basis_state(sp, {0}));
    EXPECT_EQ(out2.amps(D->element("r^3")), cplx(1.0));
}

TEST(LogicalOps, CompositionAndCommutation) {
    auto D = parse_group("D4");
    auto Z = parse_group("Z2");
    LogicalSpace sp({Z, D});
    for (int g = 0; g < 8; ++g)
        for (int h = 0; h < 8; ++h) {
            auto Lg = left_mult(sp, 1, g), Lh = left_mult(sp, 1, h);
            auto Rg = right_mult(sp, 1, g), Rh = right_mult(sp, 1, h);
            EXPECT_LT(max_abs((Lg * Lh).dense() - left_mult(sp, 1, D->mul(g, h)).dense()), 1e-15);
            EXPECT_LT(max_abs((Rg * Rh).dense() - right_mult(sp, 1, D->mul(g, h)).dense()), 1e-15);
            EXPECT_LT(max_abs((Lg * Rh).dense() - (Rh * Lg).dense()), 1e-15);
            EXPECT_TRUE(Lg.is_permutation());
            EXPECT_TRUE(Rh.is_permutation());
        }
}

TEST(LogicalOps, IrrepDiagonal) {
    auto D = parse_group("D4");
    LogicalSpace sp({D});
    auto reps = irreps(D);
    const Irrep& E = reps.back();
    auto out = irrep_diag(sp, 0, E, 0, 0).apply(basis_state(sp, {D->element("r")}));
    EXPECT_NEAR(std::abs(out.amps(D->element("r")) - I1), 0.0, 1e-15);
    EXPECT_LT(max_abs(irrep_diag(sp, 0, reps[0], 0, 0).dense() - CMatrix::Identity(8, 8)), 1e-15);
    EXPECT_THROW(irrep_diag(sp, 0, E, 2, 0), std::invalid_argument);
}

TEST(LogicalOps, FourierCompletenessReconstructsDeltas) {
    auto D = parse_group("D4");
    LogicalSpace sp({D});
    auto reps = irreps(D);
    for (int g = 0; g < 8; ++g) {
        CMatrix acc = CMatrix::Zero(8, 8);
        for (const auto& R : reps)
            for (int i = 0; i < R.dim; ++i)
                for (int j = 0; j < R.dim; ++j)
                    acc += (double(R.dim) / 8.0) * std::conj(R.at(g)(i, j)) * irrep_diag(sp, 0, R, i, j).dense();
        CMatrix want = CMatrix::Zero(8, 8);
        want(g, g) = 1.0;
        EXPECT_LT(max_abs(acc - want), 1e-12) << g;
    }
}

TEST(GaugeProjector, ZFourDiagonalOnSState) {
    auto Z = parse_group("Z4");
    auto D = parse_group("D4");
    LogicalSpace sp({Z, D});
    CVector sz(4), sd = CVector::Zero(8);
    for (int j = 0; j < 4; ++j) {
        sz(j) = std::polar(1.0, M_PI * j * j / 4.0);
        sd(D->element(j == 0 ? "id" : (j == 1 ? "r" : "r^" + std::to_string(j)))) = sz(j);
    }
    auto in = tensor(state_from_amplitudes(LogicalSpace({Z}), sz), basis_state(LogicalSpace({D}), {0}));
    auto diag = diagonal_from_generators(Z, D, {{Z->element("m"), D->element("r")}});
    auto out = gauge_projector(sp, 0, 1, diag).apply(in);
    LogicalSpace dsp({D});
    for (int l = 0; l < 4; ++l) {
        CVector want = left_mult(dsp, 0, D->power(D->element("r"), -l)).apply(state_from_amplitudes(dsp, sd)).amps / 4.0;
        CVector got = out.amps.segment(l * 8, 8);
        EXPECT_LT((got - want).norm(), 1e-14) << l;
    }
}

TEST(GaugeProjector, TrivialAndIdempotent) {
    auto D = parse_group("D4");
    auto V = parse_group("Z2 x Z2");
    LogicalSpace sp({D, V});
    auto triv = gauge_projector(sp, 0, 1, trivial_diagonal(D, V));
    EXPECT_LT(max_abs(triv.dense() - CMatrix::Identity(32, 32)), 1e-15);
    auto diag = diagonal_from_generators(D, V, {{D->element("r^2"), V->element("m|id")}, {D->element("r^3s"), V->element("id|m")}});
    auto P = gauge_projector(sp, 0, 1, diag).dense();
    EXPECT_LT(max_abs(P * P - P), 1e-14);
    EXPECT_LT(max_abs(P.adjoint() - P), 1e-14);
    EXPECT_NEAR(P.trace().real(), 8.0, 1e-12);
    Cocycle2 bad = Cocycle2::trivial(diag.K);
    bad.values[5] = -1.0;
    EXPECT_THROW(gauge_projector(sp, 0, 1, diag, bad), std::invalid_argument);
    EXPECT_THROW(gauge_projector(sp, 1, 0, diag), std::invalid_argument);
}

TEST(Measure, ReflectionOnIdentity) {
    auto D = parse_group("D4");
    LogicalSpace sp({D});
    auto Rs = right_mult(sp, 0, D->element("s"));
    auto res = measure_forced(basis_state(sp, {0}), Rs, 1.0);
    EXPECT_NEAR(res.probability, 0.5, 1e-12);
    EXPECT_NEAR(std::abs(res.state.amps(0) - 1.0 / std::sqrt(2.0)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(res.state.amps(D->element("s")) - 1.0 / std::sqrt(2.0)), 0.0, 1e-12);
    auto minus = measure_forced(basis_state(sp, {0}), Rs, -1.0);
    EXPECT_NEAR(res.probability + minus.probability, 1.0, 1e-12);
    EXPECT_THROW(measure_forced(basis_state(sp, {0}), Rs, cplx(0, 1)), ZeroProbabilityOutcome);
    auto cyc = cyclic_eigenprojector(Rs, 2, 1);
    EXPECT_LT((cyc.apply(basis_state(sp, {0})).amps.normalized() - minus.state.amps).norm(), 1e-12);
}

TEST(Measure, IdentityAndSampling) {
    auto D = parse_group("D4");
    LogicalSpace sp({D});
    auto psi = basis_state(sp, {3});
    CounterRng rng(7);
    auto res = measure(psi, LogicalOperator::identity(sp), rng);
    EXPECT_NEAR(std::abs(res.eigenvalue - 1.0), 0.0, 1e-12);
    EXPECT_NEAR(res.probability, 1.0, 1e-12);
    EXPECT_LT((res.state.amps - psi.amps).norm(), 1e-12);
    CounterRng a(11), b(11);
    for (int i = 0; i < 5; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(Measure, SpectralProjectorsOfNormalOperator) {
    auto D = parse_group("D4");
    LogicalSpace sp({D});
    auto L = left_mult(sp, 0, D->element("r"));
    EXPECT_TRUE(L.is_normal());
    auto branches = spectral_projectors(L);
    EXPECT_EQ(branches.size(), 4u);
    CMatrix sum = CMatrix::Zero(8, 8);
    for (auto& b : branches) {
        CMatrix P = b.projector.dense();
        EXPECT_LT(max_abs(P * P - P), 1e-10);
        EXPECT_LT(max_abs(L.dense() * P - b.eigenvalue * P), 1e-10);
        sum += P;
    }
    EXPECT_LT(max_abs(sum - CMatrix::Identity(8, 8)), 1e-10);
}

TEST(Measure, CoarseComputational) {
    auto D = parse_group("D4");
    LogicalSpace sp({D});
    auto uni = state_from_amplitudes(sp, CVector::Ones(8)).normalized_copy();
    std::vector<int> jmap(8);
    for (int g = 0; g < 8; ++g) jmap[g] = D->dihedral_parts(g).first;
    auto probs = computational_probabilities(uni, 0, jmap);
    ASSERT_EQ(probs.size(), 4u);
    double total = 0;
    for (double p : probs) {
        EXPECT_NEAR(p, 0.25, 1e-12);
        total += p;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    auto res = measure_computational_forced(uni, 0, 2, jmap);
    EXPECT_NEAR(std::abs(res.state.amps(D->element("r^2"))), 1.0 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(std::abs(res.state.amps(D->element("r^2s"))), 1.0 / std::sqrt(2.0), 1e-12);
    // Coarse Z and R^s commute.
    auto Zc = slot_diagonal(sp, 0, [&](int g) { return std::pow(I1, jmap[g]); });
    auto Rs = right_mult(sp, 0, D->element("s"));
    EXPECT_LT(max_abs((Zc * Rs - Rs * Zc).dense()), 1e-15);
}

TEST(Measure, DiscardSlot) {
    auto Z = parse_group("Z2");
    LogicalSpace a({Z});
    CVector v(2);
    v << 1.0, I1;
    auto prod = tensor(state_from_amplitudes(a, v), basis_state(a, {1}));
    auto left = discard_slot(prod, 1);
    EXPECT_NEAR(fidelity(left.amps, v), 1.0, 1e-12);
    CVector bell = CVector::Zero(4);
    bell(0) = bell(3) = 1.0;
    EXPECT_THROW(discard_slot(state_from_amplitudes(LogicalSpace({Z, Z}), bell), 0), std::runtime_error);
}

TEST(GlobalPhase, Examples) {
    CMatrix H = hadamard(), X = pauli_x();
    auto m = equal_up_to_global_phase(w8 * H * tgate(true) * H, H * X * tgate() * X * H);
    EXPECT_TRUE(m.equal);
    EXPECT_NEAR(m.theta, 0.0, 1e-12);
    auto n = equal_up_to_global_phase(CMatrix::Identity(2, 2), -CMatrix::Identity(2, 2));
    EXPECT_TRUE(n.equal);
    EXPECT_NEAR(std::abs(n.theta), M_PI, 1e-12);
    EXPECT_FALSE(equal_up_to_global_phase(H * tgate(true) * H, H * tgate() * H).equal);
}

TEST(Json, StateDump) {
    auto D = parse_group("D4");
    LogicalSpace sp({D});
    auto j = state_to_json(basis_state(sp, {5}));
    EXPECT_EQ(j["slots"][0], "D4");
    EXPECT_EQ(j["amplitudes"].size(), 1u);
    EXPECT_EQ(j["amplitudes"][0][0], "rs");
}
