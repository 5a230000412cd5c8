#include "dynwork/good_eigenspace.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace dynwork;

namespace {

RationalCone orthant(std::size_t n) {
    std::vector<ZVector> rays;
    for (std::size_t i = 0; i < n; ++i) {
        ZVector e(n, Integer(0));
        e[i] = 1;
        rays.push_back(e);
    }
    return canonicalize(rays);
}

}  // namespace

TEST(GoodEigenspace, SplitPowerMapIsGood) {
    const GoodEigenspaceReport r = good_eigenspace_check(dwtest::power_map({2, 3}));
    EXPECT_EQ(r.verdict, GoodVerdict::Good);
    ASSERT_TRUE(r.lambda);
    EXPECT_EQ(*r.lambda, 3);
    for (const auto& c : r.conditions) EXPECT_TRUE(c.holds.value_or(false)) << c.evidence;
    ASSERT_EQ(r.eigenbasis.size(), 1u);
    EXPECT_EQ(r.eigenbasis[0], (ZVector{0, 1}));
    ASSERT_EQ(r.kappas.size(), 1u);
    EXPECT_EQ(r.kappas[0], 1);
}

TEST(GoodEigenspace, SwapFailsUniqueness) {
    const ModelSystem f = build_system({1, 0}, {Component{1, BinaryForm::x(), BinaryForm::y()},
                                                Component{2, BinaryForm::x().pow(2), BinaryForm::y().pow(2)}});
    const GoodEigenspaceReport r = good_eigenspace_check(f);
    EXPECT_EQ(r.verdict, GoodVerdict::NotGood);
    EXPECT_EQ(r.conditions[0].holds, false);
    EXPECT_FALSE(r.lambda);
}

TEST(GoodEigenspace, IdentityIsNotApplicable) {
    EXPECT_EQ(good_eigenspace_check(dwtest::power_map({1, 1})).verdict, GoodVerdict::NotApplicable);
}

TEST(GoodEigenspace, JordanBlockFailsCondition2) {
    const GoodEigenspaceReport r = good_eigenspace_check(IntMatrix{{2, 1}, {0, 2}}, ZVector{0, 1}, orthant(2),
                                                         model_kappa_oracle());
    EXPECT_EQ(r.verdict, GoodVerdict::NotGood);
    EXPECT_EQ(r.conditions[0].holds, true);
    EXPECT_EQ(r.conditions[1].holds, false);
}

TEST(GoodEigenspace, KappaZeroFailsCondition4) {
    // f^* = 2 on the span of H = (1,1); the single eigenclass has kappa 0.
    const Pic0Group g({{"L", 0}});
    const std::vector<AtiyahAssignment> zero{{ZVector{1, 1}, AtiyahExpr({{2, {0}}, {1, {1}}})}};
    const GoodEigenspaceReport r =
        good_eigenspace_check(IntMatrix::scalar(2, Integer(2)), ZVector{1, 1}, orthant(2), atiyah_kappa_oracle(g, zero));
    EXPECT_EQ(r.verdict, GoodVerdict::NotGood);
    EXPECT_EQ(r.conditions[2].holds, true);
    EXPECT_EQ(r.conditions[3].holds, false);
    ASSERT_EQ(r.kappas.size(), 1u);
    EXPECT_EQ(r.kappas[0], 0);

    const std::vector<AtiyahAssignment> big{{ZVector{2, 2}, AtiyahExpr::from_ranks({1, 1}, 1)}};
    EXPECT_EQ(good_eigenspace_check(IntMatrix::scalar(2, Integer(2)), ZVector{1, 1}, orthant(2), atiyah_kappa_oracle(g, big))
                  .verdict,
              GoodVerdict::Good);
}

TEST(GoodEigenspace, OracleGaps) {
    const Pic0Group g({{"L", 0}});
    EXPECT_THROW(good_eigenspace_check(IntMatrix::scalar(2, Integer(2)), ZVector{1, 1}, orthant(2), atiyah_kappa_oracle(g, {})),
                 OracleUnavailable);
    // O + L with L of order 3: h^0(-mK) = 1,1,3,3,3,5 settles neither way.
    const Pic0Group t({{"T", 3}});
    const std::vector<AtiyahAssignment> odd{{ZVector{1, 1}, AtiyahExpr({{1, {0}}, {1, {1}}})}};
    EXPECT_THROW(good_eigenspace_check(IntMatrix::scalar(2, Integer(2)), ZVector{1, 1}, orthant(2), atiyah_kappa_oracle(t, odd)),
                 OracleUnavailable);
}

TEST(GoodEigenspace, ModelOracleRule) {
    const KappaOracle k = model_kappa_oracle();
    EXPECT_EQ(k(ZVector{0, 1, 3}), 2);
    EXPECT_EQ(k(ZVector{0, 0}), 0);
    EXPECT_FALSE(k(ZVector{1, -1}));
}

TEST(GoodEigenspace, RandomPowerMapsAreGood) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t k = 2 + trial % 2;
        std::vector<std::size_t> degrees;
        std::uniform_int_distribution<std::size_t> deg(2, 4);
        for (std::size_t i = 0; i < k; ++i) degrees.push_back(deg(rng));
        const GoodEigenspaceReport r = good_eigenspace_check(dwtest::power_map(degrees));
        const std::size_t top = *std::max_element(degrees.begin(), degrees.end());
        EXPECT_EQ(r.verdict, GoodVerdict::Good);
        EXPECT_EQ(*r.lambda, static_cast<long>(top));
        // inside V_H tied factors collapse to the single class sum_{d_i = top} e_i
        ASSERT_EQ(r.eigenbasis.size(), 1u);
        for (std::size_t i = 0; i < k; ++i) EXPECT_EQ(r.eigenbasis[0][i], degrees[i] == top ? 1 : 0);
    }
}
