#include "dynwork/atiyah.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <map>
#include <random>

using namespace dynwork;

namespace {

Pic0Group group_of(std::vector<long> orders) {
    std::vector<Pic0Generator> g;
    for (std::size_t i = 0; i < orders.size(); ++i) g.push_back({"L" + std::to_string(i + 1), orders[i]});
    return Pic0Group(g);
}

std::size_t choose(std::size_t n, std::size_t k) {
    std::size_t c = 1;
    for (std::size_t i = 1; i <= k; ++i) c = c * (n - k + i) / i;
    return c;
}

// Direct expansion of Sym^d over weight vectors: every multiset of basis
// vectors is a weight vector of Sym^d E. Each indecomposable summand
// contains exactly one weight in {0, 1}, so counting those with trivial
// twist gives h^0.
struct Expansion {
    std::size_t rank = 0;
    std::size_t h0 = 0;
};

Expansion brute_sym(const AtiyahExpr& e, unsigned d, const Pic0Group& g) {
    std::vector<std::pair<long, std::size_t>> basis;  // (weight, term index)
    for (std::size_t k = 0; k < e.terms().size(); ++k) {
        const long r = e.terms()[k].r;
        for (long w = r - 1; w >= 1 - r; w -= 2) basis.emplace_back(w, k);
    }
    Expansion out;
    std::vector<long> count(e.terms().size(), 0);
    std::function<void(std::size_t, unsigned, long)> rec = [&](std::size_t from, unsigned left, long weight) {
        if (left == 0) {
            ++out.rank;
            Pic0Element t = g.identity();
            for (std::size_t k = 0; k < count.size(); ++k) t = g.add(t, g.scale(e.terms()[k].twist, count[k]));
            if (g.is_identity(t) && (weight == 0 || weight == 1)) ++out.h0;
            return;
        }
        for (std::size_t i = from; i < basis.size(); ++i) {
            ++count[basis[i].second];
            rec(i, left - 1, weight + basis[i].first);
            --count[basis[i].second];
        }
    };
    rec(0, d, 0);
    return out;
}

}  // namespace

TEST(AtiyahTensor, Examples) {
    EXPECT_EQ(atiyah_tensor(2, 2).ranks(), (std::vector<unsigned>{3, 1}));
    EXPECT_EQ(atiyah_tensor(2, 3).ranks(), (std::vector<unsigned>{4, 2}));
    EXPECT_EQ(atiyah_tensor(1, 5).ranks(), (std::vector<unsigned>{5}));
    EXPECT_EQ(atiyah_tensor(3, 3).ranks(), (std::vector<unsigned>{5, 3, 1}));
    EXPECT_TRUE(atiyah_tensor(2, 2).model_derived());
    EXPECT_THROW(atiyah_tensor(0, 2), PreconditionViolated);
}

TEST(AtiyahSym, Examples) {
    EXPECT_EQ(atiyah_sym(2, 2).ranks(), (std::vector<unsigned>{3}));
    EXPECT_EQ(atiyah_sym(2, 3).ranks(), (std::vector<unsigned>{5, 1}));
    EXPECT_EQ(atiyah_sym(3, 2).ranks(), (std::vector<unsigned>{4}));
    EXPECT_EQ(atiyah_sym(0, 4).ranks(), (std::vector<unsigned>{1}));
}

TEST(SymBundle, Examples) {
    const Pic0Group g = group_of({0});
    const AtiyahExpr f2 = AtiyahExpr::from_ranks({2}, 1);
    const AtiyahExpr e = AtiyahExpr::from_ranks({2, 2}, 1);
    EXPECT_EQ(sym_bundle(e, 2, g).ranks(), (std::vector<unsigned>{3, 3, 3, 1}));
    EXPECT_EQ(sym_bundle(f2, 4, g).ranks(), (std::vector<unsigned>{5}));

    const AtiyahExpr twisted({{2, {0}}, {1, {1}}});
    const AtiyahExpr s = sym_bundle(twisted, 3, g);
    EXPECT_EQ(s.rank(), 10u);
    EXPECT_EQ(s.format(g), "F_4 + F_3(x)L1 + F_2(x)L1^2 + F_1(x)L1^3");
}

TEST(DetBundle, Examples) {
    const Pic0Group g = group_of({0});
    EXPECT_TRUE(g.is_identity(det_bundle(AtiyahExpr::from_ranks({5}, 1), g)));
    EXPECT_EQ(det_bundle(AtiyahExpr(std::vector<AtiyahTerm>{{2, {1}}}), g), (Pic0Element{2}));
    EXPECT_EQ(det_bundle(AtiyahExpr({{2, {0}}, {1, {1}}}), g), (Pic0Element{1}));
}

TEST(H0, Examples) {
    const Pic0Group g = group_of({0});
    EXPECT_EQ(h0(AtiyahExpr::from_ranks({7}, 1), g), 1u);
    EXPECT_EQ(h0(AtiyahExpr(std::vector<AtiyahTerm>{{3, {1}}}), g), 0u);
    EXPECT_EQ(h0(AtiyahExpr::from_ranks({2, 2}, 1), g), 2u);
}

TEST(Atiyah, RankAndDeterminantInvariants) {
    const Pic0Group g;
    for (unsigned r = 1; r <= 8; ++r) {
        for (unsigned s = 1; s <= 8; ++s) {
            const AtiyahExpr t = atiyah_tensor(r, s);
            EXPECT_EQ(t.rank(), r * s);
            EXPECT_TRUE(g.is_identity(det_bundle(t, g)));
            // self-duality: Hom(F_r, F_s) = h^0(F_r (x) F_s) = min(r, s)
            EXPECT_EQ(h0(t, g), std::min(r, s));
            EXPECT_EQ(h0(t, g), h0(atiyah_tensor(s, r), g));
        }
        for (unsigned d = 0; d <= 8; ++d) {
            const AtiyahExpr s = atiyah_sym(d, r);
            EXPECT_EQ(s.rank(), choose(d + r - 1, r - 1)) << "Sym^" << d << " F_" << r;
            EXPECT_TRUE(g.is_identity(det_bundle(s, g)));
        }
    }
}

TEST(Atiyah, SymOfF2IsFr) {
    for (unsigned r = 1; r <= 10; ++r) {
        const AtiyahExpr s = atiyah_sym(r - 1, 2);
        EXPECT_EQ(s.ranks(), std::vector<unsigned>{r});
        EXPECT_EQ(h0(s, Pic0Group()), 1u);
    }
}

TEST(Atiyah, TensorIsAssociativeAndCommutative) {
    const Pic0Group g;
    auto tensor = [](const AtiyahExpr& x, const AtiyahExpr& y) {
        std::vector<unsigned> out;
        for (const auto& a : x.terms())
            for (const auto& b : y.terms())
                for (unsigned r : atiyah_tensor(a.r, b.r).ranks()) out.push_back(r);
        return AtiyahExpr::from_ranks(out);
    };
    for (unsigned a = 1; a <= 6; ++a)
        for (unsigned b = 1; b <= 6; ++b) {
            EXPECT_EQ(atiyah_tensor(a, b), atiyah_tensor(b, a));
            for (unsigned c = 1; c <= 6; ++c) {
                const AtiyahExpr fa = AtiyahExpr::from_ranks({a}), fb = AtiyahExpr::from_ranks({b}),
                                 fc = AtiyahExpr::from_ranks({c});
                EXPECT_EQ(tensor(tensor(fa, fb), fc).ranks(), tensor(fa, tensor(fb, fc)).ranks());
            }
        }
    (void)g;
}

TEST(SymBundle, MatchesDirectExpansion) {
    std::mt19937_64 rng(21);
    const Pic0Group g = group_of({0, 3});
    std::uniform_int_distribution<long> exp(-2, 2);
    std::uniform_int_distribution<unsigned> rank(1, 3);
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<AtiyahTerm> ts;
        unsigned total = 0;
        while (total < 4) {
            const unsigned r = std::min(rank(rng), 4 - total);
            Pic0Element t = g.reduce({exp(rng), exp(rng)});
            if (trial % 3 == 0) t = g.identity();
            ts.push_back({r, t});
            total += r;
            if (trial % 2 == 0) break;
        }
        const AtiyahExpr e(ts);
        for (unsigned d = 1; d <= 5; ++d) {
            const AtiyahExpr s = sym_bundle(e, d, g);
            const Expansion b = brute_sym(e, d, g);
            EXPECT_EQ(s.rank(), b.rank);
            EXPECT_EQ(h0(s, g), b.h0) << e.format(g) << " d=" << d;
            EXPECT_EQ(det_bundle(s, g), g.scale(det_bundle(e, g), static_cast<long>(choose(d + e.rank() - 1, e.rank()))));
        }
    }
}

TEST(Anticanonical, Examples) {
    const Pic0Group g = group_of({0});
    const AtiyahExpr f2_o({{2, {0}}, {1, {0}}});
    EXPECT_GE(anticanonical_h0(f2_o, 1, g), 1u);
    const AtiyahExpr f2_l({{2, {0}}, {1, {1}}});
    for (unsigned m = 1; m <= 6; ++m) EXPECT_EQ(anticanonical_h0(f2_l, m, g), 1u) << "m=" << m;
    EXPECT_THROW(anticanonical_h0(f2_l, 0, g), PreconditionViolated);
}

TEST(Anticanonical, TrivialSummandGivesSections) {
    std::mt19937_64 rng(22);
    const Pic0Group g = group_of({0, 0, 4});
    std::uniform_int_distribution<long> exp(-2, 2);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<AtiyahTerm> ts{{1 + static_cast<unsigned>(trial % 3), g.identity()}};
        unsigned total = ts[0].r;
        const std::size_t extra = 1 + trial % 2;
        for (std::size_t i = 0; i < extra && total < 6; ++i) {
            const unsigned r = 1 + static_cast<unsigned>((trial / 3 + i) % std::min(3u, 6 - total));
            ts.push_back({r, g.reduce({exp(rng), exp(rng), exp(rng)})});
            total += r;
        }
        const AtiyahExpr e(ts);
        EXPECT_GE(anticanonical_h0(e, 1, g), 1u) << e.format(g);
    }
}

TEST(Iitaka, Examples) {
    const Pic0Group g = group_of({0});
    const IitakaEstimate a = iitaka_estimate(AtiyahExpr({{2, {0}}, {1, {1}}}), 6, g);
    EXPECT_EQ(a.verdict, KappaVerdict::Kappa0);
    EXPECT_EQ(a.sequence, (std::vector<unsigned long>(6, 1)));

    const IitakaEstimate b = iitaka_estimate(AtiyahExpr::from_ranks({1, 1}, 1), 6, g);
    EXPECT_EQ(b.verdict, KappaVerdict::KappaAtLeast1);
    for (std::size_t i = 0; i < b.sequence.size(); ++i) EXPECT_EQ(b.sequence[i], 2 * (i + 1) + 1);

    const Pic0Group t = group_of({2});
    const IitakaEstimate c = iitaka_estimate(AtiyahExpr({{2, {0}}, {1, {1}}}), 6, t);
    EXPECT_EQ(c.verdict, KappaVerdict::KappaAtLeast1);
    for (std::size_t i = 1; i < c.sequence.size(); ++i) EXPECT_GT(c.sequence[i], c.sequence[i - 1]);

    EXPECT_THROW(iitaka_estimate(AtiyahExpr::from_ranks({1, 1}), 9, Pic0Group()), PreconditionViolated);
}

TEST(Atiyah, BudgetsAreEnforced) {
    const Pic0Group g = group_of({0});
    std::vector<AtiyahTerm> many;
    for (long i = 0; i < 12; ++i) many.push_back({1, {i}});
    EXPECT_THROW(sym_bundle(AtiyahExpr(many), 20, g), CombinatorialBudget);
    EXPECT_THROW(sym_bundle(AtiyahExpr::from_ranks({40, 40}, 1), 30, g), CombinatorialBudget);
    EXPECT_EQ(composition_count(2, 3), 6u);
}

TEST(Pic0, TorsionReduction) {
    const Pic0Group g = group_of({0, 3});
    EXPECT_EQ(g.reduce({4, 7}), (Pic0Element{4, 1}));
    EXPECT_TRUE(g.is_identity(g.scale({0, 1}, 3)));
    EXPECT_FALSE(g.is_identity(g.scale({1, 1}, 3)));
    EXPECT_THROW(group_of({1}), PreconditionViolated);
}
