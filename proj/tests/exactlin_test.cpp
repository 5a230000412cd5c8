#include "dynwork/spectrum.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace dynwork;

namespace {

std::vector<long> coeffs_of(const Poly& p) {
    std::vector<long> out;
    for (const auto& c : p.coeffs()) out.push_back(c.get_si());
    return out;
}

Rational r(long p, long q = 1) {
    Rational x(p, q);
    x.canonicalize();
    return x;
}

}  // namespace

TEST(CharPoly, Examples) {
    EXPECT_EQ(coeffs_of(char_poly(IntMatrix::identity(2))), (std::vector<long>{1, -2, 1}));
    EXPECT_EQ(coeffs_of(char_poly(IntMatrix{{1, 0}, {-1, 3}})), (std::vector<long>{3, -4, 1}));
    EXPECT_EQ(coeffs_of(char_poly(IntMatrix{{0, 2}, {1, 0}})), (std::vector<long>{-2, 0, 1}));
}

TEST(CharPoly, MatchesCofactorOracle) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 1 + trial % 5;
        const IntMatrix m = dwtest::random_matrix(rng, n, 9);
        const Poly p = char_poly(m);
        const auto oracle = dwtest::cofactor_char_poly(m);
        ASSERT_EQ(p.coeffs().size(), oracle.size());
        for (std::size_t i = 0; i < oracle.size(); ++i) EXPECT_EQ(p.coeffs()[i], oracle[i]) << "trial " << trial;
    }
}

TEST(CharPoly, CayleyHamilton) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 1 + trial % 5;
        const IntMatrix m = dwtest::random_matrix(rng, n, 9);
        const Poly p = char_poly(m);
        IntMatrix acc(n, n), power = IntMatrix::identity(n);
        for (const auto& c : p.coeffs()) {
            acc = acc + c * power;
            power = power * m;
        }
        EXPECT_TRUE(acc.is_zero()) << "trial " << trial;
    }
}

TEST(Spectrum, Diagonal) {
    const Spectrum s = rational_spectrum(IntMatrix{{2, 0}, {0, 3}});
    ASSERT_EQ(s.entries.size(), 2u);
    EXPECT_EQ(s.entries[0].value, 3);
    EXPECT_EQ(s.entries[1].value, 2);
    for (const auto& e : s.entries) {
        EXPECT_EQ(e.algebraic_multiplicity, 1u);
        EXPECT_EQ(*e.geometric_multiplicity, 1u);
        EXPECT_EQ(*e.jordan_block_sizes, std::vector<unsigned>{1});
    }
    EXPECT_TRUE(s.spectral_radius.exact());
    EXPECT_EQ(s.spectral_radius.lo, 3);
}

TEST(Spectrum, JordanBlock) {
    const Spectrum s = rational_spectrum(IntMatrix{{2, 1}, {0, 2}});
    ASSERT_EQ(s.entries.size(), 1u);
    EXPECT_EQ(s.entries[0].value, 2);
    EXPECT_EQ(s.entries[0].algebraic_multiplicity, 2u);
    EXPECT_EQ(*s.entries[0].geometric_multiplicity, 1u);
    EXPECT_EQ(*s.entries[0].jordan_block_sizes, std::vector<unsigned>{2});
    EXPECT_EQ(s.spectral_radius.hi, 2);
}

TEST(Spectrum, IrrationalPair) {
    const Spectrum s = rational_spectrum(IntMatrix{{0, 2}, {1, 0}});
    ASSERT_EQ(s.entries.size(), 2u);
    for (const auto& e : s.entries) {
        EXPECT_EQ(e.kind, EigenKind::RealInterval);
        EXPECT_EQ(e.algebraic_multiplicity, 1u);
        EXPECT_LE(e.enclosure.width(), dyadic(40));
    }
    EXPECT_GE(s.spectral_radius.lo, r(1414, 1000));
    EXPECT_LE(s.spectral_radius.hi, r(1415, 1000));
}

TEST(Spectrum, ComplexModulus) {
    // x^2 + 1 rotated and scaled: eigenvalues 1 +- 2i, modulus sqrt 5.
    const Spectrum s = rational_spectrum(IntMatrix{{1, -2}, {2, 1}});
    ASSERT_EQ(s.entries.size(), 2u);
    for (const auto& e : s.entries) {
        EXPECT_EQ(e.kind, EigenKind::Complex);
        EXPECT_LE(e.modulus.lo * e.modulus.lo, 5);
        EXPECT_GE(e.modulus.hi * e.modulus.hi, 5);
    }
}

TEST(Spectrum, InvariantsOnRandomMatrices) {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 1 + trial % 5;
        IntMatrix m = dwtest::random_matrix(rng, n, 4);
        // Plant repeated rational eigenvalues half of the time.
        if (trial % 2 == 0) {
            IntMatrix t(n, n);
            for (std::size_t i = 0; i < n; ++i) {
                t(i, i) = static_cast<long>(i / 2) - 1;
                if (i + 1 < n && trial % 4 == 0) t(i, i + 1) = 1;
            }
            const IntMatrix u = dwtest::random_unimodular(rng, n);
            m = u * t * dwtest::unimodular_inverse(u);
        }
        const Spectrum s = rational_spectrum(m);
        unsigned total = 0;
        for (const auto& e : s.entries) {
            total += e.algebraic_multiplicity;
            if (e.kind != EigenKind::Rational) continue;
            const auto& b = *e.jordan_block_sizes;
            unsigned sum = 0, biggest = 0;
            for (auto x : b) {
                sum += x;
                biggest = std::max(biggest, x);
            }
            EXPECT_EQ(sum, e.algebraic_multiplicity);
            EXPECT_EQ(*e.geometric_multiplicity, b.size());
            // rank (M - vI)^j drops by #blocks of size >= j.
            const ZMatrix a = detail::shifted(m, e.value);
            ZMatrix p = ZMatrix::identity(n);
            std::size_t prev = n;
            for (unsigned j = 1; j <= biggest; ++j) {
                p = p * a;
                const std::size_t rk = rank(p);
                std::size_t expected = 0;
                for (auto x : b) expected += x >= j;
                EXPECT_EQ(prev - rk, expected);
                prev = rk;
            }
            // the generalized eigenspace is killed at the largest block size
            EXPECT_EQ(n - prev, e.algebraic_multiplicity);
        }
        EXPECT_EQ(total, n);
        const double rho = dwtest::spectral_radius(m);
        EXPECT_LE(s.spectral_radius.lo.get_d(), rho + 1e-9);
        EXPECT_GE(s.spectral_radius.hi.get_d(), rho - 1e-9);
        EXPECT_LE(s.spectral_radius.hi, Rational(gershgorin_bound(m)) + dyadic(30));
        EXPECT_LE(s.spectral_radius.hi, cauchy_bound(s.characteristic) + dyadic(30));
    }
}

TEST(Spectrum, BlockTriangularDeterminant) {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t a = 1 + trial % 3, b = 1 + (trial / 3) % 3, n = a + b;
        const IntMatrix m = dwtest::random_matrix(rng, n, 6);
        IntMatrix t = m;
        for (std::size_t i = a; i < n; ++i)
            for (std::size_t j = 0; j < a; ++j) t(i, j) = 0;
        std::vector<std::size_t> ia, ib;
        for (std::size_t i = 0; i < n; ++i) (i < a ? ia : ib).push_back(i);
        EXPECT_EQ(det(t), det(t.block(ia, ia)) * det(t.block(ib, ib)));
        EXPECT_EQ(det(t), dwtest::cofactor_det(t));
    }
}

TEST(Eigendivisor, Examples) {
    const IntMatrix m{{3, 0}, {5, 1}};
    const ZVector v = integral_eigendivisor(m, 3, 1);
    EXPECT_EQ(v, (ZVector{2, 5}));
    EXPECT_EQ(m * v, (ZVector{6, 15}));
    EXPECT_EQ(integral_eigendivisor(IntMatrix{{4, 0}, {0, 1}}, 4, 1), (ZVector{3, 0}));
    EXPECT_EQ(integral_eigendivisor(IntMatrix{{2, 0}, {1, 1}}, 2, 1), (ZVector{1, 1}));
}

TEST(Eigendivisor, RejectsWrongEigenvalue) {
    EXPECT_THROW(integral_eigendivisor(IntMatrix{{3, 0}, {5, 1}}, 4, 1), NotEigenpair);
    EXPECT_THROW(integral_eigendivisor(IntMatrix{{3, 0}, {5, 1}}, 1, 1), PreconditionViolated);
}

TEST(SameModulus, Examples) {
    EXPECT_EQ(same_modulus_test(IntMatrix::scalar(3, Integer(2))), ModulusVerdict::AllEqual);
    EXPECT_EQ(same_modulus_test(IntMatrix{{2, 0}, {0, 3}}), ModulusVerdict::NotAllEqual);
    EXPECT_EQ(same_modulus_test(IntMatrix{{0, 2}, {1, 0}}), ModulusVerdict::AllEqual);
    EXPECT_EQ(same_modulus_test(IntMatrix{{1, -2}, {2, 1}}), ModulusVerdict::AllEqual);
    EXPECT_EQ(same_modulus_test(IntMatrix{{1, 1}, {1, 0}}), ModulusVerdict::NotAllEqual);
}

TEST(SameModulus, AgreesWithFloatingOracle) {
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 60; ++trial) {
        const IntMatrix m = dwtest::random_matrix(rng, 2 + trial % 2, 3);
        if (det(m) == 0) continue;
        const ModulusVerdict v = same_modulus_test(m);
        if (v == ModulusVerdict::Inconclusive) continue;
        const auto ev = dwtest::eigenvalues(m);
        double lo = 1e300, hi = 0;
        for (const auto& z : ev) {
            lo = std::min(lo, std::abs(z));
            hi = std::max(hi, std::abs(z));
        }
        EXPECT_EQ(v == ModulusVerdict::AllEqual, hi - lo < 1e-6) << "trial " << trial;
    }
}

TEST(Krylov, RestrictionIsConsistent) {
    const IntMatrix m{{2, 0, 0}, {0, 3, 0}, {0, 0, 2}};
    const auto basis = krylov_basis(m, ZVector{1, 1, 1});
    ASSERT_EQ(basis.size(), 2u);
    const QMatrix a = restrict_to(m, basis);
    EXPECT_EQ(a(0, 0), 0);
    EXPECT_EQ(a(1, 0), 1);
    EXPECT_EQ(a(0, 1), -6);
    EXPECT_EQ(a(1, 1), 5);
}
