#pragma once

// Exact spectral analysis of integer matrices: characteristic polynomials,
// rational eigenvalues with Jordan structure, and certified enclosures for the
// irrational ones. Nothing in here rounds except the complex root finder, whose
// output is only ever used through rigorously inflated inclusion disks.

#include "dynwork/bigreal.hpp"
#include "dynwork/error.hpp"
#include "dynwork/matrix.hpp"
#include "dynwork/poly.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dynwork {

/// Characteristic polynomial det(xI - M) by Faddeev-LeVerrier. The division by
/// k at each step is exact over the integers.
inline Poly char_poly(const IntMatrix& m) {
    if (!m.is_square()) throw PreconditionViolated("char_poly needs a square matrix");
    const std::size_t n = m.rows();
    std::vector<Integer> c(n + 1, Integer(0));
    c[n] = 1;
    ZMatrix mk(n, n);
    for (std::size_t k = 1; k <= n; ++k) {
        mk = m * mk;
        for (std::size_t i = 0; i < n; ++i) mk(i, i) += c[n - k + 1];
        const Integer t = trace(m * mk);
        Integer q;
        mpz_divexact_ui(q.get_mpz_t(), t.get_mpz_t(), k);
        c[n - k] = -q;
    }
    return Poly(std::move(c));
}

/// Dyadic width 2^-bits as an exact rational.
inline Rational dyadic(unsigned long bits) {
    Rational w(1);
    mpq_div_2exp(w.get_mpq_t(), w.get_mpq_t(), bits);
    return w;
}

inline const Rational& default_width_budget() {
    static const Rational w = dyadic(40);
    return w;
}

// ---------------------------------------------------------------------------
// Real root isolation (exact, Sturm sequences)

namespace detail {

inline std::vector<QPoly> sturm_sequence(const QPoly& p) {
    std::vector<QPoly> seq{p, p.derivative()};
    while (!seq.back().is_zero() && seq.back().degree() > 0) {
        QPoly r = divmod(seq[seq.size() - 2], seq.back()).second;
        if (r.is_zero()) break;
        seq.push_back(Rational(-1) * r);
    }
    return seq;
}

inline int sign_changes(const std::vector<QPoly>& seq, const Rational& x) {
    int changes = 0, last = 0;
    for (const auto& s : seq) {
        const int v = sgn(s.evaluate(x));
        if (v == 0) continue;
        if (last != 0 && v != last) ++changes;
        last = v;
    }
    return changes;
}

/// 1 + max |a_i / a_d|: every root lies strictly inside (-B, B).
inline Rational cauchy_bound(const QPoly& p) {
    Rational b = 0;
    const Rational lead = abs(p.leading());
    for (long i = 0; i < p.degree(); ++i) b = std::max(b, Rational(abs(p.coeffs()[static_cast<std::size_t>(i)]) / lead));
    return b + 1;
}

}  // namespace detail

/// Cauchy root bound of a monic-or-not integer polynomial.
inline Rational cauchy_bound(const Poly& p) { return detail::cauchy_bound(to_rational(p)); }

/// Closed real interval with exact endpoints; lo == hi marks an exact root.
struct RationalInterval {
    Rational lo, hi;
    bool exact() const { return lo == hi; }
    Rational width() const { return hi - lo; }
    bool contains(const Rational& x) const { return lo <= x && x <= hi; }
    bool intersects(const RationalInterval& o) const { return !(hi < o.lo || o.hi < lo); }
};

/// Isolates every real root of a square-free polynomial and refines each
/// enclosure below `width`. Exact roots come back as degenerate intervals.
inline std::vector<RationalInterval> isolate_real_roots(const QPoly& squarefree, const Rational& width) {
    std::vector<RationalInterval> out;
    if (squarefree.degree() <= 0) return out;
    const auto seq = detail::sturm_sequence(squarefree);
    const Rational bound = detail::cauchy_bound(squarefree);

    // Picks a split point near the midpoint that is not itself a root, so
    // every endpoint handed to the Sturm count is a non-root.
    auto split_point = [&](const Rational& a, const Rational& b) {
        Rational mid = (a + b) / 2;
        Rational step = (b - a) / 8;
        while (sgn(squarefree.evaluate(mid)) == 0) {
            mid += step;
            step /= 2;
        }
        return mid;
    };

    std::vector<std::pair<Rational, Rational>> work{{-bound, bound}};
    std::vector<std::pair<Rational, Rational>> isolated;
    while (!work.empty()) {
        auto [a, b] = work.back();
        work.pop_back();
        const int count = detail::sign_changes(seq, a) - detail::sign_changes(seq, b);
        if (count == 0) continue;
        if (count == 1) {
            isolated.emplace_back(a, b);
            continue;
        }
        const Rational mid = split_point(a, b);
        work.emplace_back(a, mid);
        work.emplace_back(mid, b);
    }

    for (auto [a, b] : isolated) {
        int sa = sgn(squarefree.evaluate(a));
        bool exact = false;
        while (b - a > width) {
            const Rational mid = (a + b) / 2;
            const int sm = sgn(squarefree.evaluate(mid));
            if (sm == 0) {
                a = b = mid;
                exact = true;
                break;
            }
            if (sm == sa) {
                a = mid;
            } else {
                b = mid;
            }
        }
        if (!exact && sgn(squarefree.evaluate(b)) == 0) {
            a = b;
            exact = true;
        }
        // Integer roots of monic integer polynomials are the only rational
        // ones; probe any integer still inside the enclosure.
        if (!exact) {
            mpz_class lo_int, hi_int;
            mpz_cdiv_q(lo_int.get_mpz_t(), a.get_num_mpz_t(), a.get_den_mpz_t());
            mpz_fdiv_q(hi_int.get_mpz_t(), b.get_num_mpz_t(), b.get_den_mpz_t());
            for (mpz_class k = lo_int; k <= hi_int && !exact; ++k) {
                if (sgn(squarefree.evaluate(Rational(k))) == 0) {
                    a = b = Rational(k);
                    exact = true;
                }
            }
        }
        out.push_back({a, b});
    }
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.lo < y.lo; });
    return out;
}

// ---------------------------------------------------------------------------
// Complex roots with rigorous inclusion disks

struct Complex {
    Real re, im;
    Complex(mpfr_prec_t p) : re(p), im(p) {}
    Complex(Real r, Real i) : re(std::move(r)), im(std::move(i)) {}
    friend Complex operator+(const Complex& a, const Complex& b) { return {a.re + b.re, a.im + b.im}; }
    friend Complex operator-(const Complex& a, const Complex& b) { return {a.re - b.re, a.im - b.im}; }
    friend Complex operator*(const Complex& a, const Complex& b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend Complex operator/(const Complex& a, const Complex& b) {
        const Real d = b.re * b.re + b.im * b.im;
        return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
    }
    Real modulus() const { return sqrt(re * re + im * im); }
};

/// A disk certified to contain exactly one root of the polynomial it came from.
struct RootDisk {
    Complex center;
    Real radius;
};

namespace detail {

inline Complex eval_complex(const QPoly& p, const Complex& z, mpfr_prec_t prec) {
    Complex acc(prec);
    for (auto it = p.coeffs().rbegin(); it != p.coeffs().rend(); ++it)
        acc = acc * z + Complex(Real(*it, prec), Real(prec));
    return acc;
}

// Aberth-Ehrlich simultaneous iteration on a monic square-free polynomial,
// followed by Weierstrass-correction inclusion disks: with W_i = p(z_i) /
// prod_{j!=i} (z_i - z_j), the union of the disks |z - z_i| <= d|W_i| holds
// every root and each connected component of k disks holds exactly k roots.
// Disks are inflated by a margin well above the working rounding error.
inline std::optional<std::vector<RootDisk>> inclusion_disks(const QPoly& monic_sf, mpfr_prec_t prec) {
    const auto d = static_cast<std::size_t>(monic_sf.degree());
    std::vector<RootDisk> disks;
    if (d == 0) return disks;
    const QPoly dp = monic_sf.derivative();
    const Real bound(detail::cauchy_bound(monic_sf), prec);

    std::vector<Complex> z;
    z.reserve(d);
    const Real pi = [&] {
        Real r(prec);
        mpfr_const_pi(r.raw(), MPFR_RNDN);
        return r;
    }();
    for (std::size_t i = 0; i < d; ++i) {
        Real angle = (Real(2.0, prec) * pi * Real(static_cast<long>(i), prec) + Real(0.4, prec)) / Real(static_cast<long>(d), prec);
        Real c(prec), s(prec);
        mpfr_sin_cos(s.raw(), c.raw(), angle.raw(), MPFR_RNDN);
        const Real r = bound * Real(0.5, prec);
        z.emplace_back(r * c, r * s);
    }

    Real tol(1.0, prec);
    mpfr_div_2ui(tol.raw(), tol.raw(), static_cast<unsigned long>(prec - 12), MPFR_RNDN);
    bool converged = false;
    for (int iter = 0; iter < 2000 && !converged; ++iter) {
        converged = true;
        for (std::size_t i = 0; i < d; ++i) {
            const Complex pv = eval_complex(monic_sf, z[i], prec);
            const Complex dv = eval_complex(dp, z[i], prec);
            if (pv.re.is_zero() && pv.im.is_zero()) continue;
            const Complex ratio = pv / dv;
            Complex sum(prec);
            for (std::size_t j = 0; j < d; ++j)
                if (j != i) sum = sum + Complex(Real(1.0, prec), Real(prec)) / (z[i] - z[j]);
            const Complex one(Real(1.0, prec), Real(prec));
            const Complex w = ratio / (one - ratio * sum);
            z[i] = z[i] - w;
            if (w.modulus() > tol * max(Real(1.0, prec), z[i].modulus())) converged = false;
        }
    }

    Real margin(1.0, prec);
    mpfr_div_2ui(margin.raw(), margin.raw(), static_cast<unsigned long>(prec / 2), MPFR_RNDN);
    for (std::size_t i = 0; i < d; ++i) {
        Complex denom(Real(1.0, prec), Real(prec));
        for (std::size_t j = 0; j < d; ++j)
            if (j != i) denom = denom * (z[i] - z[j]);
        if (denom.re.is_zero() && denom.im.is_zero()) return std::nullopt;
        const Complex wc = eval_complex(monic_sf, z[i], prec) / denom;
        const Real radius = Real(static_cast<long>(d), prec) * wc.modulus() + margin * (Real(1.0, prec) + z[i].modulus());
        disks.push_back({z[i], radius});
    }
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j)
            if ((disks[i].center - disks[j].center).modulus() <= disks[i].radius + disks[j].radius) return std::nullopt;
    return disks;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Spectrum

enum class EigenKind { Rational, RealInterval, Complex };

struct SpectrumEntry {
    EigenKind kind = EigenKind::Rational;
    Rational value;                     // Rational kind only
    RationalInterval enclosure;         // real enclosure (Rational: degenerate)
    RationalInterval modulus;           // certified enclosure of |eigenvalue|
    int imag_sign = 0;                  // Complex kind: sign of the imaginary part
    double approx_re = 0, approx_im = 0;  // display only
    unsigned algebraic_multiplicity = 1;
    std::optional<unsigned> geometric_multiplicity;
    std::optional<std::vector<unsigned>> jordan_block_sizes;
};

struct Spectrum {
    std::size_t dimension = 0;
    Poly characteristic;
    std::vector<SpectrumEntry> entries;  // descending certified modulus
    RationalInterval spectral_radius;

    bool all_rational() const {
        return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.kind == EigenKind::Rational; });
    }
    /// Rational eigenvalue entry, if `v` is one.
    const SpectrumEntry* find_rational(const Rational& v) const {
        for (const auto& e : entries)
            if (e.kind == EigenKind::Rational && e.value == v) return &e;
        return nullptr;
    }
};

namespace detail {

inline RationalInterval modulus_of(const RationalInterval& x) {
    if (sgn(x.lo) >= 0) return x;
    if (sgn(x.hi) <= 0) return {-x.hi, -x.lo};
    return {Rational(0), std::max(Rational(-x.lo), x.hi)};
}

// M - v*I scaled by the denominator of v, so integer rank applies.
inline ZMatrix shifted(const IntMatrix& m, const Rational& v) {
    ZMatrix s(m.rows(), m.cols());
    const Integer den = v.get_den();
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) s(i, j) = m(i, j) * den;
    for (std::size_t i = 0; i < m.rows(); ++i) s(i, i) -= v.get_num();
    return s;
}

/// Jordan block sizes from the rank drops of (M - vI)^j.
inline std::vector<unsigned> jordan_blocks(const IntMatrix& m, const Rational& v, unsigned alg_mult) {
    const std::size_t n = m.rows();
    const ZMatrix a = shifted(m, v);
    std::vector<std::size_t> ranks{n};
    ZMatrix power = ZMatrix::identity(n);
    while (n - ranks.back() < alg_mult) {
        power = power * a;
        ranks.push_back(rank(power));
        if (ranks.size() > n + 1) throw PreconditionViolated("Jordan chain did not stabilise");
    }
    // at_least[j] = number of blocks of size >= j
    std::vector<std::size_t> at_least(ranks.size(), 0);
    for (std::size_t j = 1; j < ranks.size(); ++j) at_least[j] = ranks[j - 1] - ranks[j];
    std::vector<unsigned> sizes;
    for (std::size_t j = ranks.size() - 1; j >= 1; --j) {
        const std::size_t exactly = at_least[j] - (j + 1 < at_least.size() ? at_least[j + 1] : 0);
        for (std::size_t c = 0; c < exactly; ++c) sizes.push_back(static_cast<unsigned>(j));
    }
    return sizes;
}

inline Rational to_rational_down(const Real& x) { return x.to_rational(); }

}  // namespace detail

/// Exact rational eigenvalues with Jordan structure, plus certified enclosures
/// for every irrational eigenvalue (real roots by interval, complex ones by
/// modulus). Enclosures are refined until their width is at most `width`.
inline Spectrum rational_spectrum(const IntMatrix& m, const Rational& width = default_width_budget()) {
    if (!m.is_square()) throw PreconditionViolated("rational_spectrum needs a square matrix");
    if (sgn(width) <= 0) throw PreconditionViolated("width budget must be positive");
    Spectrum spec;
    spec.dimension = m.rows();
    spec.characteristic = char_poly(m);
    const auto factors = squarefree_decomposition(to_rational(spec.characteristic));

    unsigned long width_bits = 1;
    while (dyadic(width_bits) > width) ++width_bits;

    for (std::size_t idx = 0; idx < factors.size(); ++idx) {
        const QPoly& s = factors[idx];
        if (s.degree() <= 0) continue;
        const auto mult = static_cast<unsigned>(idx + 1);
        const auto real_roots = isolate_real_roots(s, width);
        for (const auto& r : real_roots) {
            SpectrumEntry e;
            e.algebraic_multiplicity = mult;
            e.enclosure = r;
            e.modulus = detail::modulus_of(r);
            if (r.exact()) {
                e.kind = EigenKind::Rational;
                e.value = r.lo;
                auto blocks = detail::jordan_blocks(m, r.lo, mult);
                e.geometric_multiplicity = static_cast<unsigned>(blocks.size());
                e.jordan_block_sizes = std::move(blocks);
                e.approx_re = r.lo.get_d();
            } else {
                e.kind = EigenKind::RealInterval;
                e.approx_re = Rational((r.lo + r.hi) / 2).get_d();
            }
            spec.entries.push_back(std::move(e));
        }

        const std::size_t complex_count = static_cast<std::size_t>(s.degree()) - real_roots.size();
        if (complex_count == 0) continue;
        bool done = false;
        for (mpfr_prec_t prec = std::max<mpfr_prec_t>(128, 2 * static_cast<mpfr_prec_t>(width_bits) + 64);
             prec <= 8192 && !done; prec *= 2) {
            auto disks = detail::inclusion_disks(s, prec);
            if (!disks) continue;
            std::vector<const RootDisk*> nonreal;
            for (const auto& dsk : *disks)
                if (abs(dsk.center.im) > dsk.radius) nonreal.push_back(&dsk);
            if (nonreal.size() != complex_count) continue;
            const Real w(width, prec);
            bool narrow = true;
            for (const auto* dsk : nonreal) narrow = narrow && (dsk->radius * Real(2.0, prec) <= w);
            if (!narrow) continue;
            for (const auto* dsk : nonreal) {
                SpectrumEntry e;
                e.kind = EigenKind::Complex;
                e.algebraic_multiplicity = mult;
                const Real mod = dsk->center.modulus();
                Rational lo = (mod - dsk->radius).to_rational();
                if (sgn(lo) < 0) lo = 0;
                e.modulus = {lo, (mod + dsk->radius).to_rational()};
                e.enclosure = e.modulus;
                e.imag_sign = dsk->center.im.sign();
                e.approx_re = dsk->center.re.to_double();
                e.approx_im = dsk->center.im.to_double();
                spec.entries.push_back(std::move(e));
            }
            done = true;
        }
        if (!done)
            throw IntervalSeparationFailure("complex roots of a degree-" + std::to_string(s.degree()) +
                                            " factor could not be separated at the requested width");
    }

    // Descending modulus; rational before enclosures at equal modulus, then
    // positive before negative.
    std::stable_sort(spec.entries.begin(), spec.entries.end(), [](const SpectrumEntry& a, const SpectrumEntry& b) {
        if (a.modulus.hi != b.modulus.hi) return a.modulus.hi > b.modulus.hi;
        if (a.modulus.lo != b.modulus.lo) return a.modulus.lo > b.modulus.lo;
        const bool ra = a.kind == EigenKind::Rational, rb = b.kind == EigenKind::Rational;
        if (ra != rb) return ra;
        if (a.approx_re != b.approx_re) return a.approx_re > b.approx_re;
        return a.imag_sign > b.imag_sign;
    });

    if (!spec.entries.empty()) {
        spec.spectral_radius = spec.entries.front().modulus;
        for (const auto& e : spec.entries) {
            spec.spectral_radius.lo = std::max(spec.spectral_radius.lo, e.modulus.lo);
            spec.spectral_radius.hi = std::max(spec.spectral_radius.hi, e.modulus.hi);
        }
    }
    return spec;
}

/// Largest absolute row sum (Gershgorin envelope of the spectral radius).
inline Integer gershgorin_bound(const IntMatrix& m) {
    Integer best = 0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        Integer s = 0;
        for (std::size_t j = 0; j < m.cols(); ++j) s += abs(m(i, j));
        best = std::max(best, s);
    }
    return best;
}

/// Basis of the rational eigenspace ker(M - vI), as primitive integer vectors.
inline std::vector<ZVector> eigenspace(const IntMatrix& m, const Rational& v) {
    std::vector<ZVector> out;
    for (const auto& q : nullspace(to_rational(detail::shifted(m, v)))) out.push_back(primitive(q));
    return out;
}

// ---------------------------------------------------------------------------
// Modulus comparison

enum class ModulusVerdict { AllEqual, NotAllEqual, Inconclusive };

inline std::string to_string(ModulusVerdict v) {
    switch (v) {
        case ModulusVerdict::AllEqual: return "AllEqual";
        case ModulusVerdict::NotAllEqual: return "NotAllEqual";
        case ModulusVerdict::Inconclusive: return "Inconclusive";
    }
    return "?";
}

namespace detail {

// Exact rational r with r^n == x, if one exists (x >= 0).
inline std::optional<Rational> exact_root(const Rational& x, unsigned long n) {
    Integer a, b;
    if (mpz_root(a.get_mpz_t(), x.get_num_mpz_t(), n) == 0) return std::nullopt;
    if (mpz_root(b.get_mpz_t(), x.get_den_mpz_t(), n) == 0) return std::nullopt;
    return Rational(a, b);
}

// True when the root set of `q` is provably the circle |z|^2 = c: q is
// c-reciprocal (roots closed under z -> c/z) and every enclosure is mapped by
// z -> c/z onto the enclosure of its own conjugate and no other.
inline bool certify_circle(const QPoly& q, const Rational& c, const std::vector<RationalInterval>& reals,
                           const std::vector<RootDisk>& complexes, mpfr_prec_t prec) {
    const auto d = static_cast<std::size_t>(q.degree());
    const Rational a0 = q.coeff(0);
    Rational cpow = 1;
    for (std::size_t i = 0; i <= d; ++i) {
        if (q.coeff(i) * cpow != a0 * q.coeff(d - i)) return false;
        cpow *= c;
    }
    for (std::size_t i = 0; i < reals.size(); ++i) {
        const auto& r = reals[i];
        if (r.contains(0)) return false;
        const RationalInterval img = sgn(r.lo) > 0 ? RationalInterval{c / r.hi, c / r.lo} : RationalInterval{c / r.hi, c / r.lo};
        const RationalInterval image{std::min(img.lo, img.hi), std::max(img.lo, img.hi)};
        for (std::size_t j = 0; j < reals.size(); ++j)
            if ((i == j) != image.intersects(reals[j])) return false;
    }
    const Real cr(c, prec);
    for (std::size_t i = 0; i < complexes.size(); ++i) {
        const auto& z = complexes[i];
        const Real mod = z.center.modulus();
        if (mod <= z.radius) return false;
        const Complex img = Complex(cr, Real(prec)) / z.center;
        const Real img_radius = cr * z.radius / (mod * (mod - z.radius));
        if (abs(img.im) <= img_radius) return false;  // image may touch a real enclosure
        for (std::size_t j = 0; j < complexes.size(); ++j) {
            const Complex conj_j(complexes[j].center.re, -complexes[j].center.im);
            const bool hits = (img - Complex(complexes[j].center.re, complexes[j].center.im)).modulus() <=
                              img_radius + complexes[j].radius;
            const bool is_conj = (z.center - conj_j).modulus() <= z.radius + complexes[j].radius;
            if (hits != is_conj) return false;
        }
    }
    return true;
}

}  // namespace detail

/// Decides whether all eigenvalues of M share one modulus. Disjoint modulus
/// enclosures give NotAllEqual; equality is certified exactly through the
/// reciprocal structure of the square-free characteristic polynomial when
/// |z|^2 is rational; anything else at this budget is Inconclusive.
inline ModulusVerdict same_modulus_test(const IntMatrix& m, const Rational& width_budget = default_width_budget()) {
    if (m.is_zero()) throw PreconditionViolated("same_modulus_test needs a nonzero matrix");
    Spectrum spec;
    try {
        spec = rational_spectrum(m, width_budget);
    } catch (const IntervalSeparationFailure&) {
        return ModulusVerdict::Inconclusive;
    }
    if (spec.all_rational()) {
        const Rational first = abs(spec.entries.front().value);
        for (const auto& e : spec.entries)
            if (abs(e.value) != first) return ModulusVerdict::NotAllEqual;
        return ModulusVerdict::AllEqual;
    }
    for (std::size_t i = 0; i < spec.entries.size(); ++i)
        for (std::size_t j = i + 1; j < spec.entries.size(); ++j)
            if (!spec.entries[i].modulus.intersects(spec.entries[j].modulus)) return ModulusVerdict::NotAllEqual;

    const QPoly q = squarefree_part(to_rational(spec.characteristic));
    const auto d = static_cast<unsigned long>(q.degree());
    if (sgn(q.coeff(0)) == 0) return ModulusVerdict::Inconclusive;
    const auto c = detail::exact_root(Rational(q.coeff(0) * q.coeff(0)), d);
    if (!c) return ModulusVerdict::Inconclusive;

    unsigned long width_bits = 1;
    while (dyadic(width_bits) > width_budget) ++width_bits;
    const auto reals = isolate_real_roots(q, width_budget);
    const std::size_t complex_count = d - reals.size();
    std::vector<RootDisk> complexes;
    if (complex_count > 0) {
        for (mpfr_prec_t prec = std::max<mpfr_prec_t>(128, 2 * static_cast<mpfr_prec_t>(width_bits) + 64); prec <= 8192;
             prec *= 2) {
            auto disks = detail::inclusion_disks(q, prec);
            if (!disks) continue;
            complexes.clear();
            for (auto& dsk : *disks)
                if (abs(dsk.center.im) > dsk.radius) complexes.push_back(dsk);
            if (complexes.size() == complex_count) break;
            complexes.clear();
        }
        if (complexes.empty()) return ModulusVerdict::Inconclusive;
    }
    const mpfr_prec_t prec = complexes.empty() ? 256 : complexes.front().radius.precision();
    return detail::certify_circle(q, *c, reals, complexes, prec) ? ModulusVerdict::AllEqual : ModulusVerdict::Inconclusive;
}

// ---------------------------------------------------------------------------
// Picard-rank-two eigendivisor

/// For M in a basis (L, H) with H a mu-eigenvector (M e2 = mu e2) and
/// M e1 = a e1 + b e2, the integral lambda-eigendivisor (lambda - mu) L + b H.
inline ZVector integral_eigendivisor(const IntMatrix& m, const Integer& lambda, const Integer& mu) {
    if (m.rows() != 2 || m.cols() != 2) throw DimensionMismatch("integral_eigendivisor expects a 2x2 matrix");
    if (lambda == mu) throw PreconditionViolated("eigenvalues must differ");
    if (sgn(m(0, 1)) != 0 || m(1, 1) != mu) throw PreconditionViolated("second basis vector is not a mu-eigenvector");
    const ZVector v{lambda - mu, m(1, 0)};
    const ZVector mv = m * v;
    if (mv[0] != lambda * v[0] || mv[1] != lambda * v[1])
        throw NotEigenpair("M * (" + v[0].get_str() + "," + v[1].get_str() + ") is not " + lambda.get_str() + " times it");
    return v;
}

// ---------------------------------------------------------------------------
// Invariant subspaces

/// Basis (as columns) of the Krylov space span{H, MH, M^2 H, ...}.
inline std::vector<ZVector> krylov_basis(const IntMatrix& m, const ZVector& h) {
    std::vector<ZVector> basis;
    ZVector v = h;
    for (std::size_t k = 0; k <= m.rows(); ++k) {
        std::vector<ZVector> trial = basis;
        trial.push_back(v);
        if (rank(ZMatrix::from_columns(trial, m.rows())) == basis.size()) break;
        basis.push_back(v);
        v = m * v;
    }
    return basis;
}

/// Matrix of M restricted to the invariant subspace spanned by `basis`
/// (columns), expressed in that basis.
inline QMatrix restrict_to(const IntMatrix& m, const std::vector<ZVector>& basis) {
    const std::size_t n = m.rows(), r = basis.size();
    // Solve B X = M B column by column through the augmented echelon form.
    QMatrix aug(n, r + r);
    const ZMatrix b = ZMatrix::from_columns(basis, n);
    const ZMatrix mb = m * b;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < r; ++j) aug(i, j) = b(i, j);
        for (std::size_t j = 0; j < r; ++j) aug(i, r + j) = mb(i, j);
    }
    const RowEchelon e = rref(aug);
    if (e.pivots.size() != r || (r > 0 && e.pivots.back() >= r))
        throw PreconditionViolated("subspace is not invariant or basis is dependent");
    QMatrix x(r, r);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j) x(i, j) = e.reduced(i, r + j);
    return x;
}

}  // namespace dynwork
