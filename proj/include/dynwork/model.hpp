#pragma once

// Factor-permuting polynomial self-maps of (P^1)^k over Q: exact iteration,
// pullback matrices, monomial section spaces and their pullbacks.

#include "dynwork/error.hpp"
#include "dynwork/matrix.hpp"
#include "dynwork/spectrum.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace dynwork {

/// Homogeneous form of degree d in (x, y); coeffs[i] multiplies x^i y^(d-i).
class BinaryForm {
public:
    BinaryForm() = default;
    BinaryForm(std::size_t degree, ZVector coeffs) : d_(degree), c_(std::move(coeffs)) {
        if (c_.size() != d_ + 1)
            throw PreconditionViolated("binary form of degree " + std::to_string(d_) + " needs " +
                                       std::to_string(d_ + 1) + " coefficients");
    }
    static BinaryForm x() { return BinaryForm(1, {Integer(0), Integer(1)}); }
    static BinaryForm y() { return BinaryForm(1, {Integer(1), Integer(0)}); }
    static BinaryForm constant(const Integer& c) { return BinaryForm(0, {c}); }

    std::size_t degree() const { return d_; }
    const ZVector& coeffs() const { return c_; }
    bool is_zero() const { return is_zero_vec(c_); }

    Integer evaluate(const Integer& x, const Integer& y) const {
        Integer acc = c_[d_], ypow = 1;
        for (std::size_t i = d_; i-- > 0;) {
            ypow *= y;
            acc = acc * x + c_[i] * ypow;
        }
        return acc;
    }

    friend BinaryForm operator*(const BinaryForm& a, const BinaryForm& b) {
        ZVector r(a.d_ + b.d_ + 1, Integer(0));
        for (std::size_t i = 0; i <= a.d_; ++i)
            for (std::size_t j = 0; j <= b.d_; ++j) r[i + j] += a.c_[i] * b.c_[j];
        return BinaryForm(a.d_ + b.d_, std::move(r));
    }
    friend BinaryForm operator+(const BinaryForm& a, const BinaryForm& b) {
        if (a.d_ != b.d_) throw DimensionMismatch("adding forms of different degree");
        ZVector r = a.c_;
        for (std::size_t i = 0; i < r.size(); ++i) r[i] += b.c_[i];
        return BinaryForm(a.d_, std::move(r));
    }
    friend BinaryForm operator*(const Integer& s, const BinaryForm& a) {
        ZVector r = a.c_;
        for (auto& v : r) v *= s;
        return BinaryForm(a.d_, std::move(r));
    }
    friend bool operator==(const BinaryForm&, const BinaryForm&) = default;

    BinaryForm pow(std::size_t e) const {
        BinaryForm r = constant(1);
        for (std::size_t i = 0; i < e; ++i) r = r * *this;
        return r;
    }

    /// This form with x -> p, y -> q (p, q of a common degree).
    BinaryForm substitute(const BinaryForm& p, const BinaryForm& q) const {
        if (p.d_ != q.d_) throw DimensionMismatch("substituted forms differ in degree");
        BinaryForm acc(d_ * p.d_, ZVector(d_ * p.d_ + 1, Integer(0)));
        for (std::size_t i = 0; i <= d_; ++i) {
            if (sgn(c_[i]) == 0) continue;
            acc = acc + c_[i] * (p.pow(i) * q.pow(d_ - i));
        }
        return acc;
    }

private:
    static bool is_zero_vec(const ZVector& v) {
        return std::all_of(v.begin(), v.end(), [](const Integer& z) { return sgn(z) == 0; });
    }
    std::size_t d_ = 0;
    ZVector c_{Integer(0)};
};

/// Homogeneous resultant of two forms of the same degree via the Sylvester
/// matrix; zero iff they share a root on P^1 (including [1:0]).
inline Integer resultant(const BinaryForm& f, const BinaryForm& g) {
    const std::size_t d = f.degree(), e = g.degree();
    const std::size_t n = d + e;
    if (n == 0) return 1;
    ZMatrix s(n, n);
    // Rows hold coefficients in descending x-power.
    for (std::size_t r = 0; r < e; ++r)
        for (std::size_t i = 0; i <= d; ++i) s(r, r + i) = f.coeffs()[d - i];
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t i = 0; i <= e; ++i) s(e + r, r + i) = g.coeffs()[e - i];
    return det(s);
}

/// Point of (P^1)^k; each factor is gcd-reduced with y > 0, or equals [1:0].
class ProjPoint {
public:
    using Coord = std::pair<Integer, Integer>;

    ProjPoint() = default;
    explicit ProjPoint(std::vector<Coord> coords) : c_(std::move(coords)) {
        for (auto& [x, y] : c_) normalize(x, y);
    }
    /// Affine shorthand: each factor a/1.
    static ProjPoint affine(const std::vector<long>& xs) {
        std::vector<Coord> c;
        for (long x : xs) c.emplace_back(Integer(x), Integer(1));
        return ProjPoint(std::move(c));
    }

    std::size_t size() const { return c_.size(); }
    const Coord& operator[](std::size_t i) const { return c_[i]; }
    const std::vector<Coord>& coords() const { return c_; }
    friend bool operator==(const ProjPoint&, const ProjPoint&) = default;

    /// Largest decimal digit count among the coordinates.
    std::size_t digits() const {
        std::size_t m = 1;
        for (const auto& [x, y] : c_) {
            m = std::max(m, mpz_sizeinbase(x.get_mpz_t(), 10));
            m = std::max(m, mpz_sizeinbase(y.get_mpz_t(), 10));
        }
        return m;
    }

    std::string to_string() const {
        std::string s = "(";
        for (std::size_t i = 0; i < c_.size(); ++i) {
            if (i) s += ",";
            s += "[" + c_[i].first.get_str() + ":" + c_[i].second.get_str() + "]";
        }
        return s + ")";
    }

private:
    static void normalize(Integer& x, Integer& y) {
        if (sgn(x) == 0 && sgn(y) == 0) throw PreconditionViolated("projective coordinates (0:0)");
        Integer g;
        mpz_gcd(g.get_mpz_t(), x.get_mpz_t(), y.get_mpz_t());
        mpz_divexact(x.get_mpz_t(), x.get_mpz_t(), g.get_mpz_t());
        mpz_divexact(y.get_mpz_t(), y.get_mpz_t(), g.get_mpz_t());
        if (sgn(y) < 0 || (sgn(y) == 0 && sgn(x) < 0)) {
            x = -x;
            y = -y;
        }
    }
    std::vector<Coord> c_;
};

/// Output factor i is [F_i : G_i] evaluated at input factor perm[i].
struct Component {
    std::size_t degree = 1;
    BinaryForm f, g;
};

class ModelSystem {
public:
    std::size_t k() const { return perm_.size(); }
    const std::vector<std::size_t>& perm() const { return perm_; }
    const std::vector<Component>& components() const { return comps_; }
    /// f^*H_i = d_i H_{perm(i)}: entry (perm(i), i) is d_i.
    const IntMatrix& pullback() const { return pullback_; }

    ProjPoint apply(const ProjPoint& p) const {
        if (p.size() != k()) throw DimensionMismatch("point has " + std::to_string(p.size()) + " factors, map has " + std::to_string(k()));
        std::vector<ProjPoint::Coord> out;
        out.reserve(k());
        for (std::size_t i = 0; i < k(); ++i) {
            const auto& [x, y] = p[perm_[i]];
            out.emplace_back(comps_[i].f.evaluate(x, y), comps_[i].g.evaluate(x, y));
        }
        return ProjPoint(std::move(out));
    }

    friend ModelSystem build_system(std::vector<std::size_t> perm, std::vector<Component> comps);

private:
    std::vector<std::size_t> perm_;
    std::vector<Component> comps_;
    IntMatrix pullback_;
};

/// Validates the permutation, degrees and per-factor morphism condition.
inline ModelSystem build_system(std::vector<std::size_t> perm, std::vector<Component> comps) {
    const std::size_t k = perm.size();
    if (k == 0) throw PreconditionViolated("model needs at least one factor");
    if (comps.size() != k) throw DimensionMismatch("perm and components differ in length");
    std::vector<std::size_t> sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < k; ++i)
        if (sorted[i] != i) throw PreconditionViolated("perm is not a permutation of the factors");
    ModelSystem m;
    m.pullback_ = IntMatrix(k, k);
    for (std::size_t i = 0; i < k; ++i) {
        const Component& c = comps[i];
        if (c.degree == 0) throw DegreeZero("factor " + std::to_string(i) + " has degree 0");
        if (c.f.degree() != c.degree || c.g.degree() != c.degree)
            throw PreconditionViolated("factor " + std::to_string(i) + ": form degree differs from declared degree");
        if (sgn(resultant(c.f, c.g)) == 0) throw NotAMorphism(i, "F and G share a root on P^1");
        m.pullback_(perm[i], i) = static_cast<unsigned long>(c.degree);
    }
    m.perm_ = std::move(perm);
    m.comps_ = std::move(comps);
    return m;
}

/// f o g.
inline ModelSystem compose(const ModelSystem& f, const ModelSystem& g) {
    if (f.k() != g.k()) throw DimensionMismatch("composing maps on different products");
    std::vector<std::size_t> perm(f.k());
    std::vector<Component> comps(f.k());
    for (std::size_t i = 0; i < f.k(); ++i) {
        const std::size_t mid = f.perm()[i];
        perm[i] = g.perm()[mid];
        const Component& outer = f.components()[i];
        const Component& inner = g.components()[mid];
        comps[i].degree = outer.degree * inner.degree;
        comps[i].f = outer.f.substitute(inner.f, inner.g);
        comps[i].g = outer.g.substitute(inner.f, inner.g);
    }
    return build_system(std::move(perm), std::move(comps));
}

inline constexpr std::size_t kDefaultDigitBudget = 200000;

struct Orbit {
    std::vector<ProjPoint> points;  // P, f(P), ..., as far as the budget allowed
    bool truncated = false;
};

/// Orbit prefix of length n+1. Stops early (truncated) as soon as a point
/// would carry a coordinate over digit_budget decimal digits.
inline Orbit iterate(const ModelSystem& f, const ProjPoint& p, std::size_t n,
                     std::size_t digit_budget = kDefaultDigitBudget) {
    if (digit_budget == 0) throw PreconditionViolated("digit budget must be positive");
    Orbit o;
    o.points.push_back(p);
    for (std::size_t i = 0; i < n; ++i) {
        ProjPoint q = f.apply(o.points.back());
        if (q.digits() > digit_budget) {
            o.truncated = true;
            break;
        }
        o.points.push_back(std::move(q));
    }
    return o;
}

// ---------------------------------------------------------------------------
// Divisor classes on (P^1)^k

using DivisorClass = std::vector<long>;  // multidegree (a_1..a_k)

inline bool is_nef(const DivisorClass& d) {
    return std::all_of(d.begin(), d.end(), [](long a) { return a >= 0; });
}
inline bool is_ample(const DivisorClass& d) {
    return std::all_of(d.begin(), d.end(), [](long a) { return a > 0; });
}

/// Monomials prod_j x_j^e_j y_j^(a_j - e_j), listed with factor 0 varying slowest.
struct SectionBasis {
    DivisorClass divisor;
    std::vector<std::vector<long>> exponents;
    std::size_t dimension() const { return exponents.size(); }
};

inline SectionBasis section_space(const DivisorClass& d) {
    SectionBasis b{d, {}};
    if (!is_nef(d)) return b;
    std::vector<long> e(d.size(), 0);
    for (;;) {
        b.exponents.push_back(e);
        std::size_t j = d.size();
        while (j > 0) {
            --j;
            if (e[j] < d[j]) {
                ++e[j];
                break;
            }
            e[j] = 0;
            if (j == 0) return b;
        }
        if (d.empty()) return b;
    }
}

inline std::size_t section_index(const DivisorClass& d, const std::vector<long>& e) {
    std::size_t idx = 0;
    for (std::size_t j = 0; j < d.size(); ++j) idx = idx * static_cast<std::size_t>(d[j] + 1) + static_cast<std::size_t>(e[j]);
    return idx;
}

enum class BaseLocus { Empty, Everything };

inline std::string to_string(BaseLocus b) { return b == BaseLocus::Empty ? "Empty" : "Everything"; }

/// Effective classes on (P^1)^k are basepoint free, so Bs(D) = B(D) is
/// empty or everything.
inline BaseLocus base_locus(const DivisorClass& d) { return is_nef(d) ? BaseLocus::Empty : BaseLocus::Everything; }

inline DivisorClass pullback_class(const ModelSystem& f, const DivisorClass& d) {
    if (d.size() != f.k()) throw DimensionMismatch("divisor class length differs from k");
    DivisorClass out(f.k(), 0);
    for (std::size_t i = 0; i < f.k(); ++i) out[f.perm()[i]] += d[i] * static_cast<long>(f.components()[i].degree);
    return out;
}

/// Column j is the pullback of basis monomial j of H^0(D), written in the
/// monomial basis of H^0(f^*D).
inline ZMatrix substitution_matrix(const ModelSystem& f, const DivisorClass& d) {
    const SectionBasis src = section_space(d);
    const DivisorClass pd = pullback_class(f, d);
    const SectionBasis dst = section_space(pd);
    ZMatrix m(dst.dimension(), src.dimension());
    const std::size_t k = f.k();
    for (std::size_t col = 0; col < src.dimension(); ++col) {
        // Image factor by factor, indexed by input factor.
        std::vector<BinaryForm> parts(k);
        for (std::size_t i = 0; i < k; ++i) {
            const auto& c = f.components()[i];
            const long e = src.exponents[col][i];
            parts[f.perm()[i]] = c.f.pow(static_cast<std::size_t>(e)) * c.g.pow(static_cast<std::size_t>(d[i] - e));
        }
        // Tensor the factors together.
        std::vector<std::pair<std::vector<long>, Integer>> terms{{{}, Integer(1)}};
        for (std::size_t j = 0; j < k; ++j) {
            std::vector<std::pair<std::vector<long>, Integer>> next;
            for (const auto& [ex, coeff] : terms)
                for (std::size_t t = 0; t < parts[j].coeffs().size(); ++t) {
                    if (sgn(parts[j].coeffs()[t]) == 0) continue;
                    auto ex2 = ex;
                    ex2.push_back(static_cast<long>(t));
                    next.emplace_back(std::move(ex2), coeff * parts[j].coeffs()[t]);
                }
            terms = std::move(next);
        }
        for (const auto& [ex, coeff] : terms) m(section_index(pd, ex), col) += coeff;
    }
    return m;
}

/// Coefficients of f^*s in the basis of H^0(f^*D).
inline ZVector pullback_section(const ModelSystem& f, const DivisorClass& d, const ZVector& s) {
    const ZMatrix m = substitution_matrix(f, d);
    if (s.size() != m.cols()) throw DimensionMismatch("section has " + std::to_string(s.size()) + " coefficients, expected " + std::to_string(m.cols()));
    return m * s;
}

struct RelativeDegreeReport {
    RationalInterval lambda_full, lambda_subset, lambda_complement;
    bool char_poly_factors = false;  // exact: chi(M) = chi(M_S) chi(M_rest)
    bool consistent = false;         // lambda_full meets max(lambda_S, lambda_rest)
};

/// Checks lambda_1(f) = max(lambda_1 on the S-factors, lambda_1 on the rest)
/// for a split of the factors preserved by the permutation.
inline RelativeDegreeReport relative_degree_check(const ModelSystem& f, const std::vector<std::size_t>& subset,
                                                  const Rational& width = default_width_budget()) {
    const std::size_t k = f.k();
    std::vector<bool> in(k, false);
    for (auto s : subset) {
        if (s >= k) throw PreconditionViolated("factor index out of range");
        in[s] = true;
    }
    std::vector<std::size_t> a, b;
    for (std::size_t i = 0; i < k; ++i) (in[i] ? a : b).push_back(i);
    if (a.empty() || b.empty()) throw PreconditionViolated("subset must be a nonempty proper set of factors");
    for (std::size_t i = 0; i < k; ++i)
        if (in[i] != in[f.perm()[i]]) throw NotEquivariant("perm moves factor " + std::to_string(i) + " across the split");
    const IntMatrix& m = f.pullback();
    auto block = [&](const std::vector<std::size_t>& idx) {
        IntMatrix s(idx.size(), idx.size());
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::size_t c = 0; c < idx.size(); ++c) s(r, c) = m(idx[r], idx[c]);
        return s;
    };
    const IntMatrix ma = block(a), mb = block(b);
    RelativeDegreeReport rep;
    rep.lambda_full = rational_spectrum(m, width).spectral_radius;
    rep.lambda_subset = rational_spectrum(ma, width).spectral_radius;
    rep.lambda_complement = rational_spectrum(mb, width).spectral_radius;
    rep.char_poly_factors = char_poly(m) == char_poly(ma) * char_poly(mb);
    const RationalInterval mx{std::max(rep.lambda_subset.lo, rep.lambda_complement.lo),
                              std::max(rep.lambda_subset.hi, rep.lambda_complement.hi)};
    rep.consistent = rep.char_poly_factors && rep.lambda_full.intersects(mx);
    return rep;
}

/// All points of P^1(Q) with max(|x|,|y|) <= bound, in normal form.
inline std::vector<ProjPoint::Coord> p1_points_of_height(long bound) {
    std::vector<ProjPoint::Coord> out;
    if (bound < 1) return out;
    out.emplace_back(Integer(1), Integer(0));
    for (long y = 1; y <= bound; ++y)
        for (long x = -bound; x <= bound; ++x)
            if (std::gcd(x, y) == 1) out.emplace_back(Integer(x), Integer(y));
    return out;
}

}  // namespace dynwork
