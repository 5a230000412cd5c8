#pragma once

// Weil and canonical heights on the (P^1)^k model family, the Jordan-block
// recursion for generalized eigenclasses, arithmetic-degree estimates, point
// classification by the smallest nonvanishing eigenclass height, and surveys
// of the small-height set G.

#include "dynwork/bigreal.hpp"
#include "dynwork/error.hpp"
#include "dynwork/matrix.hpp"
#include "dynwork/model.hpp"
#include "dynwork/spectrum.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace dynwork {

enum class Provenance { Exact, LimitEstimate };

inline std::string to_string(Provenance p) { return p == Provenance::Exact ? "exact" : "limit"; }

struct HeightValue {
    Real value;
    Provenance provenance = Provenance::Exact;
    std::size_t n_used = 0;
    Real residual;                     // Cauchy-tail estimate of |value - limit|
    std::optional<Real> functional_residual;  // |h(fP) - lambda h(P)| at the depth used
    bool budget_exhausted = false;
};

/// log max(|x|, |y|) for a reduced pair.
inline Real coordinate_height(const ProjPoint::Coord& c, mpfr_prec_t bits = kDefaultPrecisionBits) {
    const Integer m = std::max(abs(c.first), abs(c.second));
    if (m == 1) return Real(bits);
    return log_abs(m, bits);
}

/// h_D(P) = sum_i a_i log max(|x_i|, |y_i|).
inline HeightValue height_for_class(const DivisorClass& d, const ProjPoint& p, mpfr_prec_t bits = kDefaultPrecisionBits) {
    if (d.size() != p.size()) throw DimensionMismatch("divisor class and point differ in number of factors");
    HeightValue h{Real(bits), Provenance::Exact, 0, Real(bits), std::nullopt, false};
    for (std::size_t i = 0; i < d.size(); ++i)
        if (d[i] != 0) h.value += Real(d[i], bits) * coordinate_height(p[i], bits);
    return h;
}

/// Height for the class (1, ..., 1).
inline HeightValue weil_height(const ProjPoint& p, mpfr_prec_t bits = kDefaultPrecisionBits) {
    return height_for_class(DivisorClass(p.size(), 1), p, bits);
}

inline Real h_plus(const Real& h) { return max(h, Real(1L, h.precision())); }

/// lambda with f^*D = lambda D, if D is an eigenclass.
inline std::optional<Rational> eigenvalue_of_class(const ModelSystem& f, const DivisorClass& d) {
    const DivisorClass img = pullback_class(f, d);
    ZVector a(d.begin(), d.end()), b(img.begin(), img.end());
    Rational lambda;
    if (!proportional(b, a, lambda)) return std::nullopt;
    return lambda;
}

/// Orbit that is extended only as far as callers look.
class LazyOrbit {
public:
    LazyOrbit(const ModelSystem& f, ProjPoint p, std::size_t digit_budget = kDefaultDigitBudget)
        : f_(&f), budget_(digit_budget) {
        pts_.push_back(std::move(p));
    }
    /// Resumes from a known orbit prefix (e.g. from a cache); prefix[0] is P.
    LazyOrbit(const ModelSystem& f, std::vector<ProjPoint> prefix, std::size_t digit_budget)
        : f_(&f), budget_(digit_budget), pts_(std::move(prefix)) {
        if (pts_.empty()) throw PreconditionViolated("orbit prefix is empty");
    }
    /// f^n(P), or nullptr once the digit budget stops the orbit.
    const ProjPoint* at(std::size_t n) {
        while (pts_.size() <= n && !truncated_) {
            ProjPoint q = f_->apply(pts_.back());
            if (q.digits() > budget_) {
                truncated_ = true;
                break;
            }
            pts_.push_back(std::move(q));
        }
        return n < pts_.size() ? &pts_[n] : nullptr;
    }
    bool truncated() const { return truncated_; }
    std::size_t computed() const { return pts_.size(); }
    const std::vector<ProjPoint>& points() const { return pts_; }
    const ModelSystem& system() const { return *f_; }

private:
    const ModelSystem* f_;
    std::size_t budget_;
    std::vector<ProjPoint> pts_;
    bool truncated_ = false;
};

struct CanonicalOptions {
    std::size_t n_max = 15;
    double tol = 1e-12;  // stop once the tail estimate drops below this (n >= 2)
    std::size_t digit_budget = kDefaultDigitBudget;
    mpfr_prec_t bits = kDefaultPrecisionBits;
};

/// lambda^-n h_D(f^n P) along an orbit, for an eigenclass with |lambda| > 1.
inline HeightValue canonical_height_on(LazyOrbit& orbit, const DivisorClass& d, const Rational& lambda,
                                       const CanonicalOptions& opt = {}) {
    if (abs(lambda) <= 1) throw NotAnEigenclass("eigenvalue " + rational_string(lambda) + " has modulus <= 1");
    const Real lam(lambda, opt.bits);
    const Real tail = Real(1L, opt.bits) / (abs(lam) - Real(1L, opt.bits));
    HeightValue out{Real(opt.bits), Provenance::LimitEstimate, 0, Real(opt.bits), std::nullopt, false};
    Real scale(1L, opt.bits), prev(opt.bits);
    for (std::size_t n = 0; n <= opt.n_max; ++n) {
        const ProjPoint* q = orbit.at(n);
        if (!q) {
            out.budget_exhausted = true;
            break;
        }
        const Real v = height_for_class(d, *q, opt.bits).value / scale;
        out.value = v;
        out.n_used = n;
        if (n >= 1) {
            const Real diff = abs(v - prev);
            out.residual = diff * tail;
            out.functional_residual = abs(lam) * diff;
            if (n >= 2 && out.residual.to_double() <= opt.tol) break;
        }
        prev = v;
        scale *= lam;
    }
    if (out.n_used == 0) out.residual = Real(opt.bits);
    return out;
}

inline HeightValue canonical_height(const ModelSystem& f, const DivisorClass& d, const ProjPoint& p,
                                    const CanonicalOptions& opt = {}) {
    const auto lambda = eigenvalue_of_class(f, d);
    if (!lambda || std::all_of(d.begin(), d.end(), [](long a) { return a == 0; }))
        throw NotAnEigenclass("class is not an eigenvector of the pullback");
    LazyOrbit orbit(f, p, opt.digit_budget);
    return canonical_height_on(orbit, d, *lambda, opt);
}

// ---------------------------------------------------------------------------
// Jordan blocks

/// h_{D_k}(f^n x) for block member k.
using HeightEvaluator = std::function<Real(std::size_t k, std::size_t n)>;

struct JordanOptions {
    std::size_t n = 60;
    mpfr_prec_t bits = kDefaultPrecisionBits;
    double divergence_tol = 1e-6;
};

struct JordanResult {
    std::vector<HeightValue> heights;  // hat h_{D_0..D_{m-1}}(x)
    std::vector<Real> transformation_residuals;  // |h_i(fx) - lambda h_i(x) - h_{i-1}(x)|
};

namespace detail {

// Recursion at depth n for the orbit starting at f^shift(x).
inline std::vector<Real> jordan_depth(const Rational& lambda, std::size_t m, const HeightEvaluator& eval, std::size_t n,
                                      std::size_t shift, mpfr_prec_t bits) {
    const Real lam(lambda, bits);
    const Real lam_n = pow(lam, static_cast<unsigned long>(n));
    std::vector<Real> est;
    for (std::size_t k = 0; k < m; ++k) {
        Real v = eval(k, n + shift) / lam_n;
        Real lam_i(1L, bits);
        for (std::size_t i = 1; i <= k; ++i) {
            lam_i *= lam;
            Integer binom;
            mpz_bin_uiui(binom.get_mpz_t(), n, i);
            v -= Real(binom, bits) * est[k - i] / lam_i;
        }
        est.push_back(std::move(v));
    }
    return est;
}

}  // namespace detail

/// Canonical heights of a Jordan block by the binomial-corrected recursion
/// hat h_k = lambda^-n h_k(f^n x) - sum_{i=1..k} C(n,i) lambda^-i hat h_{k-i}.
inline JordanResult jordan_heights(const Rational& lambda, std::size_t m, const HeightEvaluator& eval,
                                   const JordanOptions& opt = {}) {
    if (abs(lambda) <= 1) throw PreconditionViolated("Jordan block eigenvalue must have modulus > 1");
    if (m == 0) throw PreconditionViolated("Jordan block size must be positive");
    if (opt.n < 3) throw PreconditionViolated("Jordan recursion needs depth >= 3");
    const auto e0 = detail::jordan_depth(lambda, m, eval, opt.n, 0, opt.bits);
    const auto e1 = detail::jordan_depth(lambda, m, eval, opt.n - 1, 0, opt.bits);
    const auto e2 = detail::jordan_depth(lambda, m, eval, opt.n - 2, 0, opt.bits);
    const auto shifted = detail::jordan_depth(lambda, m, eval, opt.n, 1, opt.bits);
    const Real lam(lambda, opt.bits);
    JordanResult res;
    for (std::size_t k = 0; k < m; ++k) {
        const Real d1 = abs(e0[k] - e1[k]), d2 = abs(e1[k] - e2[k]);
        const double scale = std::max(1.0, std::abs(e0[k].to_double()));
        if (d1.to_double() > opt.divergence_tol * scale && d1 > d2)
            throw DivergenceDetected("block member " + std::to_string(k) + ": successive estimates differ by " +
                                     d1.to_string(6) + " and are not contracting");
        HeightValue h{e0[k], Provenance::LimitEstimate, opt.n, d1, std::nullopt, false};
        Real law = shifted[k] - lam * e0[k];
        if (k > 0) law -= e0[k - 1];
        h.functional_residual = abs(law);
        res.transformation_residuals.push_back(abs(law));
        res.heights.push_back(std::move(h));
    }
    return res;
}

/// Synthetic height system for a Jordan block: planted canonical heights
/// hat h_i, and h_k(f^n x) = sum_j C(n,j) lambda^(n-j) hat h_{k-j} + noise,
/// which is exactly what the transformation law forces up to O(1).
class PlantedJordanBlock {
public:
    PlantedJordanBlock(const Rational& lambda, std::size_t m, std::uint64_t seed, double noise, std::size_t n_max,
                       mpfr_prec_t bits = kDefaultPrecisionBits)
        : lambda_(lambda), m_(m), bits_(bits) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> value(0.5, 5.0), eps(-noise, noise);
        for (std::size_t i = 0; i < m; ++i) planted_.emplace_back(value(rng), bits);
        noise_.assign(m, std::vector<double>(n_max + 2, 0.0));
        if (noise > 0)
            for (auto& row : noise_)
                for (auto& e : row) e = eps(rng);
    }

    const std::vector<Real>& planted() const { return planted_; }
    const Rational& lambda() const { return lambda_; }
    std::size_t size() const { return m_; }

    /// Exact canonical height of member k at f^n(x) from the planted values.
    Real canonical_at(std::size_t k, std::size_t n) const {
        const Real lam(lambda_, bits_);
        Real acc(bits_);
        for (std::size_t j = 0; j <= std::min(k, n); ++j) {
            Integer binom;
            mpz_bin_uiui(binom.get_mpz_t(), n, j);
            acc += Real(binom, bits_) * pow(lam, static_cast<unsigned long>(n - j)) * planted_[k - j];
        }
        return acc;
    }

    Real height(std::size_t k, std::size_t n) const {
        Real h = canonical_at(k, n);
        if (n < noise_[k].size()) h += Real(noise_[k][n], bits_);
        return h;
    }

    HeightEvaluator evaluator() const {
        return [this](std::size_t k, std::size_t n) { return height(k, n); };
    }

private:
    Rational lambda_;
    std::size_t m_;
    mpfr_prec_t bits_;
    std::vector<Real> planted_;
    std::vector<std::vector<double>> noise_;
};

// ---------------------------------------------------------------------------
// Arithmetic degree

struct DegreeOptions {
    std::size_t n_max = 20;
    std::size_t digit_budget = kDefaultDigitBudget;
    mpfr_prec_t bits = kDefaultPrecisionBits;
    DivisorClass h;  // ample class; empty means (1, ..., 1)
    double agreement_tol = 0.05;
};

struct DegreeEstimate {
    std::vector<Real> heights;  // h(f^n P), n = 0..n_used
    std::size_t n_used = 0;
    std::optional<Real> root;   // h+(f^n P)^(1/n)
    std::optional<Real> ratio;  // h+(f^n P) / h+(f^(n-1) P)
    bool truncated = false;
    bool agree = false;
};

inline DegreeEstimate arithmetic_degree(LazyOrbit& orbit, const DegreeOptions& opt = {}) {
    const DivisorClass h = opt.h.empty() ? DivisorClass(orbit.system().k(), 1) : opt.h;
    if (!is_ample(h)) throw PreconditionViolated("arithmetic degree needs an ample class");
    DegreeEstimate est;
    for (std::size_t n = 0; n <= opt.n_max; ++n) {
        const ProjPoint* q = orbit.at(n);
        if (!q) {
            est.truncated = true;
            break;
        }
        est.heights.push_back(height_for_class(h, *q, opt.bits).value);
    }
    est.n_used = est.heights.size() - 1;
    if (est.n_used >= 1) {
        const Real top = h_plus(est.heights.back());
        est.root = pow(top, Real(1L, opt.bits) / Real(static_cast<long>(est.n_used), opt.bits));
        est.ratio = top / h_plus(est.heights[est.n_used - 1]);
        est.agree = std::abs((*est.root - *est.ratio).to_double()) <= opt.agreement_tol;
    }
    return est;
}

inline DegreeEstimate arithmetic_degree(const ModelSystem& f, const ProjPoint& p, const DegreeOptions& opt = {}) {
    LazyOrbit orbit(f, p, opt.digit_budget);
    return arithmetic_degree(orbit, opt);
}

// ---------------------------------------------------------------------------
// Classification

struct Eigenclass {
    Rational lambda;
    ZVector divisor;  // integer multiple of the projection of H to this eigenspace
};

/// Eigenspace components of H for a pullback diagonalizable over Q, ordered
/// by descending |lambda| (positive before negative on ties). Their span is V_H.
inline std::vector<Eigenclass> eigenclass_decomposition(const IntMatrix& m, const ZVector& h) {
    const Spectrum spec = rational_spectrum(m);
    if (!spec.all_rational()) throw PreconditionViolated("pullback has irrational eigenvalues");
    std::vector<std::pair<Rational, std::vector<ZVector>>> spaces;
    std::vector<ZVector> cols;
    for (const auto& e : spec.entries) {
        auto basis = eigenspace(m, e.value);
        if (basis.size() != e.algebraic_multiplicity) throw PreconditionViolated("pullback is not diagonalizable over Q");
        cols.insert(cols.end(), basis.begin(), basis.end());
        spaces.emplace_back(e.value, std::move(basis));
    }
    const std::size_t n = m.rows();
    QMatrix aug(n, n + 1);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) aug(i, j) = cols[j][i];
    for (std::size_t i = 0; i < n; ++i) aug(i, n) = h[i];
    const RowEchelon r = rref(aug);
    std::vector<Eigenclass> out;
    std::size_t col = 0;
    for (const auto& [lambda, basis] : spaces) {
        QVector proj(n, Rational(0));
        for (std::size_t b = 0; b < basis.size(); ++b, ++col)
            for (std::size_t i = 0; i < n; ++i) proj[i] += r.reduced(col, n) * basis[b][i];
        if (std::all_of(proj.begin(), proj.end(), [](const Rational& q) { return sgn(q) == 0; })) continue;
        out.push_back({lambda, primitive(proj)});
    }
    std::stable_sort(out.begin(), out.end(), [](const Eigenclass& a, const Eigenclass& b) {
        const Rational aa = abs(a.lambda), bb = abs(b.lambda);
        if (aa != bb) return aa > bb;
        return a.lambda > b.lambda;
    });
    return out;
}

struct ClassifyOptions {
    DivisorClass h;        // ample class; empty means (1, ..., 1)
    double tau = 1e-8;     // zero threshold for canonical heights
    CanonicalOptions canonical;
    bool cross_check = true;
    DegreeOptions degree;
};

struct BlockHeight {
    std::string label;
    Rational lambda;
    ZVector divisor;
    HeightValue height;
};

struct ClassificationRecord {
    ProjPoint point;
    std::vector<BlockHeight> block_heights;     // eigenclasses with |lambda| > 1
    Rational alpha = 1;
    bool certain = true;                        // false when a height fell in the ambiguity band
    std::optional<std::size_t> smallest_nonzero_index;
    bool all_blocks_zero = true;                // every block height <= tau
    bool top_blocks_zero = true;                // blocks with |lambda| = lambda_1 all <= tau
    std::optional<DegreeEstimate> estimate;
    std::optional<bool> consistent;             // |alpha - ratio estimate| <= 0.05 when certain
};

/// alpha_f(P) from the smallest index whose eigenclass canonical height is
/// nonzero, or 1 when all vanish. Heights inside (tau/10, 10 tau) make the
/// record uncertain instead of being rounded either way.
inline ClassificationRecord classify_point(LazyOrbit& orbit, const ClassifyOptions& opt = {},
                                           const std::vector<Eigenclass>* classes = nullptr) {
    const ModelSystem& f = orbit.system();
    const ProjPoint p = orbit.points().front();
    const DivisorClass h = opt.h.empty() ? DivisorClass(f.k(), 1) : opt.h;
    if (!is_ample(h)) throw PreconditionViolated("classification needs an ample class");
    std::vector<Eigenclass> own;
    if (!classes) {
        own = eigenclass_decomposition(f.pullback(), ZVector(h.begin(), h.end()));
        classes = &own;
    }
    ClassificationRecord rec{p, {}, Rational(1), true, std::nullopt, true, true, std::nullopt, std::nullopt};
    const Rational top = classes->empty() ? Rational(1) : abs(classes->front().lambda);
    for (const auto& ec : *classes) {
        if (abs(ec.lambda) <= 1) continue;
        DivisorClass d;
        for (const auto& z : ec.divisor) d.push_back(z.get_si());
        BlockHeight b{"lambda=" + rational_string(ec.lambda), ec.lambda, ec.divisor,
                      canonical_height_on(orbit, d, ec.lambda, opt.canonical)};
        const double v = std::abs(b.height.value.to_double());
        if (v > opt.tau / 10 && v < opt.tau * 10) rec.certain = false;
        if (v > opt.tau) {
            rec.all_blocks_zero = false;
            if (abs(ec.lambda) == top) rec.top_blocks_zero = false;
            if (!rec.smallest_nonzero_index) {
                rec.smallest_nonzero_index = rec.block_heights.size();
                rec.alpha = abs(ec.lambda);
            }
        }
        rec.block_heights.push_back(std::move(b));
    }
    if (opt.cross_check) {
        DegreeOptions dopt = opt.degree;
        if (dopt.h.empty()) dopt.h = h;
        rec.estimate = arithmetic_degree(orbit, dopt);
        if (rec.certain && rec.estimate->ratio)
            rec.consistent = std::abs(rec.estimate->ratio->to_double() - rec.alpha.get_d()) <= 0.05;
    }
    return rec;
}

inline ClassificationRecord classify_point(const ModelSystem& f, const ProjPoint& p, const ClassifyOptions& opt = {},
                                           const std::vector<Eigenclass>* classes = nullptr) {
    const std::size_t budget = opt.cross_check ? std::max(opt.canonical.digit_budget, opt.degree.digit_budget)
                                               : opt.canonical.digit_budget;
    LazyOrbit orbit(f, p, budget);
    return classify_point(orbit, opt, classes);
}

/// lambda_1(f) as the certified spectral radius interval of the pullback.
inline RationalInterval dynamical_degree(const ModelSystem& f) { return rational_spectrum(f.pullback()).spectral_radius; }

// ---------------------------------------------------------------------------
// Surveys of G_{f,H}

struct SurveyOptions {
    long bound = 10;               // factorwise max(|x|,|y|) <= bound
    std::size_t sample_size = 0;   // 0: every point
    std::uint64_t seed = 1;
    ClassifyOptions classify{};
};

struct SurveyRow {
    ProjPoint point;
    double weil_height = 0;
    std::vector<double> block_heights;
    Rational alpha;
    bool in_g = false;
    bool certain = true;
};

struct SurveyReport {
    Rational lambda1;
    std::size_t space_size = 0;  // points of the box
    std::size_t examined = 0;
    std::size_t g_count = 0;     // all block heights zero (alpha = 1)
    std::size_t b_count = 0;
    std::size_t top_zero_count = 0;  // top-modulus block heights zero
    std::size_t alpha_top_count = 0;
    std::size_t uncertain = 0;
    std::size_t invariance_violations = 0;
    double density_ratio = 0;    // b_count / examined
    double alpha_top_fraction = 0;
    bool sampled = false;
    std::vector<SurveyRow> rows;
};

/// Classifies every point of the height box (or a seeded uniform sample of
/// it), splits it into G and its complement, and checks f(G) within G.
inline SurveyReport survey_small_set(const ModelSystem& f, const SurveyOptions& opt = {}) {
    const DivisorClass h = opt.classify.h.empty() ? DivisorClass(f.k(), 1) : opt.classify.h;
    const auto classes = eigenclass_decomposition(f.pullback(), ZVector(h.begin(), h.end()));
    const auto factor_points = p1_points_of_height(opt.bound);
    const std::size_t per = factor_points.size(), k = f.k();
    std::size_t total = 1;
    for (std::size_t i = 0; i < k; ++i) {
        if (total > (std::size_t{1} << 62) / std::max<std::size_t>(per, 1)) throw CombinatorialBudget("survey box too large");
        total *= per;
    }
    std::vector<std::size_t> indices;
    SurveyReport rep;
    rep.space_size = total;
    if (opt.sample_size == 0 || opt.sample_size >= total) {
        indices.resize(total);
        for (std::size_t i = 0; i < total; ++i) indices[i] = i;
    } else {
        // Floyd's algorithm, then sorted for a stable row order.
        std::mt19937_64 rng(opt.seed);
        std::set<std::size_t> chosen;
        for (std::size_t j = total - opt.sample_size; j < total; ++j) {
            std::uniform_int_distribution<std::size_t> pick(0, j);
            const std::size_t t = pick(rng);
            if (!chosen.insert(t).second) chosen.insert(j);
        }
        indices.assign(chosen.begin(), chosen.end());
        rep.sampled = true;
    }
    rep.lambda1 = classes.empty() ? Rational(1) : std::max(Rational(1), Rational(abs(classes.front().lambda)));
    ClassifyOptions copt = opt.classify;
    copt.h = h;
    copt.cross_check = false;
    for (std::size_t idx : indices) {
        std::vector<ProjPoint::Coord> coords(k);
        std::size_t rest = idx;
        for (std::size_t j = k; j-- > 0;) {
            coords[j] = factor_points[rest % per];
            rest /= per;
        }
        const ProjPoint p(std::move(coords));
        const auto rec = classify_point(f, p, copt, &classes);
        SurveyRow row{p, weil_height(p).value.to_double(), {}, rec.alpha, rec.all_blocks_zero, rec.certain};
        for (const auto& b : rec.block_heights) row.block_heights.push_back(b.height.value.to_double());
        ++rep.examined;
        if (!rec.certain) ++rep.uncertain;
        if (rec.top_blocks_zero) ++rep.top_zero_count;
        if (rec.alpha == rep.lambda1 && rep.lambda1 > 1) ++rep.alpha_top_count;
        if (rec.all_blocks_zero) {
            ++rep.g_count;
            ClassifyOptions img = copt;
            img.cross_check = false;
            if (!classify_point(f, f.apply(p), img, &classes).all_blocks_zero) ++rep.invariance_violations;
        } else {
            ++rep.b_count;
        }
        rep.rows.push_back(std::move(row));
    }
    if (rep.examined) {
        rep.density_ratio = static_cast<double>(rep.b_count) / static_cast<double>(rep.examined);
        rep.alpha_top_fraction = static_cast<double>(rep.alpha_top_count) / static_cast<double>(rep.examined);
    }
    return rep;
}

/// sup |hat h_D - h_D| over the given points, for an eigenclass D.
inline Real height_difference_bound(const ModelSystem& f, const DivisorClass& d, const std::vector<ProjPoint>& pts,
                                    const CanonicalOptions& opt = {}) {
    Real sup(opt.bits);
    for (const auto& p : pts) {
        const Real diff = abs(canonical_height(f, d, p, opt).value - height_for_class(d, p, opt.bits).value);
        sup = max(sup, diff);
    }
    return sup;
}

}  // namespace dynwork
