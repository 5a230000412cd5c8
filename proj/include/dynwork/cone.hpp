#pragma once

// Rational polyhedral cones given by primitive integer rays, with facets from
// the double description method, and the invariance and dilation criteria for
// integer matrices acting on them. All tests are exact.

#include "dynwork/error.hpp"
#include "dynwork/matrix.hpp"
#include "dynwork/spectrum.hpp"

#include <algorithm>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace dynwork {

inline constexpr std::size_t kMaxConeDimension = 8;
inline constexpr std::size_t kMaxConeRays = 64;

/// Divides out the gcd of the entries; direction (and so sign) is kept.
inline ZVector primitive_ray(const ZVector& v) {
    Integer g = 0;
    for (const auto& x : v) mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), x.get_mpz_t());
    if (g == 0) throw ZeroVector("generator is the zero vector");
    ZVector out = v;
    for (auto& x : out) mpz_divexact(x.get_mpz_t(), x.get_mpz_t(), g.get_mpz_t());
    return out;
}

/// Extreme rays of the pointed cone { u : A u >= 0 } by the double description
/// method with the combinatorial adjacency test. A must have full column rank.
inline std::vector<ZVector> extreme_rays(const ZMatrix& a) {
    const std::size_t rows = a.rows(), k = a.cols();
    if (k == 0) return {};
    if (rank(a) != k) throw PreconditionViolated("constraint system does not define a pointed cone");

    struct Ray {
        ZVector v;
        std::vector<bool> tight;
    };
    // Initial simplicial cone from k independent constraint rows.
    std::vector<std::size_t> basis_rows;
    for (std::size_t i = 0; i < rows && basis_rows.size() < k; ++i) {
        std::vector<ZVector> trial;
        for (auto r : basis_rows) trial.push_back(a.row(r));
        trial.push_back(a.row(i));
        if (rank(ZMatrix::from_rows(trial)) == trial.size()) basis_rows.push_back(i);
    }
    QMatrix sub(k, 2 * k);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) sub(i, j) = a(basis_rows[i], j);
        sub(i, k + i) = 1;
    }
    const RowEchelon inv = rref(sub);
    std::vector<Ray> rays;
    std::vector<bool> processed(rows, false);
    for (auto r : basis_rows) processed[r] = true;
    for (std::size_t j = 0; j < k; ++j) {
        QVector col(k);
        for (std::size_t i = 0; i < k; ++i) col[i] = inv.reduced(i, k + j);
        Ray ray{primitive(col), std::vector<bool>(rows, false)};
        for (std::size_t t = 0; t < k; ++t)
            if (t != j) ray.tight[basis_rows[t]] = true;
        rays.push_back(std::move(ray));
    }

    for (std::size_t row = 0; row < rows; ++row) {
        if (processed[row]) continue;
        const ZVector arow = a.row(row);
        std::vector<Integer> val(rays.size());
        std::vector<std::size_t> plus, minus, zero;
        for (std::size_t i = 0; i < rays.size(); ++i) {
            val[i] = dot(arow, rays[i].v);
            const int s = sgn(val[i]);
            (s > 0 ? plus : (s < 0 ? minus : zero)).push_back(i);
        }
        std::vector<Ray> next;
        for (auto i : plus) next.push_back(rays[i]);
        for (auto i : zero) {
            next.push_back(rays[i]);
            next.back().tight[row] = true;
        }
        for (auto p : plus) {
            for (auto n : minus) {
                std::vector<bool> common(rows, false);
                std::size_t count = 0;
                for (std::size_t t = 0; t < rows; ++t)
                    if (processed[t] && rays[p].tight[t] && rays[n].tight[t]) {
                        common[t] = true;
                        ++count;
                    }
                if (count + 2 < k) continue;
                bool adjacent = true;
                for (std::size_t o = 0; o < rays.size() && adjacent; ++o) {
                    if (o == p || o == n) continue;
                    bool superset = true;
                    for (std::size_t t = 0; t < rows && superset; ++t)
                        if (common[t] && !rays[o].tight[t]) superset = false;
                    if (superset) adjacent = false;
                }
                if (!adjacent) continue;
                ZVector nv(k);
                for (std::size_t c = 0; c < k; ++c) nv[c] = val[p] * rays[n].v[c] - val[n] * rays[p].v[c];
                Ray ray{primitive_ray(nv), common};
                ray.tight[row] = true;
                next.push_back(std::move(ray));
            }
        }
        processed[row] = true;
        rays = std::move(next);
    }
    std::vector<ZVector> out;
    for (auto& r : rays) out.push_back(std::move(r.v));
    std::sort(out.begin(), out.end());
    return out;
}

/// Finitely generated cone in Q^n. Rays are primitive, pairwise
/// non-proportional and extremal; facets are inward normals lying in the
/// linear span of the cone, computed once at construction.
class RationalCone {
public:
    std::size_t ambient_dim() const { return dim_; }
    const std::vector<ZVector>& rays() const { return rays_; }
    const std::vector<ZVector>& facets() const { return facets_; }
    std::size_t span_dim() const { return span_.size(); }
    bool is_pointed() const { return pointed_; }
    bool is_full_dimensional() const { return span_.size() == dim_; }
    bool is_proper() const { return pointed_ && is_full_dimensional(); }

    bool in_span(const ZVector& x) const {
        if (x.size() != dim_) throw DimensionMismatch("vector length differs from cone dimension");
        std::vector<ZVector> cols = span_;
        cols.push_back(x);
        return rank(ZMatrix::from_columns(cols, dim_)) == span_.size();
    }
    bool contains(const ZVector& x) const {
        if (!in_span(x)) return false;
        return std::all_of(facets_.begin(), facets_.end(), [&](const ZVector& f) { return sgn(dot(f, x)) >= 0; });
    }
    /// Strict positivity on every facet; only meaningful for full-dimensional cones.
    bool contains_in_interior(const ZVector& x) const {
        if (!is_full_dimensional() || x.size() != dim_) return false;
        return std::all_of(facets_.begin(), facets_.end(), [&](const ZVector& f) { return sgn(dot(f, x)) > 0; });
    }
    /// Indices of facets containing x.
    std::vector<std::size_t> tight_facets(const ZVector& x) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < facets_.size(); ++i)
            if (sgn(dot(facets_[i], x)) == 0) out.push_back(i);
        return out;
    }
    std::size_t rays_on_facet(std::size_t facet) const {
        return static_cast<std::size_t>(std::count_if(rays_.begin(), rays_.end(),
                                                      [&](const ZVector& r) { return sgn(dot(facets_[facet], r)) == 0; }));
    }
    std::optional<std::size_t> index_of_ray(const ZVector& direction) const {
        for (std::size_t i = 0; i < rays_.size(); ++i) {
            Rational c;
            if (proportional(direction, rays_[i], c) && sgn(c) > 0) return i;
        }
        return std::nullopt;
    }

    friend RationalCone canonicalize(const std::vector<ZVector>& generators);

private:
    std::size_t dim_ = 0;
    std::vector<ZVector> rays_;
    std::vector<ZVector> facets_;
    std::vector<ZVector> span_;
    bool pointed_ = false;
};

namespace detail {

inline std::vector<ZVector> independent_subset(const std::vector<ZVector>& vs, std::size_t n) {
    std::vector<ZVector> basis;
    for (const auto& v : vs) {
        std::vector<ZVector> trial = basis;
        trial.push_back(v);
        if (rank(ZMatrix::from_columns(trial, n)) == trial.size()) basis.push_back(v);
        if (basis.size() == n) break;
    }
    return basis;
}

// Facet normals of cone(gens) inside span(basis).
inline std::vector<ZVector> facets_of(const std::vector<ZVector>& gens, const std::vector<ZVector>& basis, std::size_t n) {
    const std::size_t k = basis.size();
    ZMatrix a(gens.size(), k);
    for (std::size_t i = 0; i < gens.size(); ++i)
        for (std::size_t j = 0; j < k; ++j) a(i, j) = dot(basis[j], gens[i]);
    std::vector<ZVector> out;
    for (const auto& w : extreme_rays(a)) {
        ZVector f(n, Integer(0));
        for (std::size_t j = 0; j < k; ++j)
            for (std::size_t c = 0; c < n; ++c) f[c] += w[j] * basis[j][c];
        out.push_back(primitive_ray(f));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline bool in_cone_of(const ZVector& x, const std::vector<ZVector>& gens, std::size_t n) {
    if (gens.empty()) return false;
    const auto basis = independent_subset(gens, n);
    std::vector<ZVector> cols = basis;
    cols.push_back(x);
    if (rank(ZMatrix::from_columns(cols, n)) != basis.size()) return false;
    const auto fs = facets_of(gens, basis, n);
    return std::all_of(fs.begin(), fs.end(), [&](const ZVector& f) { return sgn(dot(f, x)) >= 0; });
}

}  // namespace detail

/// Builds the canonical cone: primitive generators, duplicates and
/// non-extremal generators dropped (first occurrence order kept).
inline RationalCone canonicalize(const std::vector<ZVector>& generators) {
    if (generators.empty()) throw PreconditionViolated("cone needs at least one generator");
    const std::size_t n = generators.front().size();
    if (n == 0 || n > kMaxConeDimension) throw PreconditionViolated("cone dimension must be in 1.." + std::to_string(kMaxConeDimension));
    if (generators.size() > kMaxConeRays) throw PreconditionViolated("too many generators");
    std::vector<ZVector> gens;
    for (const auto& g : generators) {
        if (g.size() != n) throw DimensionMismatch("generators have different lengths");
        ZVector p = primitive_ray(g);
        if (std::find(gens.begin(), gens.end(), p) == gens.end()) gens.push_back(std::move(p));
    }

    RationalCone c;
    c.dim_ = n;
    c.span_ = detail::independent_subset(gens, n);
    c.facets_ = detail::facets_of(gens, c.span_, n);
    const std::size_t k = c.span_.size();
    c.pointed_ = !c.facets_.empty() && rank(ZMatrix::from_rows(c.facets_)) == k;
    if (k == 1 && gens.size() == 1) c.pointed_ = true;

    std::vector<bool> keep(gens.size(), true);
    if (c.pointed_) {
        // Extremal iff the facets through it cut out a line.
        for (std::size_t i = 0; i < gens.size(); ++i) {
            std::vector<ZVector> tight;
            for (const auto& f : c.facets_)
                if (sgn(dot(f, gens[i])) == 0) tight.push_back(f);
            const std::size_t r = tight.empty() ? 0 : rank(ZMatrix::from_rows(tight));
            keep[i] = (r + 1 == k);
        }
    } else {
        for (std::size_t i = 0; i < gens.size(); ++i) {
            std::vector<ZVector> others;
            for (std::size_t j = 0; j < gens.size(); ++j)
                if (j != i && keep[j]) others.push_back(gens[j]);
            if (detail::in_cone_of(gens[i], others, n)) keep[i] = false;
        }
    }
    for (std::size_t i = 0; i < gens.size(); ++i)
        if (keep[i]) c.rays_.push_back(gens[i]);
    return c;
}

/// Generators (extreme rays) of C ∩ span(basis) for a pointed cone C.
inline std::vector<ZVector> intersect_with_subspace(const RationalCone& c, const std::vector<ZVector>& basis) {
    const std::size_t n = c.ambient_dim(), k = basis.size();
    if (k == 0) return {};
    std::vector<ZVector> rows;
    for (const auto& f : c.facets()) {
        ZVector r(k);
        for (std::size_t j = 0; j < k; ++j) r[j] = dot(f, basis[j]);
        rows.push_back(std::move(r));
    }
    // Equalities keeping the intersection inside span(C).
    if (!c.is_full_dimensional()) {
        QMatrix span_rows(c.span_dim(), n);
        std::vector<ZVector> span = detail::independent_subset(c.rays(), n);
        for (std::size_t i = 0; i < span.size(); ++i)
            for (std::size_t j = 0; j < n; ++j) span_rows(i, j) = span[i][j];
        for (const auto& nrm : nullspace(span_rows)) {
            const ZVector nz = primitive(nrm);
            ZVector r(k), s(k);
            for (std::size_t j = 0; j < k; ++j) {
                r[j] = dot(nz, basis[j]);
                s[j] = -r[j];
            }
            rows.push_back(r);
            rows.push_back(s);
        }
    }
    if (rows.empty()) throw PreconditionViolated("cone has no facets");
    const ZMatrix a = ZMatrix::from_rows(rows);
    if (rank(a) < k) throw PreconditionViolated("intersection is not pointed");
    std::vector<ZVector> out;
    for (const auto& u : extreme_rays(a)) {
        ZVector x(n, Integer(0));
        for (std::size_t j = 0; j < k; ++j)
            for (std::size_t t = 0; t < n; ++t) x[t] += u[j] * basis[j][t];
        out.push_back(primitive_ray(x));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Matrix actions

enum class DilationVerdict { Dilation, NotDilation, Inconclusive };

inline std::string to_string(DilationVerdict v) {
    switch (v) {
        case DilationVerdict::Dilation: return "Dilation";
        case DilationVerdict::NotDilation: return "NotDilation";
        case DilationVerdict::Inconclusive: return "Inconclusive";
    }
    return "?";
}

struct EigenRay {
    std::size_t ray;
    Rational eigenvalue;
};

struct ConeMapReport {
    bool invariant = false;
    std::optional<std::vector<std::size_t>> ray_permutation;  // ray i -> ray_permutation[i]
    std::vector<EigenRay> eigen_rays;
    DilationVerdict verdict = DilationVerdict::NotDilation;  // M acts as a scalar
};

/// Positive c with M = c I, if any.
inline std::optional<Integer> scalar_of(const IntMatrix& m) {
    if (!m.is_square() || m.rows() == 0) return std::nullopt;
    const Integer c = m(0, 0);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            if (m(i, j) != (i == j ? c : Integer(0))) return std::nullopt;
    return c;
}

inline ConeMapReport map_cone(const IntMatrix& m, const RationalCone& c) {
    if (!m.is_square() || m.rows() != c.ambient_dim()) throw DimensionMismatch("matrix and cone dimensions differ");
    if (sgn(det(m)) == 0) throw PreconditionViolated("map_cone needs an invertible matrix");
    ConeMapReport rep;
    rep.invariant = true;
    std::vector<std::size_t> perm;
    bool permutes = true;
    for (std::size_t i = 0; i < c.rays().size(); ++i) {
        const ZVector img = m * c.rays()[i];
        if (!c.contains(img)) rep.invariant = false;
        const auto j = c.index_of_ray(img);
        if (!j) {
            permutes = false;
            continue;
        }
        perm.push_back(*j);
        if (*j == i) {
            Rational lambda;
            proportional(img, c.rays()[i], lambda);
            rep.eigen_rays.push_back({i, lambda});
        }
    }
    if (permutes && rep.invariant) {
        std::vector<std::size_t> sorted = perm;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end()) rep.ray_permutation = perm;
    }
    const auto s = scalar_of(m);
    rep.verdict = (s && sgn(*s) != 0) ? DilationVerdict::Dilation : DilationVerdict::NotDilation;
    return rep;
}

/// Two λ-eigenvectors of C sharing no proper face; present iff the
/// λ-eigenspace meets the interior of C.
struct SeparationWitness {
    ZVector v, w;
};

inline std::optional<SeparationWitness> separates_eigenspace(const IntMatrix& m, const RationalCone& c, const Rational& lambda) {
    if (!c.is_proper()) throw PreconditionViolated("separates_eigenspace needs a proper cone");
    const ConeMapReport rep = map_cone(m, c);
    if (!rep.ray_permutation || rep.eigen_rays.size() != c.rays().size())
        throw PreconditionViolated("matrix does not fix every ray of the cone");
    const auto space = eigenspace(m, lambda);
    if (space.empty()) return std::nullopt;
    const auto gens = intersect_with_subspace(c, space);
    if (gens.empty()) return std::nullopt;
    ZVector sum(c.ambient_dim(), Integer(0));
    for (const auto& g : gens)
        for (std::size_t t = 0; t < sum.size(); ++t) sum[t] += g[t];
    if (!c.contains_in_interior(sum)) return std::nullopt;
    SeparationWitness wit{gens.front(), gens.front()};
    if (gens.size() > 1) {
        wit.w = ZVector(c.ambient_dim(), Integer(0));
        for (std::size_t g = 1; g < gens.size(); ++g)
            for (std::size_t t = 0; t < sum.size(); ++t) wit.w[t] += gens[g][t];
    }
    return wit;
}

struct DilationReport {
    DilationVerdict verdict = DilationVerdict::NotDilation;
    std::optional<ZVector> witness;  // eigenvector strictly inside C
    std::optional<Rational> eigenvalue;
    ModulusVerdict moduli = ModulusVerdict::Inconclusive;
    bool scalar = false;
};

/// Cone-theoretic dilation test: an exact eigenvector strictly inside the
/// invariant proper cone together with certified equality of all eigenvalue
/// moduli. With equal moduli M is diagonalizable with spectrum on one circle;
/// `scalar` says whether it is literally lambda*I (a swap such as
/// [[0,3],[3,0]] passes the criterion but only its square is scalar).
/// Irrational eigendirections are never searched; iterate first.
inline DilationReport dilation_criterion(const IntMatrix& m, const RationalCone& c,
                                         const Rational& width_budget = default_width_budget()) {
    if (!c.is_proper()) throw PreconditionViolated("dilation_criterion needs a proper cone");
    if (!m.is_square() || m.rows() != c.ambient_dim()) throw DimensionMismatch("matrix and cone dimensions differ");
    for (const auto& r : c.rays())
        if (!c.contains(m * r)) throw PreconditionViolated("cone is not invariant under the matrix");

    DilationReport rep;
    const Spectrum spec = rational_spectrum(m, width_budget);
    for (const auto& e : spec.entries) {
        if (e.kind != EigenKind::Rational || sgn(e.value) <= 0) continue;
        const auto gens = intersect_with_subspace(c, eigenspace(m, e.value));
        if (gens.empty()) continue;
        ZVector sum(c.ambient_dim(), Integer(0));
        for (const auto& g : gens)
            for (std::size_t t = 0; t < sum.size(); ++t) sum[t] += g[t];
        if (c.contains_in_interior(sum)) {
            rep.witness = primitive_ray(sum);
            rep.eigenvalue = e.value;
            break;
        }
    }
    if (!rep.witness) return rep;
    rep.scalar = rep.eigenvalue->get_den() == 1 && m == IntMatrix::scalar(m.rows(), rep.eigenvalue->get_num());
    rep.moduli = same_modulus_test(m, width_budget);
    switch (rep.moduli) {
        case ModulusVerdict::AllEqual: rep.verdict = DilationVerdict::Dilation; break;
        case ModulusVerdict::NotAllEqual: rep.verdict = DilationVerdict::NotDilation; break;
        case ModulusVerdict::Inconclusive: rep.verdict = DilationVerdict::Inconclusive; break;
    }
    return rep;
}

enum class RayCountVerdict { ForcedDilation, CriterionSilent };

inline std::string to_string(RayCountVerdict v) {
    return v == RayCountVerdict::ForcedDilation ? "ForcedDilation" : "CriterionSilent";
}

struct RayCountReport {
    std::size_t s = 0;  // rays
    std::size_t t = 0;  // distinct ray eigenvalues
    std::size_t q = 0;  // most rays on one facet
    RayCountVerdict verdict = RayCountVerdict::CriterionSilent;
    std::optional<Rational> common_eigenvalue;
};

/// s >= t*q + 1 forces a dilation. When the bound fires, the ray eigenvalues
/// are checked to coincide; a mismatch is raised, never swallowed.
inline RayCountReport ray_count_criterion(const IntMatrix& m, const RationalCone& c) {
    const ConeMapReport map = map_cone(m, c);
    if (!map.ray_permutation || map.eigen_rays.size() != c.rays().size())
        throw PreconditionViolated("matrix does not fix every ray of the cone");
    std::set<Rational> values;
    for (const auto& er : map.eigen_rays) {
        if (sgn(er.eigenvalue) <= 0) throw PreconditionViolated("ray eigenvalues must be positive");
        values.insert(er.eigenvalue);
    }
    RayCountReport rep;
    rep.s = c.rays().size();
    rep.t = values.size();
    for (std::size_t f = 0; f < c.facets().size(); ++f) rep.q = std::max(rep.q, c.rays_on_facet(f));
    if (rep.s >= rep.t * rep.q + 1) {
        if (values.size() != 1)
            throw ContradictionDetected("s=" + std::to_string(rep.s) + " >= t*q+1 with t=" + std::to_string(rep.t) +
                                        ", q=" + std::to_string(rep.q) + " but ray eigenvalues differ");
        rep.verdict = RayCountVerdict::ForcedDilation;
        rep.common_eigenvalue = *values.begin();
    }
    return rep;
}

}  // namespace dynwork
