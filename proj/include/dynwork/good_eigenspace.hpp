#pragma once

// The four-condition good-eigenspace test for f^* restricted to V_H, with a
// pluggable Iitaka-dimension oracle for the candidate eigendivisors.

#include "dynwork/atiyah.hpp"
#include "dynwork/cone.hpp"
#include "dynwork/error.hpp"
#include "dynwork/matrix.hpp"
#include "dynwork/model.hpp"
#include "dynwork/spectrum.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dynwork {

/// kappa(D); std::nullopt for -infinity (no sections of any multiple).
/// Throws OracleUnavailable when D is outside what the oracle knows.
using KappaOracle = std::function<std::optional<int>(const ZVector& divisor)>;

/// (P^1)^k: kappa(a) = #{i : a_i > 0} for nef a.
inline KappaOracle model_kappa_oracle() {
    return [](const ZVector& d) -> std::optional<int> {
        int count = 0;
        for (const auto& a : d) {
            if (sgn(a) < 0) return std::nullopt;
            if (sgn(a) > 0) ++count;
        }
        return count;
    };
}

/// Atiyah family: each divisor is matched (up to positive scaling) to a
/// bundle E whose -K_{P(E)} it represents; kappa comes from iitaka_estimate.
struct AtiyahAssignment {
    ZVector divisor;
    AtiyahExpr bundle;
};

inline KappaOracle atiyah_kappa_oracle(Pic0Group group, std::vector<AtiyahAssignment> table, unsigned m_max = 6) {
    return [group = std::move(group), table = std::move(table), m_max](const ZVector& d) -> std::optional<int> {
        for (const auto& a : table) {
            Rational c;
            if (!proportional(d, a.divisor, c) || sgn(c) <= 0) continue;
            const IitakaEstimate est = iitaka_estimate(a.bundle, m_max, group);
            switch (est.verdict) {
                case KappaVerdict::Kappa0: return 0;
                case KappaVerdict::KappaAtLeast1: return 1;
                case KappaVerdict::Indeterminate:
                    throw OracleUnavailable("Iitaka estimate is indeterminate for the assigned bundle");
            }
        }
        throw OracleUnavailable("no bundle assigned to this divisor");
    };
}

enum class GoodVerdict { Good, NotGood, NotApplicable, Inconclusive };

inline std::string to_string(GoodVerdict v) {
    switch (v) {
        case GoodVerdict::Good: return "Good";
        case GoodVerdict::NotGood: return "NotGood";
        case GoodVerdict::NotApplicable: return "NotApplicable";
        case GoodVerdict::Inconclusive: return "Inconclusive";
    }
    return "?";
}

struct ConditionResult {
    std::optional<bool> holds;  // empty when undecided
    std::string evidence;
};

struct GoodEigenspaceReport {
    GoodVerdict verdict = GoodVerdict::NotApplicable;
    RationalInterval lambda1;
    std::optional<Rational> lambda;           // top eigenvalue on V_H when rational
    std::vector<ZVector> v_h_basis;           // H, f^*H, ...
    std::array<ConditionResult, 4> conditions;
    std::vector<ZVector> eigenbasis;          // nef integral lambda-eigenclasses used
    std::vector<std::optional<int>> kappas;   // oracle values on the eigenbasis
};

namespace detail {

inline std::string vec_string(const ZVector& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i].get_str();
    return s + ")";
}

inline IntMatrix to_integer(const QMatrix& q) {
    IntMatrix m(q.rows(), q.cols());
    for (std::size_t i = 0; i < q.rows(); ++i)
        for (std::size_t j = 0; j < q.cols(); ++j) {
            if (q(i, j).get_den() != 1) throw PreconditionViolated("restricted action is not integral in the Krylov basis");
            m(i, j) = q(i, j).get_num();
        }
    return m;
}

}  // namespace detail

/// Evaluates the four conditions for f^*|V_H: (1) lambda is the only
/// eigenvalue of its modulus, (2) its Jordan blocks have size 1, (3) its
/// eigenspace has a basis of integral nef classes, (4) some basis class has
/// kappa != 0.
inline GoodEigenspaceReport good_eigenspace_check(const IntMatrix& m, const ZVector& h, const RationalCone& nef,
                                                  const KappaOracle& kappa) {
    if (!m.is_square() || m.rows() != h.size() || nef.ambient_dim() != h.size())
        throw DimensionMismatch("matrix, H and cone dimensions differ");
    GoodEigenspaceReport rep;
    rep.v_h_basis = krylov_basis(m, h);
    const IntMatrix a = detail::to_integer(restrict_to(m, rep.v_h_basis));
    const Spectrum spec = rational_spectrum(a);
    rep.lambda1 = spec.spectral_radius;
    if (spec.spectral_radius.hi <= 1) {
        rep.verdict = GoodVerdict::NotApplicable;
        rep.conditions[0].evidence = "lambda_1 = 1; the definition needs lambda_1 > 1";
        return rep;
    }
    const SpectrumEntry& top = spec.entries.front();

    // (1)
    std::size_t ties = 0;
    for (std::size_t i = 1; i < spec.entries.size(); ++i)
        if (spec.entries[i].modulus.intersects(top.modulus)) ++ties;
    const bool top_rational = top.kind == EigenKind::Rational && sgn(top.value) > 0;
    if (ties == 0) {
        rep.conditions[0] = {true, "top eigenvalue is separated from all other moduli"};
    } else {
        rep.conditions[0] = {false, std::to_string(ties + 1) + " eigenvalues share the top modulus"};
    }
    if (top_rational) rep.lambda = top.value;

    // (2)
    if (top.jordan_block_sizes) {
        const auto& b = *top.jordan_block_sizes;
        const bool ok = std::all_of(b.begin(), b.end(), [](unsigned s) { return s == 1; });
        std::string sizes;
        for (auto s : b) sizes += (sizes.empty() ? "" : ",") + std::to_string(s);
        rep.conditions[1] = {ok, "block sizes [" + sizes + "]"};
    } else if (top.algebraic_multiplicity == 1) {
        rep.conditions[1] = {true, "simple eigenvalue"};
    } else {
        rep.conditions[1] = {std::nullopt, "Jordan structure of an irrational repeated eigenvalue is not computed"};
    }

    // (3): nef classes span the eigenspace iff the extreme rays of nef ∩ E do.
    if (!rep.lambda) {
        rep.conditions[2] = {false, "top eigenvalue is not a positive rational; no integral eigenclass exists"};
    } else {
        std::vector<ZVector> e_amb;
        for (const auto& v : eigenspace(a, *rep.lambda)) {
            ZVector x(m.rows(), Integer(0));
            for (std::size_t j = 0; j < v.size(); ++j)
                for (std::size_t t = 0; t < x.size(); ++t) x[t] += v[j] * rep.v_h_basis[j][t];
            e_amb.push_back(primitive(x));
        }
        const auto gens = intersect_with_subspace(nef, e_amb);
        for (const auto& g : gens) {
            std::vector<ZVector> trial = rep.eigenbasis;
            trial.push_back(g);
            if (rank(ZMatrix::from_columns(trial, m.rows())) == trial.size()) rep.eigenbasis.push_back(g);
        }
        const bool ok = rep.eigenbasis.size() == e_amb.size();
        std::string basis;
        for (const auto& v : rep.eigenbasis) basis += (basis.empty() ? "" : " ") + detail::vec_string(v);
        rep.conditions[2] = {ok, ok ? "nef eigenbasis " + basis
                                    : "nef classes span only " + std::to_string(rep.eigenbasis.size()) + " of " +
                                          std::to_string(e_amb.size()) + " eigen-directions"};
    }

    // (4)
    if (rep.conditions[2].holds.value_or(false)) {
        bool any = false;
        std::string ev;
        for (const auto& d : rep.eigenbasis) {
            const auto k = kappa(d);
            rep.kappas.push_back(k);
            ev += (ev.empty() ? "" : " ") + std::string("kappa") + detail::vec_string(d) + "=" + (k ? std::to_string(*k) : "-inf");
            if (k && *k != 0) any = true;
        }
        rep.conditions[3] = {any, ev};
    } else {
        rep.conditions[3] = {false, "no integral nef eigenbasis to test"};
    }

    bool all = true, undecided = false;
    for (const auto& c : rep.conditions) {
        if (!c.holds) undecided = true;
        else if (!*c.holds) all = false;
    }
    rep.verdict = !all ? GoodVerdict::NotGood : (undecided ? GoodVerdict::Inconclusive : GoodVerdict::Good);
    return rep;
}

/// Model-family version: nef cone is the orthant, kappa from the multidegree rule.
inline GoodEigenspaceReport good_eigenspace_check(const ModelSystem& f, DivisorClass h = {}) {
    if (h.empty()) h.assign(f.k(), 1);
    std::vector<ZVector> rays;
    for (std::size_t i = 0; i < f.k(); ++i) {
        ZVector e(f.k(), Integer(0));
        e[i] = 1;
        rays.push_back(std::move(e));
    }
    return good_eigenspace_check(f.pullback(), ZVector(h.begin(), h.end()), canonicalize(rays), model_kappa_oracle());
}

}  // namespace dynwork
