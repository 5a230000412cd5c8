#pragma once

// Formal calculus of semistable degree-0 bundles on an elliptic curve:
// sums of F_r (x) L with F_r the Atiyah bundles and L in a finitely
// generated model of Pic^0. Decompositions of tensor and symmetric powers
// come from the character ring with chi(F_r) = q^(r-1) + q^(r-3) + ... + q^(1-r).

#include "dynwork/error.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace dynwork {

/// Generators of the model Pic^0 group; order 0 means infinite order.
struct Pic0Generator {
    std::string name;
    long order = 0;
};

class Pic0Group {
public:
    Pic0Group() = default;
    explicit Pic0Group(std::vector<Pic0Generator> gens) : gens_(std::move(gens)) {
        for (const auto& g : gens_)
            if (g.order < 0 || g.order == 1) throw PreconditionViolated("generator order must be 0 (infinite) or >= 2");
    }
    std::size_t rank() const { return gens_.size(); }
    const std::vector<Pic0Generator>& generators() const { return gens_; }
    std::optional<std::size_t> index_of(const std::string& name) const {
        for (std::size_t i = 0; i < gens_.size(); ++i)
            if (gens_[i].name == name) return i;
        return std::nullopt;
    }

    using Element = std::vector<long>;

    Element identity() const { return Element(gens_.size(), 0); }
    Element reduce(Element e) const {
        if (e.size() != gens_.size()) throw DimensionMismatch("Pic0 element has wrong number of coordinates");
        for (std::size_t i = 0; i < e.size(); ++i)
            if (gens_[i].order > 0) {
                e[i] %= gens_[i].order;
                if (e[i] < 0) e[i] += gens_[i].order;
            }
        return e;
    }
    Element add(const Element& a, const Element& b) const {
        Element r(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
        return reduce(std::move(r));
    }
    Element scale(const Element& a, long k) const {
        Element r(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * k;
        return reduce(std::move(r));
    }
    bool is_identity(const Element& a) const {
        const Element r = reduce(a);
        return std::all_of(r.begin(), r.end(), [](long v) { return v == 0; });
    }
    std::string format(const Element& a) const {
        std::string s;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i] == 0) continue;
            if (!s.empty()) s += "*";
            s += gens_[i].name;
            if (a[i] != 1) s += "^" + std::to_string(a[i]);
        }
        return s.empty() ? "O" : s;
    }

private:
    std::vector<Pic0Generator> gens_;
};

using Pic0Element = Pic0Group::Element;

struct AtiyahTerm {
    unsigned r = 1;
    Pic0Element twist;
    friend auto operator<=>(const AtiyahTerm&, const AtiyahTerm&) = default;
};

/// Formal direct sum, kept sorted (descending rank, then twist).
class AtiyahExpr {
public:
    AtiyahExpr() = default;
    explicit AtiyahExpr(std::vector<AtiyahTerm> terms, bool model_derived = false)
        : terms_(std::move(terms)), model_derived_(model_derived) {
        for (const auto& t : terms_)
            if (t.r == 0) throw PreconditionViolated("Atiyah bundle rank must be positive");
        std::sort(terms_.begin(), terms_.end(), [](const AtiyahTerm& a, const AtiyahTerm& b) {
            if (a.r != b.r) return a.r > b.r;
            return a.twist < b.twist;
        });
    }
    /// Untwisted F_r for each listed rank.
    static AtiyahExpr from_ranks(const std::vector<unsigned>& ranks, std::size_t pic_rank = 0, bool model_derived = false) {
        std::vector<AtiyahTerm> t;
        for (auto r : ranks) t.push_back({r, Pic0Element(pic_rank, 0)});
        return AtiyahExpr(std::move(t), model_derived);
    }

    const std::vector<AtiyahTerm>& terms() const { return terms_; }
    bool model_derived() const { return model_derived_; }
    unsigned long rank() const {
        unsigned long s = 0;
        for (const auto& t : terms_) s += t.r;
        return s;
    }
    std::vector<unsigned> ranks() const {
        std::vector<unsigned> out;
        for (const auto& t : terms_) out.push_back(t.r);
        return out;
    }
    friend bool operator==(const AtiyahExpr& a, const AtiyahExpr& b) { return a.terms_ == b.terms_; }

    std::string format(const Pic0Group& g) const {
        std::string s;
        for (const auto& t : terms_) {
            if (!s.empty()) s += " + ";
            s += "F_" + std::to_string(t.r);
            if (!g.is_identity(t.twist)) s += "(x)" + g.format(t.twist);
        }
        return s.empty() ? "0" : s;
    }
    std::string format() const { return format(Pic0Group(std::vector<Pic0Generator>(pic_rank(), {"L", 0}))); }

private:
    std::size_t pic_rank() const { return terms_.empty() ? 0 : terms_.front().twist.size(); }
    std::vector<AtiyahTerm> terms_;
    bool model_derived_ = false;
};

// ---------------------------------------------------------------------------
// Character ring

/// Formal character: weight -> multiplicity.
using Character = std::map<long, std::uint64_t>;

inline Character character_of(unsigned r) {
    Character c;
    for (long w = static_cast<long>(r) - 1; w >= 1 - static_cast<long>(r); w -= 2) c[w] += 1;
    return c;
}

inline Character operator*(const Character& a, const Character& b) {
    Character c;
    for (const auto& [wa, ma] : a)
        for (const auto& [wb, mb] : b) c[wa + wb] += ma * mb;
    return c;
}

/// Character of Sym^d F_r: sums of d weights of F_r chosen with repetition.
inline Character sym_character(unsigned d, unsigned r) {
    // dp[j] maps sums of multisets of size j drawn from the weights seen so far.
    std::vector<Character> dp(d + 1);
    dp[0][0] = 1;
    for (long w = static_cast<long>(r) - 1; w >= 1 - static_cast<long>(r); w -= 2)
        for (unsigned j = 1; j <= d; ++j)
            for (const auto& [s, m] : dp[j - 1]) dp[j][s + w] += m;
    return dp[d];
}

/// Greedy top-weight decomposition into characters of F_r.
inline std::vector<unsigned> decompose(Character c) {
    std::vector<unsigned> ranks;
    while (!c.empty()) {
        const auto top = std::prev(c.end());
        const long w = top->first;
        const std::uint64_t mult = top->second;
        if (w < 0) throw PreconditionViolated("character is not a sum of Atiyah characters");
        const unsigned r = static_cast<unsigned>(w + 1);
        for (std::uint64_t i = 0; i < mult; ++i) ranks.push_back(r);
        for (long v = w; v >= -w; v -= 2) {
            auto it = c.find(v);
            if (it == c.end() || it->second < mult) throw PreconditionViolated("character is not a sum of Atiyah characters");
            it->second -= mult;
            if (it->second == 0) c.erase(it);
        }
    }
    return ranks;
}

/// Characters carry 64-bit multiplicities; ranks beyond this are refused.
inline constexpr std::uint64_t kMaxSymRank = 1ULL << 53;

/// rank Sym^d of a rank-r bundle, C(r+d-1, d), saturating above kMaxSymRank.
inline std::uint64_t sym_rank(unsigned d, std::uint64_t r) {
    if (r == 0) return d == 0 ? 1 : 0;
    unsigned __int128 c = 1;
    for (std::uint64_t i = 1; i <= d; ++i) {
        c = c * (r - 1 + i) / i;
        if (c > kMaxSymRank) return kMaxSymRank + 1;
    }
    return static_cast<std::uint64_t>(c);
}

/// F_r (x) F_s = sum_{i=0}^{min(r,s)-1} F_{r+s-1-2i}.
inline AtiyahExpr atiyah_tensor(unsigned r, unsigned s, std::size_t pic_rank = 0) {
    if (r == 0 || s == 0) throw PreconditionViolated("Atiyah bundle rank must be positive");
    std::vector<unsigned> ranks;
    for (unsigned i = 0; i < std::min(r, s); ++i) ranks.push_back(r + s - 1 - 2 * i);
    return AtiyahExpr::from_ranks(ranks, pic_rank, true);
}

/// Sym^d F_r; Sym^0 is the trivial line bundle F_1.
inline AtiyahExpr atiyah_sym(unsigned d, unsigned r, std::size_t pic_rank = 0) {
    if (r == 0) throw PreconditionViolated("Atiyah bundle rank must be positive");
    if (sym_rank(d, r) > kMaxSymRank)
        throw CombinatorialBudget("Sym^" + std::to_string(d) + " F_" + std::to_string(r) + " exceeds the 2^53 rank budget");
    return AtiyahExpr::from_ranks(decompose(sym_character(d, r)), pic_rank, true);
}

inline constexpr std::uint64_t kMaxCompositions = 1000000;

/// Number of compositions of d into parts parts, saturating above the budget.
inline std::uint64_t composition_count(unsigned d, std::size_t parts) {
    if (parts == 0) return d == 0 ? 1 : 0;
    // C(d + parts - 1, parts - 1), computed incrementally with early exit.
    std::uint64_t c = 1;
    for (std::size_t i = 1; i < parts; ++i) {
        c = c * (d + i) / i;
        if (c > kMaxCompositions) return kMaxCompositions + 1;
    }
    return c;
}

namespace detail {

template <class Visit>
void for_each_composition(unsigned d, std::size_t parts, std::vector<unsigned>& cur, Visit&& visit) {
    if (cur.size() + 1 == parts) {
        cur.push_back(d);
        visit(cur);
        cur.pop_back();
        return;
    }
    for (unsigned i = 0; i <= d; ++i) {
        cur.push_back(i);
        for_each_composition(d - i, parts, cur, visit);
        cur.pop_back();
    }
}

}  // namespace detail

/// Sym^d E by the multinomial expansion over compositions of d, each
/// summand twisted by sum_k i_k L_k.
inline AtiyahExpr sym_bundle(const AtiyahExpr& e, unsigned d, const Pic0Group& g) {
    const auto& ts = e.terms();
    if (sym_rank(d, e.rank()) > kMaxSymRank)
        throw CombinatorialBudget("Sym^" + std::to_string(d) + " of a rank " + std::to_string(e.rank()) +
                                  " bundle exceeds the 2^53 rank budget");
    if (ts.empty()) return d == 0 ? AtiyahExpr::from_ranks({1}, g.rank(), true) : AtiyahExpr({}, true);
    if (composition_count(d, ts.size()) > kMaxCompositions)
        throw CombinatorialBudget("Sym^" + std::to_string(d) + " over " + std::to_string(ts.size()) +
                                  " summands needs more than 10^6 compositions");
    std::map<std::pair<unsigned, unsigned>, Character> sym_cache;
    auto sym_char = [&](unsigned i, unsigned r) -> const Character& {
        auto key = std::make_pair(i, r);
        auto it = sym_cache.find(key);
        if (it == sym_cache.end()) it = sym_cache.emplace(key, sym_character(i, r)).first;
        return it->second;
    };
    std::vector<AtiyahTerm> out;
    std::vector<unsigned> cur;
    detail::for_each_composition(d, ts.size(), cur, [&](const std::vector<unsigned>& comp) {
        Character c{{0, 1}};
        Pic0Element twist = g.identity();
        for (std::size_t k = 0; k < ts.size(); ++k) {
            if (comp[k] == 0) continue;
            c = c * sym_char(comp[k], ts[k].r);
            twist = g.add(twist, g.scale(ts[k].twist, comp[k]));
        }
        for (unsigned r : decompose(std::move(c))) out.push_back({r, twist});
    });
    return AtiyahExpr(std::move(out), true);
}

/// det(sum F_r (x) L) = sum r L, since det F_r is trivial.
inline Pic0Element det_bundle(const AtiyahExpr& e, const Pic0Group& g) {
    Pic0Element acc = g.identity();
    for (const auto& t : e.terms()) acc = g.add(acc, g.scale(t.twist, static_cast<long>(t.r)));
    return acc;
}

/// Each untwisted F_r has exactly one section; twisted ones have none.
inline unsigned long h0(const AtiyahExpr& e, const Pic0Group& g) {
    return static_cast<unsigned long>(
        std::count_if(e.terms().begin(), e.terms().end(), [&](const AtiyahTerm& t) { return g.is_identity(t.twist); }));
}

inline AtiyahExpr twist(const AtiyahExpr& e, const Pic0Element& l, const Pic0Group& g) {
    std::vector<AtiyahTerm> ts;
    for (const auto& t : e.terms()) ts.push_back({t.r, g.add(t.twist, l)});
    return AtiyahExpr(std::move(ts), e.model_derived());
}

/// h^0(P(E), -mK) = h^0(Sym^{m r} E (x) det(E)^{-m}), r = rank E.
inline unsigned long anticanonical_h0(const AtiyahExpr& e, unsigned m, const Pic0Group& g) {
    if (m == 0) throw PreconditionViolated("anticanonical multiple must be >= 1");
    if (e.terms().empty()) throw PreconditionViolated("bundle must have positive rank");
    const unsigned r = static_cast<unsigned>(e.rank());
    const AtiyahExpr s = sym_bundle(e, m * r, g);
    return h0(twist(s, g.scale(det_bundle(e, g), -static_cast<long>(m)), g), g);
}

enum class KappaVerdict { Kappa0, KappaAtLeast1, Indeterminate };

inline std::string to_string(KappaVerdict v) {
    switch (v) {
        case KappaVerdict::Kappa0: return "kappa0";
        case KappaVerdict::KappaAtLeast1: return "kappa_ge_1";
        case KappaVerdict::Indeterminate: return "Indeterminate";
    }
    return "?";
}

struct IitakaEstimate {
    std::vector<unsigned long> sequence;  // h^0(-mK), m = 1..m_max
    KappaVerdict verdict = KappaVerdict::Indeterminate;
};

inline constexpr unsigned kMaxIitakaMultiple = 8;

/// Constant positive sequence: kappa 0. Strictly increasing over the second
/// half of the range: kappa >= 1. Anything else is left undecided.
inline IitakaEstimate iitaka_estimate(const AtiyahExpr& e, unsigned m_max, const Pic0Group& g) {
    if (m_max == 0 || m_max > kMaxIitakaMultiple) throw PreconditionViolated("m_max must be in 1..8");
    IitakaEstimate est;
    for (unsigned m = 1; m <= m_max; ++m) est.sequence.push_back(anticanonical_h0(e, m, g));
    const auto& s = est.sequence;
    const bool constant = std::all_of(s.begin(), s.end(), [&](unsigned long v) { return v == s.front(); });
    if (constant && s.front() >= 1 && s.size() >= 2) {
        est.verdict = KappaVerdict::Kappa0;
        return est;
    }
    const std::size_t from = s.size() / 2;
    bool increasing = s.size() >= 3;
    for (std::size_t i = std::max<std::size_t>(from, 1); i < s.size() && increasing; ++i)
        if (s[i] <= s[i - 1]) increasing = false;
    if (increasing) est.verdict = KappaVerdict::KappaAtLeast1;
    return est;
}

}  // namespace dynwork
