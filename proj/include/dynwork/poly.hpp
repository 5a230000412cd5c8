#pragma once

#include "dynwork/error.hpp"
#include "dynwork/matrix.hpp"

#include <gmpxx.h>

#include <cstddef>
#include <initializer_list>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace dynwork {

/// Dense univariate polynomial, coefficients in ascending degree. The zero
/// polynomial has no coefficients; otherwise the leading coefficient is nonzero.
template <class T>
class Polynomial {
public:
    Polynomial() = default;
    explicit Polynomial(std::vector<T> coeffs) : c_(std::move(coeffs)) { trim(); }
    Polynomial(std::initializer_list<long> coeffs) {
        for (long v : coeffs) c_.emplace_back(v);
        trim();
    }
    static Polynomial monomial(const T& coeff, std::size_t degree) {
        std::vector<T> c(degree + 1, T(0));
        c[degree] = coeff;
        return Polynomial(std::move(c));
    }
    /// x - root
    static Polynomial linear_factor(const T& root) { return Polynomial(std::vector<T>{-root, T(1)}); }

    const std::vector<T>& coeffs() const { return c_; }
    bool is_zero() const { return c_.empty(); }
    /// Degree, with -1 for the zero polynomial.
    long degree() const { return static_cast<long>(c_.size()) - 1; }
    T coeff(std::size_t i) const { return i < c_.size() ? c_[i] : T(0); }
    T leading() const { return c_.empty() ? T(0) : c_.back(); }

    template <class U>
    U evaluate(const U& x) const {
        U acc = U(0);
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + U(*it);
        return acc;
    }

    Polynomial derivative() const {
        if (c_.size() <= 1) return {};
        std::vector<T> d(c_.size() - 1);
        for (std::size_t i = 1; i < c_.size(); ++i) d[i - 1] = c_[i] * static_cast<unsigned long>(i);
        return Polynomial(std::move(d));
    }

    friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
        std::vector<T> r(std::max(a.c_.size(), b.c_.size()), T(0));
        for (std::size_t i = 0; i < a.c_.size(); ++i) r[i] += a.c_[i];
        for (std::size_t i = 0; i < b.c_.size(); ++i) r[i] += b.c_[i];
        return Polynomial(std::move(r));
    }
    friend Polynomial operator-(const Polynomial& a, const Polynomial& b) {
        std::vector<T> r(std::max(a.c_.size(), b.c_.size()), T(0));
        for (std::size_t i = 0; i < a.c_.size(); ++i) r[i] += a.c_[i];
        for (std::size_t i = 0; i < b.c_.size(); ++i) r[i] -= b.c_[i];
        return Polynomial(std::move(r));
    }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        if (a.is_zero() || b.is_zero()) return {};
        std::vector<T> r(a.c_.size() + b.c_.size() - 1, T(0));
        for (std::size_t i = 0; i < a.c_.size(); ++i)
            for (std::size_t j = 0; j < b.c_.size(); ++j) r[i + j] += a.c_[i] * b.c_[j];
        return Polynomial(std::move(r));
    }
    friend Polynomial operator*(const T& s, const Polynomial& a) {
        std::vector<T> r = a.c_;
        for (auto& v : r) v *= s;
        return Polynomial(std::move(r));
    }
    friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.c_ == b.c_; }

    Polynomial pow(unsigned k) const {
        Polynomial r(std::vector<T>{T(1)}), b = *this;
        while (k) {
            if (k & 1u) r = r * b;
            k >>= 1u;
            if (k) b = b * b;
        }
        return r;
    }

    friend std::ostream& operator<<(std::ostream& os, const Polynomial& p) {
        if (p.is_zero()) return os << "0";
        bool first = true;
        for (std::size_t k = p.c_.size(); k-- > 0;) {
            if (sgn(p.c_[k]) == 0) continue;
            T a = p.c_[k];
            if (!first) os << (sgn(a) < 0 ? " - " : " + ");
            else if (sgn(a) < 0) os << "-";
            if (sgn(a) < 0) a = -a;
            if (k == 0 || a != 1) os << a;
            if (k >= 1) os << "x";
            if (k >= 2) os << "^" << k;
            first = false;
        }
        return os;
    }

private:
    void trim() {
        while (!c_.empty() && sgn(c_.back()) == 0) c_.pop_back();
    }
    std::vector<T> c_;
};

/// Integer polynomial (characteristic polynomials live here).
using Poly = Polynomial<Integer>;
using QPoly = Polynomial<Rational>;

inline QPoly to_rational(const Poly& p) {
    return QPoly(std::vector<Rational>(p.coeffs().begin(), p.coeffs().end()));
}

/// Primitive integer polynomial with positive leading coefficient, same roots.
inline Poly primitive_part(const QPoly& p) {
    if (p.is_zero()) return {};
    const ZVector z = primitive(QVector(p.coeffs()));
    Poly out{ZVector(z)};
    if (sgn(out.leading()) < 0) out = Integer(-1) * out;
    return out;
}

inline QPoly monic(const QPoly& p) {
    if (p.is_zero()) return p;
    return Rational(1 / p.leading()) * p;
}

/// Euclidean division over Q: a = q*b + r with deg r < deg b.
inline std::pair<QPoly, QPoly> divmod(const QPoly& a, const QPoly& b) {
    if (b.is_zero()) throw PreconditionViolated("polynomial division by zero");
    std::vector<Rational> rem = a.coeffs();
    const long db = b.degree();
    if (a.degree() < db) return {QPoly{}, a};
    std::vector<Rational> quot(static_cast<std::size_t>(a.degree() - db + 1), Rational(0));
    const Rational lb = b.leading();
    for (long k = a.degree(); k >= db; --k) {
        const Rational f = rem[static_cast<std::size_t>(k)] / lb;
        quot[static_cast<std::size_t>(k - db)] = f;
        if (sgn(f) == 0) continue;
        for (long j = 0; j <= db; ++j) rem[static_cast<std::size_t>(k - db + j)] -= f * b.coeffs()[static_cast<std::size_t>(j)];
    }
    return {QPoly(std::move(quot)), QPoly(std::move(rem))};
}

inline QPoly gcd(QPoly a, QPoly b) {
    while (!b.is_zero()) {
        QPoly r = divmod(a, b).second;
        a = std::move(b);
        b = std::move(r);
    }
    return monic(a);
}

/// Square-free factorisation p = c * prod_i s_i^i (Yun). Entry i-1 holds s_i,
/// monic over Q; constant factors are dropped.
inline std::vector<QPoly> squarefree_decomposition(const QPoly& p) {
    std::vector<QPoly> out;
    if (p.degree() <= 0) return out;
    QPoly a = monic(p);
    QPoly b = a.derivative();
    QPoly c = gcd(a, b);
    QPoly w = divmod(a, c).first;
    QPoly y = divmod(b, c).first;
    QPoly z = y - w.derivative();
    while (w.degree() > 0) {
        QPoly g = gcd(w, z);
        out.push_back(monic(g));
        w = divmod(w, g).first;
        y = divmod(z, g).first;
        z = y - w.derivative();
    }
    while (!out.empty() && out.back().degree() == 0) out.pop_back();
    return out;
}

inline QPoly squarefree_part(const QPoly& p) {
    if (p.degree() <= 0) return QPoly(std::vector<Rational>{Rational(1)});
    return monic(divmod(p, gcd(p, p.derivative())).first);
}

inline int sign_at(const QPoly& p, const Rational& x) { return sgn(p.evaluate(x)); }

/// Multiplicity of `root` as a zero of p (p nonzero).
inline unsigned multiplicity(QPoly p, const Rational& root) {
    unsigned m = 0;
    const QPoly f = QPoly::linear_factor(root);
    while (!p.is_zero() && sgn(p.evaluate(root)) == 0) {
        p = divmod(p, f).first;
        ++m;
    }
    return m;
}

}  // namespace dynwork
