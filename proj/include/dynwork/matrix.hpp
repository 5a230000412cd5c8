#pragma once

#include "dynwork/error.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace dynwork {

using Integer = mpz_class;
using Rational = mpq_class;
using ZVector = std::vector<Integer>;
using QVector = std::vector<Rational>;

/// Dense row-major matrix over an exact ring (mpz_class or mpq_class).
template <class T>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, T(0)) {}
    Matrix(std::initializer_list<std::initializer_list<long>> rows) {
        rows_ = rows.size();
        cols_ = rows_ ? rows.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_) throw DimensionMismatch("ragged matrix literal");
            for (long v : r) data_.emplace_back(v);
        }
    }
    static Matrix from_rows(const std::vector<std::vector<T>>& rows) {
        const std::size_t c = rows.empty() ? 0 : rows.front().size();
        Matrix m(rows.size(), c);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != c) throw DimensionMismatch("ragged matrix rows");
            for (std::size_t j = 0; j < c; ++j) m(i, j) = rows[i][j];
        }
        return m;
    }
    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
        return m;
    }
    static Matrix scalar(std::size_t n, const T& c) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = c;
        return m;
    }
    static Matrix from_columns(const std::vector<std::vector<T>>& cols, std::size_t rows) {
        Matrix m(rows, cols.size());
        for (std::size_t j = 0; j < cols.size(); ++j) {
            if (cols[j].size() != rows) throw DimensionMismatch("column length");
            for (std::size_t i = 0; i < rows; ++i) m(i, j) = cols[j][i];
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool is_square() const { return rows_ == cols_; }
    bool empty() const { return data_.empty(); }

    T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::vector<T> row(std::size_t i) const {
        return std::vector<T>(data_.begin() + i * cols_, data_.begin() + (i + 1) * cols_);
    }
    std::vector<T> column(std::size_t j) const {
        std::vector<T> c(rows_);
        for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
        return c;
    }

    Matrix transpose() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    bool is_zero() const {
        return std::all_of(data_.begin(), data_.end(), [](const T& v) { return sgn(v) == 0; });
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

    friend Matrix operator+(const Matrix& a, const Matrix& b) {
        check_same(a, b);
        Matrix r = a;
        for (std::size_t k = 0; k < r.data_.size(); ++k) r.data_[k] += b.data_[k];
        return r;
    }
    friend Matrix operator-(const Matrix& a, const Matrix& b) {
        check_same(a, b);
        Matrix r = a;
        for (std::size_t k = 0; k < r.data_.size(); ++k) r.data_[k] -= b.data_[k];
        return r;
    }
    friend Matrix operator*(const T& c, const Matrix& a) {
        Matrix r = a;
        for (auto& v : r.data_) v *= c;
        return r;
    }
    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        if (a.cols_ != b.rows_) throw DimensionMismatch("matrix product");
        Matrix r(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const T& aik = a(i, k);
                if (sgn(aik) == 0) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) r(i, j) += aik * b(k, j);
            }
        return r;
    }
    friend std::vector<T> operator*(const Matrix& a, const std::vector<T>& v) {
        if (a.cols_ != v.size()) throw DimensionMismatch("matrix-vector product");
        std::vector<T> r(a.rows_, T(0));
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t j = 0; j < a.cols_; ++j) r[i] += a(i, j) * v[j];
        return r;
    }

    Matrix pow(unsigned k) const {
        if (!is_square()) throw PreconditionViolated("power of non-square matrix");
        Matrix result = identity(rows_), base = *this;
        while (k) {
            if (k & 1u) result = result * base;
            k >>= 1u;
            if (k) base = base * base;
        }
        return result;
    }

    Matrix block(const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) const {
        Matrix b(rows.size(), cols.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < cols.size(); ++j) b(i, j) = (*this)(rows[i], cols[j]);
        return b;
    }

    std::vector<std::vector<T>> to_rows() const {
        std::vector<std::vector<T>> out(rows_);
        for (std::size_t i = 0; i < rows_; ++i) out[i] = row(i);
        return out;
    }

    friend std::ostream& operator<<(std::ostream& os, const Matrix& m) {
        os << '[';
        for (std::size_t i = 0; i < m.rows_; ++i) {
            os << (i ? ",[" : "[");
            for (std::size_t j = 0; j < m.cols_; ++j) os << (j ? "," : "") << m(i, j);
            os << ']';
        }
        return os << ']';
    }

private:
    static void check_same(const Matrix& a, const Matrix& b) {
        if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw DimensionMismatch("matrix shapes differ");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using ZMatrix = Matrix<Integer>;
using QMatrix = Matrix<Rational>;
/// Pullback actions on divisor-class lattices; square by contract.
using IntMatrix = ZMatrix;

inline QMatrix to_rational(const ZMatrix& m) {
    QMatrix q(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) q(i, j) = m(i, j);
    return q;
}

inline QVector to_rational(const ZVector& v) { return QVector(v.begin(), v.end()); }

// ---------------------------------------------------------------------------
// Fraction-free elimination

namespace detail {

// Bareiss elimination in place. Returns the rank; `sign` tracks row swaps so
// the last pivot is the determinant for square full-rank input.
inline std::size_t bareiss(ZMatrix& a, int& sign) {
    const std::size_t m = a.rows(), n = a.cols();
    sign = 1;
    Integer prev = 1;
    std::size_t r = 0;
    for (std::size_t c = 0; c < n && r < m; ++c) {
        std::size_t p = r;
        while (p < m && sgn(a(p, c)) == 0) ++p;
        if (p == m) continue;
        if (p != r) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(p, j), a(r, j));
            sign = -sign;
        }
        for (std::size_t i = r + 1; i < m; ++i) {
            for (std::size_t j = c + 1; j < n; ++j) {
                Integer t = a(r, c) * a(i, j) - a(i, c) * a(r, j);
                mpz_divexact(a(i, j).get_mpz_t(), t.get_mpz_t(), prev.get_mpz_t());
            }
            a(i, c) = 0;
        }
        prev = a(r, c);
        ++r;
    }
    return r;
}

}  // namespace detail

inline std::size_t rank(ZMatrix a) {
    int s = 1;
    return detail::bareiss(a, s);
}

inline Integer det(const ZMatrix& m) {
    if (!m.is_square()) throw PreconditionViolated("determinant of non-square matrix");
    if (m.rows() == 0) return 1;
    ZMatrix a = m;
    int s = 1;
    const std::size_t r = detail::bareiss(a, s);
    if (r < m.rows()) return 0;
    return s * a(m.rows() - 1, m.rows() - 1);
}

inline Integer trace(const ZMatrix& m) {
    Integer t = 0;
    for (std::size_t i = 0; i < std::min(m.rows(), m.cols()); ++i) t += m(i, i);
    return t;
}

// ---------------------------------------------------------------------------
// Rational row reduction

struct RowEchelon {
    QMatrix reduced;
    std::vector<std::size_t> pivots;
};

inline RowEchelon rref(QMatrix a) {
    RowEchelon out;
    const std::size_t m = a.rows(), n = a.cols();
    std::size_t r = 0;
    for (std::size_t c = 0; c < n && r < m; ++c) {
        std::size_t p = r;
        while (p < m && sgn(a(p, c)) == 0) ++p;
        if (p == m) continue;
        if (p != r)
            for (std::size_t j = 0; j < n; ++j) std::swap(a(p, j), a(r, j));
        const Rational inv = 1 / a(r, c);
        for (std::size_t j = c; j < n; ++j) a(r, j) *= inv;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == r || sgn(a(i, c)) == 0) continue;
            const Rational f = a(i, c);
            for (std::size_t j = c; j < n; ++j) a(i, j) -= f * a(r, j);
        }
        out.pivots.push_back(c);
        ++r;
    }
    out.reduced = std::move(a);
    return out;
}

inline std::size_t rank(const QMatrix& a) { return rref(a).pivots.size(); }

/// Basis of the right kernel, one vector per free column of the echelon form.
inline std::vector<QVector> nullspace(const QMatrix& a) {
    const RowEchelon e = rref(a);
    const std::size_t n = a.cols();
    std::vector<bool> is_pivot(n, false);
    for (auto p : e.pivots) is_pivot[p] = true;
    std::vector<QVector> basis;
    for (std::size_t free = 0; free < n; ++free) {
        if (is_pivot[free]) continue;
        QVector v(n, Rational(0));
        v[free] = 1;
        for (std::size_t i = 0; i < e.pivots.size(); ++i) v[e.pivots[i]] = -e.reduced(i, free);
        basis.push_back(std::move(v));
    }
    return basis;
}

/// Scales a rational vector to the primitive integer vector in the same direction.
inline ZVector primitive(const QVector& v) {
    Integer l = 1;
    for (const auto& x : v) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), x.get_den_mpz_t());
    ZVector z(v.size());
    Integer g = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        z[i] = v[i].get_num() * (l / v[i].get_den());
        mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), z[i].get_mpz_t());
    }
    if (g > 1)
        for (auto& x : z) mpz_divexact(x.get_mpz_t(), x.get_mpz_t(), g.get_mpz_t());
    return z;
}

inline ZVector primitive(const ZVector& v) { return primitive(to_rational(v)); }

inline bool is_zero(const ZVector& v) {
    return std::all_of(v.begin(), v.end(), [](const Integer& x) { return sgn(x) == 0; });
}

template <class T>
T dot(const std::vector<T>& a, const std::vector<T>& b) {
    if (a.size() != b.size()) throw DimensionMismatch("dot product");
    T s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// If `v` = c·`w` for a rational c, returns c (w must be nonzero).
inline bool proportional(const ZVector& v, const ZVector& w, Rational& factor) {
    if (v.size() != w.size()) return false;
    std::size_t pivot = w.size();
    for (std::size_t i = 0; i < w.size(); ++i)
        if (sgn(w[i]) != 0) {
            pivot = i;
            break;
        }
    if (pivot == w.size()) return false;
    Rational c(v[pivot], w[pivot]);
    c.canonicalize();
    for (std::size_t i = 0; i < w.size(); ++i)
        if (Rational(v[i]) != c * w[i]) return false;
    factor = c;
    return true;
}

/// Row-major nested list rendering, used by reports.
inline std::vector<std::vector<std::string>> to_strings(const ZMatrix& m) {
    std::vector<std::vector<std::string>> out(m.rows(), std::vector<std::string>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j).get_str();
    return out;
}

inline std::string rational_string(const Rational& q) {
    Rational c = q;
    c.canonicalize();
    return c.get_den() == 1 ? c.get_num().get_str() : c.get_str();
}

}  // namespace dynwork
