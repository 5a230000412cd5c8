#pragma once

// Thin value-semantic wrapper over an mpfr_t. Heights are logs of very large
// integers, which is the only inexact step in the workbench, so this is the
// single place floating point enters.

#include <gmpxx.h>
#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <compare>
#include <string>
#include <utility>

namespace dynwork {

inline constexpr mpfr_prec_t kDefaultPrecisionBits = 128;

class Real {
public:
    explicit Real(mpfr_prec_t bits = kDefaultPrecisionBits) {
        mpfr_init2(v_, bits);
        mpfr_set_zero(v_, 1);
    }
    Real(double x, mpfr_prec_t bits) : Real(bits) { mpfr_set_d(v_, x, MPFR_RNDN); }
    Real(long x, mpfr_prec_t bits) : Real(bits) { mpfr_set_si(v_, x, MPFR_RNDN); }
    Real(int x, mpfr_prec_t bits) : Real(static_cast<long>(x), bits) {}
    Real(const mpz_class& z, mpfr_prec_t bits) : Real(bits) { mpfr_set_z(v_, z.get_mpz_t(), MPFR_RNDN); }
    Real(const mpq_class& q, mpfr_prec_t bits) : Real(bits) { mpfr_set_q(v_, q.get_mpq_t(), MPFR_RNDN); }

    Real(const Real& o) {
        mpfr_init2(v_, mpfr_get_prec(o.v_));
        mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    Real(Real&& o) noexcept {
        mpfr_init2(v_, MPFR_PREC_MIN);
        mpfr_swap(v_, o.v_);
    }
    Real& operator=(const Real& o) {
        if (this != &o) {
            mpfr_set_prec(v_, mpfr_get_prec(o.v_));
            mpfr_set(v_, o.v_, MPFR_RNDN);
        }
        return *this;
    }
    Real& operator=(Real&& o) noexcept {
        mpfr_swap(v_, o.v_);
        return *this;
    }
    ~Real() { mpfr_clear(v_); }

    mpfr_prec_t precision() const { return mpfr_get_prec(v_); }
    mpfr_ptr raw() { return v_; }
    mpfr_srcptr raw() const { return v_; }

    double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
    bool is_zero() const { return mpfr_zero_p(v_) != 0; }
    int sign() const { return mpfr_sgn(v_); }

    // Exact binary value as a rational; rounding direction picks the neighbour
    // when the caller needs an outward-rounded endpoint.
    mpq_class to_rational() const {
        mpz_class m;
        const mpfr_exp_t e = mpfr_get_z_2exp(m.get_mpz_t(), v_);
        mpq_class q(m);
        if (e >= 0) {
            mpq_mul_2exp(q.get_mpq_t(), q.get_mpq_t(), static_cast<mp_bitcnt_t>(e));
        } else {
            mpq_div_2exp(q.get_mpq_t(), q.get_mpq_t(), static_cast<mp_bitcnt_t>(-e));
        }
        return q;
    }

    // Fixed-point decimal rendering with the given number of significant digits.
    std::string to_string(int digits = 20) const {
        if (mpfr_nan_p(v_)) return "nan";
        if (mpfr_inf_p(v_)) return sign() > 0 ? "inf" : "-inf";
        char* buf = nullptr;
        const std::string fmt = "%." + std::to_string(digits) + "Rg";
        mpfr_asprintf(&buf, fmt.c_str(), v_);
        std::string s(buf);
        mpfr_free_str(buf);
        return s;
    }

    friend Real operator+(const Real& a, const Real& b) { return binop(a, b, mpfr_add); }
    friend Real operator-(const Real& a, const Real& b) { return binop(a, b, mpfr_sub); }
    friend Real operator*(const Real& a, const Real& b) { return binop(a, b, mpfr_mul); }
    friend Real operator/(const Real& a, const Real& b) { return binop(a, b, mpfr_div); }
    Real operator-() const {
        Real r(precision());
        mpfr_neg(r.v_, v_, MPFR_RNDN);
        return r;
    }
    Real& operator+=(const Real& b) { return *this = *this + b; }
    Real& operator-=(const Real& b) { return *this = *this - b; }
    Real& operator*=(const Real& b) { return *this = *this * b; }
    Real& operator/=(const Real& b) { return *this = *this / b; }

    friend bool operator==(const Real& a, const Real& b) { return mpfr_equal_p(a.v_, b.v_) != 0; }
    friend std::partial_ordering operator<=>(const Real& a, const Real& b) {
        if (mpfr_unordered_p(a.v_, b.v_)) return std::partial_ordering::unordered;
        const int c = mpfr_cmp(a.v_, b.v_);
        return c < 0 ? std::partial_ordering::less
                     : (c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent);
    }

    friend Real abs(const Real& a) {
        Real r(a.precision());
        mpfr_abs(r.v_, a.v_, MPFR_RNDN);
        return r;
    }
    friend Real log(const Real& a) {
        Real r(a.precision());
        mpfr_log(r.v_, a.v_, MPFR_RNDN);
        return r;
    }
    friend Real exp(const Real& a) {
        Real r(a.precision());
        mpfr_exp(r.v_, a.v_, MPFR_RNDN);
        return r;
    }
    friend Real sqrt(const Real& a) {
        Real r(a.precision());
        mpfr_sqrt(r.v_, a.v_, MPFR_RNDN);
        return r;
    }
    friend Real pow(const Real& a, unsigned long n) {
        Real r(a.precision());
        mpfr_pow_ui(r.v_, a.v_, n, MPFR_RNDN);
        return r;
    }
    friend Real pow(const Real& a, const Real& b) {
        Real r(std::max(a.precision(), b.precision()));
        mpfr_pow(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }
    friend Real max(const Real& a, const Real& b) { return (a < b) ? b : a; }
    friend Real min(const Real& a, const Real& b) { return (b < a) ? b : a; }

private:
    using Op = int (*)(mpfr_ptr, mpfr_srcptr, mpfr_srcptr, mpfr_rnd_t);
    static Real binop(const Real& a, const Real& b, Op op) {
        Real r(std::max(a.precision(), b.precision()));
        op(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }

    mpfr_t v_;
};

// log |z| for a nonzero integer of any size. mpfr handles huge exponents, so
// the result carries full relative precision even for 10^6-digit inputs.
inline Real log_abs(const mpz_class& z, mpfr_prec_t bits) {
    Real r(abs(Real(z, bits + 16)));
    Real out = log(r);
    Real res(bits);
    mpfr_set(res.raw(), out.raw(), MPFR_RNDN);
    return res;
}

}  // namespace dynwork
