#include "lfbias/rational.hpp"

#include "lfbias/error.hpp"

namespace lfbias {
namespace {

i128 abs128(i128 v) { return v < 0 ? -v : v; }

i128 gcd128(i128 a, i128 b) {
    a = abs128(a);
    b = abs128(b);
    while (b != 0) {
        const i128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

i128 mul(i128 a, i128 b) {
    i128 out;
    if (__builtin_mul_overflow(a, b, &out)) throw Error(ErrorKind::LimitExceeded, "rational exceeds 128-bit range");
    return out;
}

i128 add(i128 a, i128 b) {
    i128 out;
    if (__builtin_add_overflow(a, b, &out)) throw Error(ErrorKind::LimitExceeded, "rational exceeds 128-bit range");
    return out;
}

}  // namespace

Rational::Rational(i128 num, i128 den) {
    if (den == 0) throw Error(ErrorKind::InvalidInput, "zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const i128 g = gcd128(num, den);
    num_ = g > 1 ? num / g : num;
    den_ = g > 1 ? den / g : den;
}

std::string Rational::to_string() const {
    if (den_ == 1) return lfbias::to_string(num_);
    return lfbias::to_string(num_) + "/" + lfbias::to_string(den_);
}

Rational operator+(const Rational& a, const Rational& b) {
    const i128 g = gcd128(a.den_, b.den_);
    const i128 da = a.den_ / g, db = b.den_ / g;
    return Rational(add(mul(a.num_, db), mul(b.num_, da)), mul(a.den_, db));
}

Rational operator-(const Rational& a, const Rational& b) { return a + Rational(-b.num_, b.den_); }

Rational operator*(const Rational& a, const Rational& b) {
    const i128 g1 = gcd128(a.num_, b.den_), g2 = gcd128(b.num_, a.den_);
    const i128 n1 = g1 > 1 ? a.num_ / g1 : a.num_, d2 = g1 > 1 ? b.den_ / g1 : b.den_;
    const i128 n2 = g2 > 1 ? b.num_ / g2 : b.num_, d1 = g2 > 1 ? a.den_ / g2 : a.den_;
    return Rational(mul(n1, n2), mul(d1, d2));
}

Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw Error(ErrorKind::InvalidInput, "division by zero");
    return a * Rational(b.den_, b.num_);
}

}  // namespace lfbias
