#pragma once

#include <string>

#include "lfbias/int128.hpp"

namespace lfbias {

// Reduced fraction with positive denominator. Arithmetic throws
// Error(LimitExceeded) on 128-bit overflow.
class Rational {
public:
    Rational() = default;
    Rational(i128 num, i128 den = 1);  // den == 0 throws InvalidInput

    i128 num() const noexcept { return num_; }
    i128 den() const noexcept { return den_; }
    double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }
    std::string to_string() const;  // "n" or "n/d"

    friend Rational operator+(const Rational& a, const Rational& b);
    friend Rational operator-(const Rational& a, const Rational& b);
    friend Rational operator*(const Rational& a, const Rational& b);
    friend Rational operator/(const Rational& a, const Rational& b);
    friend bool operator==(const Rational&, const Rational&) = default;

private:
    i128 num_ = 0;
    i128 den_ = 1;
};

}  // namespace lfbias
