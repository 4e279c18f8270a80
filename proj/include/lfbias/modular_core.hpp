#pragma once

// Exact modular arithmetic over odd primes: Legendre symbols and their
// linear/quadratic sums, Gauss decompositions p = a^2+3b^2 and p = a^2+b^2,
// power-residue classes, and a segmented prime sieve.

#include <cstdint>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "lfbias/error.hpp"

namespace lfbias {

using u64 = std::uint64_t;
using i64 = std::int64_t;

inline constexpr u64 kDefaultSieveCap = 100'000'000;

u64 mul_mod(u64 a, u64 b, u64 m) noexcept;
u64 pow_mod(u64 base, u64 exp, u64 m) noexcept;

// Canonical representative of a in [0, m).
u64 reduce_mod(i64 a, u64 m) noexcept;

// Inverse of a mod m via extended Euclid; throws InvalidInput when gcd(a, m) != 1.
u64 inverse_mod(i64 a, u64 m);

u64 gcd_u64(u64 a, u64 b) noexcept;

// Deterministic Miller-Rabin, exact for all 64-bit inputs.
bool is_prime(u64 n) noexcept;

std::vector<u64> prime_factors(u64 n);  // distinct, ascending
u64 euler_phi(u64 n);
int mobius(u64 n);

class PrimeModulus {
public:
    explicit PrimeModulus(u64 p);  // throws InvalidModulus unless p is an odd prime

    u64 value() const noexcept { return p_; }
    u64 reduce(i64 a) const noexcept { return reduce_mod(a, p_); }

    friend bool operator==(const PrimeModulus&, const PrimeModulus&) = default;

private:
    u64 p_;
};

// Jacobi-style reduction with reciprocity.
int legendre_symbol(i64 a, const PrimeModulus& p) noexcept;
// a^((p-1)/2) mod p; kept as an independent check of legendre_symbol.
int euler_criterion(i64 a, const PrimeModulus& p) noexcept;

// chi(v) for every residue v mod p, built by marking squares.
class QuadraticCharacter {
public:
    explicit QuadraticCharacter(const PrimeModulus& p);

    u64 modulus() const noexcept { return p_; }
    int operator()(u64 v) const noexcept { return table_[v]; }  // v already reduced
    int of(i64 a) const noexcept { return table_[reduce_mod(a, p_)]; }

private:
    u64 p_;
    std::vector<std::int8_t> table_;
};

// Sum over x mod p of ((ax+b)/p). Requires p not dividing a.
i64 linear_legendre_sum(i64 a, i64 b, const PrimeModulus& p);
i64 linear_legendre_sum_brute(i64 a, i64 b, const PrimeModulus& p);

// Sum over x mod p of ((ax^2+bx+c)/p). Requires p not dividing a.
i64 quadratic_legendre_sum(i64 a, i64 b, i64 c, const PrimeModulus& p);
i64 quadratic_legendre_sum_brute(i64 a, i64 b, i64 c, const PrimeModulus& p);

// Closed form with a caller-supplied character table, for hot loops.
// Arguments are residues mod p and a must be nonzero.
inline i64 quadratic_legendre_sum(u64 a, u64 b, u64 c, const QuadraticCharacter& chi) noexcept {
    const u64 p = chi.modulus();
    const u64 disc = (mul_mod(b, b, p) + p - mul_mod(4 % p, mul_mod(a, c, p), p)) % p;
    const int s = chi(a);
    return disc == 0 ? i64(p - 1) * s : -s;
}

enum class GaussKind { J0, J1728 };

struct GaussDecomposition {
    GaussKind kind;
    i64 a;
    i64 b;
    u64 p;

    friend bool operator==(const GaussDecomposition&, const GaussDecomposition&) = default;
};

// p = a^2 + 3b^2 with a = 2 mod 3, b > 0.
GaussDecomposition gauss_decomp_j0(u64 p);
// p = a^2 + b^2 with b even and positive, a + b = 1 mod 4.
GaussDecomposition gauss_decomp_j1728(u64 p);
// Every (a, b) meeting the normalization; uniqueness means size() == 1.
std::vector<GaussDecomposition> gauss_candidates(GaussKind kind, u64 p);

// Least primitive root, found by trial and checked against the factored p-1.
u64 primitive_root(const PrimeModulus& p);

// ind(x) mod d relative to primitive_root(p), for d | p-1.
u64 residue_index(i64 x, const PrimeModulus& p, u64 d);

enum class SexticClass { SexticResidue, CubicNonQuadratic, QuadraticNonCubic, NonResidue };
enum class QuarticClass { QuarticResidue, QuadraticNonQuartic, NonResidue };
using ResidueClass = std::variant<SexticClass, QuarticClass>;

ResidueClass classify_residue(i64 x, const PrimeModulus& p, int degree);

// Full discrete-log table for F_p*, for callers that need every index.
class IndexTable {
public:
    explicit IndexTable(const PrimeModulus& p);

    u64 modulus() const noexcept { return p_; }
    u64 generator() const noexcept { return g_; }
    u64 index(u64 x) const noexcept { return ind_[x]; }  // x in [1, p)
    u64 power(u64 j) const noexcept { return pow_[j % (p_ - 1)]; }

private:
    u64 p_;
    u64 g_;
    std::vector<std::uint32_t> ind_;
    std::vector<std::uint32_t> pow_;
};

// Calls fn(p) for each prime in [lo, hi], ascending, with a segmented sieve.
void for_each_prime(u64 lo, u64 hi, const std::function<void(u64)>& fn);

std::vector<std::uint32_t> primes_up_to(u64 x, u64 cap = kDefaultSieveCap);

class PrimeTable {
public:
    PrimeTable(u64 limit, std::span<const u64> moduli = {}, u64 cap = kDefaultSieveCap);

    u64 limit() const noexcept { return limit_; }
    std::span<const std::uint32_t> primes() const noexcept { return primes_; }

    u64 pi() const noexcept { return primes_.size(); }
    u64 pi(u64 x) const;
    // Counter at the table limit; q must be one of the registered moduli.
    u64 pi(u64 q, u64 a) const;
    // Counter at x <= limit for any q (linear scan).
    u64 pi(u64 x, u64 q, u64 a) const;

    double theta() const noexcept { return theta_; }
    double theta(u64 x) const;

private:
    u64 limit_;
    std::vector<std::uint32_t> primes_;
    std::vector<u64> moduli_;
    std::vector<std::vector<u64>> counters_;
    double theta_ = 0.0;
};

PrimeTable prime_table(u64 x, std::span<const u64> moduli = {}, u64 cap = kDefaultSieveCap);

// Sum of 1/p over p <= x, compensated summation.
double mertens_sum(u64 x, u64 cap = kDefaultSieveCap);

}  // namespace lfbias
