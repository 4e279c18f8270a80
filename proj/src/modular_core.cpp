#include "lfbias/modular_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lfbias {

// ============================================================================
// Basic arithmetic
// ============================================================================

u64 mul_mod(u64 a, u64 b, u64 m) noexcept {
    if ((a | b) >> 32 == 0) return a * b % m;
    return static_cast<u64>((static_cast<unsigned __int128>(a) * b) % m);
}

u64 pow_mod(u64 base, u64 exp, u64 m) noexcept {
    if (m == 1) return 0;
    u64 result = 1;
    base %= m;
    while (exp != 0) {
        if (exp & 1) result = mul_mod(result, base, m);
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    return result;
}

u64 reduce_mod(i64 a, u64 m) noexcept {
    if (a >= 0) return static_cast<u64>(a) % m;
    // -(a+1) avoids overflow at INT64_MIN
    u64 r = static_cast<u64>(-(a + 1)) % m;
    return m - 1 - r;
}

u64 gcd_u64(u64 a, u64 b) noexcept {
    while (b != 0) {
        u64 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

u64 inverse_mod(i64 a, u64 m) {
    if (m == 0) throw Error(ErrorKind::InvalidInput, "modulus 0");
    if (m == 1) return 0;
    __int128 r0 = m, r1 = reduce_mod(a, m);
    __int128 s0 = 0, s1 = 1;
    while (r1 != 0) {
        __int128 q = r0 / r1;
        __int128 t = r0 - q * r1;
        r0 = r1;
        r1 = t;
        t = s0 - q * s1;
        s0 = s1;
        s1 = t;
    }
    if (r0 != 1)
        throw Error(ErrorKind::InvalidInput,
                    std::to_string(a) + " is not invertible mod " + std::to_string(m));
    s0 %= static_cast<__int128>(m);
    if (s0 < 0) s0 += m;
    return static_cast<u64>(s0);
}

bool is_prime(u64 n) noexcept {
    if (n < 2) return false;
    for (u64 sp : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (n % sp == 0) return n == sp;
    }
    u64 d = n - 1;
    int s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    // These twelve bases are exact below 3.3e24.
    for (u64 a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        u64 x = pow_mod(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool composite = true;
        for (int r = 1; r < s; ++r) {
            x = mul_mod(x, x, n);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite) return false;
    }
    return true;
}

std::vector<u64> prime_factors(u64 n) {
    std::vector<u64> out;
    for (u64 d = 2; d * d <= n; d += (d == 2 ? 1 : 2)) {
        if (n % d == 0) {
            out.push_back(d);
            while (n % d == 0) n /= d;
        }
    }
    if (n > 1) out.push_back(n);
    return out;
}

u64 euler_phi(u64 n) {
    u64 result = n;
    for (u64 q : prime_factors(n)) result = result / q * (q - 1);
    return result;
}

int mobius(u64 n) {
    if (n == 0) return 0;
    int sign = 1;
    for (u64 d = 2; d * d <= n; d += (d == 2 ? 1 : 2)) {
        if (n % d == 0) {
            n /= d;
            if (n % d == 0) return 0;
            sign = -sign;
        }
    }
    if (n > 1) sign = -sign;
    return sign;
}

PrimeModulus::PrimeModulus(u64 p) : p_(p) {
    if (p < 3 || !is_prime(p))
        throw Error(ErrorKind::InvalidModulus, std::to_string(p) + " is not an odd prime");
}

// ============================================================================
// Legendre symbols and their sums
// ============================================================================

int legendre_symbol(i64 a, const PrimeModulus& pm) noexcept {
    u64 n = pm.value();
    u64 x = pm.reduce(a);
    int s = 1;
    while (x != 0) {
        while ((x & 1) == 0) {
            x >>= 1;
            const u64 r = n & 7;
            if (r == 3 || r == 5) s = -s;
        }
        std::swap(x, n);
        if ((x & 3) == 3 && (n & 3) == 3) s = -s;
        x %= n;
    }
    return n == 1 ? s : 0;
}

int euler_criterion(i64 a, const PrimeModulus& pm) noexcept {
    const u64 p = pm.value();
    const u64 r = pow_mod(pm.reduce(a), (p - 1) / 2, p);
    if (r == 0) return 0;
    return r == 1 ? 1 : -1;
}

QuadraticCharacter::QuadraticCharacter(const PrimeModulus& pm) : p_(pm.value()), table_(p_, -1) {
    table_[0] = 0;
    for (u64 x = 1; x <= (p_ - 1) / 2; ++x) table_[mul_mod(x, x, p_)] = 1;
}

i64 linear_legendre_sum(i64 a, i64 /*b*/, const PrimeModulus& p) {
    if (p.reduce(a) == 0) throw Error(ErrorKind::HypothesisViolated, "p divides the linear coefficient");
    // ax+b runs over every residue exactly once.
    return 0;
}

i64 linear_legendre_sum_brute(i64 a, i64 b, const PrimeModulus& pm) {
    const u64 p = pm.value();
    const u64 ar = pm.reduce(a), br = pm.reduce(b);
    i64 sum = 0;
    for (u64 x = 0; x < p; ++x) sum += legendre_symbol(static_cast<i64>((mul_mod(ar, x, p) + br) % p), pm);
    return sum;
}

i64 quadratic_legendre_sum(i64 a, i64 b, i64 c, const PrimeModulus& pm) {
    if (pm.reduce(a) == 0) throw Error(ErrorKind::HypothesisViolated, "p divides the leading coefficient");
    const u64 p = pm.value();
    const u64 ar = pm.reduce(a), br = pm.reduce(b), cr = pm.reduce(c);
    const u64 disc = (mul_mod(br, br, p) + p - mul_mod(4 % p, mul_mod(ar, cr, p), p)) % p;
    const int s = legendre_symbol(static_cast<i64>(ar), pm);
    return disc == 0 ? static_cast<i64>(p - 1) * s : -s;
}

i64 quadratic_legendre_sum_brute(i64 a, i64 b, i64 c, const PrimeModulus& pm) {
    if (pm.reduce(a) == 0) throw Error(ErrorKind::HypothesisViolated, "p divides the leading coefficient");
    const u64 p = pm.value();
    const u64 ar = pm.reduce(a), br = pm.reduce(b), cr = pm.reduce(c);
    i64 sum = 0;
    for (u64 x = 0; x < p; ++x) {
        const u64 v = (mul_mod(mul_mod(ar, x, p), x, p) + mul_mod(br, x, p) + cr) % p;
        sum += legendre_symbol(static_cast<i64>(v), pm);
    }
    return sum;
}

// ============================================================================
// Gauss decompositions
// ============================================================================

namespace {

u64 isqrt(u64 n) {
    u64 r = static_cast<u64>(std::sqrt(static_cast<long double>(n)));
    while (r * r > n) --r;
    while ((r + 1) * (r + 1) <= n) ++r;
    return r;
}

i64 mod_signed(i64 a, i64 m) {
    i64 r = a % m;
    return r < 0 ? r + m : r;
}

}  // namespace

std::vector<GaussDecomposition> gauss_candidates(GaussKind kind, u64 p) {
    std::vector<GaussDecomposition> out;
    const u64 weight = kind == GaussKind::J0 ? 3 : 1;
    const u64 step = kind == GaussKind::J0 ? 1 : 2;
    for (u64 b = step; weight * b * b <= p; b += step) {
        const u64 rest = p - weight * b * b;
        const u64 r = isqrt(rest);
        if (r * r != rest) continue;
        const int signs = r == 0 ? 1 : 2;
        for (int s = 0; s < signs; ++s) {
            const i64 a = s == 0 ? static_cast<i64>(r) : -static_cast<i64>(r);
            const bool ok = kind == GaussKind::J0 ? mod_signed(a, 3) == 2
                                                  : mod_signed(a + static_cast<i64>(b), 4) == 1;
            if (ok) out.push_back({kind, a, static_cast<i64>(b), p});
        }
    }
    return out;
}

namespace {

GaussDecomposition unique_decomposition(GaussKind kind, u64 p) {
    if (!is_prime(p)) throw Error(ErrorKind::InvalidModulus, std::to_string(p) + " is not prime");
    const u64 m = kind == GaussKind::J0 ? 3 : 4;
    if (p % m != 1)
        throw Error(ErrorKind::NoRepresentation,
                    std::to_string(p) + " is not 1 mod " + std::to_string(m));
    auto c = gauss_candidates(kind, p);
    if (c.size() != 1)
        throw Error(ErrorKind::NoRepresentation,
                    "expected one normalized decomposition of " + std::to_string(p) + ", found " +
                        std::to_string(c.size()));
    return c.front();
}

}  // namespace

GaussDecomposition gauss_decomp_j0(u64 p) { return unique_decomposition(GaussKind::J0, p); }

GaussDecomposition gauss_decomp_j1728(u64 p) { return unique_decomposition(GaussKind::J1728, p); }

// ============================================================================
// Generators and residue classes
// ============================================================================

u64 primitive_root(const PrimeModulus& pm) {
    const u64 p = pm.value();
    const auto factors = prime_factors(p - 1);
    for (u64 g = 2; g < p; ++g) {
        bool generates = true;
        for (u64 q : factors) {
            if (pow_mod(g, (p - 1) / q, p) == 1) {
                generates = false;
                break;
            }
        }
        if (generates) return g;
    }
    return 1;  // p = 2 only; unreachable for PrimeModulus
}

u64 residue_index(i64 x, const PrimeModulus& pm, u64 d) {
    const u64 p = pm.value();
    const u64 xr = pm.reduce(x);
    if (xr == 0) throw Error(ErrorKind::InvalidInput, "residue index of 0");
    if (d == 0 || (p - 1) % d != 0)
        throw Error(ErrorKind::InvalidInput, std::to_string(d) + " does not divide p-1");
    const u64 e = (p - 1) / d;
    const u64 y = pow_mod(xr, e, p);
    const u64 zeta = pow_mod(primitive_root(pm), e, p);
    u64 z = 1;
    for (u64 j = 0; j < d; ++j) {
        if (z == y) return j;
        z = mul_mod(z, zeta, p);
    }
    throw Error(ErrorKind::InvalidInput, "residue index not found");  // unreachable
}

ResidueClass classify_residue(i64 x, const PrimeModulus& pm, int degree) {
    if (degree != 4 && degree != 6) throw Error(ErrorKind::InvalidInput, "degree must be 4 or 6");
    if (pm.reduce(x) == 0) throw Error(ErrorKind::InvalidInput, "0 has no residue class");
    const u64 p = pm.value();
    const bool square = residue_index(x, pm, 2) == 0;
    if (degree == 6) {
        const u64 d3 = gcd_u64(3, p - 1);
        const bool cube = d3 == 1 || residue_index(x, pm, 3) == 0;
        if (square && cube) return SexticClass::SexticResidue;
        if (cube) return SexticClass::CubicNonQuadratic;
        if (square) return SexticClass::QuadraticNonCubic;
        return SexticClass::NonResidue;
    }
    const u64 d4 = gcd_u64(4, p - 1);
    const bool quartic = residue_index(x, pm, d4) == 0;
    if (quartic) return QuarticClass::QuarticResidue;
    if (square) return QuarticClass::QuadraticNonQuartic;
    return QuarticClass::NonResidue;
}

IndexTable::IndexTable(const PrimeModulus& pm)
    : p_(pm.value()), g_(primitive_root(pm)), ind_(p_, 0), pow_(p_ - 1, 0) {
    u64 z = 1;
    for (u64 j = 0; j + 1 < p_; ++j) {
        pow_[j] = static_cast<std::uint32_t>(z);
        ind_[z] = static_cast<std::uint32_t>(j);
        z = mul_mod(z, g_, p_);
    }
}

// ============================================================================
// Sieve
// ============================================================================

void for_each_prime(u64 lo, u64 hi, const std::function<void(u64)>& fn) {
    if (hi < 2 || lo > hi) return;
    lo = std::max<u64>(lo, 2);
    const u64 root = isqrt(hi);
    std::vector<u64> base;
    {
        std::vector<char> small(root + 1, 1);
        for (u64 i = 2; i <= root; ++i) {
            if (!small[i]) continue;
            base.push_back(i);
            for (u64 j = i * i; j <= root; j += i) small[j] = 0;
        }
    }
    constexpr u64 kSegment = 1u << 18;
    std::vector<char> seg(kSegment);
    for (u64 start = lo; start <= hi; start += kSegment) {
        const u64 end = std::min(hi, start + kSegment - 1);
        std::fill(seg.begin(), seg.begin() + static_cast<std::ptrdiff_t>(end - start + 1), 1);
        for (u64 q : base) {
            if (q * q > end) break;
            u64 first = std::max(q * q, (start + q - 1) / q * q);
            for (u64 j = first; j <= end; j += q) seg[j - start] = 0;
        }
        for (u64 n = start; n <= end; ++n)
            if (seg[n - start]) fn(n);
        if (end == hi) break;
    }
}

std::vector<std::uint32_t> primes_up_to(u64 x, u64 cap) {
    if (x > cap)
        throw Error(ErrorKind::LimitExceeded,
                    "sieve limit " + std::to_string(x) + " exceeds cap " + std::to_string(cap));
    if (x > UINT32_MAX) throw Error(ErrorKind::LimitExceeded, "sieve limit exceeds 32-bit primes");
    std::vector<std::uint32_t> out;
    if (x >= 2) out.reserve(static_cast<std::size_t>(1.3 * static_cast<double>(x) / std::log(static_cast<double>(x))) + 8);
    for_each_prime(2, x, [&](u64 p) { out.push_back(static_cast<std::uint32_t>(p)); });
    return out;
}

namespace {

struct NeumaierSum {
    double sum = 0.0;
    double comp = 0.0;

    void add(double v) {
        const double t = sum + v;
        if (std::fabs(sum) >= std::fabs(v))
            comp += (sum - t) + v;
        else
            comp += (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

}  // namespace

PrimeTable::PrimeTable(u64 limit, std::span<const u64> moduli, u64 cap)
    : limit_(limit), primes_(primes_up_to(limit, cap)), moduli_(moduli.begin(), moduli.end()) {
    for (u64 q : moduli_) {
        if (q == 0) throw Error(ErrorKind::InvalidModulus, "modulus 0");
        std::vector<u64> counts(q, 0);
        for (auto p : primes_) ++counts[p % q];
        counters_.push_back(std::move(counts));
    }
    NeumaierSum s;
    for (auto p : primes_) s.add(std::log(static_cast<double>(p)));
    theta_ = s.value();
}

u64 PrimeTable::pi(u64 x) const {
    return static_cast<u64>(std::upper_bound(primes_.begin(), primes_.end(), x) - primes_.begin());
}

u64 PrimeTable::pi(u64 q, u64 a) const {
    for (std::size_t i = 0; i < moduli_.size(); ++i)
        if (moduli_[i] == q) return counters_[i][a % q];
    throw Error(ErrorKind::InvalidInput, "modulus " + std::to_string(q) + " not registered");
}

u64 PrimeTable::pi(u64 x, u64 q, u64 a) const {
    if (q == 0) throw Error(ErrorKind::InvalidModulus, "modulus 0");
    a %= q;
    u64 n = 0;
    for (auto p : primes_) {
        if (p > x) break;
        if (p % q == a) ++n;
    }
    return n;
}

double PrimeTable::theta(u64 x) const {
    NeumaierSum s;
    for (auto p : primes_) {
        if (p > x) break;
        s.add(std::log(static_cast<double>(p)));
    }
    return s.value();
}

PrimeTable prime_table(u64 x, std::span<const u64> moduli, u64 cap) { return PrimeTable(x, moduli, cap); }

double mertens_sum(u64 x, u64 cap) {
    if (x > cap)
        throw Error(ErrorKind::LimitExceeded,
                    "sieve limit " + std::to_string(x) + " exceeds cap " + std::to_string(cap));
    NeumaierSum s;
    for_each_prime(2, x, [&](u64 p) { s.add(1.0 / static_cast<double>(p)); });
    return s.value();
}

}  // namespace lfbias
