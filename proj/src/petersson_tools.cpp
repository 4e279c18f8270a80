#include "lfbias/petersson_tools.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "lfbias/error.hpp"
#include "lfbias/parallel.hpp"

namespace lfbias {
namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

struct Neumaier {
    double sum = 0;
    double comp = 0;

    void add(double v) {
        const double t = sum + v;
        comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

double bessel_series(int order, double t) {
    const double half = t / 2;
    double term = std::exp(order * std::log(half) - std::lgamma(order + 1.0));
    double sum = term;
    const double h2 = half * half;
    for (int j = 1; j < 200; ++j) {
        term *= -h2 / (static_cast<double>(j) * static_cast<double>(j + order));
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
}

// Miller's backward recurrence, normalized by J_0 + 2 sum J_{2k} = 1.
double bessel_miller(int order, double t) {
    const double top = std::max(static_cast<double>(order), t);
    int start = static_cast<int>(top + 30 + 3 * std::sqrt(40 * top));
    start += start % 2;
    double next = 0, cur = 1e-300, result = 0, norm = 0;
    for (int k = start; k > 0; --k) {
        const double prev = 2.0 * k / t * cur - next;
        next = cur;
        cur = prev;  // J_{k-1}
        if (k - 1 == order) result = cur;
        if ((k - 1) % 2 == 0) norm += (k - 1 == 0 ? 1.0 : 2.0) * cur;
        if (std::abs(cur) > 1e250) {
            cur *= 1e-250;
            next *= 1e-250;
            result *= 1e-250;
            norm *= 1e-250;
        }
    }
    return result / norm;
}

u64 coprime_count_check(u64 c) {
    if (c == 0) throw Error(ErrorKind::InvalidInput, "modulus c must be positive");
    return c;
}

}  // namespace

std::complex<double> kloosterman_complex(i64 m, i64 n, u64 c) {
    coprime_count_check(c);
    const u64 mr = reduce_mod(m, c), nr = reduce_mod(n, c);
    std::complex<double> s = 0;
    for (u64 a = 0; a < c; ++a) {
        if (gcd_u64(a, c) != 1) continue;
        const u64 inv = c == 1 ? 0 : inverse_mod(static_cast<i64>(a), c);
        const u64 e = (mul_mod(mr, a, c) + mul_mod(nr, inv, c)) % c;
        s += std::polar(1.0, kTwoPi * static_cast<double>(e) / static_cast<double>(c));
    }
    return s;
}

double kloosterman(i64 m, i64 n, u64 c) {
    coprime_count_check(c);
    if (c == 1) return 1;
    const u64 mr = reduce_mod(m, c), nr = reduce_mod(n, c);
    // e(-x) is the conjugate of e(x), and c-a contributes -(ma + n/a).
    double s = 0;
    for (u64 a = 1; 2 * a <= c; ++a) {
        if (gcd_u64(a, c) != 1) continue;
        const u64 inv = inverse_mod(static_cast<i64>(a), c);
        const u64 e = (mul_mod(mr, a, c) + mul_mod(nr, inv, c)) % c;
        const double weight = 2 * a == c ? 1.0 : 2.0;
        s += weight * std::cos(kTwoPi * static_cast<double>(e) / static_cast<double>(c));
    }
    return s;
}

i64 ramanujan_sum(i64 m, u64 c) {
    coprime_count_check(c);
    const u64 g = gcd_u64(reduce_mod(m, c), c);  // (c, m), with (c, 0) = c
    i64 s = 0;
    for (u64 d = 1; d * d <= g; ++d) {
        if (g % d != 0) continue;
        s += mobius(c / d) * static_cast<i64>(d);
        if (d * d != g) s += mobius(c / (g / d)) * static_cast<i64>(g / d);
    }
    return s;
}

i64 ramanujan_sum_exponential(i64 m, u64 c) {
    coprime_count_check(c);
    const u64 mr = reduce_mod(m, c);
    double s = 0;
    for (u64 a = 1; a <= c; ++a)
        if (gcd_u64(a, c) == 1) s += std::cos(kTwoPi * static_cast<double>(mul_mod(a, mr, c)) / static_cast<double>(c));
    return static_cast<i64>(std::llround(s));
}

double bessel_j(int order, double t) {
    if (order < 0) throw Error(ErrorKind::InvalidInput, "Bessel order must be non-negative");
    if (!(t >= 0)) throw Error(ErrorKind::InvalidInput, "Bessel argument must be non-negative");
    if (t == 0) return order == 0 ? 1.0 : 0.0;
    if (t < 1) return bessel_series(order, t);
    return bessel_miller(order, t);
}

BumpFunction::BumpFunction(double kappa) : kappa_(kappa) {
    if (!(kappa > 0 && kappa < 0.5)) throw Error(ErrorKind::InvalidInput, "kappa must lie in (0, 1/2)");
}

double BumpFunction::derivative(double x, int order) const {
    if (order < 0 || order > 3) throw Error(ErrorKind::InvalidInput, "derivative order must be 0..3");
    const double len = 1 - 2 * kappa_;
    const double u = (x - kappa_) / len;
    if (u <= 0 || u >= 1) return 0;
    const double s = u * (1 - u);
    if (1 / s > 700) return 0;  // below 1e-290 with every derivative
    const double s1 = 1 - 2 * u, s2 = -2;
    // psi = exp(g), g = -1/s.
    const double g1 = s1 / (s * s);
    const double g2 = s2 / (s * s) - 2 * s1 * s1 / (s * s * s);
    const double g3 = -6 * s1 * s2 / (s * s * s) + 6 * s1 * s1 * s1 / (s * s * s * s);
    const double psi = std::exp(-1 / s);
    switch (order) {
        case 0: return psi;
        case 1: return g1 * psi / len;
        case 2: return (g2 + g1 * g1) * psi / (len * len);
        default: return (g3 + 3 * g1 * g2 + g1 * g1 * g1) * psi / (len * len * len);
    }
}

AvgBesselCheck avg_bessel_check(const BumpFunction& phi, double y, double t) {
    if (!(y > 1) || !(t > 0)) throw Error(ErrorKind::InvalidInput, "need Y > 1 and t > 0");
    Neumaier lhs;
    for (int k = 2; k <= y; k += 2) lhs.add(phi((k - 1) / y) * bessel_j(k - 1, t));
    AvgBesselCheck c{y, t, 2 * lhs.value(), 0, 0, 0};
    c.rhs = phi(t / y) + t / (6 * y * y * y) * phi.derivative(t / y, 3);
    c.residual = std::abs(c.lhs - c.rhs);
    c.bound = 100 * t * t / std::pow(y, 6) + 1e-8;
    return c;
}

double log_log_slope(std::span<const double> ys, std::span<const double> residuals) {
    if (ys.size() != residuals.size() || ys.size() < 2) throw Error(ErrorKind::InvalidInput, "need matching samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(ys.size());
    for (std::size_t i = 0; i < ys.size(); ++i) {
        const double lx = std::log(ys[i]), ly = std::log(residuals[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return -(n * sxy - sx * sy) / (n * sxx - sx * sx);
}

AvgKloosterman avg_kloosterman_empirical(i64 m, i64 n, u64 c, u64 y, unsigned workers) {
    coprime_count_check(c);
    if (y < 1000) throw Error(ErrorKind::InvalidInput, "Y must be at least 1000");
    const double main = static_cast<double>(y) / static_cast<double>(euler_phi(c)) *
                        static_cast<double>(ramanujan_sum(m, c)) * static_cast<double>(ramanujan_sum(n, c));
    if (main == 0) throw Error(ErrorKind::DegenerateMainTerm, "R(m;c) R(n;c) = 0 for c = " + std::to_string(c));

    std::vector<double> table(c);
    for (u64 r = 0; r < c; ++r) table[r] = kloosterman(m, static_cast<i64>(r), c);
    const u64 nr = reduce_mod(n, c);

    const auto primes = primes_up_to(y - 1);
    constexpr std::size_t kChunk = 1 << 14;
    const std::size_t chunks = (primes.size() + kChunk - 1) / kChunk;
    const auto parts = parallel_map<double>(chunks, workers, [&](std::size_t i) {
        Neumaier acc;
        const std::size_t end = std::min(primes.size(), (i + 1) * kChunk);
        for (std::size_t j = i * kChunk; j < end; ++j) {
            const u64 p = primes[j];
            if (gcd_u64(p, c) != 1) continue;
            acc.add(table[mul_mod(nr, p % c, c)] * std::log(static_cast<double>(p)));
        }
        return acc.value();
    });
    Neumaier total;
    for (double v : parts) total.add(v);
    return {total.value(), main, total.value() / main};
}

HeckeSeq::HeckeSeq(std::vector<i128> tau) : tau_(std::move(tau)) {}

i128 HeckeSeq::tau(u64 n) const {
    if (n == 0 || n > tau_.size())
        throw Error(ErrorKind::LimitExceeded, "tau(" + std::to_string(n) + ") is beyond the expansion length");
    return tau_[n - 1];
}

double HeckeSeq::lambda(u64 n) const {
    return static_cast<double>(tau(n)) / std::pow(static_cast<double>(n), 5.5);
}

HeckeSeq delta_qexp(u64 n) {
    if (n == 0) throw Error(ErrorKind::InvalidInput, "expansion length must be positive");
    if (n > kMaxDeltaTerms) throw Error(ErrorKind::LimitExceeded, "expansion length above " + std::to_string(kMaxDeltaTerms));
    // prod (1-q^k)^3 = sum_j (-1)^j (2j+1) q^{j(j+1)/2}; Delta/q is its 8th power.
    std::vector<std::pair<u64, i128>> f;
    for (u64 j = 1; j * (j + 1) / 2 < n; ++j) f.emplace_back(j * (j + 1) / 2, (j % 2 ? -1 : 1) * static_cast<i128>(2 * j + 1));

    // g = f^8 via the power recurrence d g_d = sum_k (9k - d) f_k g_{d-k}, f_0 = 1.
    auto overflow = [] { return Error(ErrorKind::LimitExceeded, "tau expansion exceeds 128-bit range"); };
    std::vector<i128> g(n, 0);
    g[0] = 1;
    for (u64 d = 1; d < n; ++d) {
        i128 acc = 0;
        for (const auto& [k, fk] : f) {
            if (k > d) break;
            i128 term;
            if (__builtin_mul_overflow(fk, static_cast<i128>(9 * static_cast<i64>(k) - static_cast<i64>(d)), &term) ||
                __builtin_mul_overflow(term, g[d - k], &term) || __builtin_add_overflow(acc, term, &acc))
                throw overflow();
        }
        if (acc % static_cast<i128>(d) != 0) throw std::logic_error("power recurrence is not integral");
        g[d] = acc / static_cast<i128>(d);
    }
    return HeckeSeq(std::move(g));
}

double hecke_prime_power(const HeckeSeq& seq, u64 p, int m) {
    if (m < 0) throw Error(ErrorKind::InvalidInput, "exponent must be non-negative");
    const double l1 = seq.lambda(p);
    double prev = 1, cur = l1;
    if (m == 0) return 1;
    for (int j = 1; j < m; ++j) {
        const double nxt = l1 * cur - prev;
        prev = cur;
        cur = nxt;
    }
    return cur;
}

SymLiftCheck sym_lift_identity_check(const HeckeSeq& seq, int r, u64 p) {
    if (r < 0) throw Error(ErrorKind::InvalidInput, "r must be non-negative");
    if (!is_prime(p)) throw Error(ErrorKind::InvalidModulus, std::to_string(p) + " is not prime");
    u64 top = 1;
    for (int i = 0; i < 2 * r; ++i) {
        if (top > seq.size() / p) throw Error(ErrorKind::LimitExceeded, "p^{2r} is beyond the expansion length");
        top *= p;
    }
    const double lr = hecke_prime_power(seq, p, r);
    SymLiftCheck c{lr * lr, 0, false};
    u64 pk = 1;
    for (int l = 0; l <= r; ++l) {
        c.rhs += seq.lambda(pk);
        pk *= p * p;
    }
    c.passed = std::abs(c.lhs - c.rhs) <= 1e-9 * (1 + std::abs(c.lhs));
    return c;
}

Rational dim_estimate(int k, u64 q) {
    if (k < 2 || k % 2 != 0) throw Error(ErrorKind::InvalidWeight, "weight must be even and at least 2");
    if (q == 0 || mobius(q) == 0) throw Error(ErrorKind::InvalidInput, "level must be square-free");
    return Rational(static_cast<i128>(k - 1) * static_cast<i128>(euler_phi(q)), 12);
}

double dim_sum(double x_delta, u64 q) {
    if (q == 0 || mobius(q) == 0) throw Error(ErrorKind::InvalidInput, "level must be square-free");
    return static_cast<double>(euler_phi(q)) * x_delta * x_delta / 48;
}

namespace {

double geometric_prime_sum(int r, double p) {
    double s = 0, term = 1;
    for (int l = 0; l <= r; ++l, term /= p) s += term;
    return s;
}

std::vector<std::uint32_t> skeleton_primes(u64 y) {
    if (y < 10) throw Error(ErrorKind::InvalidInput, "Y must be at least 10");
    return primes_up_to(y);
}

SkeletonCheck make_check(double sum, u64 pi, u64 y, double multiple, double bound) {
    const double dev = (sum - static_cast<double>(pi)) - multiple * std::log(std::log(static_cast<double>(y)));
    return {sum, pi, dev, std::abs(dev) <= bound};
}

}  // namespace

double prime_power_skeleton(int r, u64 y) {
    if (r < 0) throw Error(ErrorKind::InvalidInput, "r must be non-negative");
    Neumaier s;
    for (u64 p : skeleton_primes(y)) s.add(geometric_prime_sum(r, static_cast<double>(p)));
    return s.value();
}

double conv_skeleton(int r1, int r2, u64 y) {
    if (r1 < 0 || r2 < 0) throw Error(ErrorKind::InvalidInput, "r must be non-negative");
    Neumaier s;
    for (u64 p : skeleton_primes(y)) {
        const double pd = static_cast<double>(p);
        s.add(geometric_prime_sum(r1, pd) * geometric_prime_sum(r2, pd));
    }
    return s.value();
}

SkeletonCheck skeleton_check(int r, u64 y, double bound) {
    return make_check(prime_power_skeleton(r, y), skeleton_primes(y).size(), y, 1.0, bound);
}

SkeletonCheck conv_skeleton_check(int r1, int r2, u64 y, double bound) {
    return make_check(conv_skeleton(r1, r2, y), skeleton_primes(y).size(), y, 2.0, bound);
}

PeterssonResidual petersson_residual(const HeckeSeq& seq, u64 m, u64 n) {
    if (m == 0 || n == 0) throw Error(ErrorKind::InvalidInput, "m and n must be positive");
    auto rhs = [](u64 a, u64 b, u64& terms) {
        Neumaier s;
        const double arg = 4 * std::numbers::pi * std::sqrt(static_cast<double>(a) * static_cast<double>(b));
        terms = 0;
        for (u64 c = 1; c < 1000000; ++c) {
            const double x = arg / static_cast<double>(c);
            const double j = bessel_j(11, x);
            ++terms;
            if (x < 1 && std::abs(j) < 1e-14) break;
            s.add(kloosterman(static_cast<i64>(a), static_cast<i64>(b), c) / static_cast<double>(c) * j);
        }
        return (a == b ? 1.0 : 0.0) + 2 * std::numbers::pi * s.value();
    };
    PeterssonResidual out{m, n, 0, 0, 0, 0};
    u64 unit_terms = 0;
    out.rhs = rhs(m, n, out.terms);
    out.predicted = rhs(1, 1, unit_terms) * seq.lambda(m) * seq.lambda(n);
    out.residual = std::abs(out.rhs - out.predicted);
    return out;
}

}  // namespace lfbias
