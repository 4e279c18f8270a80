#include "lfbias/dirichlet_families.hpp"

#include <cmath>
#include <functional>
#include <memory>

#include "lfbias/error.hpp"

namespace lfbias {
namespace {

PrimeModulus odd_prime(u64 q) {
    if (q > static_cast<u64>(INT64_MAX)) throw Error(ErrorKind::InvalidModulus, "modulus too large");
    return PrimeModulus(q);  // InvalidModulus unless q is an odd prime
}

void require_level(u64 q) {
    odd_prime(q);
    if (q < 5) throw Error(ErrorKind::InvalidModulus, "level must be a prime >= 5, got " + std::to_string(q));
}

int sign_of(double v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }
int sign_of(const Rational& r) { return r.num() > 0 ? 1 : (r.num() < 0 ? -1 : 0); }

bool plus_minus_one(u64 p, u64 q) {
    const u64 r = p % q;
    return r == 1 || r == q - 1;
}

// Summand of the convolution sum for p not dividing q1 q2, written through
// the indicator functions; used for the correction at ramified primes.
i64 generic_convolution_term(u64 p, u64 q1, u64 q2) {
    const i64 i1 = plus_minus_one(p, q1), i2 = plus_minus_one(p, q2);
    return static_cast<i64>((q1 - 1) * (q2 - 1)) * i1 * i2 - static_cast<i64>(q1 - 1) * i1 - static_cast<i64>(q2 - 1) * i2 + 1;
}

double e_scale(u64 x) { return std::log(static_cast<double>(x)) / std::sqrt(static_cast<double>(x)); }

}  // namespace

CharacterGroup::CharacterGroup(u64 q) : table_(odd_prime(q)) {}

u64 CharacterGroup::index(i64 a) const {
    const u64 r = reduce_mod(a, q());
    if (r == 0) throw Error(ErrorKind::InvalidResidue, "residue divisible by the modulus");
    return table_.index(r);
}

std::optional<u64> CharacterGroup::exponent(u64 j, i64 a) const {
    const u64 r = reduce_mod(a, q());
    if (r == 0) return std::nullopt;
    return mul_mod(j % order(), table_.index(r), order());
}

i64 CharacterGroup::subgroup_power_sum(u64 h, i64 p, u64 power) const {
    if (h == 0 || order() % h != 0) throw Error(ErrorKind::InvalidTorsion, "subgroup order must divide q-1");
    const u64 r = reduce_mod(p, q());
    if (r == 0) return 0;
    // chi = chi_{i(q-1)/h}, so chi(p)^power = e(i * power * ind(p) / h).
    const u64 m = mul_mod(power % h, table_.index(r) % h, h);
    return m == 0 ? static_cast<i64>(h) - 1 : -1;
}

std::vector<u64> torsion_members(u64 q, u64 l) {
    odd_prime(q);
    if (!is_prime(l) || l == 2 || l == q || (q - 1) % l != 0)
        throw Error(ErrorKind::InvalidTorsion, std::to_string(l) + " is not an odd prime dividing q-1");
    std::vector<u64> out;
    const u64 step = (q - 1) / l;
    for (u64 i = 1; i < l; ++i) out.push_back(i * step);
    return out;
}

i64 character_sum_squares(u64 q, i64 p) {
    odd_prime(q);
    const u64 r = reduce_mod(p, q);
    if (r == 0) return 0;
    if (r == 1 || r == q - 1) return static_cast<i64>(q) - 2;
    return -1;
}

i64 character_sum_squares_geometric(const CharacterGroup& group, i64 p) {
    return group.subgroup_power_sum(group.order(), p, 2);
}

i64 torsion_sum_squares(u64 q, u64 l, i64 p) {
    torsion_members(q, l);
    return CharacterGroup(q).subgroup_power_sum(l, p, 2);
}

Rational m2_direct(u64 q, u64 x) {
    require_level(q);
    const auto primes = primes_up_to(x);
    if (primes.empty()) throw Error(ErrorKind::EmptySweep, "no primes up to " + std::to_string(x));
    i64 total = 0;
    for (u64 p : primes) total += character_sum_squares(q, static_cast<i64>(p));
    return Rational(total, static_cast<i128>(primes.size()) * static_cast<i128>(q - 2));
}

i64 race_c(u64 q, i64 a) {
    if (q == 0) throw Error(ErrorKind::InvalidModulus, "modulus must be positive");
    const u64 r = reduce_mod(a, q);
    i64 count = 0;
    for (u64 b = 0; b < q; ++b)
        if (mul_mod(b, b, q) == r) ++count;
    return count - 1;
}

RaceStatistic race_E(std::span<const std::uint32_t> primes, u64 x, u64 q, i64 a) {
    if (q == 0) throw Error(ErrorKind::InvalidModulus, "modulus must be positive");
    const u64 r = reduce_mod(a, q);
    if (gcd_u64(r, q) != 1) throw Error(ErrorKind::InvalidResidue, "residue not coprime to the modulus");
    RaceStatistic s{x, q, a, 0, 0, 0.0, race_c(q, a)};
    for (u64 p : primes) {
        if (p > x) break;
        ++s.pi_x;
        if (p % q == r) ++s.pi_x_q_a;
    }
    if (x >= 2) {
        const double diff = static_cast<double>(euler_phi(q)) * static_cast<double>(s.pi_x_q_a) - static_cast<double>(s.pi_x);
        s.e_value = diff * e_scale(x);
    }
    return s;
}

RaceStatistic race_E(u64 x, u64 q, i64 a) { return race_E(primes_up_to(x), x, q, a); }

M2Decomposition m2_decomposed(u64 q, u64 x) {
    require_level(q);
    const auto primes = primes_up_to(x);
    if (primes.empty()) throw Error(ErrorKind::EmptySweep, "no primes up to " + std::to_string(x));
    const double pi = static_cast<double>(primes.size());
    M2Decomposition d;
    d.main = Rational(1, static_cast<i128>(q - 2));
    d.e_sum = race_E(primes, x, q, 1).e_value + race_E(primes, x, q, -1).e_value;
    d.e_contribution = std::sqrt(static_cast<double>(x)) / (pi * std::log(static_cast<double>(x))) * d.e_sum /
                       static_cast<double>(q - 2);
    // p = q is counted by pi(X) but contributes 0 to the character sum.
    d.ramified = q <= x ? Rational(1, static_cast<i128>(primes.size()) * static_cast<i128>(q - 2)) : Rational(0);
    d.value = d.main.to_double() + d.e_contribution + d.ramified.to_double();
    return d;
}

Rational m2_torsion(u64 q, u64 l, u64 x) {
    torsion_members(q, l);
    const CharacterGroup group(q);
    const auto primes = primes_up_to(x);
    if (primes.empty()) throw Error(ErrorKind::EmptySweep, "no primes up to " + std::to_string(x));
    i64 total = 0;
    for (u64 p : primes) total += group.subgroup_power_sum(l, static_cast<i64>(p), 2);
    return Rational(total, static_cast<i128>(primes.size()) * static_cast<i128>(l - 1));
}

TorsionDecomposition m2_torsion_decomposed(u64 q, u64 l, u64 x) {
    torsion_members(q, l);
    const CharacterGroup group(q);
    const auto primes = primes_up_to(x);
    if (primes.empty()) throw Error(ErrorKind::EmptySweep, "no primes up to " + std::to_string(x));

    std::vector<bool> residue(q, false);
    for (u64 b = 1; b < q; ++b) residue[pow_mod(b, l, q)] = true;

    TorsionDecomposition d{};
    for (u64 a = 1; a < q; ++a) (residue[a] ? d.residue_classes : d.nonresidue_classes) += 1;
    for (u64 p : primes) {
        const u64 a = p % q;
        if (a == 0) continue;
        (residue[a] ? d.residue_count : d.nonresidue_count) += 1;
    }
    const i128 phi = static_cast<i128>(q - 1), lm1 = static_cast<i128>(l - 1);
    // Replacing each pi(X,q,a) by pi(X)/phi(q) leaves this coefficient.
    d.main_coefficient = Rational(static_cast<i128>(d.residue_classes), phi) -
                         Rational(static_cast<i128>(d.nonresidue_classes), phi * lm1);
    d.value = (Rational(static_cast<i128>(d.residue_count)) - Rational(static_cast<i128>(d.nonresidue_count), lm1)) /
              Rational(static_cast<i128>(primes.size()));
    return d;
}

std::array<u64, 4> crt_residues(u64 q1, u64 q2) {
    const u64 Q = q1 * q2;
    // u = 1 mod q1, 0 mod q2; v = 0 mod q1, 1 mod q2.
    const u64 u = mul_mod(q2, inverse_mod(static_cast<i64>(q2), q1), Q);
    const u64 v = mul_mod(q1, inverse_mod(static_cast<i64>(q1), q2), Q);
    const u64 r3 = (u + mul_mod(q2 - 1, v, Q)) % Q;
    const u64 r4 = (mul_mod(q1 - 1, u, Q) + v) % Q;
    return {1, Q - 1, r3, r4};
}

ConvolutionResult m2_convolution(u64 q1, u64 q2, u64 x) {
    odd_prime(q1);
    odd_prime(q2);
    if (q1 == q2) throw Error(ErrorKind::InvalidInput, "convolution needs two distinct levels");
    if (q1 > (1u << 31) || q2 > (1u << 31)) throw Error(ErrorKind::LimitExceeded, "levels too large");
    const auto primes = primes_up_to(x);
    if (primes.empty()) throw Error(ErrorKind::EmptySweep, "no primes up to " + std::to_string(x));

    ConvolutionResult r{};
    r.residues = crt_residues(q1, q2);
    const i128 denom = static_cast<i128>(q1 - 2) * static_cast<i128>(q2 - 2);
    const i128 pi = static_cast<i128>(primes.size());
    r.main = Rational(1, denom);

    i64 total = 0;
    for (u64 p : primes)
        total += character_sum_squares(q1, static_cast<i64>(p)) * character_sum_squares(q2, static_cast<i64>(p));
    r.direct = Rational(total, pi * denom);

    const u64 Q = q1 * q2;
    for (u64 a : r.residues) r.e1 += race_E(primes, x, Q, static_cast<i64>(a)).e_value;
    for (u64 q : {q1, q2})
        for (i64 a : {i64{1}, i64{-1}}) r.e2 += race_E(primes, x, q, a).e_value;

    i64 correction = 0;
    for (u64 q : {q1, q2})
        if (q <= x) correction -= generic_convolution_term(q, q1, q2);
    r.correction = Rational(correction, pi * denom);

    const double xd = static_cast<double>(x);
    r.e_contribution = std::sqrt(xd) / (static_cast<double>(pi) * std::log(xd)) * (r.e1 - r.e2) / static_cast<double>(denom);
    r.decomposed = r.main.to_double() + r.e_contribution + r.correction.to_double();
    return r;
}

double log_density(std::span<const u64> checkpoints, std::span<const int> signs) {
    if (checkpoints.size() != signs.size()) throw Error(ErrorKind::InvalidInput, "one sign per checkpoint");
    if (checkpoints.empty()) return 0.0;
    if (checkpoints.size() == 1) return signs[0] > 0 ? 1.0 : 0.0;
    const double span = std::log(static_cast<double>(checkpoints.back()) / static_cast<double>(checkpoints.front()));
    if (span <= 0) return signs.back() > 0 ? 1.0 : 0.0;
    double inside = 0;
    for (std::size_t i = 1; i < checkpoints.size(); ++i)
        if (signs[i] > 0) inside += std::log(static_cast<double>(checkpoints[i]) / static_cast<double>(checkpoints[i - 1]));
    return inside / span;
}

namespace {

void require_ascending(std::span<const u64> checkpoints) {
    for (std::size_t i = 1; i < checkpoints.size(); ++i)
        if (checkpoints[i] <= checkpoints[i - 1]) throw Error(ErrorKind::InvalidInput, "checkpoints must be ascending");
}

}  // namespace

SignSeries bias_sign_series(SignSeriesKind kind, std::span<const u64> params, std::span<const u64> checkpoints) {
    require_ascending(checkpoints);
    auto need = [&](std::size_t n) {
        if (params.size() != n) throw Error(ErrorKind::InvalidInput, "wrong number of family parameters");
    };

    std::function<i64(u64)> term;
    Rational main(0);
    i128 normalizer = 1;
    switch (kind) {
        case SignSeriesKind::Dirichlet: {
            need(1);
            const u64 q = params[0];
            require_level(q);
            term = [q](u64 p) { return character_sum_squares(q, static_cast<i64>(p)); };
            main = Rational(1, static_cast<i128>(q - 2));
            normalizer = static_cast<i128>(q - 2);
            break;
        }
        case SignSeriesKind::Torsion: {
            need(2);
            const u64 q = params[0], l = params[1];
            torsion_members(q, l);
            auto group = std::make_shared<CharacterGroup>(q);
            term = [group, l](u64 p) { return group->subgroup_power_sum(l, static_cast<i64>(p), 2); };
            normalizer = static_cast<i128>(l - 1);
            break;
        }
        case SignSeriesKind::Convolution: {
            need(2);
            const u64 q1 = params[0], q2 = params[1];
            odd_prime(q1);
            odd_prime(q2);
            if (q1 == q2) throw Error(ErrorKind::InvalidInput, "convolution needs two distinct levels");
            term = [q1, q2](u64 p) {
                return character_sum_squares(q1, static_cast<i64>(p)) * character_sum_squares(q2, static_cast<i64>(p));
            };
            normalizer = static_cast<i128>(q1 - 2) * static_cast<i128>(q2 - 2);
            main = Rational(1, normalizer);
            break;
        }
        case SignSeriesKind::Elliptic:
            throw Error(ErrorKind::InvalidInput, "elliptic series take a family");
    }

    SignSeries s;
    s.checkpoints.assign(checkpoints.begin(), checkpoints.end());
    const auto primes = primes_up_to(checkpoints.empty() ? 0 : checkpoints.back());
    std::size_t idx = 0;
    i64 total = 0;
    for (u64 x : checkpoints) {
        while (idx < primes.size() && primes[idx] <= x) total += term(primes[idx++]);
        Rational lower(0);
        if (idx > 0) lower = Rational(total, static_cast<i128>(idx) * normalizer) - main;
        s.lower_terms.push_back(lower.to_double());
        s.signs.push_back(sign_of(lower));
    }
    s.log_density = log_density(s.checkpoints, s.signs);
    return s;
}

SignSeries bias_sign_series(const FamilySpec& fam, std::span<const u64> checkpoints, unsigned workers) {
    require_ascending(checkpoints);
    SignSeries s;
    s.checkpoints.assign(checkpoints.begin(), checkpoints.end());
    if (checkpoints.empty()) {
        s.log_density = 0;
        return s;
    }
    const auto report = bias_sweep(fam, checkpoints.back(), workers);
    std::size_t idx = 0;
    double sum = 0;
    for (u64 x : checkpoints) {
        while (idx < report.rows.size() && report.rows[idx].p <= x) sum += report.rows[idx++].lower_term;
        const double lower = idx > 0 ? sum / static_cast<double>(idx) : 0.0;
        s.lower_terms.push_back(lower);
        s.signs.push_back(sign_of(lower));
    }
    s.log_density = log_density(s.checkpoints, s.signs);
    return s;
}

}  // namespace lfbias
