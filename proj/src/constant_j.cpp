#include "lfbias/constant_j.hpp"

#include <array>
#include <numeric>
#include <sstream>

#include "lfbias/error.hpp"
#include "lfbias/parallel.hpp"

namespace lfbias {
namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

void require_good_prime(u64 p) {
    if (!is_prime(p)) throw Error(ErrorKind::InvalidModulus, std::to_string(p) + " is not prime");
    if (p <= 3) throw Error(ErrorKind::SkippedPrime, "p = " + std::to_string(p) + " is excluded");
}

i128 checked_pow(i128 base, int k) {
    i128 out = 1;
    for (int j = 0; j < k; ++j)
        if (__builtin_mul_overflow(out, base, &out)) throw Error(ErrorKind::LimitExceeded, "moment exceeds 128-bit range");
    return out;
}

i128 checked_add(i128 a, i128 b) {
    i128 out;
    if (__builtin_add_overflow(a, b, &out)) throw Error(ErrorKind::LimitExceeded, "moment exceeds 128-bit range");
    return out;
}

i128 checked_mul(i128 a, i128 b) {
    i128 out;
    if (__builtin_mul_overflow(a, b, &out)) throw Error(ErrorKind::LimitExceeded, "moment exceeds 128-bit range");
    return out;
}

// Trace on the class of index m mod D, for the pair sign s.
i64 class_trace(GaussKind kind, const GaussDecomposition& g, int m, int s) {
    const i64 a = g.a, b = g.b;
    if (kind == GaussKind::J0) {
        switch (m) {
            case 0: return -2 * a;
            case 1: return -a + 3 * b * s;
            case 2: return a + 3 * b * s;
            case 3: return 2 * a;
            case 4: return a - 3 * b * s;
            default: return -a - 3 * b * s;
        }
    }
    switch (m) {
        case 0: return 2 * a;
        case 1: return 2 * b * s;
        case 2: return -2 * a;
        default: return -2 * b * s;
    }
}

int reduce_exponent(int r, int D) {
    int m = r % D;
    if (m > D / 2) m = D - m;
    return m;
}

ConstantJMoment pure_moment(GaussKind kind, i64 coeff, int r, int k, u64 p) {
    if (r < 1) throw Error(ErrorKind::InvalidInput, "exponent r must be positive");
    if (k < 1) throw Error(ErrorKind::InvalidInput, "moment order must be positive");
    require_good_prime(p);
    if (reduce_mod(coeff, p) == 0) throw Error(ErrorKind::SkippedPrime, "bad reduction at p = " + std::to_string(p));

    const int D = kind == GaussKind::J0 ? 6 : 4;
    if ((p - 1) % D != 0) return i128{0};  // supersingular: every trace vanishes

    const PrimeModulus pm(p);
    const auto g = kind == GaussKind::J0 ? gauss_decomp_j0(p) : gauss_decomp_j1728(p);
    const int mc = static_cast<int>(residue_index(coeff, pm, D));
    const int rr = reduce_exponent(r, D);
    const int step = rr == 0 ? D : std::gcd(rr, D);
    const i128 mult = static_cast<i128>((p - 1) / static_cast<u64>(D / step));

    std::array<i128, 2> sums{};
    for (int si = 0; si < 2; ++si) {
        const int s = si == 0 ? 1 : -1;
        i128 total = 0;
        for (int m = mc % step; m < D; m += step) total = checked_add(total, checked_pow(class_trace(kind, g, m, s), k));
        sums[si] = checked_mul(total, mult);
    }
    if (sums[0] == sums[1]) return sums[0];
    return CandidatePair{sums[0], sums[1]};
}

Polynomial weierstrass(i64 A, i64 B) { return Polynomial{B, A, 0, 1}; }

std::string predicted_string(const ConstantJMoment& m) {
    return std::visit(overloaded{[](i128 v) { return to_string(v); },
                                 [](const CandidatePair& c) {
                                     return "{" + to_string(c.plus) + "," + to_string(c.minus) + "}";
                                 }},
                      m);
}

}  // namespace

TraceCandidates predicted_trace(GaussKind kind, i64 coeff, u64 p) {
    require_good_prime(p);
    if (reduce_mod(coeff, p) == 0) throw Error(ErrorKind::SkippedPrime, "bad reduction at p = " + std::to_string(p));
    const int D = kind == GaussKind::J0 ? 6 : 4;
    if ((p - 1) % D != 0) return {{0}, true};
    const auto g = kind == GaussKind::J0 ? gauss_decomp_j0(p) : gauss_decomp_j1728(p);
    const int m = static_cast<int>(residue_index(coeff, PrimeModulus(p), D));
    const i64 plus = class_trace(kind, g, m, 1), minus = class_trace(kind, g, m, -1);
    if (plus == minus) return {{plus}, true};
    return {{plus, minus}, false};
}

std::string describe(const ConstantJFamily& fam) {
    std::ostringstream os;
    std::visit(overloaded{[&](const J1728Family& f) { os << "j1728(A=" << f.A << ",r=" << f.r << ")"; },
                          [&](const J0Family& f) { os << "j0(B=" << f.B << ",r=" << f.r << ")"; },
                          [&](const GeneralConstantJ& f) { os << "general(A=" << f.A << ",B=" << f.B << ")"; }},
               fam);
    return os.str();
}

FamilySpec to_family_spec(const ConstantJFamily& fam) {
    return std::visit(
        overloaded{[](const J1728Family& f) {
                       if (f.r < 1) throw Error(ErrorKind::InvalidInput, "exponent r must be positive");
                       return FamilySpec(GeneralWeierstrass{Polynomial::monomial(-f.A, f.r), Polynomial{}});
                   },
                   [](const J0Family& f) {
                       if (f.r < 1) throw Error(ErrorKind::InvalidInput, "exponent r must be positive");
                       return FamilySpec(GeneralWeierstrass{Polynomial{}, Polynomial::monomial(f.B, f.r)});
                   },
                   [](const GeneralConstantJ& f) {
                       return FamilySpec(GeneralWeierstrass{Polynomial::monomial(f.A, 2), Polynomial::monomial(f.B, 3)});
                   }},
        fam);
}

int reduced_exponent(const ConstantJFamily& fam) {
    return std::visit(overloaded{[](const J1728Family& f) { return reduce_exponent(f.r, 4); },
                                 [](const J0Family& f) { return reduce_exponent(f.r, 6); },
                                 [](const GeneralConstantJ&) { return 2; }},
                      fam);
}

ConstantJMoment constant_j_moment(const ConstantJFamily& fam, int k, u64 p) {
    return std::visit(
        overloaded{[&](const J1728Family& f) { return pure_moment(GaussKind::J1728, f.A, f.r, k, p); },
                   [&](const J0Family& f) { return pure_moment(GaussKind::J0, f.B, f.r, k, p); },
                   [&](const GeneralConstantJ& f) { return ConstantJMoment{general_constant_j_moment(f.A, f.B, k, p)}; }},
        fam);
}

i64 twist_trace(i64 A, i64 B, i64 d, u64 p) {
    require_good_prime(p);
    const PrimeModulus pm(p);
    if (legendre_symbol(d, pm) != -1)
        throw Error(ErrorKind::HypothesisViolated, "twist parameter must be a non-square mod p");
    const u64 a = reduce_mod(A, p), b = reduce_mod(B, p), dd = reduce_mod(d, p);
    const u64 d2 = mul_mod(dd, dd, p), d3 = mul_mod(d2, dd, p);
    const i64 base = trace(weierstrass(static_cast<i64>(a), static_cast<i64>(b)), p);
    const i64 twisted = trace(weierstrass(static_cast<i64>(mul_mod(d2, a, p)), static_cast<i64>(mul_mod(d3, b, p))), p);
    if (twisted != -base) throw std::logic_error("quadratic twist did not negate the trace");
    return twisted;
}

i128 general_constant_j_moment(i64 A, i64 B, int k, u64 p) {
    if (k < 1) throw Error(ErrorKind::InvalidInput, "moment order must be positive");
    require_good_prime(p);
    const u64 a = reduce_mod(A, p), b = reduce_mod(B, p);
    const u64 disc = (mul_mod(4, pow_mod(a, 3, p), p) + mul_mod(27, mul_mod(b, b, p), p)) % p;
    if (disc == 0) throw Error(ErrorKind::SkippedPrime, "bad reduction at p = " + std::to_string(p));
    if (k % 2 != 0) return 0;
    const i64 a1 = trace(weierstrass(static_cast<i64>(a), static_cast<i64>(b)), p);
    return checked_mul(static_cast<i128>(p - 1), checked_pow(a1, k));
}

ConstantJFamily route_general(i64 A, i64 B, u64 p) {
    if (reduce_mod(B, p) == 0) return J1728Family{-A, 2};
    if (reduce_mod(A, p) == 0) return J0Family{B, 3};
    return GeneralConstantJ{A, B};
}

std::optional<int> resolve_pair(const CandidatePair& pair, i128 observed) {
    const bool plus = pair.plus == observed, minus = pair.minus == observed;
    if (plus == minus) return std::nullopt;
    return plus ? 1 : -1;
}

ConstantJReport verify_constant_j(const ConstantJSweep& sweep) {
    std::vector<ConstantJFamily> fams;
    for (i64 c = sweep.coeff_min; c <= sweep.coeff_max; ++c)
        for (int r = 1; r <= sweep.rmax; ++r) {
            fams.push_back(J1728Family{c, r});
            fams.push_back(J0Family{c, r});
        }
    if (sweep.include_general)
        for (i64 a = sweep.coeff_min; a <= sweep.coeff_max; ++a)
            for (i64 b = sweep.coeff_min; b <= sweep.coeff_max; ++b) fams.push_back(GeneralConstantJ{a, b});

    std::vector<u64> primes;
    for (u64 p = 5; p <= sweep.pmax; ++p)
        if (is_prime(p)) primes.push_back(p);

    std::vector<int> ks;
    for (int k = 1; k <= sweep.kmax; ++k) ks.push_back(k);

    const std::size_t n = fams.size() * primes.size();
    auto parts = parallel_map<ConstantJReport>(n, sweep.workers, [&](std::size_t i) {
        ConstantJReport part;
        const auto& fam = fams[i / primes.size()];
        const u64 p = primes[i % primes.size()];
        std::vector<ConstantJMoment> predicted;
        try {
            for (int k : ks) predicted.push_back(constant_j_moment(fam, k, p));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::SkippedPrime) throw;
            part.skipped = 1;
            return part;
        }
        const auto observed = family_moments_brute(to_family_spec(fam), ks, p);
        for (std::size_t j = 0; j < ks.size(); ++j) {
            ++part.cases;
            if (auto pair = std::get_if<CandidatePair>(&predicted[j])) {
                const auto sign = resolve_pair(*pair, observed[j]);
                if (sign) ++part.resolved_pairs;
                part.resolutions.push_back({p, describe(fam), ks[j], *pair, observed[j], sign.value_or(0)});
                if (!sign) part.mismatches.push_back({p, describe(fam), ks[j], predicted_string(predicted[j]), observed[j]});
            } else if (std::get<i128>(predicted[j]) != observed[j]) {
                part.mismatches.push_back({p, describe(fam), ks[j], predicted_string(predicted[j]), observed[j]});
            }
        }
        return part;
    });

    ConstantJReport out;
    for (auto& part : parts) {
        out.cases += part.cases;
        out.resolved_pairs += part.resolved_pairs;
        out.skipped += part.skipped;
        for (auto& r : part.resolutions) out.resolutions.push_back(std::move(r));
        for (auto& m : part.mismatches) out.mismatches.push_back(std::move(m));
    }
    return out;
}

}  // namespace lfbias
