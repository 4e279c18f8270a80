#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "lfbias/constant_j.hpp"
#include "lfbias/error.hpp"

using namespace lfbias;

namespace {

// -(number of affine points) + p for y^2 = x^3 + a x + b, counted via a table of squares.
i64 oracle_trace(i64 a, i64 b, i64 p) {
    std::vector<int> roots(p, 0);
    for (i64 y = 0; y < p; ++y) ++roots[(y * y) % p];
    a = ((a % p) + p) % p;
    b = ((b % p) + p) % p;
    i64 points = 0;
    for (i64 x = 0; x < p; ++x) points += roots[((x * x % p) * x + a * x + b) % p];
    return p - points;
}

i128 ipow(i128 v, int k) {
    i128 out = 1;
    for (int i = 0; i < k; ++i) out *= v;
    return out;
}

i64 tpow(i64 t, int r, i64 p) {
    i64 out = 1;
    for (int i = 0; i < r; ++i) out = out * t % p;
    return out;
}

i128 oracle_moment(const ConstantJFamily& fam, int k, i64 p) {
    i128 total = 0;
    for (i64 t = 0; t < p; ++t) {
        i64 a = 0, b = 0;
        if (auto f = std::get_if<J1728Family>(&fam)) {
            a = -(tpow(t, f->r, p) * (f->A % p)) % p;
        } else if (auto f = std::get_if<J0Family>(&fam)) {
            b = tpow(t, f->r, p) * (f->B % p) % p;
        } else {
            const auto& g = std::get<GeneralConstantJ>(fam);
            a = tpow(t, 2, p) * (g.A % p) % p;
            b = tpow(t, 3, p) * (g.B % p) % p;
        }
        total += ipow(oracle_trace(a, b, p), k);
    }
    return total;
}

bool is_small_prime(i64 n) {
    if (n < 2) return false;
    for (i64 d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

}  // namespace

TEST(ConstantJ, DocumentedExamples) {
    EXPECT_EQ(std::get<i128>(constant_j_moment(J1728Family{1, 1}, 2, 13)), 312);
    EXPECT_EQ(std::get<i128>(constant_j_moment(J1728Family{1, 1}, 3, 13)), 0);
    EXPECT_EQ(std::get<i128>(constant_j_moment(J0Family{1, 1}, 2, 7)), 84);

    auto t = predicted_trace(GaussKind::J1728, 1, 13);
    EXPECT_TRUE(t.resolved);
    EXPECT_EQ(t.values, std::vector<i64>{6});

    auto s = predicted_trace(GaussKind::J0, 1, 5);
    EXPECT_TRUE(s.resolved);
    EXPECT_EQ(s.values, std::vector<i64>{0});

    auto pair = predicted_trace(GaussKind::J0, 2, 7);
    EXPECT_FALSE(pair.resolved);
    ASSERT_EQ(pair.values.size(), 2u);
    const i64 actual = oracle_trace(0, 2, 7);
    EXPECT_TRUE(actual == pair.values[0] || actual == pair.values[1]);
}

TEST(ConstantJ, PredictedTraceMatchesPointCount) {
    for (i64 p = 5; p < 400; ++p) {
        if (!is_small_prime(p)) continue;
        for (i64 c = 1; c < p; ++c) {
            const auto j0 = predicted_trace(GaussKind::J0, c, p);
            const auto j1728 = predicted_trace(GaussKind::J1728, c, p);
            const i64 o0 = oracle_trace(0, c, p), o1 = oracle_trace(-c, 0, p);
            EXPECT_TRUE(std::find(j0.values.begin(), j0.values.end(), o0) != j0.values.end()) << p << " " << c;
            EXPECT_TRUE(std::find(j1728.values.begin(), j1728.values.end(), o1) != j1728.values.end()) << p << " " << c;
            if (j0.resolved) EXPECT_EQ(j0.values[0], o0);
            if (j1728.resolved) EXPECT_EQ(j1728.values[0], o1);
        }
    }
}

TEST(ConstantJ, MomentsMatchOracle) {
    for (i64 p = 5; p < 120; ++p) {
        if (!is_small_prime(p)) continue;
        for (i64 c = 1; c <= 6; ++c) {
            if (c % p == 0) continue;
            for (int r = 1; r <= 13; ++r)
                for (int k = 1; k <= 6; ++k)
                    for (ConstantJFamily fam : {ConstantJFamily{J1728Family{c, r}}, ConstantJFamily{J0Family{c, r}}}) {
                        const auto m = constant_j_moment(fam, k, p);
                        const i128 o = oracle_moment(fam, k, p);
                        if (auto v = std::get_if<i128>(&m)) {
                            EXPECT_EQ(*v, o) << describe(fam) << " k=" << k << " p=" << p;
                        } else {
                            const auto& c2 = std::get<CandidatePair>(m);
                            EXPECT_NE(c2.plus, c2.minus);
                            EXPECT_TRUE(resolve_pair(c2, o).has_value()) << describe(fam) << " k=" << k << " p=" << p;
                        }
                    }
        }
    }
}

TEST(ConstantJ, PairsOnlyWhereSignIsUndetermined) {
    // j = 0 with r = 3 mod 6: odd k always resolves to 0, even k pairs off the {0,3} classes.
    for (i64 p : {7, 13, 19, 31, 37, 43}) {
        for (i64 c = 1; c < p; ++c) {
            const auto cls = std::get<SexticClass>(classify_residue(c, PrimeModulus(p), 6));
            const bool cubic = cls == SexticClass::SexticResidue || cls == SexticClass::CubicNonQuadratic;
            EXPECT_EQ(std::get<i128>(constant_j_moment(J0Family{c, 3}, 3, p)), 0);
            EXPECT_EQ(std::holds_alternative<CandidatePair>(constant_j_moment(J0Family{c, 3}, 2, p)), !cubic);
        }
    }
    // j = 1728 with r = 2 mod 4 never pairs.
    for (i64 p : {5, 13, 17, 29, 37}) {
        for (i64 c = 1; c < p; ++c)
            for (int k = 1; k <= 6; ++k) EXPECT_TRUE(std::holds_alternative<i128>(constant_j_moment(J1728Family{c, 2}, k, p)));
    }
}

TEST(ConstantJ, ExponentReductionInvariant) {
    for (int r = 1; r <= 24; ++r) {
        EXPECT_EQ(reduced_exponent(J0Family{1, r}), reduced_exponent(J0Family{1, r + 6}));
        EXPECT_EQ(reduced_exponent(J1728Family{1, r}), reduced_exponent(J1728Family{1, r + 4}));
        for (i64 p : {13, 37, 61})
            for (int k = 1; k <= 4; ++k) {
                EXPECT_EQ(constant_j_moment(J0Family{5, r}, k, p), constant_j_moment(J0Family{5, r + 6}, k, p));
                EXPECT_EQ(constant_j_moment(J1728Family{5, r}, k, p), constant_j_moment(J1728Family{5, r + 4}, k, p));
            }
    }
    EXPECT_EQ(reduced_exponent(J0Family{1, 5}), 1);
    EXPECT_EQ(reduced_exponent(J0Family{1, 4}), 2);
    EXPECT_EQ(reduced_exponent(J1728Family{1, 3}), 1);
}

TEST(ConstantJ, SupersingularPrimesGiveZero) {
    for (i64 p : {5, 11, 17, 23, 29})
        for (int k = 1; k <= 5; ++k) EXPECT_EQ(std::get<i128>(constant_j_moment(J0Family{3, 1}, k, p)), 0);
    for (i64 p : {7, 11, 19, 23, 31})
        for (int k = 1; k <= 5; ++k) EXPECT_EQ(std::get<i128>(constant_j_moment(J1728Family{3, 1}, k, p)), 0);
}

TEST(ConstantJ, GeneralFamily) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 300; ++trial) {
        const i64 p = std::vector<i64>{5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43}[rng() % 12];
        const i64 A = static_cast<i64>(rng() % 40) - 20, B = static_cast<i64>(rng() % 40) - 20;
        const i64 disc = ((4 * A * A % p * A + 27 * B * B) % p + p) % p;
        for (int k = 1; k <= 5; ++k) {
            if (disc == 0) {
                EXPECT_THROW(general_constant_j_moment(A, B, k, p), Error);
                continue;
            }
            const i128 o = oracle_moment(GeneralConstantJ{A, B}, k, p);
            EXPECT_EQ(general_constant_j_moment(A, B, k, p), o);
            const auto routed = constant_j_moment(route_general(A, B, p), k, p);
            if (auto v = std::get_if<i128>(&routed)) {
                EXPECT_EQ(*v, o);
            } else {
                EXPECT_TRUE(resolve_pair(std::get<CandidatePair>(routed), o).has_value());
            }
        }
    }
    EXPECT_TRUE(std::holds_alternative<J1728Family>(route_general(1, 0, 7)));
    EXPECT_TRUE(std::holds_alternative<J0Family>(route_general(0, 1, 7)));
}

TEST(ConstantJ, TwistNegatesTrace) {
    EXPECT_EQ(twist_trace(0, 1, 3, 7), -oracle_trace(0, 1, 7));
    for (i64 p : {5, 7, 11, 13, 17, 19, 23})
        for (i64 A = 0; A < 5; ++A)
            for (i64 B = 0; B < 5; ++B)
                for (i64 d = 1; d < p; ++d) {
                    if (legendre_symbol(d, PrimeModulus(p)) == 1) {
                        EXPECT_THROW(twist_trace(A, B, d, p), Error);
                    } else {
                        EXPECT_EQ(twist_trace(A, B, d, p), -oracle_trace(A, B, p));
                    }
                }
}

TEST(ConstantJ, Errors) {
    auto kind_of = [](auto&& f) {
        try {
            f();
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::EmptySweep;
    };
    EXPECT_EQ(kind_of([] { constant_j_moment(J0Family{1, 1}, 2, 3); }), ErrorKind::SkippedPrime);
    EXPECT_EQ(kind_of([] { constant_j_moment(J0Family{7, 1}, 2, 7); }), ErrorKind::SkippedPrime);
    EXPECT_EQ(kind_of([] { constant_j_moment(J0Family{1, 0}, 2, 7); }), ErrorKind::InvalidInput);
    EXPECT_EQ(kind_of([] { constant_j_moment(J0Family{1, 1}, 0, 7); }), ErrorKind::InvalidInput);
    EXPECT_EQ(kind_of([] { constant_j_moment(J0Family{1, 1}, 2, 9); }), ErrorKind::InvalidModulus);
    EXPECT_EQ(kind_of([] { twist_trace(0, 1, 2, 7); }), ErrorKind::HypothesisViolated);
}

TEST(ConstantJ, SweepIsCleanAndDeterministic) {
    ConstantJSweep sweep;
    sweep.pmax = 60;
    sweep.rmax = 6;
    sweep.coeff_max = 4;
    const auto one = verify_constant_j(sweep);
    sweep.workers = 8;
    const auto many = verify_constant_j(sweep);
    EXPECT_TRUE(one.mismatches.empty());
    EXPECT_GT(one.cases, 0u);
    EXPECT_EQ(one.resolved_pairs, one.resolutions.size());
    EXPECT_EQ(one.cases, many.cases);
    ASSERT_EQ(one.resolutions.size(), many.resolutions.size());
    for (std::size_t i = 0; i < one.resolutions.size(); ++i) {
        EXPECT_EQ(one.resolutions[i].p, many.resolutions[i].p);
        EXPECT_EQ(one.resolutions[i].family, many.resolutions[i].family);
        EXPECT_EQ(one.resolutions[i].sign, many.resolutions[i].sign);
    }
}
