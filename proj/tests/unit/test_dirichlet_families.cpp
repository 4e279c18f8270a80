#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <set>

#include "lfbias/dirichlet_families.hpp"
#include "lfbias/error.hpp"

using namespace lfbias;

namespace {

bool small_prime(u64 n) {
    if (n < 2) return false;
    for (u64 d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

// Characters built from a generator found by exhaustive order computation,
// evaluated with complex exponentials.
struct OracleGroup {
    u64 q;
    std::vector<u64> log;  // log[a] for 1 <= a < q

    explicit OracleGroup(u64 q_) : q(q_), log(q_, 0) {
        for (u64 g = 2; g < q; ++g) {
            u64 x = 1, order = 0;
            do {
                x = x * g % q;
                ++order;
            } while (x != 1);
            if (order == q - 1) {
                x = 1;
                for (u64 m = 0; m < q - 1; ++m, x = x * g % q) log[x] = m;
                return;
            }
        }
    }

    std::complex<double> chi(u64 j, u64 a) const {
        if (a % q == 0) return 0;
        const double angle = 2 * std::numbers::pi * static_cast<double>(j * log[a % q] % (q - 1)) / static_cast<double>(q - 1);
        return std::polar(1.0, angle);
    }

    i64 sum_squares(u64 p, const std::vector<u64>& members) const {
        std::complex<double> s = 0;
        for (u64 j : members) s += chi(j, p) * chi(j, p);
        EXPECT_NEAR(s.imag(), 0.0, 1e-8);
        return static_cast<i64>(std::llround(s.real()));
    }

    std::vector<u64> nontrivial() const {
        std::vector<u64> out;
        for (u64 j = 1; j < q - 1; ++j) out.push_back(j);
        return out;
    }
};

std::vector<u64> oracle_primes(u64 x) {
    std::vector<u64> out;
    for (u64 n = 2; n <= x; ++n)
        if (small_prime(n)) out.push_back(n);
    return out;
}

}  // namespace

TEST(Dirichlet, CharacterSumSquaresExamples) {
    EXPECT_EQ(character_sum_squares(5, 11), 3);
    EXPECT_EQ(character_sum_squares(5, 2), -1);
    EXPECT_EQ(character_sum_squares(5, 5), 0);
    EXPECT_THROW(character_sum_squares(9, 2), Error);
}

TEST(Dirichlet, CharacterSumSquaresAgainstComplexOracle) {
    for (u64 q = 3; q <= 61; ++q) {
        if (!small_prime(q)) continue;
        const OracleGroup oracle(q);
        const CharacterGroup group(q);
        const auto members = oracle.nontrivial();
        for (u64 p = 1; p < 400; ++p) {
            const i64 expected = oracle.sum_squares(p, members);
            EXPECT_EQ(character_sum_squares(q, static_cast<i64>(p)), expected) << q << " " << p;
            EXPECT_EQ(character_sum_squares_geometric(group, static_cast<i64>(p)), expected) << q << " " << p;
        }
    }
}

TEST(Dirichlet, TwoPathsAgreeExhaustively) {
    for (u64 q = 3; q <= 101; ++q) {
        if (!small_prime(q)) continue;
        const CharacterGroup group(q);
        for (i64 p = 1; p <= 10000; ++p)
            ASSERT_EQ(character_sum_squares(q, p), character_sum_squares_geometric(group, p)) << q << " " << p;
    }
}

TEST(Dirichlet, M2DirectExamples) {
    EXPECT_EQ(m2_direct(5, 10), Rational(-1, 4));
    EXPECT_EQ(m2_direct(5, 11), Rational(0));
    EXPECT_EQ(m2_direct(7, 2), Rational(-1, 5));
    EXPECT_THROW(m2_direct(5, 1), Error);
    EXPECT_THROW(m2_direct(3, 100), Error);
}

TEST(Dirichlet, M2DirectAgainstOracle) {
    for (u64 q : {5, 7, 11, 13}) {
        const OracleGroup oracle(q);
        const auto members = oracle.nontrivial();
        for (u64 x : {2, 10, 50, 300}) {
            const auto primes = oracle_primes(x);
            i64 total = 0;
            for (u64 p : primes) total += oracle.sum_squares(p, members);
            EXPECT_EQ(m2_direct(q, x), Rational(total, static_cast<i128>(primes.size() * (q - 2))));
        }
    }
}

TEST(Dirichlet, RaceStatistic) {
    const auto s = race_E(10, 5, 1);
    EXPECT_EQ(s.pi_x, 4u);
    EXPECT_EQ(s.pi_x_q_a, 0u);
    EXPECT_NEAR(s.e_value, -4 * std::log(10.0) / std::sqrt(10.0), 1e-12);
    EXPECT_NEAR(s.e_value, -2.913, 1e-3);
    EXPECT_EQ(race_E(1, 5, 2).e_value, 0.0);
    EXPECT_EQ(race_c(5, 1), 1);
    EXPECT_EQ(race_c(5, 2), -1);
    EXPECT_EQ(race_c(15, 4), 3);  // b = 2, 7, 8, 13
    try {
        race_E(10, 5, 10);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidResidue);
    }
    // Counters over all residues coprime to q partition the primes not dividing q.
    for (u64 q : {4, 9, 10, 15}) {
        u64 sum = 0;
        for (u64 a = 1; a < q; ++a)
            if (std::gcd(a, q) == 1) sum += race_E(1000, q, static_cast<i64>(a)).pi_x_q_a;
        u64 ramified = 0;
        for (u64 p : oracle_primes(1000)) ramified += q % p == 0;
        EXPECT_EQ(sum + ramified, race_E(1000, q, 1).pi_x);
    }
}

TEST(Dirichlet, DecomposedMatchesDirect) {
    EXPECT_NEAR(m2_decomposed(5, 10).value, -0.25, 1e-12);
    for (u64 q = 5; q <= 101; ++q) {
        if (!small_prime(q)) continue;
        for (u64 x : {7, 100, 1000, 10000}) {
            const auto d = m2_decomposed(q, x);
            EXPECT_NEAR(d.value, m2_direct(q, x).to_double(), 1e-12) << q << " " << x;
            EXPECT_EQ(d.main, Rational(1, q - 2));
        }
    }
}

TEST(Dirichlet, TorsionExamplesAndOracle) {
    EXPECT_EQ(torsion_sum_squares(7, 3, 2), -1);
    EXPECT_EQ(torsion_sum_squares(7, 3, 13), 2);
    try {
        m2_torsion(7, 5, 100);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidTorsion);
    }
    EXPECT_EQ(m2_torsion_decomposed(7, 3, 100).residue_classes, 2u);

    for (auto [q, l] : std::vector<std::pair<u64, u64>>{{7, 3}, {13, 3}, {31, 5}, {11, 5}, {29, 7}, {43, 7}}) {
        const OracleGroup oracle(q);
        const auto members = torsion_members(q, l);
        ASSERT_EQ(members.size(), l - 1);
        for (u64 j : members) EXPECT_EQ(j * l % (q - 1), 0u);
        for (u64 p = 1; p < 300; ++p) EXPECT_EQ(torsion_sum_squares(q, l, static_cast<i64>(p)), oracle.sum_squares(p, members));
        for (u64 x : {20, 1000, 30000}) {
            const auto d = m2_torsion_decomposed(q, l, x);
            EXPECT_EQ(d.main_coefficient, Rational(0));
            EXPECT_EQ(d.residue_classes, (q - 1) / l);
            EXPECT_EQ(d.value, m2_torsion(q, l, x));
        }
    }
}

TEST(Dirichlet, TorsionAutomorphism) {
    for (auto [q, l] : std::vector<std::pair<u64, u64>>{{7, 3}, {31, 5}, {31, 3}, {71, 7}}) {
        const auto members = torsion_members(q, l);
        const std::multiset<u64> base(members.begin(), members.end());
        for (u64 r = 1; r < 3 * l; ++r) {
            if (r % l == 0) continue;
            std::multiset<u64> image;
            for (u64 j : members) image.insert(j * r % (q - 1));
            EXPECT_EQ(image, base) << q << " " << l << " " << r;
        }
    }
}

TEST(Dirichlet, ConvolutionExamples) {
    const auto res = crt_residues(3, 5);
    EXPECT_EQ(res[2], 4u);
    EXPECT_EQ(res[3], 11u);
    const auto r = m2_convolution(3, 5, 10);
    EXPECT_EQ(r.direct, Rational(-1, 6));
    EXPECT_NEAR(r.decomposed, -1.0 / 6, 1e-12);
    try {
        m2_convolution(5, 5, 100);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
    }
}

TEST(Dirichlet, ConvolutionIdentityAndCrt) {
    for (auto [q1, q2] : std::vector<std::pair<u64, u64>>{{3, 5}, {5, 7}, {7, 11}, {11, 3}, {13, 17}}) {
        const auto res = crt_residues(q1, q2);
        EXPECT_EQ(res[2] % q1, 1u);
        EXPECT_EQ(res[2] % q2, q2 - 1);
        EXPECT_EQ(res[3] % q1, q1 - 1);
        EXPECT_EQ(res[3] % q2, 1u);
        for (u64 x : {5, 11, 1000, 20000}) {
            const auto r = m2_convolution(q1, q2, x);
            EXPECT_NEAR(r.decomposed, r.direct.to_double(), 1e-12) << q1 << " " << q2 << " " << x;
            i64 total = 0;
            const auto primes = oracle_primes(x);
            for (u64 p : primes) total += character_sum_squares(q1, p) * character_sum_squares(q2, p);
            EXPECT_EQ(r.direct, Rational(total, static_cast<i128>(primes.size() * (q1 - 2) * (q2 - 2))));
        }
    }
}

TEST(Dirichlet, LogDensity) {
    const std::vector<u64> cps{10, 100, 1000, 10000};
    EXPECT_DOUBLE_EQ(log_density(cps, std::vector<int>{1, 1, 1, 1}), 1.0);
    EXPECT_DOUBLE_EQ(log_density(cps, std::vector<int>{-1, -1, 0, -1}), 0.0);
    EXPECT_NEAR(log_density(cps, std::vector<int>{-1, 1, -1, 1}), 2.0 / 3, 1e-12);

    // Positive exactly on [sqrt X, X] with dense checkpoints.
    std::vector<u64> dense;
    std::vector<int> signs;
    const double X = 1e12;
    for (double t = 2; t <= X; t *= 1.01) {
        dense.push_back(static_cast<u64>(t));
        signs.push_back(t >= std::sqrt(X) ? 1 : -1);
    }
    EXPECT_NEAR(log_density(dense, signs), 0.5, 0.03);
}

TEST(Dirichlet, SignSeries) {
    const std::vector<u64> cps{10, 100, 1000, 10000};
    const std::vector<u64> q5{5};
    const auto s = bias_sign_series(SignSeriesKind::Dirichlet, q5, cps);
    ASSERT_EQ(s.signs.size(), cps.size());
    for (std::size_t i = 0; i < cps.size(); ++i) {
        const double lower = m2_direct(5, cps[i]).to_double() - 1.0 / 3;
        EXPECT_NEAR(s.lower_terms[i], lower, 1e-12);
        EXPECT_EQ(s.signs[i], lower > 0 ? 1 : (lower < 0 ? -1 : 0));
    }
    const std::vector<u64> tor{7, 3};
    const auto t = bias_sign_series(SignSeriesKind::Torsion, tor, cps);
    for (std::size_t i = 0; i < cps.size(); ++i) EXPECT_NEAR(t.lower_terms[i], m2_torsion(7, 3, cps[i]).to_double(), 1e-12);
    const std::vector<u64> conv{3, 5};
    const auto c = bias_sign_series(SignSeriesKind::Convolution, conv, cps);
    for (std::size_t i = 0; i < cps.size(); ++i)
        EXPECT_NEAR(c.lower_terms[i], m2_convolution(3, 5, cps[i]).direct.to_double() - 1.0 / 3, 1e-12);

    const std::vector<u64> bad{100, 10};
    EXPECT_THROW(bias_sign_series(SignSeriesKind::Dirichlet, q5, bad), Error);

    const FamilySpec fam1(RegistryId::Fam1, {1, 1, 1, 1, 1});
    const std::vector<u64> ecps{100, 1000};
    const auto e = bias_sign_series(fam1, ecps);
    EXPECT_EQ(e.signs, (std::vector<int>{-1, -1}));
    EXPECT_DOUBLE_EQ(e.log_density, 0.0);
}
