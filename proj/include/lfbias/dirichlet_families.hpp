#pragma once

// Dirichlet characters of prime level q, indexed by j in [0, q-1):
// chi_j(g^m) = e(jm/(q-1)). Character sums are evaluated exactly from the
// index table; floating point appears only in E(x,q,a) and densities.

#include <array>
#include <optional>
#include <vector>

#include "lfbias/elliptic_families.hpp"
#include "lfbias/modular_core.hpp"
#include "lfbias/rational.hpp"

namespace lfbias {

class CharacterGroup {
public:
    explicit CharacterGroup(u64 q);  // throws InvalidModulus unless q is an odd prime

    u64 q() const noexcept { return table_.modulus(); }
    u64 generator() const noexcept { return table_.generator(); }
    u64 order() const noexcept { return q() - 1; }
    // ind(a) for a coprime to q.
    u64 index(i64 a) const;
    // Exponent e with chi_j(a) = e(e/(q-1)); nullopt when q | a.
    std::optional<u64> exponent(u64 j, i64 a) const;

    // sum of chi(p)^power over the nontrivial characters of order dividing h,
    // as the geometric series h [h | power ind(p)] - 1. Requires h | q-1.
    i64 subgroup_power_sum(u64 h, i64 p, u64 power) const;

private:
    IndexTable table_;
};

// Members of the l-torsion subfamily: j != 0 with j*l = 0 mod q-1.
std::vector<u64> torsion_members(u64 q, u64 l);  // throws InvalidTorsion

// sum over nontrivial chi mod q of chi(p)^2, from the residue of p.
i64 character_sum_squares(u64 q, i64 p);
// Same quantity as a geometric series over the index table.
i64 character_sum_squares_geometric(const CharacterGroup& group, i64 p);

// sum over the l-torsion subfamily of chi(p)^2.
i64 torsion_sum_squares(u64 q, u64 l, i64 p);

Rational m2_direct(u64 q, u64 x);

struct RaceStatistic {
    u64 x;
    u64 q;
    i64 a;
    u64 pi_x;
    u64 pi_x_q_a;
    double e_value;
    i64 c;  // -1 + #{b mod q : b^2 = a}
};

i64 race_c(u64 q, i64 a);
RaceStatistic race_E(u64 x, u64 q, i64 a);
// Same statistic from a precomputed prime list covering [2, x].
RaceStatistic race_E(std::span<const std::uint32_t> primes, u64 x, u64 q, i64 a);

struct M2Decomposition {
    Rational main;         // 1/(q-2)
    double e_sum;          // E(X,q,1) + E(X,q,-1)
    double e_contribution; // (1/(q-2)) sqrt X/(pi(X) log X) e_sum
    Rational ramified;     // (1/(q-2)) [q <= X]/pi(X)
    double value;
};

M2Decomposition m2_decomposed(u64 q, u64 x);

struct TorsionDecomposition {
    u64 residue_classes;      // #{a : a is an l-th power}
    u64 nonresidue_classes;
    u64 residue_count;        // sum of pi(X,q,a) over l-th powers a
    u64 nonresidue_count;
    Rational main_coefficient;  // coefficient of pi(X)/phi(q); 0
    Rational value;
};

Rational m2_torsion(u64 q, u64 l, u64 x);
TorsionDecomposition m2_torsion_decomposed(u64 q, u64 l, u64 x);

// {1, -1, r3, r4} mod q1 q2 with r3 = 1 mod q1, -1 mod q2 and r4 = -1 mod q1, 1 mod q2.
std::array<u64, 4> crt_residues(u64 q1, u64 q2);

struct ConvolutionResult {
    Rational direct;
    Rational main;       // 1/((q1-2)(q2-2))
    double e1;           // four E-terms mod q1 q2
    double e2;           // E(X,q1,+-1) + E(X,q2,+-1)
    double e_contribution;
    Rational correction; // primes dividing q1 q2
    double decomposed;
    std::array<u64, 4> residues;
};

ConvolutionResult m2_convolution(u64 q1, u64 q2, u64 x);

enum class SignSeriesKind { Dirichlet, Torsion, Convolution, Elliptic };

struct SignSeries {
    std::vector<u64> checkpoints;
    std::vector<double> lower_terms;
    std::vector<int> signs;
    double log_density;
};

// Logarithmic density of the checkpoints carrying a positive sign.
double log_density(std::span<const u64> checkpoints, std::span<const int> signs);

// params: Dirichlet {q}; Torsion {q, l}; Convolution {q1, q2}.
SignSeries bias_sign_series(SignSeriesKind kind, std::span<const u64> params, std::span<const u64> checkpoints);
// Elliptic families: lower term is the running mean of (A_2(p) - p^2)/p.
SignSeries bias_sign_series(const FamilySpec& fam, std::span<const u64> checkpoints, unsigned workers = 1);

}  // namespace lfbias
