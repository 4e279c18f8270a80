#pragma once

// Kloosterman and Ramanujan sums, Bessel J, the averaged Bessel and
// Kloosterman checks, the Ramanujan tau expansion, and prime-sum skeletons.

#include <complex>
#include <span>
#include <vector>

#include "lfbias/int128.hpp"
#include "lfbias/modular_core.hpp"
#include "lfbias/rational.hpp"

namespace lfbias {

// Full sum over a mod c, gcd(a, c) = 1, of e((ma + n a^-1)/c).
std::complex<double> kloosterman_complex(i64 m, i64 n, u64 c);
// S(m,n;c), pairing a with c-a so the sum is a sum of cosines. Real, and an
// integer only for special c.
double kloosterman(i64 m, i64 n, u64 c);

// Divisor formula sum_{d | (c,m)} mu(c/d) d.
i64 ramanujan_sum(i64 m, u64 c);
// sum over (a,c) = 1 of cos(2 pi a m / c), rounded.
i64 ramanujan_sum_exponential(i64 m, u64 c);

// J_order(t) for t >= 0, absolute error about 1e-14.
double bessel_j(int order, double t);

// exp(-1/(u(1-u))) with u = (x - kappa)/(1 - 2 kappa), zero outside [kappa, 1-kappa].
class BumpFunction {
public:
    explicit BumpFunction(double kappa = 0.05);

    double kappa() const noexcept { return kappa_; }
    double operator()(double x) const { return derivative(x, 0); }
    double derivative(double x, int order) const;  // order 0..3

private:
    double kappa_;
};

struct AvgBesselCheck {
    double y;
    double t;
    double lhs;       // 2 sum_{k even <= Y} phi((k-1)/Y) J_{k-1}(t)
    double rhs;       // phi(t/Y) + t/(6Y^3) phi'''(t/Y)
    double residual;  // |lhs - rhs|
    double bound;     // 100 t^2/Y^6 + 1e-8
};

AvgBesselCheck avg_bessel_check(const BumpFunction& phi, double y, double t);

// Decay exponent: minus the least-squares slope of log residual against log Y.
double log_log_slope(std::span<const double> ys, std::span<const double> residuals);

struct AvgKloosterman {
    double lhs;   // sum_{p < Y, (p,c) = 1} S(m, np; c) log p
    double main;  // Y/phi(c) R(m;c) R(n;c)
    double ratio;
};

// Throws DegenerateMainTerm when the main term vanishes.
AvgKloosterman avg_kloosterman_empirical(i64 m, i64 n, u64 c, u64 y, unsigned workers = 1);

constexpr u64 kMaxDeltaTerms = 100000;

class HeckeSeq {
public:
    explicit HeckeSeq(std::vector<i128> tau);  // tau[0] = tau(1)

    u64 size() const noexcept { return tau_.size(); }
    i128 tau(u64 n) const;       // 1 <= n <= size()
    double lambda(u64 n) const;  // tau(n)/n^{11/2}

private:
    std::vector<i128> tau_;
};

// tau(1..N) from q prod (1-q^n)^24, in exact 128-bit arithmetic.
HeckeSeq delta_qexp(u64 n);

// lambda(p^m) from lambda(p) by the Hecke recursion.
double hecke_prime_power(const HeckeSeq& seq, u64 p, int m);

struct SymLiftCheck {
    double lhs;  // lambda(p^r)^2
    double rhs;  // sum_{l=0}^r lambda(p^{2l})
    bool passed;
};

SymLiftCheck sym_lift_identity_check(const HeckeSeq& seq, int r, u64 p);

Rational dim_estimate(int k, u64 q);  // (k-1) phi(q)/12
double dim_sum(double x_delta, u64 q);  // phi(q) X^{2 delta}/48

double prime_power_skeleton(int r, u64 y);
double conv_skeleton(int r1, int r2, u64 y);

struct SkeletonCheck {
    double sum;
    u64 pi;
    double deviation;  // (S - pi(Y)) - multiple * log log Y
    bool passed;       // |deviation| <= bound
};

constexpr double kSkeletonBound = 3.0;

SkeletonCheck skeleton_check(int r, u64 y, double bound = kSkeletonBound);
SkeletonCheck conv_skeleton_check(int r1, int r2, u64 y, double bound = kSkeletonBound);

struct PeterssonResidual {
    u64 m;
    u64 n;
    double rhs;        // delta(m,n) + 2 pi sum_c S(m,n;c)/c J_11(4 pi sqrt(mn)/c)
    double predicted;  // rhs(1,1) lambda(m) lambda(n)
    double residual;
    u64 terms;
};

// Weight 12, level 1: the space is spanned by Delta.
PeterssonResidual petersson_residual(const HeckeSeq& seq, u64 m, u64 n);

}  // namespace lfbias
