#pragma once

// Constant j-invariant families. Traces of y^2 = x^3 + B (j = 0) and
// y^2 = x^3 - Ax (j = 1728) depend only on the sextic/quartic class of the
// coefficient; the sign inside the +-3b / +-2b pairs is never guessed.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lfbias/elliptic_families.hpp"
#include "lfbias/int128.hpp"
#include "lfbias/modular_core.hpp"

namespace lfbias {

struct TraceCandidates {
    std::vector<i64> values;  // one value, or the two members of a pair
    bool resolved = false;
};

// kind J0: y^2 = x^3 + coeff; kind J1728: y^2 = x^3 - coeff*x.
TraceCandidates predicted_trace(GaussKind kind, i64 coeff, u64 p);

struct J1728Family {
    i64 A;
    int r;  // y^2 = x^3 - T^r A x
};

struct J0Family {
    i64 B;
    int r;  // y^2 = x^3 + T^r B
};

struct GeneralConstantJ {
    i64 A;
    i64 B;  // y^2 = x^3 + T^2 A x + T^3 B
};

using ConstantJFamily = std::variant<J1728Family, J0Family, GeneralConstantJ>;

std::string describe(const ConstantJFamily& fam);
FamilySpec to_family_spec(const ConstantJFamily& fam);

// Moment values for the two sign choices of the unresolved pair.
struct CandidatePair {
    i128 plus;
    i128 minus;

    friend bool operator==(const CandidatePair&, const CandidatePair&) = default;
};

using ConstantJMoment = std::variant<i128, CandidatePair>;

// Exact sum over t mod p of a_t(p)^k. Throws SkippedPrime for p <= 3 or
// bad reduction, InvalidInput for k < 1 or r < 1.
ConstantJMoment constant_j_moment(const ConstantJFamily& fam, int k, u64 p);

// Exponent after reduction mod 4 (resp. 6) and t -> 1/t.
int reduced_exponent(const ConstantJFamily& fam);

// Trace of y^2 = x^3 + d^2 A x + d^3 B for a non-square d; checks that it is
// the negative of the trace of y^2 = x^3 + Ax + B.
i64 twist_trace(i64 A, i64 B, i64 d, u64 p);

// (p-1) trace(x^3+Ax+B)^k for even k, 0 for odd k.
i128 general_constant_j_moment(i64 A, i64 B, int k, u64 p);

// The j = 1728 or j = 0 family that y^2 = x^3 + T^2 A x + T^3 B belongs to
// when B or A vanishes mod p, else the general family.
ConstantJFamily route_general(i64 A, i64 B, u64 p);

// +1 or -1 when exactly one member equals the observed value.
std::optional<int> resolve_pair(const CandidatePair& pair, i128 observed);

struct ResolutionRecord {
    u64 p;
    std::string family;
    int k;
    CandidatePair candidates;
    i128 observed;
    int sign;  // 0 when unresolved
};

struct ConstantJMismatch {
    u64 p;
    std::string family;
    int k;
    std::string predicted;
    i128 observed;
};

struct ConstantJReport {
    u64 cases = 0;
    u64 resolved_pairs = 0;
    u64 skipped = 0;
    std::vector<ResolutionRecord> resolutions;
    std::vector<ConstantJMismatch> mismatches;
};

struct ConstantJSweep {
    u64 pmax = 200;
    int kmax = 6;
    int rmax = 7;
    i64 coeff_min = 1;
    i64 coeff_max = 10;
    bool include_general = true;
    unsigned workers = 1;
};

// Compares constant_j_moment with brute force over the whole grid.
ConstantJReport verify_constant_j(const ConstantJSweep& sweep);

}  // namespace lfbias
