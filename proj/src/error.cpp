#include "lfbias/error.hpp"
#include "lfbias/int128.hpp"

#include <algorithm>

namespace lfbias {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidModulus: return "InvalidModulus";
        case ErrorKind::HypothesisViolated: return "HypothesisViolated";
        case ErrorKind::NoRepresentation: return "NoRepresentation";
        case ErrorKind::InvalidInput: return "InvalidInput";
        case ErrorKind::LimitExceeded: return "LimitExceeded";
        case ErrorKind::SkippedPrime: return "SkippedPrime";
        case ErrorKind::EmptySweep: return "EmptySweep";
        case ErrorKind::InvalidResidue: return "InvalidResidue";
        case ErrorKind::InvalidTorsion: return "InvalidTorsion";
        case ErrorKind::InvalidWeight: return "InvalidWeight";
        case ErrorKind::DegenerateMainTerm: return "DegenerateMainTerm";
    }
    return "Unknown";
}

std::string to_string(i128 v) {
    if (v == 0) return "0";
    bool neg = v < 0;
    u128 u = neg ? u128(0) - u128(v) : u128(v);
    std::string out;
    while (u != 0) {
        out.push_back(char('0' + int(u % 10)));
        u /= 10;
    }
    if (neg) out.push_back('-');
    std::reverse(out.begin(), out.end());
    return out;
}

i128 parse_i128(const std::string& s) {
    std::size_t i = 0;
    bool neg = false;
    if (i < s.size() && (s[i] == '-' || s[i] == '+')) {
        neg = s[i] == '-';
        ++i;
    }
    if (i == s.size()) throw Error(ErrorKind::InvalidInput, "not an integer: '" + s + "'");
    i128 v = 0;
    for (; i < s.size(); ++i) {
        if (s[i] < '0' || s[i] > '9') throw Error(ErrorKind::InvalidInput, "not an integer: '" + s + "'");
        if (__builtin_mul_overflow(v, i128(10), &v) || __builtin_add_overflow(v, i128(s[i] - '0'), &v))
            throw Error(ErrorKind::InvalidInput, "integer out of range: '" + s + "'");
    }
    return neg ? -v : v;
}

}  // namespace lfbias
