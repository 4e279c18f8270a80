#pragma once

#include <cstdint>
#include <string>

namespace lfbias {

using i128 = __int128;
using u128 = unsigned __int128;

std::string to_string(i128 v);

// Parses an optionally signed decimal; throws Error(InvalidInput) on junk or overflow.
i128 parse_i128(const std::string& s);

inline bool fits_i64(i128 v) noexcept {
    return v >= INT64_MIN && v <= INT64_MAX;
}

}  // namespace lfbias
