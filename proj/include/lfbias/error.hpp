#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lfbias {

enum class ErrorKind {
    InvalidModulus,
    HypothesisViolated,
    NoRepresentation,
    InvalidInput,
    LimitExceeded,
    SkippedPrime,
    EmptySweep,
    InvalidResidue,
    InvalidTorsion,
    InvalidWeight,
    DegenerateMainTerm,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace lfbias
