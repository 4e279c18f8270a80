#pragma once

// One-parameter elliptic-curve families y^2 = f(x, T) over F_p: exact
// moments A_k(p) = sum_t a_t(p)^k by point counting, by the (x, y) double
// sum for families linear in T, and by registered closed forms.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "lfbias/int128.hpp"
#include "lfbias/modular_core.hpp"

namespace lfbias {

class Polynomial {
public:
    Polynomial() = default;
    Polynomial(std::initializer_list<i64> ascending);
    explicit Polynomial(std::vector<i64> ascending);

    static Polynomial monomial(i64 coefficient, std::size_t degree);

    int degree() const noexcept { return static_cast<int>(c_.size()) - 1; }  // -1 for zero
    bool is_zero() const noexcept { return c_.empty(); }
    std::span<const i64> coefficients() const noexcept { return c_; }
    i64 coefficient(std::size_t i) const noexcept { return i < c_.size() ? c_[i] : 0; }

    u64 eval_mod(u64 x, u64 p) const noexcept;
    std::string to_string(char var = 'x') const;

    friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator-(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
    friend bool operator==(const Polynomial&, const Polynomial&) = default;

private:
    void trim();
    std::vector<i64> c_;
};

enum class RegistryId {
    Fam1,
    Fam2,
    Fam3,
    Fam4,
    Table1Row1,
    Table1Row2,
    Table1Row3,
    Table1Row4,
    Table1Row5,
    Table1Row6,
    Table1Row7,
    Table1Row8,
    Table1Row9,
};

struct RegistryEntry {
    RegistryId id;
    std::string_view key;       // CLI name, e.g. "fam1", "table1-row4"
    std::string_view equation;  // source string, e.g. "y^2 = (ax+b)(cx^2+dx+e+T)"
    std::string_view params;    // parameter names, comma separated
    std::string_view first_moment;
    std::string_view second_moment;
    std::string_view corrected_second_moment;  // empty when the stated form is exact
};

std::span<const RegistryEntry> registry();
const RegistryEntry& registry_entry(RegistryId id);
RegistryId parse_registry_key(std::string_view key);  // throws InvalidInput

struct LinearInT {
    Polynomial P;
    Polynomial Q;
};

struct RegistryFamily {
    RegistryId id;
    std::vector<i64> params;
};

struct GeneralWeierstrass {
    Polynomial A;
    Polynomial B;
};

using FamilyForm = std::variant<LinearInT, RegistryFamily, GeneralWeierstrass>;

class FamilySpec {
public:
    explicit FamilySpec(LinearInT form);
    explicit FamilySpec(GeneralWeierstrass form);
    FamilySpec(RegistryId id, std::vector<i64> params = {});

    const FamilyForm& form() const noexcept { return form_; }
    std::optional<RegistryId> registry_id() const noexcept;
    std::string name() const;

    // y^2 = sum_i x_coefficients()[i](T) x^i. Empty for the two-parameter row.
    std::span<const Polynomial> x_coefficients() const noexcept { return x_coeffs_; }
    bool two_parameter() const noexcept { return two_parameter_; }

    // (P, Q) with f = P(x)T + Q(x), when f is at most linear in T.
    std::optional<std::pair<Polynomial, Polynomial>> linear_form() const;

    // Reason p may not be used with the closed forms, or nullopt.
    std::optional<std::string> hypothesis_violation(u64 p) const;

private:
    void build();

    FamilyForm form_;
    std::vector<Polynomial> x_coeffs_;
    bool two_parameter_ = false;
};

// a(p) = -sum_x (f(x)/p); 0 for p = 2, where every x has exactly one y.
i64 trace(const Polynomial& f, u64 p);

// a_t(p) for t = 0..p-1 (two-parameter row: index s*p + t).
std::vector<i64> fiber_traces(const FamilySpec& fam, u64 p);

inline constexpr u64 kBruteForceHighMomentLimit = 20000;

i128 family_moment_brute(const FamilySpec& fam, int k, u64 p, bool force = false);
// Several orders from one pass over the fibers.
std::vector<i128> family_moments_brute(const FamilySpec& fam, std::span<const int> ks, u64 p, bool force = false);

// A_2 through the (x, y) double sum with the inner t-sum in closed form.
i128 second_moment_semi_analytic(const Polynomial& P, const Polynomial& Q, u64 p);
// A_2 in O(p log p): groups x by the ratio Q(x)/P(x), whose coincidences are
// exactly the vanishing of the discriminant.
i128 second_moment_grouped(const Polynomial& P, const Polynomial& Q, u64 p);

enum class FormulaVariant { Stated, Corrected };

// Throws Error(SkippedPrime) when the family's hypotheses fail at p.
i128 closed_form_moment(const FamilySpec& fam, int k, u64 p, FormulaVariant variant = FormulaVariant::Stated);

// Auxiliary quantities of the registered closed forms.
i64 cube_roots_of_two(u64 p);
i64 aux_c0(u64 p);
i64 aux_c1(u64 p);
i64 aux_c32(u64 p);
inline i64 aux_indicator(u64 p, u64 a, u64 m) { return p % m == a % m ? 1 : 0; }

// t in F_p whose specialization is not an elliptic curve (degree drop or
// repeated root). Two-parameter row counts (s, t) pairs.
u64 singular_fiber_count(const FamilySpec& fam, u64 p);
// Nonsingular cubic specialization test on already-reduced coefficients.
bool is_nonsingular_cubic(std::span<const u64> coeffs, u64 p);

struct MomentRecord {
    u64 p = 0;
    int k = 0;
    std::optional<i128> brute;
    std::optional<i128> semi_analytic;
    std::optional<i128> closed_form;
    bool skipped = false;
    std::string reason;

    // Spread of the available values; 0 when they all agree.
    i128 residual() const;
};

struct MethodSet {
    bool brute = true;
    bool semi_analytic = true;
    bool closed_form = true;
};

MomentRecord moment_record(const FamilySpec& fam, int k, u64 p, MethodSet methods = {},
                           FormulaVariant variant = FormulaVariant::Stated, bool force = false);

enum class FirstMomentSource { Auto, BruteForce };

double rank_sum(const FamilySpec& fam, u64 x, FirstMomentSource source = FirstMomentSource::Auto);

struct SignCounts {
    u64 negative = 0;
    u64 zero = 0;
    u64 positive = 0;
};

struct BiasRow {
    u64 p;
    i128 second_moment;
    double lower_term;  // (A_2(p) - p^2)/p
    u64 singular_fibers;
};

struct BiasReport {
    FamilySpec family;
    u64 x;
    double main_term_avg;   // mean of A_2(p)/p^2
    double lower_term_avg;  // mean of (A_2(p) - p^2)/p
    SignCounts sign_counts;
    bool michel_like;  // main_term_avg within 0.1 of 1
    std::vector<BiasRow> rows;
    std::vector<std::pair<u64, std::string>> skipped;
};

// Throws EmptySweep when no prime <= x is usable.
BiasReport bias_sweep(const FamilySpec& fam, u64 x, unsigned workers = 1);

}  // namespace lfbias
