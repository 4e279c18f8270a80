#include "lfbias/elliptic_families.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "lfbias/parallel.hpp"

namespace lfbias {

// ============================================================================
// Polynomial
// ============================================================================

Polynomial::Polynomial(std::initializer_list<i64> ascending) : c_(ascending) { trim(); }

Polynomial::Polynomial(std::vector<i64> ascending) : c_(std::move(ascending)) { trim(); }

Polynomial Polynomial::monomial(i64 coefficient, std::size_t degree) {
    std::vector<i64> c(degree + 1, 0);
    c[degree] = coefficient;
    return Polynomial(std::move(c));
}

void Polynomial::trim() {
    while (!c_.empty() && c_.back() == 0) c_.pop_back();
}

u64 Polynomial::eval_mod(u64 x, u64 p) const noexcept {
    u64 v = 0;
    x %= p;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) v = (mul_mod(v, x, p) + reduce_mod(*it, p)) % p;
    return v;
}

std::string Polynomial::to_string(char var) const {
    if (c_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (std::size_t i = c_.size(); i-- > 0;) {
        const i64 c = c_[i];
        if (c == 0) continue;
        const bool neg = c < 0;
        const u64 mag = neg ? u64(0) - u64(c) : u64(c);
        if (first)
            os << (neg ? "-" : "");
        else
            os << (neg ? " - " : " + ");
        if (mag != 1 || i == 0) os << mag;
        if (i >= 1) os << var;
        if (i >= 2) os << '^' << i;
        first = false;
    }
    return os.str();
}

namespace {

i64 checked_add(i64 a, i64 b) {
    i64 r;
    if (__builtin_add_overflow(a, b, &r)) throw Error(ErrorKind::InvalidInput, "polynomial coefficient overflow");
    return r;
}

i64 checked_mul(i64 a, i64 b) {
    i64 r;
    if (__builtin_mul_overflow(a, b, &r)) throw Error(ErrorKind::InvalidInput, "polynomial coefficient overflow");
    return r;
}

}  // namespace

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    std::vector<i64> c(std::max(a.c_.size(), b.c_.size()), 0);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = checked_add(a.coefficient(i), b.coefficient(i));
    return Polynomial(std::move(c));
}

Polynomial operator-(const Polynomial& a, const Polynomial& b) {
    std::vector<i64> c(std::max(a.c_.size(), b.c_.size()), 0);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = checked_add(a.coefficient(i), checked_mul(-1, b.coefficient(i)));
    return Polynomial(std::move(c));
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<i64> c(a.c_.size() + b.c_.size() - 1, 0);
    for (std::size_t i = 0; i < a.c_.size(); ++i)
        for (std::size_t j = 0; j < b.c_.size(); ++j) c[i + j] = checked_add(c[i + j], checked_mul(a.c_[i], b.c_[j]));
    return Polynomial(std::move(c));
}

// ============================================================================
// Registry
// ============================================================================

namespace {

constexpr std::array<RegistryEntry, 13> kRegistry{{
    {RegistryId::Fam1, "fam1", "y^2 = (ax+b)(cx^2+dx+e+T)", "a,b,c,d,e", "0",
     "p^2 - p(2+(-1/p)) if p does not divide ad-2bc; (p^2-p)(1+(-1/p)) otherwise", ""},
    {RegistryId::Fam2, "fam2", "y^2 = (ax^2+bx+c)(dx+e+T)", "a,b,c,d,e", "0",
     "p^2 - p(1+((b^2-4ac)/p)) - 1 if p does not divide b^2-4ac; p-1 otherwise", ""},
    {RegistryId::Fam3, "fam3", "y^2 = x(ax^2+bx+c+dTx)", "a,b,c,d", "0", "-1 - p(ac/p)",
     "p^2 - p(1+(ac/p)) - 1 if p does not divide c; p-1 otherwise"},
    {RegistryId::Fam4, "fam4", "y^2 = x(ax+b)(cx+d+Tx)", "a,b,c,d", "0", "p-1",
     "p^2-2p-1 if p divides neither b nor d; p^2-p if p|b only; p-1 if p|d only; 0 if p|b and p|d"},
    {RegistryId::Table1Row1, "table1-row1", "y^2 = x^3 + Sx + T", "", "0", "p^3 - p^2", ""},
    {RegistryId::Table1Row2, "table1-row2", "y^2 = x^3 + 2^4(-3)^3(9T+1)^2", "", "0",
     "2p^2-2p if p = 2 mod 3; 0 if p = 1 mod 3", "2p^2-2p if p = 1 mod 3; 0 if p = 2 mod 3"},
    {RegistryId::Table1Row3, "table1-row3", "y^2 = x^3 +- 4(4T+2)x", "sign", "0",
     "2p^2-2p if p = 1 mod 4; 0 if p = 3 mod 4", ""},
    {RegistryId::Table1Row4, "table1-row4", "y^2 = x^3 + (T+1)x^2 + Tx", "", "0", "p^2 - 2p - 1", ""},
    {RegistryId::Table1Row5, "table1-row5", "y^2 = x^3 + x^2 + 2T + 1", "", "0", "p^2 - 2p - (-3/p)",
     "p^2 - 2p - p(-3/p)"},
    {RegistryId::Table1Row6, "table1-row6", "y^2 = x^3 + Tx^2 + 1", "", "-p", "p^2 - n_{3,2,p}p - 1 + c_{3/2}(p)", ""},
    {RegistryId::Table1Row7, "table1-row7", "y^2 = x^3 - T^2x + T^2", "", "-2p", "p^2 - p - c_1(p) - c_0(p)", ""},
    {RegistryId::Table1Row8, "table1-row8", "y^2 = x^3 - T^2x + T^4", "", "-2p", "p^2 - p - c_1(p) - c_0(p)", ""},
    {RegistryId::Table1Row9, "table1-row9", "y^2 = x^3 + Tx^2 - (T+3)x + 1", "", "-2c_{p,1;4}p",
     "p^2 - 4c_{p,1;6}p - 1", ""},
}};

std::size_t expected_params(RegistryId id) {
    switch (id) {
        case RegistryId::Fam1:
        case RegistryId::Fam2: return 5;
        case RegistryId::Fam3:
        case RegistryId::Fam4: return 4;
        default: return 0;
    }
}

bool is_table_row(RegistryId id) { return id >= RegistryId::Table1Row1; }

}  // namespace

std::span<const RegistryEntry> registry() { return kRegistry; }

const RegistryEntry& registry_entry(RegistryId id) { return kRegistry[static_cast<std::size_t>(id)]; }

RegistryId parse_registry_key(std::string_view key) {
    for (const auto& e : kRegistry)
        if (e.key == key) return e.id;
    throw Error(ErrorKind::InvalidInput, "unknown family '" + std::string(key) + "'");
}

// ============================================================================
// FamilySpec
// ============================================================================

FamilySpec::FamilySpec(LinearInT form) : form_(std::move(form)) {
    if (std::get<LinearInT>(form_).P.is_zero())
        throw Error(ErrorKind::InvalidInput, "P(x) must not be identically zero");
    build();
}

FamilySpec::FamilySpec(GeneralWeierstrass form) : form_(std::move(form)) { build(); }

FamilySpec::FamilySpec(RegistryId id, std::vector<i64> params) : form_(RegistryFamily{id, std::move(params)}) {
    auto& rf = std::get<RegistryFamily>(form_);
    if (id == RegistryId::Table1Row3) {
        if (rf.params.empty()) rf.params = {1};
        if (rf.params.size() != 1 || (rf.params[0] != 1 && rf.params[0] != -1))
            throw Error(ErrorKind::InvalidInput, "table1-row3 takes one parameter, the sign +1 or -1");
    } else if (rf.params.size() != expected_params(id)) {
        throw Error(ErrorKind::InvalidInput, std::string(registry_entry(id).key) + " takes " +
                                                 std::to_string(expected_params(id)) + " parameters, got " +
                                                 std::to_string(rf.params.size()));
    }
    build();
}

std::optional<RegistryId> FamilySpec::registry_id() const noexcept {
    if (auto r = std::get_if<RegistryFamily>(&form_)) return r->id;
    return std::nullopt;
}

std::string FamilySpec::name() const {
    return std::visit(
        [](const auto& f) -> std::string {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, LinearInT>) {
                return "linear P=" + f.P.to_string() + " Q=" + f.Q.to_string();
            } else if constexpr (std::is_same_v<T, GeneralWeierstrass>) {
                return "weierstrass A=" + f.A.to_string('T') + " B=" + f.B.to_string('T');
            } else {
                std::string s(registry_entry(f.id).key);
                for (std::size_t i = 0; i < f.params.size(); ++i)
                    s += (i == 0 ? "(" : ",") + std::to_string(f.params[i]);
                if (!f.params.empty()) s += ")";
                return s;
            }
        },
        form_);
}

void FamilySpec::build() {
    // Linear-in-T forms: coefficient of x^i is Q_i + P_i T.
    auto from_linear = [this](const Polynomial& P, const Polynomial& Q) {
        const std::size_t n = static_cast<std::size_t>(std::max(P.degree(), Q.degree()) + 1);
        x_coeffs_.assign(n, Polynomial{});
        for (std::size_t i = 0; i < n; ++i) x_coeffs_[i] = Polynomial{Q.coefficient(i), P.coefficient(i)};
    };
    auto from_weierstrass = [this](const Polynomial& A, const Polynomial& B) {
        x_coeffs_ = {B, A, Polynomial{}, Polynomial{1}};
    };

    if (auto l = std::get_if<LinearInT>(&form_)) {
        from_linear(l->P, l->Q);
        return;
    }
    if (auto w = std::get_if<GeneralWeierstrass>(&form_)) {
        from_weierstrass(w->A, w->B);
        return;
    }
    const auto& r = std::get<RegistryFamily>(form_);
    const auto& q = r.params;
    const Polynomial x{0, 1};
    switch (r.id) {
        case RegistryId::Fam1: {
            const Polynomial lin{q[1], q[0]};
            from_linear(lin, lin * Polynomial{q[4], q[3], q[2]});
            break;
        }
        case RegistryId::Fam2: {
            const Polynomial quad{q[2], q[1], q[0]};
            from_linear(quad, quad * Polynomial{q[4], q[3]});
            break;
        }
        case RegistryId::Fam3:
            from_linear(Polynomial::monomial(q[3], 2), Polynomial{0, q[2], q[1], q[0]});
            break;
        case RegistryId::Fam4: {
            const Polynomial xlin = x * Polynomial{q[1], q[0]};
            from_linear(x * xlin, xlin * Polynomial{q[3], q[2]});
            break;
        }
        case RegistryId::Table1Row1:
            two_parameter_ = true;
            x_coeffs_.clear();
            break;
        case RegistryId::Table1Row2: {
            const Polynomial inner{1, 9};
            from_weierstrass(Polynomial{}, Polynomial{16 * -27} * inner * inner);
            break;
        }
        case RegistryId::Table1Row3: {
            const i64 s = q[0];
            from_linear(Polynomial{0, 16 * s}, Polynomial{0, 8 * s, 0, 1});
            break;
        }
        case RegistryId::Table1Row4: from_linear(Polynomial{0, 1, 1}, Polynomial{0, 0, 1, 1}); break;
        case RegistryId::Table1Row5: from_linear(Polynomial{2}, Polynomial{1, 0, 1, 1}); break;
        case RegistryId::Table1Row6: from_linear(Polynomial{0, 0, 1}, Polynomial{1, 0, 0, 1}); break;
        case RegistryId::Table1Row7: from_weierstrass(Polynomial{0, 0, -1}, Polynomial{0, 0, 1}); break;
        case RegistryId::Table1Row8: from_weierstrass(Polynomial{0, 0, -1}, Polynomial{0, 0, 0, 0, 1}); break;
        case RegistryId::Table1Row9: from_linear(Polynomial{0, -1, 1}, Polynomial{1, -3, 0, 1}); break;
    }
}

std::optional<std::pair<Polynomial, Polynomial>> FamilySpec::linear_form() const {
    if (two_parameter_) return std::nullopt;
    std::vector<i64> P(x_coeffs_.size()), Q(x_coeffs_.size());
    for (std::size_t i = 0; i < x_coeffs_.size(); ++i) {
        if (x_coeffs_[i].degree() > 1) return std::nullopt;
        Q[i] = x_coeffs_[i].coefficient(0);
        P[i] = x_coeffs_[i].coefficient(1);
    }
    Polynomial pp(std::move(P));
    if (pp.is_zero()) return std::nullopt;
    return std::make_pair(std::move(pp), Polynomial(std::move(Q)));
}

std::optional<std::string> FamilySpec::hypothesis_violation(u64 p) const {
    if (p < 3 || !is_prime(p)) return "p = " + std::to_string(p) + " is not an odd prime";
    const auto* r = std::get_if<RegistryFamily>(&form_);
    if (r == nullptr) return std::nullopt;
    if (is_table_row(r->id)) {
        if (p < 5) return "p < 5";
        return std::nullopt;
    }
    auto divides = [p](i64 v) { return reduce_mod(v, p) == 0; };
    const auto& q = r->params;
    switch (r->id) {
        case RegistryId::Fam1:
            if (divides(q[0])) return "p divides a";
            if (divides(q[2])) return "p divides c";
            break;
        case RegistryId::Fam2:
        case RegistryId::Fam3:
            if (divides(q[0])) return "p divides a";
            if (divides(q[3])) return "p divides d";
            break;
        case RegistryId::Fam4:
            if (divides(q[0])) return "p divides a";
            break;
        default: break;
    }
    return std::nullopt;
}

// ============================================================================
// Traces and brute-force moments
// ============================================================================

namespace {

void require_prime(u64 p) {
    if (!is_prime(p)) throw Error(ErrorKind::InvalidModulus, std::to_string(p) + " is not prime");
    if (p > UINT32_MAX) throw Error(ErrorKind::LimitExceeded, "point counting needs p < 2^32");
}

// -sum_x chi(c_0 + c_1 x + ... ); coefficients reduced, p < 2^32.
i64 trace_reduced(std::span<const u64> c, const QuadraticCharacter& chi) {
    const u64 p = chi.modulus();
    i64 s = 0;
    if (c.size() == 4) {
        const u64 c0 = c[0], c1 = c[1], c2 = c[2], c3 = c[3];
        for (u64 x = 0; x < p; ++x) s += chi((((c3 * x + c2) % p * x + c1) % p * x + c0) % p);
        return -s;
    }
    for (u64 x = 0; x < p; ++x) {
        u64 v = 0;
        for (auto it = c.rbegin(); it != c.rend(); ++it) v = (v * x + *it) % p;
        s += chi(v);
    }
    return -s;
}

std::vector<u64> specialize(std::span<const Polynomial> coeffs, u64 t, u64 p) {
    std::vector<u64> c(coeffs.size());
    for (std::size_t i = 0; i < coeffs.size(); ++i) c[i] = coeffs[i].eval_mod(t, p);
    return c;
}

i128 checked_power_sum(std::span<const i64> traces, int k) {
    i128 total = 0;
    for (i64 a : traces) {
        i128 term = 1;
        for (int j = 0; j < k; ++j)
            if (__builtin_mul_overflow(term, static_cast<i128>(a), &term))
                throw Error(ErrorKind::LimitExceeded, "moment exceeds 128-bit range");
        if (__builtin_add_overflow(total, term, &total)) throw Error(ErrorKind::LimitExceeded, "moment exceeds 128-bit range");
    }
    return total;
}

}  // namespace

i64 trace(const Polynomial& f, u64 p) {
    require_prime(p);
    if (p == 2) return 0;
    QuadraticCharacter chi{PrimeModulus(p)};
    std::vector<u64> c(f.coefficients().size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = reduce_mod(f.coefficients()[i], p);
    return trace_reduced(c, chi);
}

std::vector<i64> fiber_traces(const FamilySpec& fam, u64 p) {
    require_prime(p);
    const std::size_t fibers = fam.two_parameter() ? static_cast<std::size_t>(p * p) : static_cast<std::size_t>(p);
    std::vector<i64> out(fibers, 0);
    if (p == 2) return out;
    QuadraticCharacter chi{PrimeModulus(p)};
    if (fam.two_parameter()) {
        std::vector<u64> cube(p);
        for (u64 x = 0; x < p; ++x) cube[x] = x * x % p * x % p;
        for (u64 s = 0; s < p; ++s)
            for (u64 t = 0; t < p; ++t) {
                i64 acc = 0;
                for (u64 x = 0; x < p; ++x) acc += chi((cube[x] + s * x + t) % p);
                out[s * p + t] = -acc;
            }
        return out;
    }
    for (u64 t = 0; t < p; ++t) out[t] = trace_reduced(specialize(fam.x_coefficients(), t, p), chi);
    return out;
}

std::vector<i128> family_moments_brute(const FamilySpec& fam, std::span<const int> ks, u64 p, bool force) {
    for (int k : ks) {
        if (k < 0) throw Error(ErrorKind::InvalidInput, "moment order must be >= 0");
        if (k >= 3 && p > kBruteForceHighMomentLimit && !force)
            throw Error(ErrorKind::LimitExceeded, "brute force for k >= 3 refuses p > " +
                                                      std::to_string(kBruteForceHighMomentLimit) +
                                                      " (use --force)");
    }
    const auto traces = fiber_traces(fam, p);
    std::vector<i128> out;
    out.reserve(ks.size());
    for (int k : ks) out.push_back(checked_power_sum(traces, k));
    return out;
}

i128 family_moment_brute(const FamilySpec& fam, int k, u64 p, bool force) {
    const int ks[] = {k};
    return family_moments_brute(fam, ks, p, force).front();
}

// ============================================================================
// Linear-in-T second moment
// ============================================================================

i128 second_moment_semi_analytic(const Polynomial& P, const Polynomial& Q, u64 p) {
    require_prime(p);
    if (p == 2) return 0;
    const PrimeModulus pm(p);
    QuadraticCharacter chi(pm);
    std::vector<u64> pv(p), qv(p);
    for (u64 x = 0; x < p; ++x) {
        pv[x] = P.eval_mod(x, p);
        qv[x] = Q.eval_mod(x, p);
    }
    // A_2 = sum_{x,y} sum_t chi((P_x t + Q_x)(P_y t + Q_y)); symmetric in (x, y).
    i128 total = 0;
    for (u64 x = 0; x < p; ++x) {
        for (u64 y = x; y < p; ++y) {
            i64 inner;
            if (pv[x] != 0 && pv[y] != 0) {
                const u64 a = pv[x] * pv[y] % p;
                const u64 b = (pv[x] * qv[y] % p + qv[x] * pv[y] % p) % p;
                const u64 c = qv[x] * qv[y] % p;
                inner = quadratic_legendre_sum(a, b, c, chi);
            } else if (pv[x] == 0 && pv[y] == 0) {
                inner = static_cast<i64>(p) * chi(qv[x] * qv[y] % p);
            } else {
                // one factor constant in t, the other runs over all residues
                inner = 0;
            }
            total += (x == y ? 1 : 2) * static_cast<i128>(inner);
        }
    }
    return total;
}

i128 second_moment_grouped(const Polynomial& P, const Polynomial& Q, u64 p) {
    require_prime(p);
    if (p == 2) return 0;
    const PrimeModulus pm(p);
    QuadraticCharacter chi(pm);
    i64 s_zero = 0;  // sum of chi(Q(x)) over roots of P
    i64 s_all = 0;   // sum of chi(P(x)) over non-roots
    std::vector<i64> bucket(p, 0);
    for (u64 x = 0; x < p; ++x) {
        const u64 px = P.eval_mod(x, p), qx = Q.eval_mod(x, p);
        if (px == 0) {
            s_zero += chi(qx);
            continue;
        }
        const int c = chi(px);
        s_all += c;
        bucket[qx * pow_mod(px, p - 2, p) % p] += c;
    }
    i128 collisions = 0;
    for (i64 b : bucket) collisions += static_cast<i128>(b) * b;
    const i128 pp = static_cast<i128>(p);
    return pp * s_zero * s_zero - static_cast<i128>(s_all) * s_all + pp * collisions;
}

// ============================================================================
// Closed forms
// ============================================================================

i64 cube_roots_of_two(u64 p) {
    if (p == 2) return 1;  // x = 0
    if (p % 3 != 1) return 1;
    return pow_mod(2, (p - 1) / 3, p) == 1 ? 3 : 0;
}

i64 aux_c0(u64 p) {
    const PrimeModulus pm(p);
    return (legendre_symbol(-3, pm) + legendre_symbol(3, pm)) * static_cast<i64>(p);
}

i64 aux_c1(u64 p) {
    const i64 s = -trace(Polynomial{0, -1, 0, 1}, p);
    return s * s;
}

i64 aux_c32(u64 p) { return static_cast<i64>(p) * -trace(Polynomial{1, 0, 0, 4}, p); }

i128 closed_form_moment(const FamilySpec& fam, int k, u64 p, FormulaVariant variant) {
    const auto id = fam.registry_id();
    if (!id) throw Error(ErrorKind::InvalidInput, "closed forms exist only for registry families");
    if (k != 1 && k != 2) throw Error(ErrorKind::InvalidInput, "closed forms cover k = 1 and k = 2");
    if (auto why = fam.hypothesis_violation(p)) throw Error(ErrorKind::SkippedPrime, *why);

    const PrimeModulus pm(p);
    const i128 P = static_cast<i128>(p);
    const auto& q = std::get<RegistryFamily>(fam.form()).params;
    auto leg = [&](i64 a) { return static_cast<i128>(legendre_symbol(a, pm)); };
    auto divides = [&](i64 a) { return pm.reduce(a) == 0; };
    const bool corrected = variant == FormulaVariant::Corrected;

    if (k == 1) {
        switch (*id) {
            case RegistryId::Table1Row6: return -P;
            case RegistryId::Table1Row7:
            case RegistryId::Table1Row8: return -2 * P;
            case RegistryId::Table1Row9: return -2 * aux_indicator(p, 1, 4) * P;
            default: return 0;
        }
    }

    switch (*id) {
        case RegistryId::Fam1: {
            const i128 d = static_cast<i128>(q[0]) * q[3] - 2 * static_cast<i128>(q[1]) * q[2];
            if (d % P != 0) return P * P - P * (2 + leg(-1));
            return (P * P - P) * (1 + leg(-1));
        }
        case RegistryId::Fam2: {
            const i128 disc = static_cast<i128>(q[1]) * q[1] - 4 * static_cast<i128>(q[0]) * q[2];
            if (disc % P != 0) return P * P - P * (1 + leg(static_cast<i64>(disc % P))) - 1;
            return P - 1;
        }
        case RegistryId::Fam3: {
            const i64 ac = static_cast<i64>(pm.reduce(q[0]) * pm.reduce(q[2]) % p);
            if (!corrected) return -1 - P * leg(ac);
            if (divides(q[2])) return P - 1;
            return P * P - P * (1 + leg(ac)) - 1;
        }
        case RegistryId::Fam4: {
            if (!corrected) return P - 1;
            const bool pb = divides(q[1]), pd = divides(q[3]);
            if (!pb && !pd) return P * P - 2 * P - 1;
            if (pb && !pd) return P * P - P;
            if (!pb && pd) return P - 1;
            return 0;
        }
        case RegistryId::Table1Row1: return P * P * P - P * P;
        case RegistryId::Table1Row2: {
            const u64 full = corrected ? 1 : 2;
            return p % 3 == full ? 2 * P * P - 2 * P : 0;
        }
        case RegistryId::Table1Row3: return p % 4 == 1 ? 2 * P * P - 2 * P : 0;
        case RegistryId::Table1Row4: return P * P - 2 * P - 1;
        case RegistryId::Table1Row5: return P * P - 2 * P - (corrected ? P : 1) * leg(-3);
        case RegistryId::Table1Row6: return P * P - cube_roots_of_two(p) * P - 1 + aux_c32(p);
        case RegistryId::Table1Row7:
        case RegistryId::Table1Row8: return P * P - P - aux_c1(p) - aux_c0(p);
        case RegistryId::Table1Row9: return P * P - 4 * aux_indicator(p, 1, 6) * P - 1;
    }
    return 0;
}

// ============================================================================
// Singular fibers
// ============================================================================

namespace {

// Degree of gcd(f, f') over F_p; f given by reduced ascending coefficients.
int repeated_factor_degree(std::vector<u64> f, u64 p) {
    while (!f.empty() && f.back() == 0) f.pop_back();
    if (f.size() <= 1) return 0;
    std::vector<u64> g(f.size() - 1);
    for (std::size_t i = 1; i < f.size(); ++i) g[i - 1] = mul_mod(f[i], i % p, p);
    while (!g.empty() && g.back() == 0) g.pop_back();
    if (g.empty()) return static_cast<int>(f.size()) - 1;  // f is a p-th power
    auto a = std::move(f), b = std::move(g);
    while (!b.empty()) {
        // a mod b
        const u64 inv = pow_mod(b.back(), p - 2, p);
        while (a.size() >= b.size()) {
            const u64 factor = mul_mod(a.back(), inv, p);
            const std::size_t shift = a.size() - b.size();
            for (std::size_t i = 0; i < b.size(); ++i)
                a[i + shift] = (a[i + shift] + p - mul_mod(factor, b[i], p)) % p;
            while (!a.empty() && a.back() == 0) a.pop_back();
            if (a.empty()) break;
        }
        std::swap(a, b);
    }
    return static_cast<int>(a.size()) - 1;
}

}  // namespace

bool is_nonsingular_cubic(std::span<const u64> c, u64 p) {
    if (c.size() != 4 || c[3] % p == 0) return false;
    // 18abcd - 4b^3d + b^2c^2 - 4ac^3 - 27a^2d^2 for ax^3+bx^2+cx+d
    const u64 a = c[3] % p, b = c[2] % p, cc = c[1] % p, d = c[0] % p;
    auto m = [p](u64 x, u64 y) { return mul_mod(x, y, p); };
    const u64 pos = (m(m(18 % p, a), m(b, m(cc, d))) + m(m(b, b), m(cc, cc))) % p;
    const u64 neg = (m(4 % p, m(m(b, m(b, b)), d)) + m(4 % p, m(a, m(cc, m(cc, cc)))) +
                     m(27 % p, m(m(a, a), m(d, d)))) % p;
    return pos != neg;
}

u64 singular_fiber_count(const FamilySpec& fam, u64 p) {
    require_prime(p);
    u64 count = 0;
    if (fam.two_parameter()) {
        for (u64 s = 0; s < p; ++s)
            for (u64 t = 0; t < p; ++t)
                count += repeated_factor_degree({t, s, 0, 1}, p) > 0;
        return count;
    }
    const auto coeffs = fam.x_coefficients();
    const std::size_t generic = coeffs.size();
    for (u64 t = 0; t < p; ++t) {
        auto c = specialize(coeffs, t, p);
        if (generic == 4 && p > 3) {
            count += !is_nonsingular_cubic(c, p);
        } else if (generic == 0 || c.back() == 0 || repeated_factor_degree(c, p) > 0) {
            ++count;
        }
    }
    return count;
}

// ============================================================================
// Records, rank sums, sweeps
// ============================================================================

i128 MomentRecord::residual() const {
    std::optional<i128> lo, hi;
    for (const auto& v : {brute, semi_analytic, closed_form}) {
        if (!v) continue;
        lo = lo ? std::min(*lo, *v) : *v;
        hi = hi ? std::max(*hi, *v) : *v;
    }
    return lo ? *hi - *lo : 0;
}

MomentRecord moment_record(const FamilySpec& fam, int k, u64 p, MethodSet methods, FormulaVariant variant,
                           bool force) {
    MomentRecord r;
    r.p = p;
    r.k = k;
    if (auto why = fam.hypothesis_violation(p)) {
        r.skipped = true;
        r.reason = *why;
        return r;
    }
    if (methods.brute) r.brute = family_moment_brute(fam, k, p, force);
    if (methods.semi_analytic && k == 2)
        if (auto lf = fam.linear_form()) r.semi_analytic = second_moment_semi_analytic(lf->first, lf->second, p);
    if (methods.closed_form && fam.registry_id() && (k == 1 || k == 2)) r.closed_form = closed_form_moment(fam, k, p, variant);
    return r;
}

double rank_sum(const FamilySpec& fam, u64 x, FirstMomentSource source) {
    if (x < 2) throw Error(ErrorKind::InvalidInput, "rank_sum needs X >= 2");
    const auto primes = primes_up_to(x);
    double total = 0.0;
    for (u64 p : primes) {
        i128 a1;
        if (source == FirstMomentSource::Auto && fam.registry_id() && !fam.hypothesis_violation(p))
            a1 = closed_form_moment(fam, 1, p);
        else
            a1 = family_moment_brute(fam, 1, p);
        total += -static_cast<double>(a1) / static_cast<double>(p) * std::log(static_cast<double>(p));
    }
    return total / static_cast<double>(x);
}

BiasReport bias_sweep(const FamilySpec& fam, u64 x, unsigned workers) {
    std::vector<u64> candidates;
    std::vector<std::pair<u64, std::string>> skipped;
    for (auto p : primes_up_to(x)) {
        if (auto why = fam.hypothesis_violation(p))
            skipped.emplace_back(p, *why);
        else
            candidates.push_back(p);
    }
    if (candidates.empty()) throw Error(ErrorKind::EmptySweep, "no usable prime <= " + std::to_string(x));

    const auto lf = fam.linear_form();
    auto rows = parallel_map<BiasRow>(candidates.size(), workers, [&](std::size_t i) {
        const u64 p = candidates[i];
        const i128 a2 = lf ? second_moment_grouped(lf->first, lf->second, p) : family_moment_brute(fam, 2, p, true);
        const double pd = static_cast<double>(p);
        return BiasRow{p, a2, static_cast<double>(a2 - static_cast<i128>(p) * p) / pd, singular_fiber_count(fam, p)};
    });

    double main_sum = 0.0, lower_sum = 0.0;
    SignCounts signs;
    for (const auto& r : rows) {
        const double pd = static_cast<double>(r.p);
        main_sum += static_cast<double>(r.second_moment) / (pd * pd);
        lower_sum += r.lower_term;
        const i128 diff = r.second_moment - static_cast<i128>(r.p) * r.p;
        if (diff < 0)
            ++signs.negative;
        else if (diff == 0)
            ++signs.zero;
        else
            ++signs.positive;
    }
    const double n = static_cast<double>(rows.size());
    BiasReport report{fam, x, main_sum / n, lower_sum / n, signs, false, std::move(rows), std::move(skipped)};
    report.michel_like = std::fabs(report.main_term_avg - 1.0) <= 0.1;
    return report;
}

}  // namespace lfbias
