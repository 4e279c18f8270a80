#include "lfbias/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <ostream>
#include <set>
#include <sstream>

#include "lfbias/constant_j.hpp"
#include "lfbias/dirichlet_families.hpp"
#include "lfbias/elliptic_families.hpp"
#include "lfbias/error.hpp"
#include "lfbias/parallel.hpp"
#include "lfbias/petersson_tools.hpp"

namespace lfbias {
namespace {

using ojson = nlohmann::ordered_json;

struct Common {
    unsigned workers = 1;
    std::string output;
    std::string format = "csv";
};

// One report: CSV emits the rows under `columns`; JSON emits {config, rows, summary}.
struct Report {
    ojson config = ojson::object();
    std::vector<std::string> columns;
    std::vector<ojson> rows;
    ojson summary = ojson::object();
    bool mismatch = false;
};

ojson json_int(i128 v) {
    if (fits_i64(v)) return static_cast<std::int64_t>(v);
    return to_string(v);
}

template <class T>
ojson json_opt(const std::optional<T>& v) {
    if (!v) return nullptr;
    if constexpr (std::is_same_v<T, i128>)
        return json_int(*v);
    else
        return *v;
}

std::string csv_cell(const ojson& v) {
    std::string s;
    if (v.is_null()) return "";
    if (v.is_string())
        s = v.get<std::string>();
    else
        s = v.dump();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

std::string render(const Report& r, const std::string& format) {
    std::ostringstream os;
    if (format == "json") {
        ojson doc = ojson::object();
        doc["config"] = r.config;
        doc["rows"] = ojson::array();
        for (const auto& row : r.rows) doc["rows"].push_back(row);
        doc["summary"] = r.summary;
        os << doc.dump(2) << "\n";
        return os.str();
    }
    for (std::size_t i = 0; i < r.columns.size(); ++i) os << (i ? "," : "") << r.columns[i];
    os << "\n";
    for (const auto& row : r.rows) {
        for (std::size_t i = 0; i < r.columns.size(); ++i) {
            const auto it = row.find(r.columns[i]);
            os << (i ? "," : "") << (it == row.end() ? std::string() : csv_cell(*it));
        }
        os << "\n";
    }
    return os.str();
}

template <class T>
T parse_number(std::string_view s) {
    T v{};
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) throw Error(ErrorKind::InvalidInput, "not a number: '" + std::string(s) + "'");
    return v;
}

template <class T>
std::vector<T> parse_list(const std::string& s) {
    std::vector<T> out;
    if (s.empty()) return out;
    std::size_t start = 0;
    while (true) {
        const auto comma = s.find(',', start);
        std::string_view item(s.data() + start, (comma == std::string::npos ? s.size() : comma) - start);
        while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
        while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
        out.push_back(parse_number<T>(item));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::vector<u64> primes_in(u64 lo, u64 hi) {
    if (hi > kDefaultSieveCap) throw Error(ErrorKind::LimitExceeded, "pmax above the sieve cap");
    std::vector<u64> out;
    for (u64 p : primes_up_to(hi))
        if (p >= lo) out.push_back(p);
    return out;
}

FormulaVariant parse_variant(const std::string& v) {
    return v == "corrected" ? FormulaVariant::Corrected : FormulaVariant::Stated;
}

ojson record_row(const MomentRecord& r) {
    ojson row = ojson::object();
    row["prime"] = r.p;
    row["k"] = r.k;
    row["brute"] = json_opt(r.brute);
    row["semi_analytic"] = json_opt(r.semi_analytic);
    row["closed_form"] = json_opt(r.closed_form);
    row["residual"] = json_int(r.residual());
    row["skipped"] = r.skipped;
    row["reason"] = r.reason;
    return row;
}

const std::vector<std::string> kRecordColumns{"prime", "k", "brute", "semi_analytic", "closed_form", "residual", "skipped", "reason"};

ojson sign_counts_json(const SignCounts& s) {
    return ojson{{"negative", s.negative}, {"zero", s.zero}, {"positive", s.positive}};
}

void count_sign(SignCounts& s, int sign) {
    (sign > 0 ? s.positive : (sign < 0 ? s.negative : s.zero)) += 1;
}

int sign_of(double v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

// ---------------------------------------------------------------------------

struct SweepOpts {
    std::string family;
    std::string params;
    u64 pmin = 5;
    u64 pmax = 500;
    std::string ks = "2";
    std::string methods = "brute,semi_analytic,closed_form";
    std::string variant = "stated";
    bool force = false;
};

Report sweep_elliptic(const SweepOpts& o, const Common& c, std::ostream& err) {
    const FamilySpec fam(parse_registry_key(o.family), parse_list<i64>(o.params));
    const auto ks = parse_list<int>(o.ks);
    MethodSet methods{false, false, false};
    std::stringstream ms(o.methods);
    for (std::string m; std::getline(ms, m, ',');) {
        if (m == "brute") methods.brute = true;
        else if (m == "semi_analytic") methods.semi_analytic = true;
        else if (m == "closed_form") methods.closed_form = true;
        else throw Error(ErrorKind::InvalidInput, "unknown method '" + m + "'");
    }
    const auto primes = primes_in(o.pmin, o.pmax);
    err << "sweep-elliptic: " << fam.name() << ", " << primes.size() << " primes\n";

    const auto variant = parse_variant(o.variant);
    const auto per_prime = parallel_map<std::vector<MomentRecord>>(primes.size(), c.workers, [&](std::size_t i) {
        std::vector<MomentRecord> out;
        for (int k : ks) out.push_back(moment_record(fam, k, primes[i], methods, variant, o.force));
        return out;
    });

    Report r;
    r.config = {{"subcommand", "sweep-elliptic"}, {"family", fam.name()}, {"pmin", o.pmin}, {"pmax", o.pmax},
                {"k", ks}, {"methods", o.methods}, {"variant", o.variant}, {"force", o.force}};
    r.columns = kRecordColumns;
    double main_sum = 0, lower_sum = 0;
    u64 used = 0, mismatches = 0;
    SignCounts signs;
    for (const auto& recs : per_prime)
        for (const auto& rec : recs) {
            r.rows.push_back(record_row(rec));
            if (rec.residual() != 0) ++mismatches;
            if (rec.k != 2 || rec.skipped) continue;
            const auto v = rec.brute ? rec.brute : (rec.semi_analytic ? rec.semi_analytic : rec.closed_form);
            if (!v) continue;
            const double p = static_cast<double>(rec.p), a2 = static_cast<double>(*v);
            const double lower = (a2 - p * p) / p;
            main_sum += a2 / (p * p);
            lower_sum += lower;
            count_sign(signs, sign_of(lower));
            ++used;
        }
    r.summary["main_term_avg"] = used ? ojson(main_sum / static_cast<double>(used)) : ojson(nullptr);
    r.summary["lower_term_avg"] = used ? ojson(lower_sum / static_cast<double>(used)) : ojson(nullptr);
    r.summary["sign_counts"] = sign_counts_json(signs);
    r.summary["mismatches"] = mismatches;
    r.mismatch = mismatches > 0;
    return r;
}

// ---------------------------------------------------------------------------

struct VerifyOpts {
    u64 pmin = 5;
    u64 pmax = 300;
    unsigned samples = 20;
    u64 seed = 1;
    std::string variant = "stated";
};

std::vector<FamilySpec> verification_families(unsigned samples, u64 seed) {
    std::mt19937_64 rng(seed);
    auto coeff = [&rng] { return static_cast<i64>(rng() % 21) - 10; };
    std::vector<FamilySpec> out;
    for (const auto& e : registry()) {
        switch (e.id) {
            case RegistryId::Fam1:
            case RegistryId::Fam2:
            case RegistryId::Fam3:
            case RegistryId::Fam4: {
                const std::size_t n = e.id == RegistryId::Fam1 || e.id == RegistryId::Fam2 ? 5 : 4;
                for (unsigned s = 0; s < samples; ++s) {
                    std::vector<i64> params(n);
                    for (auto& v : params) v = coeff();
                    if (params[0] == 0) params[0] = 1;
                    out.emplace_back(e.id, params);
                }
                break;
            }
            case RegistryId::Table1Row3:
                out.emplace_back(e.id, std::vector<i64>{1});
                out.emplace_back(e.id, std::vector<i64>{-1});
                break;
            default:
                out.emplace_back(e.id);
        }
    }
    return out;
}

Report verify_closed_forms(const VerifyOpts& o, const Common& c, std::ostream& err) {
    const auto fams = verification_families(o.samples, o.seed);
    const auto primes = primes_in(o.pmin, o.pmax);
    const auto variant = parse_variant(o.variant);
    err << "verify-closed-forms: " << fams.size() << " families, " << primes.size() << " primes\n";
    const MethodSet methods{true, false, true};
    const auto recs = parallel_map<std::vector<MomentRecord>>(fams.size() * primes.size(), c.workers, [&](std::size_t i) {
        const auto& fam = fams[i / primes.size()];
        const u64 p = primes[i % primes.size()];
        return std::vector<MomentRecord>{moment_record(fam, 1, p, methods, variant), moment_record(fam, 2, p, methods, variant)};
    });

    Report r;
    r.config = {{"subcommand", "verify-closed-forms"}, {"pmin", o.pmin}, {"pmax", o.pmax}, {"samples", o.samples},
                {"seed", o.seed}, {"variant", o.variant}};
    r.columns = {"family"};
    r.columns.insert(r.columns.end(), kRecordColumns.begin(), kRecordColumns.end());
    ojson failing = ojson::array();
    u64 mismatches = 0, checked = 0;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const std::string name = fams[i / primes.size()].name();
        for (const auto& rec : recs[i]) {
            ojson row = ojson::object();
            row["family"] = name;
            row.update(record_row(rec));
            r.rows.push_back(row);
            if (!rec.skipped) ++checked;
            if (rec.residual() != 0) {
                ++mismatches;
                if (failing.empty() || failing.back() != name) failing.push_back(name);
            }
        }
    }
    r.summary = {{"families", fams.size()}, {"checked", checked}, {"mismatches", mismatches}, {"failing_families", failing}};
    r.mismatch = mismatches > 0;
    return r;
}

// ---------------------------------------------------------------------------

Report verify_constant_j_cmd(const ConstantJSweep& sweep, std::ostream& err) {
    err << "verify-constant-j: p <= " << sweep.pmax << ", k <= " << sweep.kmax << ", r <= " << sweep.rmax << "\n";
    const auto rep = verify_constant_j(sweep);
    Report r;
    r.config = {{"subcommand", "verify-constant-j"}, {"pmax", sweep.pmax}, {"kmax", sweep.kmax}, {"rmax", sweep.rmax},
                {"coeff_min", sweep.coeff_min}, {"coeff_max", sweep.coeff_max}, {"general", sweep.include_general}};
    r.columns = {"prime", "family", "k", "candidate_plus", "candidate_minus", "observed", "resolved_sign"};
    for (const auto& res : rep.resolutions)
        r.rows.push_back({{"prime", res.p}, {"family", res.family}, {"k", res.k}, {"candidate_plus", json_int(res.candidates.plus)},
                          {"candidate_minus", json_int(res.candidates.minus)}, {"observed", json_int(res.observed)},
                          {"resolved_sign", res.sign}});
    for (const auto& m : rep.mismatches) {
        if (!m.predicted.empty() && m.predicted.front() == '{') continue;  // already listed as an unresolved pair
        r.rows.push_back({{"prime", m.p}, {"family", m.family}, {"k", m.k}, {"candidate_plus", m.predicted},
                          {"candidate_minus", nullptr}, {"observed", json_int(m.observed)}, {"resolved_sign", 0}});
    }
    r.summary = {{"cases", rep.cases}, {"skipped", rep.skipped}, {"pairs", rep.resolutions.size()},
                 {"resolved_pairs", rep.resolved_pairs}, {"mismatches", rep.mismatches.size()}};
    r.mismatch = !rep.mismatches.empty();
    return r;
}

// ---------------------------------------------------------------------------

Report gauss_decomp_cmd(u64 p) {
    if (!is_prime(p)) throw Error(ErrorKind::InvalidModulus, std::to_string(p) + " is not prime");
    Report r;
    r.config = {{"subcommand", "gauss-decomp"}, {"p", p}};
    r.columns = {"kind", "p", "a", "b", "form"};
    u64 count = 0;
    for (auto kind : {GaussKind::J0, GaussKind::J1728}) {
        for (const auto& g : gauss_candidates(kind, p)) {
            const bool j0 = kind == GaussKind::J0;
            r.rows.push_back({{"kind", j0 ? "j0" : "j1728"}, {"p", p}, {"a", g.a}, {"b", g.b},
                              {"form", j0 ? "a^2+3b^2" : "a^2+b^2"}});
            ++count;
        }
    }
    r.summary = {{"representations", count}};
    return r;
}

// ---------------------------------------------------------------------------

std::vector<u64> checkpoints_from(u64 x, const std::string& list) {
    auto cps = parse_list<u64>(list);
    if (cps.empty()) {
        if (x == 0) throw Error(ErrorKind::InvalidInput, "give --x or --checkpoints");
        cps.push_back(x);
    }
    for (std::size_t i = 1; i < cps.size(); ++i)
        if (cps[i] <= cps[i - 1]) throw Error(ErrorKind::InvalidInput, "checkpoints must be ascending");
    return cps;
}

struct DirichletOpts {
    u64 q = 0;
    u64 x = 0;
    std::string checkpoints;
    u64 torsion = 0;
};

Report dirichlet_bias(const DirichletOpts& o, const Common& c) {
    const auto cps = checkpoints_from(o.x, o.checkpoints);
    const auto rows = parallel_map<ojson>(cps.size(), c.workers, [&](std::size_t i) {
        const u64 x = cps[i];
        const Rational direct = m2_direct(o.q, x);
        const auto dec = m2_decomposed(o.q, x);
        const Rational lower = direct - dec.main;
        ojson row = {{"x", x},
                     {"pi", primes_up_to(x).size()},
                     {"m2_exact", direct.to_string()},
                     {"m2", direct.to_double()},
                     {"decomposed", dec.value},
                     {"identity_residual", std::abs(dec.value - direct.to_double())},
                     {"lower_term", lower.to_double()},
                     {"sign", lower.num() > 0 ? 1 : (lower.num() < 0 ? -1 : 0)}};
        if (o.torsion) {
            const Rational t = m2_torsion(o.q, o.torsion, x);
            const auto td = m2_torsion_decomposed(o.q, o.torsion, x);
            row["torsion_m2_exact"] = t.to_string();
            row["torsion_decomposed_exact"] = td.value.to_string();
            row["torsion_main_coefficient"] = td.main_coefficient.to_string();
        }
        return row;
    });

    Report r;
    r.config = {{"subcommand", "dirichlet-bias"}, {"q", o.q}, {"checkpoints", cps}};
    if (o.torsion) r.config["torsion"] = o.torsion;
    r.columns = {"x", "pi", "m2_exact", "m2", "decomposed", "identity_residual", "lower_term", "sign"};
    if (o.torsion) r.columns.insert(r.columns.end(), {"torsion_m2_exact", "torsion_decomposed_exact", "torsion_main_coefficient"});
    double worst = 0;
    SignCounts signs;
    std::vector<int> sign_list;
    for (const auto& row : rows) {
        r.rows.push_back(row);
        worst = std::max(worst, row["identity_residual"].get<double>());
        sign_list.push_back(row["sign"].get<int>());
        count_sign(signs, sign_list.back());
        if (o.torsion && (row["torsion_main_coefficient"] != "0" || row["torsion_m2_exact"] != row["torsion_decomposed_exact"]))
            r.mismatch = true;
    }
    r.summary = {{"main_term", Rational(1, static_cast<i128>(o.q - 2)).to_string()},
                 {"max_identity_residual", worst},
                 {"sign_counts", sign_counts_json(signs)},
                 {"log_density", log_density(cps, sign_list)}};
    if (worst > 1e-12) r.mismatch = true;
    return r;
}

struct ConvolutionOpts {
    u64 q1 = 0;
    u64 q2 = 0;
    u64 x = 0;
    std::string checkpoints;
};

Report convolution_bias(const ConvolutionOpts& o, const Common& c) {
    const auto cps = checkpoints_from(o.x, o.checkpoints);
    const auto results = parallel_map<ConvolutionResult>(cps.size(), c.workers, [&](std::size_t i) {
        return m2_convolution(o.q1, o.q2, cps[i]);
    });
    Report r;
    r.config = {{"subcommand", "convolution-bias"}, {"q1", o.q1}, {"q2", o.q2}, {"checkpoints", cps}};
    r.columns = {"x", "pi", "m2_exact", "m2", "decomposed", "identity_residual", "lower_term", "sign"};
    double worst = 0;
    SignCounts signs;
    std::vector<int> sign_list;
    for (std::size_t i = 0; i < cps.size(); ++i) {
        const auto& res = results[i];
        const Rational lower = res.direct - res.main;
        const double residual = std::abs(res.decomposed - res.direct.to_double());
        worst = std::max(worst, residual);
        sign_list.push_back(lower.num() > 0 ? 1 : (lower.num() < 0 ? -1 : 0));
        count_sign(signs, sign_list.back());
        r.rows.push_back({{"x", cps[i]},
                          {"pi", primes_up_to(cps[i]).size()},
                          {"m2_exact", res.direct.to_string()},
                          {"m2", res.direct.to_double()},
                          {"decomposed", res.decomposed},
                          {"identity_residual", residual},
                          {"lower_term", lower.to_double()},
                          {"sign", sign_list.back()}});
    }
    const auto res = crt_residues(o.q1, o.q2);
    const bool crt_ok = res[2] % o.q1 == 1 && res[2] % o.q2 == o.q2 - 1 && res[3] % o.q1 == o.q1 - 1 && res[3] % o.q2 == 1;
    r.summary = {{"residues", res},
                 {"crt_ok", crt_ok},
                 {"main_term", Rational(1, static_cast<i128>((o.q1 - 2) * (o.q2 - 2))).to_string()},
                 {"max_identity_residual", worst},
                 {"sign_counts", sign_counts_json(signs)},
                 {"log_density", log_density(cps, sign_list)}};
    r.mismatch = worst > 1e-12 || !crt_ok;
    return r;
}

// ---------------------------------------------------------------------------

struct RaceOpts {
    u64 q = 0;
    u64 x = 0;
    std::string checkpoints;
    std::string residues;
};

Report race_cmd(const RaceOpts& o) {
    const auto cps = checkpoints_from(o.x, o.checkpoints);
    if (o.q == 0) throw Error(ErrorKind::InvalidModulus, "modulus must be positive");
    std::vector<i64> as = parse_list<i64>(o.residues);
    if (as.empty())
        for (u64 a = 1; a < std::max<u64>(o.q, 2); ++a)
            if (std::gcd(a, o.q) == 1) as.push_back(static_cast<i64>(a));
    const auto primes = primes_up_to(cps.back());
    Report r;
    r.config = {{"subcommand", "race"}, {"q", o.q}, {"checkpoints", cps}, {"residues", as}};
    r.columns = {"x", "q", "a", "pi_x", "pi_x_q_a", "E", "c"};
    for (u64 x : cps)
        for (i64 a : as) {
            const auto s = race_E(primes, x, o.q, a);
            r.rows.push_back({{"x", x}, {"q", o.q}, {"a", a}, {"pi_x", s.pi_x}, {"pi_x_q_a", s.pi_x_q_a}, {"E", s.e_value}, {"c", s.c}});
        }
    r.summary = {{"rows", r.rows.size()}};
    return r;
}

struct RankOpts {
    std::string family;
    std::string params;
    u64 x = 0;
    std::string source = "auto";
};

Report rank_sum_cmd(const RankOpts& o) {
    const FamilySpec fam(parse_registry_key(o.family), parse_list<i64>(o.params));
    const auto source = o.source == "brute" ? FirstMomentSource::BruteForce : FirstMomentSource::Auto;
    Report r;
    r.config = {{"subcommand", "rank-sum"}, {"family", fam.name()}, {"x", o.x}, {"source", o.source}};
    r.columns = {"family", "x", "rank_sum"};
    const double v = rank_sum(fam, o.x, source);
    r.rows.push_back({{"family", fam.name()}, {"x", o.x}, {"rank_sum", v}});
    r.summary = {{"rank_sum", v}};
    return r;
}

// ---------------------------------------------------------------------------

struct PeterssonOpts {
    u64 c_max = 997;
    u64 ramanujan_max = 200;
    u64 y = 1000000;
    u64 tau_n = kMaxDeltaTerms;
    std::string bessel_y = "25,50,100,200";
    std::string bessel_t = "1,5,10";
};

Report petersson_check(const PeterssonOpts& o, const Common& c, std::ostream& err) {
    Report r;
    r.config = {{"subcommand", "petersson-check"}, {"c_max", o.c_max}, {"ramanujan_max", o.ramanujan_max}, {"y", o.y},
                {"tau_n", o.tau_n}, {"bessel_y", o.bessel_y}, {"bessel_t", o.bessel_t}};
    r.columns = {"check", "params", "value", "bound", "passed", "hard"};
    u64 hard_failures = 0, reported_failures = 0;
    auto add = [&](const std::string& check, const std::string& params, ojson value, const std::string& bound, bool passed,
                   bool hard) {
        r.rows.push_back({{"check", check}, {"params", params}, {"value", value}, {"bound", bound}, {"passed", passed}, {"hard", hard}});
        if (!passed) ++(hard ? hard_failures : reported_failures);
    };

    err << "petersson-check: Kloosterman and Ramanujan sums\n";
    double weil = 0;
    for (u64 p : primes_up_to(o.c_max))
        for (i64 m = 1; m <= 10; ++m)
            for (i64 n = 1; n <= 10; ++n)
                if ((m * n) % static_cast<i64>(p) != 0)
                    weil = std::max(weil, std::abs(kloosterman(m, n, p)) / (2 * std::sqrt(static_cast<double>(p))));
    add("weil_bound", "prime c<=" + std::to_string(o.c_max) + ";m,n<=10", weil, "<=1", weil <= 1 + 1e-12, true);

    u64 ram_bad = 0;
    for (u64 cc = 1; cc <= o.ramanujan_max; ++cc)
        for (i64 m = 1; m <= static_cast<i64>(o.ramanujan_max); ++m)
            if (ramanujan_sum(m, cc) != ramanujan_sum_exponential(m, cc)) ++ram_bad;
    add("ramanujan_paths", "c,m<=" + std::to_string(o.ramanujan_max), ram_bad, "0", ram_bad == 0, true);

    err << "petersson-check: averaged Kloosterman sums, Y = " << o.y << "\n";
    for (u64 cc : {1, 2, 3, 5, 6}) {
        const auto a = avg_kloosterman_empirical(1, 1, cc, o.y, c.workers);
        add("avg_kloosterman", "m=1,n=1,c=" + std::to_string(cc), a.ratio, "[0.8,1.2]", a.ratio >= 0.8 && a.ratio <= 1.2, cc == 1);
    }

    err << "petersson-check: averaged Bessel sums\n";
    const BumpFunction phi;
    const auto ys = parse_list<double>(o.bessel_y);
    for (double t : parse_list<double>(o.bessel_t)) {
        std::vector<double> residuals;
        for (double y : ys) {
            const auto b = avg_bessel_check(phi, y, t);
            residuals.push_back(b.residual);
            std::ostringstream bound;
            bound << "<=" << b.bound;
            std::ostringstream params;
            params << "Y=" << y << ",t=" << t;
            add("avg_bessel", params.str(), b.residual, bound.str(), b.residual <= b.bound, false);
        }
        if (ys.size() >= 2) {
            const double slope = log_log_slope(ys, residuals);
            std::ostringstream params;
            params << "t=" << t;
            add("avg_bessel_slope", params.str(), std::isfinite(slope) ? ojson(slope) : ojson(nullptr), "[2.5,3.5]",
                slope >= 2.5 && slope <= 3.5, false);
        }
    }

    err << "petersson-check: tau expansion to " << o.tau_n << "\n";
    const auto seq = delta_qexp(o.tau_n);
    u64 mult_bad = 0;
    for (u64 m = 1; m <= 1000; ++m)
        for (u64 n = 1; n <= 1000 && m * n <= seq.size(); ++n)
            if (std::gcd(m, n) == 1 && seq.tau(m * n) != seq.tau(m) * seq.tau(n)) ++mult_bad;
    add("tau_multiplicative", "coprime m,n<=1000,mn<=" + std::to_string(seq.size()), mult_bad, "0", mult_bad == 0, true);

    double deligne = 0;
    for (u64 p : primes_up_to(std::min<u64>(97, seq.size()))) deligne = std::max(deligne, std::abs(seq.lambda(p)));
    add("deligne", "p<=97", deligne, "<=2", deligne <= 2, true);

    u64 sym_bad = 0, sym_checked = 0;
    for (int rr = 0; rr <= 4; ++rr)
        for (u64 p : primes_up_to(seq.size())) {
            if (std::pow(static_cast<double>(p), 2 * rr) > static_cast<double>(seq.size())) break;
            ++sym_checked;
            if (!sym_lift_identity_check(seq, rr, p).passed) ++sym_bad;
        }
    add("sym_lift", "r<=4,p^(2r)<=" + std::to_string(seq.size()) + ",cases=" + std::to_string(sym_checked), sym_bad, "0",
        sym_bad == 0, true);

    for (auto [m, n] : std::vector<std::pair<u64, u64>>{{1, 2}, {2, 3}, {5, 7}}) {
        if (m > seq.size() || n > seq.size()) continue;
        const auto pr = petersson_residual(seq, m, n);
        add("petersson_weight12", "m=" + std::to_string(m) + ",n=" + std::to_string(n), pr.residual, "<=1e-6",
            pr.residual <= 1e-6, false);
    }

    r.summary = {{"hard_failures", hard_failures}, {"reported_failures", reported_failures}};
    r.mismatch = hard_failures > 0;
    return r;
}

// ---------------------------------------------------------------------------

bool has_flag(const std::vector<std::string>& args, const std::string& name) {
    for (const auto& a : args)
        if (a == name || a.rfind(name + "=", 0) == 0) return true;
    return false;
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Appends key=value lines of the --config file as flags, unless given on the command line.
std::vector<std::string> apply_config_file(std::vector<std::string> args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty()) return args;
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot read config file " + path);
    const std::set<std::string> flags{"force", "no-general"};
    std::string line;
    std::vector<std::string> extra;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(ErrorKind::InvalidInput, "config line without '=': " + line);
        std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        while (!key.empty() && key[0] == '-') key.erase(0, 1);
        std::replace(key.begin(), key.end(), '_', '-');
        if (key == "config" || has_flag(args, "--" + key)) continue;
        if (flags.count(key)) {
            if (value == "true" || value == "1" || value == "yes") extra.push_back("--" + key);
        } else {
            extra.push_back("--" + key + "=" + value);
        }
    }
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
}

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--workers", c.workers, "worker threads")->check(CLI::Range(1u, 1024u));
    sub->add_option("--output", c.output, "report path (default: standard output)");
    sub->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--config", "key=value file; command-line flags win");
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bias and moment computations for elliptic, Dirichlet and cusp-form families", "bias_cli"};
    app.require_subcommand(1);

    Common common;
    SweepOpts sweep;
    VerifyOpts verify;
    ConstantJSweep cj;
    bool no_general = false;
    u64 gauss_p = 0;
    DirichletOpts dir;
    ConvolutionOpts conv;
    RaceOpts race;
    RankOpts rank;
    PeterssonOpts pet;

    auto* s_sweep = app.add_subcommand("sweep-elliptic", "moments of one family, prime by prime");
    add_common(s_sweep, common);
    s_sweep->add_option("--family", sweep.family, "registry key, e.g. fam1 or table1-row4")->required();
    s_sweep->add_option("--params", sweep.params, "comma-separated family parameters");
    s_sweep->add_option("--pmin", sweep.pmin);
    s_sweep->add_option("--pmax", sweep.pmax);
    s_sweep->add_option("--k", sweep.ks, "comma-separated moment orders");
    s_sweep->add_option("--methods", sweep.methods, "subset of brute,semi_analytic,closed_form");
    s_sweep->add_option("--variant", sweep.variant)->check(CLI::IsMember({"stated", "corrected"}));
    s_sweep->add_flag("--force", sweep.force, "allow brute-force k >= 3 beyond the default prime limit");

    auto* s_verify = app.add_subcommand("verify-closed-forms", "brute force against every registry closed form");
    add_common(s_verify, common);
    s_verify->add_option("--pmin", verify.pmin);
    s_verify->add_option("--pmax", verify.pmax);
    s_verify->add_option("--samples", verify.samples, "random parameter tuples per linear family");
    s_verify->add_option("--seed", verify.seed);
    s_verify->add_option("--variant", verify.variant)->check(CLI::IsMember({"stated", "corrected"}));

    auto* s_cj = app.add_subcommand("verify-constant-j", "constant-j moments against brute force");
    add_common(s_cj, common);
    s_cj->add_option("--pmax", cj.pmax);
    s_cj->add_option("--kmax", cj.kmax);
    s_cj->add_option("--rmax", cj.rmax);
    s_cj->add_option("--coeff-min", cj.coeff_min);
    s_cj->add_option("--coeff-max", cj.coeff_max);
    s_cj->add_flag("--no-general", no_general, "skip the y^2 = x^3 + T^2 A x + T^3 B families");

    auto* s_gauss = app.add_subcommand("gauss-decomp", "normalized p = a^2 + 3b^2 and p = a^2 + b^2");
    add_common(s_gauss, common);
    s_gauss->add_option("--p", gauss_p)->required();

    auto* s_dir = app.add_subcommand("dirichlet-bias", "second moment of nontrivial characters mod q");
    add_common(s_dir, common);
    s_dir->add_option("--q", dir.q)->required();
    s_dir->add_option("--x", dir.x);
    s_dir->add_option("--checkpoints", dir.checkpoints, "ascending comma-separated X values");
    s_dir->add_option("--torsion", dir.torsion, "also report the l-torsion subfamily");

    auto* s_conv = app.add_subcommand("convolution-bias", "Dirichlet x Dirichlet second moment");
    add_common(s_conv, common);
    s_conv->add_option("--q1", conv.q1)->required();
    s_conv->add_option("--q2", conv.q2)->required();
    s_conv->add_option("--x", conv.x);
    s_conv->add_option("--checkpoints", conv.checkpoints);

    auto* s_pet = app.add_subcommand("petersson-check", "Kloosterman, Bessel and Hecke identities");
    add_common(s_pet, common);
    s_pet->add_option("--c-max", pet.c_max);
    s_pet->add_option("--ramanujan-max", pet.ramanujan_max);
    s_pet->add_option("--y", pet.y, "prime range for the averaged Kloosterman sums");
    s_pet->add_option("--tau-n", pet.tau_n);
    s_pet->add_option("--bessel-y", pet.bessel_y);
    s_pet->add_option("--bessel-t", pet.bessel_t);

    auto* s_race = app.add_subcommand("race", "E(x,q,a) prime-race statistics");
    add_common(s_race, common);
    s_race->add_option("--q", race.q)->required();
    s_race->add_option("--x", race.x);
    s_race->add_option("--checkpoints", race.checkpoints);
    s_race->add_option("--a", race.residues, "comma-separated residues (default: all units)");

    auto* s_rank = app.add_subcommand("rank-sum", "-(1/X) sum A_1(p) log p / p");
    add_common(s_rank, common);
    s_rank->add_option("--family", rank.family)->required();
    s_rank->add_option("--params", rank.params);
    s_rank->add_option("--x", rank.x)->required();
    s_rank->add_option("--source", rank.source)->check(CLI::IsMember({"auto", "brute"}));

    Report report;
    try {
        auto args = apply_config_file(raw_args);
        std::reverse(args.begin(), args.end());
        app.parse(args);

        if (s_sweep->parsed()) report = sweep_elliptic(sweep, common, err);
        else if (s_verify->parsed()) report = verify_closed_forms(verify, common, err);
        else if (s_cj->parsed()) {
            cj.include_general = !no_general;
            cj.workers = common.workers;
            report = verify_constant_j_cmd(cj, err);
        } else if (s_gauss->parsed()) report = gauss_decomp_cmd(gauss_p);
        else if (s_dir->parsed()) report = dirichlet_bias(dir, common);
        else if (s_conv->parsed()) report = convolution_bias(conv, common);
        else if (s_pet->parsed()) report = petersson_check(pet, common, err);
        else if (s_race->parsed()) report = race_cmd(race);
        else report = rank_sum_cmd(rank);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::ios_base::failure& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    }

    const std::string text = render(report, common.format);
    if (common.output.empty()) {
        out << text;
    } else {
        std::ofstream file(common.output, std::ios::binary);
        file << text;
        file.close();
        if (!file) {
            err << "error: cannot write " << common.output << "\n";
            return kExitIo;
        }
    }
    if (report.mismatch) err << "identity mismatch: see rows with nonzero residual\n";
    return report.mismatch ? kExitMismatch : kExitOk;
}

}  // namespace lfbias
