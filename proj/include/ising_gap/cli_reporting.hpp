#pragma once

// Command implementations behind the `ising_gap` executable. Each command is a
// pure function of its RunConfig returning the text for stdout, the artifact
// files to write, and the exit code, so the same code path is exercised by the
// tests and by the binary.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ising_gap/canonical_paths.hpp"
#include "ising_gap/geometric_bounds.hpp"
#include "ising_gap/gibbs_kernel.hpp"
#include "ising_gap/ising_model.hpp"
#include "ising_gap/spectral_analysis.hpp"

namespace ising_gap {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int {
    kExitOk = 0,
    kExitVerdictFailed = 1,
    kExitUsage = 2,
    kExitCeiling = 3,
};

class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// One named inequality lhs <= rhs (or residual <= tolerance).
struct Verdict {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    /// rhs - lhs, divided by |rhs| when the check is relative.
    double margin = 0.0;
    bool pass = false;
};

/// lhs <= rhs up to `tolerance` on the (absolute or relative) margin.
inline Verdict check_le(std::string name, double lhs, double rhs, double tolerance,
                        bool relative = false) {
    Verdict v{std::move(name), lhs, rhs, rhs - lhs, false};
    if (relative && rhs != 0.0) v.margin /= std::fabs(rhs);
    v.pass = std::isfinite(v.margin) && v.margin >= -tolerance;
    return v;
}

inline bool all_pass(const std::vector<Verdict>& vs) {
    return std::all_of(vs.begin(), vs.end(), [](const Verdict& v) { return v.pass; });
}

inline Json to_json(const Verdict& v) {
    return Json{{"name", v.name}, {"lhs", v.lhs}, {"rhs", v.rhs}, {"margin", v.margin}, {"pass", v.pass}};
}

inline Json to_json(const std::vector<Verdict>& vs) {
    Json arr = Json::array();
    for (const Verdict& v : vs) arr.push_back(to_json(v));
    return arr;
}

struct RunConfig {
    std::string command;
    int n = 2;
    std::vector<Temperature> temperatures{Temperature::finite(1.0)};
    std::vector<int> n_list{5, 10, 20};
    int horizon = 50;
    EnumerationLimits limits = EnumerationLimits::from_environment();
    bool formulas_only = false;
    bool extremal = false;
    int lanczos_iterations = 200;
    std::string format = "json";
    /// Sampled checks (path-length law beyond the exhaustive range).
    std::uint64_t seed = 12345;
    std::uint64_t samples = 100000;
    int crossover_n_max = 200;
};

struct CommandResult {
    int exit_code = kExitOk;
    std::string stdout_text;
    /// (file name, contents), written under the output directory if one is given.
    std::vector<std::pair<std::string, std::string>> files;
};

namespace detail {

inline Json temperature_json(Temperature t) {
    if (t.is_infinite()) return "inf";
    return t.value();
}

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline Temperature single_temperature(const RunConfig& cfg) {
    if (cfg.temperatures.size() != 1) throw UsageError("exactly one temperature expected");
    return cfg.temperatures.front();
}

inline Json error_json(const std::string& kind, const std::string& message) {
    return Json{{"schema", kSchemaVersion}, {"error", kind}, {"message", message}};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// bounds

struct BoundsReport {
    Json json;
    std::vector<Verdict> verdicts;
};

/// Every closed-form bound at (n, T); with exact data when the lattice is
/// within the quadratic ceiling and `formulas_only` is false.
inline BoundsReport build_bounds_report(int n, Temperature t, const EnumerationLimits& limits,
                                        bool formulas_only) {
    const LatticeSize size(n);
    BoundsReport r;
    Json& j = r.json;
    j["schema"] = kSchemaVersion;
    j["command"] = "bounds";
    j["n"] = n;
    j["T"] = detail::temperature_json(t);

    const BetaStarBound cor = closed_form_beta_star_bound(n, t);
    Json formulas;
    formulas["path_beta1_bound"] = path_beta1_bound(n, t);
    formulas["path_log_gap"] = path_log_gap(n, t);
    formulas["path_log_kappa_bound"] = path_log_kappa_bound(n, t);
    formulas["beta_min_lower_bound"] = beta_min_lower_bound(t);
    formulas["closed_form_beta_star_bound"] = cor.beta_star_bound;
    formulas["elevation_beta1_bound"] = elevation_beta1_bound(n, t);
    formulas["elevation_log_gap"] = elevation_log_gap(n, t);
    formulas["corner_class_bound"] = corner_class_bound(n, t);
    const CurvePoint fg = comparison_point(t);
    formulas["f"] = fg.f;
    formulas["g"] = fg.g;
    j["formulas"] = formulas;

    Json annotations;
    annotations["beta_star_chain"] = Json{{"holds", cor.chain_holds},
                                           {"one_minus_exp_minus_4_over_T", cor.chain_lhs},
                                           {"path_beta1_bound", cor.chain_rhs}};

    const bool exact = !formulas_only;
    if (exact) size.require_enumerable(limits.max_quadratic_states, "exact bounds report");
    if (!exact) {
        j["exact"] = nullptr;
        j["annotations"] = annotations;
        j["verdicts"] = Json::array();
        j["all_pass"] = true;
        return r;
    }

    const TransitionKernel k(size, t, limits);
    const EdgeLoadTable loads = accumulate_edge_loads(k, limits);
    const KappaResult kap = kappa_exact(k, loads);
    const Spectrum spec = exact_spectrum(k, limits);
    const ProductPartitionBound zb = check_product_partition_bound(k.stationary());
    annotations["product_partition_bound"] =
        Json{{"holds", zb.holds}, {"exact_Z", zb.exact}, {"product_bound", zb.product}};

    const double ds = ds_beta1_bound(std::max(kap.kappa, 1.0));
    const DirectedEdge arg = DirectedEdge::from_id(size, kap.argmax_edge);

    Json ex;
    ex["partition_function"] = k.stationary().partition_function();
    ex["log_partition_function"] = k.stationary().log_partition_function();
    ex["kappa"] = kap.kappa;
    ex["kappa_argmax"] = Json{{"minus_state", arg.minus().index()},
                              {"site", arg.site().linear()},
                              {"class", std::string(to_string(arg.site().site_class()))}};
    Json cls = Json::object();
    for (const auto& [c, v] : kap.class_max) cls[std::string(to_string(c))] = v;
    ex["class_max_ratio"] = cls;
    ex["ds_bound"] = ds;
    ex["beta1"] = spec.beta1;
    ex["beta_min"] = spec.beta_min;
    ex["beta_star"] = spec.beta_star;

    std::vector<Verdict>& vs = r.verdicts;
    vs.push_back(check_le("kappa_at_least_one", 1.0, kap.kappa, 0.0));
    vs.push_back(check_le("beta1_le_ds_bound", spec.beta1, ds, 1e-9));
    vs.push_back(check_le("ds_bound_le_path_bound", ds, path_beta1_bound(n, t), 1e-9));
    vs.push_back(check_le("log_kappa_le_path_log_kappa_bound", std::log(kap.kappa),
                          path_log_kappa_bound(n, t), 1e-9));
    vs.push_back(check_le("beta_min_lower_bound_holds", beta_min_lower_bound(t), spec.beta_min, 1e-9));
    vs.push_back(check_le("beta_star_le_closed_form_bound", spec.beta_star, cor.beta_star_bound, 1e-9));

    Json class_rows = Json::array();
    for (int s = 1; s <= size.sites(); ++s) {
        const SiteIndex site = SiteIndex::from_linear(size, s);
        const ClassBound cb = class_congestion_bound(k.stationary(), site, limits);
        const double worst = kap.site_max[site.bit()];
        Verdict v = check_le("class_bound_site" + std::to_string(s) + "_" +
                                 std::string(to_string(cb.site_class)),
                             worst, cb.value, 1e-9, true);
        class_rows.push_back(Json{{"site", s},
                                  {"p", site.column()},
                                  {"q", site.row()},
                                  {"class", std::string(to_string(cb.site_class))},
                                  {"case", cb.case_number},
                                  {"rhs", cb.value},
                                  {"max_ratio", worst},
                                  {"relative_margin", v.margin},
                                  {"pass", v.pass}});
        vs.push_back(std::move(v));
    }
    ex["class_bounds"] = class_rows;
    j["exact"] = ex;
    j["annotations"] = annotations;
    j["verdicts"] = to_json(vs);
    j["all_pass"] = all_pass(vs);
    return r;
}

inline CommandResult cmd_bounds(const RunConfig& cfg) {
    const Temperature t = detail::single_temperature(cfg);
    const BoundsReport rep = build_bounds_report(cfg.n, t, cfg.limits, cfg.formulas_only);
    CommandResult out;
    out.stdout_text = rep.json.dump(2) + "\n";
    out.files.emplace_back("bounds.json", out.stdout_text);
    if (!cfg.formulas_only) {
        const TransitionKernel k(LatticeSize(cfg.n), t, cfg.limits);
        std::ostringstream csv;
        write_edge_loads_csv(csv, accumulate_edge_loads(k, cfg.limits));
        out.files.emplace_back("edge_loads.csv", csv.str());
    }
    out.exit_code = all_pass(rep.verdicts) ? kExitOk : kExitVerdictFailed;
    return out;
}

// ---------------------------------------------------------------------------
// spectrum

inline CommandResult cmd_spectrum(const RunConfig& cfg) {
    const Temperature t = detail::single_temperature(cfg);
    const LatticeSize size(cfg.n);
    Json j;
    j["schema"] = kSchemaVersion;
    j["command"] = "spectrum";
    j["n"] = cfg.n;
    j["T"] = detail::temperature_json(t);
    CommandResult out;
    if (cfg.extremal && !size.enumerable(cfg.limits.max_quadratic_states)) {
        const TransitionKernel k(size, t, cfg.limits);
        const ExtremalSpectrum es = extremal_spectrum(k, cfg.lanczos_iterations);
        j["method"] = "lanczos";
        j["state_count"] = k.state_count();
        j["beta1"] = es.beta1;
        j["beta_min"] = es.beta_min;
        j["beta_star"] = es.beta_star;
        j["residual_beta1"] = es.residual_beta1;
        j["residual_beta_min"] = es.residual_beta_min;
        j["iterations"] = es.iterations;
        out.stdout_text = j.dump(2) + "\n";
        out.files.emplace_back("spectrum.json", out.stdout_text);
        return out;
    }
    const TransitionKernel k(size, t, cfg.limits);
    const Spectrum s = exact_spectrum(k, cfg.limits);
    detail::CompensatedSum trace, eig_sum;
    for (StateIndex x = 0; x < k.state_count(); ++x) trace += k.holding(x);
    for (double v : s.eigenvalues) eig_sum += v;
    j["method"] = "dense";
    j["state_count"] = k.state_count();
    j["beta0"] = s.eigenvalues.front();
    j["beta1"] = s.beta1;
    j["beta_min"] = s.beta_min;
    j["beta_star"] = s.beta_star;
    j["trace_residual"] = std::fabs(trace.value() - eig_sum.value());
    j["symmetry_residual"] = s.symmetry_residual;
    Json mult = Json::array();
    for (const auto& [v, m] : s.multiplicities()) mult.push_back(Json{{"value", v}, {"multiplicity", m}});
    j["multiplicities"] = mult;
    std::ostringstream csv;
    write_eigenvalues_csv(csv, s);
    out.stdout_text = cfg.format == "csv" ? csv.str() : j.dump(2) + "\n";
    out.files.emplace_back("spectrum.json", j.dump(2) + "\n");
    out.files.emplace_back("eigenvalues.csv", csv.str());
    return out;
}

// ---------------------------------------------------------------------------
// compare

inline CommandResult cmd_compare(const RunConfig& cfg) {
    if (cfg.temperatures.empty()) throw UsageError("compare needs a non-empty temperature grid");
    if (cfg.n_list.empty()) throw UsageError("compare needs a non-empty n list");
    for (int n : cfg.n_list)
        if (n < 1) throw UsageError("n values must be >= 1");
    std::string csv = "T,f,g";
    for (int n : cfg.n_list) {
        const std::string s = std::to_string(n);
        csv += ",path_gap_n" + s + ",elevation_gap_n" + s + ",log_gap_ratio_n" + s;
    }
    csv += "\n";
    bool ordered = true;
    for (const CurvePoint& c : comparison_curves(cfg.temperatures)) {
        ordered = ordered && c.f >= c.g;
        csv += c.temperature.label() + "," + detail::fmt17(c.f) + "," + detail::fmt17(c.g);
        for (int n : cfg.n_list) {
            const double a = path_log_gap(n, c.temperature);
            const double b = elevation_log_gap(n, c.temperature);
            csv += "," + detail::fmt17(std::exp(a)) + "," + detail::fmt17(std::exp(b)) + "," +
                   detail::fmt17(a - b);
        }
        csv += "\n";
    }
    std::string cross = "T,first_n_path_gap_exceeds_elevation_gap\n";
    Json crossover = Json::array();
    for (const Temperature& t : cfg.temperatures) {
        const auto first = first_n_path_gap_exceeds_elevation_gap(t, cfg.crossover_n_max);
        cross += t.label() + "," + (first ? std::to_string(*first) : std::string("none")) + "\n";
        crossover.push_back(Json{{"T", detail::temperature_json(t)},
                                 {"first_n", first ? Json(*first) : Json(nullptr)}});
    }
    CommandResult out;
    if (cfg.format == "json") {
        Json j;
        j["schema"] = kSchemaVersion;
        j["command"] = "compare";
        j["f_ge_g_everywhere"] = ordered;
        j["crossover"] = crossover;
        out.stdout_text = j.dump(2) + "\n";
    } else {
        out.stdout_text = csv;
    }
    out.files.emplace_back("comparison.csv", csv);
    out.files.emplace_back("crossover.csv", cross);
    out.exit_code = ordered ? kExitOk : kExitVerdictFailed;
    return out;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyReport {
    std::vector<Verdict> verdicts;
    TvDecayReport tv_decay;
};

/// Full invariant suite at (n, T).
inline VerifyReport run_verification_suite(int n, Temperature t, const RunConfig& cfg) {
    const LatticeSize size(n);
    size.require_enumerable(cfg.limits.max_quadratic_states, "verification suite");
    const TransitionKernel k(size, t, cfg.limits);
    const BoltzmannDistribution& pi = k.stationary();
    const std::uint64_t states = k.state_count();
    const int sites = k.sites();
    VerifyReport rep;
    auto& vs = rep.verdicts;

    {
        detail::CompensatedSum total;
        for (double p : pi.probabilities()) total += p;
        vs.push_back(check_le("normalization", std::fabs(total.value() - 1.0), 1e-12, 0.0));
    }
    {
        double worst = 0.0;
        int energy_mismatch = 0;
        const StateIndex full = SpinConfiguration::full_mask(size);
        for (StateIndex x = 0; x < states; ++x) {
            if (pi.energy(x) != pi.energy(x ^ full)) ++energy_mismatch;
            worst = std::max(worst, std::fabs(pi[x] - pi[x ^ full]) / pi[x]);
        }
        vs.push_back(check_le("global_flip_energy", energy_mismatch, 0.0, 0.0));
        vs.push_back(check_le("global_flip_probability", worst, 1e-12, 0.0));
    }
    {
        double worst = 0.0;
        for (int s = 1; s <= sites; ++s)
            worst = std::max(worst, half_mass_residual(pi, SiteIndex::from_linear(size, s)));
        vs.push_back(check_le("half_mass", worst, 1e-12, 0.0));
    }
    {
        double worst_cond = 0.0, worst_closed = 0.0;
        for_each_directed_edge(size, cfg.limits, [&](const DirectedEdge& e) {
            const double local = conditional_flip_probability(e.minus(), e.site(), t);
            const double ratio = conditional_flip_probability_by_ratio(e.minus(), e.site(), t);
            worst_cond = std::max(worst_cond, std::fabs(local - ratio) / ratio);
            const double generic = k.flip(e.minus().index(), e.site().bit());
            const double closed = class_flip_probability(e, t);
            worst_closed = std::max(worst_closed, std::fabs(closed - generic) / generic);
        });
        vs.push_back(check_le("conditional_ratio_vs_local_field", worst_cond, 1e-14, 0.0));
        vs.push_back(check_le("class_flip_closed_form", worst_closed, 1e-14, 0.0));
    }
    {
        double worst_row = 0.0, min_entry = 1.0, min_hold = 1.0, worst_db = 0.0;
        for (StateIndex x = 0; x < states; ++x) {
            detail::CompensatedSum row;
            row += k.holding(x);
            min_hold = std::min(min_hold, k.holding(x));
            for (int b = 0; b < sites; ++b) {
                const double p = k.flip(x, b);
                row += p;
                min_entry = std::min(min_entry, p);
                const StateIndex y = x ^ (StateIndex{1} << b);
                const double q = pi[x] * p;
                worst_db = std::max(worst_db, std::fabs(q - pi[y] * k.flip(y, b)) / q);
            }
            worst_row = std::max(worst_row, std::fabs(row.value() - 1.0));
        }
        vs.push_back(check_le("row_stochastic", worst_row, 1e-12, 0.0));
        vs.push_back(check_le("nonnegative_entries", 0.0, std::min(min_entry, min_hold), 0.0));
        // Every single flip has positive probability, so the flip graph is the
        // connected hypercube; positive holding makes the chain aperiodic.
        vs.push_back(check_le("irreducible_positive_flips", 0.0, min_entry, 0.0));
        vs.push_back(check_le("aperiodic_positive_holding", 0.0, min_hold, 0.0));
        vs.push_back(check_le("detailed_balance", worst_db, 1e-12, 0.0));
    }
    {
        const EdgeLoadTable by_edge = accumulate_edge_loads(k, cfg.limits);
        const EdgeLoadTable walked = accumulate_edge_loads_by_walking(k, cfg.limits);
        const std::uint64_t expected = std::uint64_t{1} << (sites - 1);
        std::uint64_t bad_counts = 0;
        double worst_load = 0.0;
        detail::CompensatedSum load_total;
        for (std::uint64_t id = 0; id < walked.edge_count(); ++id) {
            if (walked.traversals(id) != expected || by_edge.traversals(id) != expected) ++bad_counts;
            worst_load = std::max(worst_load,
                                  std::fabs(walked.load(id) - by_edge.load(id)) / by_edge.load(id));
            load_total += by_edge.load(id);
        }
        vs.push_back(check_le("traversal_count_law", static_cast<double>(bad_counts), 0.0, 0.0));
        vs.push_back(check_le("loads_walk_vs_characterization", worst_load, 1e-12, 0.0));

        detail::CompensatedSum squared;
        const auto& p = pi.probabilities();
        for (StateIndex x = 0; x < states; ++x)
            for (StateIndex y = 0; y < states; ++y) {
                const int m = std::popcount(x ^ y);
                squared += static_cast<double>(m) * m * p[x] * p[y];
            }
        vs.push_back(check_le("double_counting_conservation",
                              std::fabs(load_total.value() - squared.value()) / squared.value(), 1e-12,
                              0.0));
    }
    {
        std::uint64_t bad = 0;
        auto check_pair = [&](StateIndex x, StateIndex y) {
            const SpinConfiguration a(size, x), b(size, y);
            const CanonicalPath path(a, b);
            if (path.length() != hamming_distance(a, b) || !(path.vertex(path.length()) == b)) ++bad;
        };
        std::string name = "path_length_law_exhaustive";
        if (states <= 16) {
            for (StateIndex x = 0; x < states; ++x)
                for (StateIndex y = 0; y < states; ++y) check_pair(x, y);
        } else {
            name = "path_length_law_sampled";
            std::mt19937_64 rng(cfg.seed);
            for (std::uint64_t i = 0; i < cfg.samples; ++i) {
                const StateIndex x = rng() & (states - 1);
                const StateIndex y = rng() & (states - 1);
                check_pair(x, y);
            }
        }
        vs.push_back(check_le(name, static_cast<double>(bad), 0.0, 0.0));
    }
    {
        double symmetry = 0.0, pairing = 0.0;
        for (int s = 1; s <= sites; ++s) {
            const SiteIndex site = SiteIndex::from_linear(size, s);
            if (site.site_class() != SiteClass::interior) continue;
            symmetry = std::max(symmetry, interior_symmetry_residual(pi, site));
            pairing = std::max(pairing, spin_flip_pairing_residual(pi, site));
        }
        vs.push_back(check_le("interior_symmetry_identity", symmetry, 1e-12, 0.0));
        vs.push_back(check_le("spin_flip_pairing_identity", pairing, 1e-12, 0.0));
        const WorstCaseBrackets wb = worst_case_brackets(size, cfg.limits);
        vs.push_back(check_le("bracket_term_max_is_3", std::max(wb.max_lower_minus_upper,
                                                                  wb.max_upper_minus_lower),
                              3.0, 0.0));
        vs.push_back(check_le("bracket_term_max_attains_3", 3.0,
                              std::min(wb.max_lower_minus_upper, wb.max_upper_minus_lower), 0.0));
        int worst = wb.max_corner;
        if (wb.column_present) worst = std::max({worst, wb.max_column_plus, wb.max_column_minus});
        if (wb.interior_present) worst = std::max(worst, wb.max_interior);
        vs.push_back(check_le("worst_case_expressions_le_3n_plus_1", worst, wb.limit, 0.0));
    }

    const Spectrum spec = exact_spectrum(k, cfg.limits);
    {
        detail::CompensatedSum trace, eig_sum;
        for (StateIndex x = 0; x < states; ++x) trace += k.holding(x);
        for (double v : spec.eigenvalues) eig_sum += v;
        vs.push_back(check_le("beta0_is_one", std::fabs(spec.eigenvalues.front() - 1.0), 1e-10, 0.0));
        vs.push_back(check_le("trace_equals_eigenvalue_sum", std::fabs(trace.value() - eig_sum.value()),
                              1e-8, 0.0));
        vs.push_back(check_le("spectral_gap_positive", 1e-12, 1.0 - spec.beta1, 0.0));
        vs.push_back(check_le("beta_min_above_minus_one", -1.0, spec.beta_min, 0.0));
        vs.push_back(check_le("beta_min_lower_bound_holds", beta_min_lower_bound(t), spec.beta_min,
                              1e-9));
    }

    const double cor = closed_form_beta_star_bound(n, t).beta_star_bound;
    rep.tv_decay = verify_tv_decay(k, spec, cor, cfg.horizon, cfg.limits);
    vs.push_back(check_le("tv_decay_exact_beta_star", -rep.tv_decay.worst_margin_exact, kTvDecaySlack, 0.0));
    vs.push_back(check_le("tv_decay_closed_form_beta_star", -rep.tv_decay.worst_margin_closed_form,
                          kTvDecaySlack, 0.0));
    vs.push_back(check_le("tv_decay_l1_identity", rep.tv_decay.identity_residual, 1e-12, 0.0));
    return rep;
}

inline std::string verdict_table(const std::vector<Verdict>& vs) {
    std::size_t width = 4;
    for (const Verdict& v : vs) width = std::max(width, v.name.size());
    std::string out;
    char buf[256];
    for (const Verdict& v : vs) {
        std::snprintf(buf, sizeof buf, "%-4s  %-*s  lhs=%.6e  rhs=%.6e  margin=%.3e\n",
                      v.pass ? "PASS" : "FAIL", static_cast<int>(width), v.name.c_str(), v.lhs, v.rhs,
                      v.margin);
        out += buf;
    }
    return out;
}

inline CommandResult cmd_verify(const RunConfig& cfg) {
    const Temperature t = detail::single_temperature(cfg);
    const VerifyReport rep = run_verification_suite(cfg.n, t, cfg);
    Json j;
    j["schema"] = kSchemaVersion;
    j["command"] = "verify";
    j["n"] = cfg.n;
    j["T"] = detail::temperature_json(t);
    j["horizon"] = cfg.horizon;
    j["seed"] = cfg.seed;
    j["samples"] = cfg.samples;
    j["tv_decay"] = Json{{"checks", rep.tv_decay.checks},
                         {"failures_exact", rep.tv_decay.failures_exact},
                         {"failures_closed_form", rep.tv_decay.failures_closed_form},
                         {"worst_margin_exact", rep.tv_decay.worst_margin_exact},
                         {"worst_margin_closed_form", rep.tv_decay.worst_margin_closed_form}};
    j["verdicts"] = to_json(rep.verdicts);
    j["all_pass"] = all_pass(rep.verdicts);

    CommandResult out;
    const std::string header = "verify n=" + std::to_string(cfg.n) + " T=" + t.label() +
                               " horizon=" + std::to_string(cfg.horizon) + "\n";
    const std::string table = header + verdict_table(rep.verdicts);
    out.stdout_text = cfg.format == "json" ? j.dump(2) + "\n" : table;
    out.files.emplace_back("verify.json", j.dump(2) + "\n");
    out.files.emplace_back("verify.txt", table);
    std::ostringstream decay;
    write_tv_decay_csv(decay, rep.tv_decay);
    out.files.emplace_back("tv_decay.csv", decay.str());
    out.exit_code = all_pass(rep.verdicts) ? kExitOk : kExitVerdictFailed;
    return out;
}

// ---------------------------------------------------------------------------
// kernel dump

inline CommandResult cmd_kernel(const RunConfig& cfg) {
    const Temperature t = detail::single_temperature(cfg);
    const TransitionKernel k(LatticeSize(cfg.n), t, cfg.limits);
    Json header{{"schema", kSchemaVersion},
                {"n", cfg.n},
                {"T", detail::temperature_json(t)},
                {"Z", k.stationary().partition_function()}};
    std::ostringstream csv;
    write_kernel_csv(csv, k);
    CommandResult out;
    out.stdout_text = cfg.format == "csv" ? csv.str() : header.dump(2) + "\n";
    out.files.emplace_back("kernel.json", header.dump(2) + "\n");
    out.files.emplace_back("kernel.csv", csv.str());
    return out;
}

/// Dispatch with the exit-code contract: ceiling violations become exit 3 with
/// an error JSON on stdout, usage errors exit 2.
inline CommandResult run_command(const RunConfig& cfg) {
    try {
        if (cfg.n < 1) throw UsageError("n must be >= 1");
        if (cfg.command == "spectrum") return cmd_spectrum(cfg);
        if (cfg.command == "bounds") return cmd_bounds(cfg);
        if (cfg.command == "compare") return cmd_compare(cfg);
        if (cfg.command == "verify") return cmd_verify(cfg);
        if (cfg.command == "kernel") return cmd_kernel(cfg);
        throw UsageError("unknown command '" + cfg.command + "'");
    } catch (const LatticeTooLarge& e) {
        return {kExitCeiling, detail::error_json("lattice-too-large", e.what()).dump(2) + "\n", {}};
    } catch (const std::invalid_argument& e) {
        return {kExitUsage, detail::error_json("usage", e.what()).dump(2) + "\n", {}};
    }
}

}  // namespace ising_gap
