#pragma once

// Geometric (canonical-path) constant kappa and every closed-form bound built
// around it: the 1 - 1/kappa bound on beta_1, the per-class right-hand sides
// for Q(e)^-1 * load(e), the global n^-4 exp(-(2/T)(2n+1)) gap, the
// smallest-eigenvalue bound with c = 2, Delta = 4, and the comparison with the
// Z_T-based bound (Gamma = n^2, b = 2^(n^2-1), c = 2, m = 4).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ising_gap/canonical_paths.hpp"
#include "ising_gap/detail/summation.hpp"
#include "ising_gap/gibbs_kernel.hpp"
#include "ising_gap/ising_model.hpp"

namespace ising_gap {

struct KappaResult {
    double kappa = 0.0;
    std::uint64_t argmax_edge = 0;
    /// max of Q(e)^-1 load(e) over edges flipping a site of each class present.
    std::map<SiteClass, double> class_max;
    /// Same maximum per flipped site, indexed by linear index - 1.
    std::vector<double> site_max;
    /// Q(e)^-1 load(e) for every edge, by DirectedEdge::id().
    std::vector<double> ratios;
};

inline KappaResult kappa_exact(const TransitionKernel& k, const EdgeLoadTable& loads) {
    if (!(loads.size() == k.size())) throw SizeMismatch("load table built for another lattice");
    const LatticeSize size = k.size();
    const auto sites = static_cast<std::uint64_t>(k.sites());
    KappaResult r;
    r.site_max.assign(sites, 0.0);
    r.ratios.resize(loads.edge_count());
    for (std::uint64_t id = 0; id < loads.edge_count(); ++id) {
        const DirectedEdge e = DirectedEdge::from_id(size, id);
        const double ratio = loads.load(id) / edge_flow(k, e);
        r.ratios[id] = ratio;
        if (ratio > r.kappa) {
            r.kappa = ratio;
            r.argmax_edge = id;
        }
        double& s = r.site_max[id % sites];
        s = std::max(s, ratio);
        double& c = r.class_max[e.site().site_class()];
        c = std::max(c, ratio);
    }
    return r;
}

/// 1 - 1/kappa.
inline double ds_beta1_bound(double kappa) {
    if (!(kappa >= 1.0)) throw std::invalid_argument("kappa must be >= 1");
    return 1.0 - 1.0 / kappa;
}

/// log of the gap n^-4 exp(-(2/T)(2n+1)).
inline double path_log_gap(int n, Temperature t) {
    return -4.0 * std::log(static_cast<double>(n)) - 2.0 * t.inverse() * (2.0 * n + 1.0);
}

/// 1 - n^-4 exp(-(2/T)(2n+1)).
inline double path_beta1_bound(int n, Temperature t) {
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    return -std::expm1(path_log_gap(n, t));
}

/// log of n^4 exp((2/T)(2n+1)), the kappa ceiling behind the global bound.
inline double path_log_kappa_bound(int n, Temperature t) { return -path_log_gap(n, t); }

/// -1 + 2 / (1 + (c - 1) exp(Delta/T)) with c = 2, Delta = 4.
inline double beta_min_lower_bound(Temperature t) {
    const double a = 4.0 * t.inverse();
    // 2/(1+e^a) computed as 2 e^-a / (1 + e^-a) for large a.
    const double frac = a > 0 ? 2.0 * std::exp(-a) / (1.0 + std::exp(-a)) : 2.0 / (1.0 + std::exp(a));
    return -1.0 + frac;
}

struct BetaStarBound {
    double beta_star_bound = 0.0;
    /// 1 - exp(-4/T) <= 1 - n^-4 exp(-(2/T)(2n+1)), the step that lets the
    /// beta_1 bound also cover |beta_min|.
    bool chain_holds = false;
    double chain_lhs = 0.0;
    double chain_rhs = 0.0;
};

inline BetaStarBound closed_form_beta_star_bound(int n, Temperature t) {
    BetaStarBound c;
    c.beta_star_bound = path_beta1_bound(n, t);
    c.chain_lhs = -std::expm1(-4.0 * t.inverse());
    c.chain_rhs = c.beta_star_bound;
    // |beta_min| <= 1 - 2/(1+e^{4/T}) < 1 - e^{-4/T}; compare the gaps in logs.
    c.chain_holds = path_log_gap(n, t) <= -4.0 * t.inverse();
    return c;
}

/// log of the gap n^-4 e^{-4/T} ((1 + e^{-1/(2T)})/2)^(n^2 - 1).
inline double elevation_log_gap(int n, Temperature t) {
    const double nn = static_cast<double>(n);
    const double half = std::log1p(std::exp(-0.5 * t.inverse())) - std::log(2.0);
    return -4.0 * std::log(nn) - 4.0 * t.inverse() + (nn * nn - 1.0) * half;
}

/// 1 - n^-4 e^{-4/T} ((1 + e^{-1/(2T)})/2)^(n^2 - 1).
inline double elevation_beta1_bound(int n, Temperature t) {
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    return -std::expm1(elevation_log_gap(n, t));
}

struct CurvePoint {
    Temperature temperature;
    double f = 0.0;  // e^{4/T}
    double g = 0.0;  // 2 / (1 + e^{-1/(2T)})
};

inline CurvePoint comparison_point(Temperature t) {
    return {t, std::exp(4.0 * t.inverse()), 2.0 / (1.0 + std::exp(-0.5 * t.inverse()))};
}

inline std::vector<CurvePoint> comparison_curves(const std::vector<Temperature>& grid) {
    std::vector<CurvePoint> out;
    out.reserve(grid.size());
    for (const Temperature& t : grid) out.push_back(comparison_point(t));
    return out;
}

/// Smallest n in [1, n_max] at which the global gap exceeds the Z_T-based gap,
/// compared in the log domain.
inline std::optional<int> first_n_path_gap_exceeds_elevation_gap(Temperature t, int n_max = 200) {
    for (int n = 1; n <= n_max; ++n)
        if (path_log_gap(n, t) > elevation_log_gap(n, t)) return n;
    return std::nullopt;
}

/// Z_T <= 2 (1 + e^{-1/(2T)})^(n^2 - 1) as used for the comparison, checked
/// against an exact partition function.
struct ProductPartitionBound {
    double exact = 0.0;
    double product = 0.0;
    bool holds = false;
};

inline ProductPartitionBound check_product_partition_bound(const BoltzmannDistribution& pi) {
    const int sites = pi.size().sites();
    const double log_product =
        std::log(2.0) + (sites - 1) * std::log1p(std::exp(-0.5 * pi.temperature().inverse()));
    ProductPartitionBound b;
    b.exact = pi.partition_function();
    b.product = std::exp(log_product);
    b.holds = pi.log_partition_function() <= log_product;
    return b;
}

// ---------------------------------------------------------------------------
// Per-class right-hand sides for Q(e)^-1 sum |gamma| pi(x) pi(y).

/// Which displayed bound covers a class: 1 = corners (1,1),(n,n) closed form;
/// 2 = corners (n,1),(1,n); 3 = non-corner boundary; 4 = interior.
inline int class_bound_case(SiteClass c) {
    switch (c) {
        case SiteClass::corner_11:
        case SiteClass::corner_nn: return 1;
        case SiteClass::corner_n1:
        case SiteClass::corner_1n: return 2;
        case SiteClass::interior: return 4;
        default: return 3;
    }
}

/// n^4 (1 + e^{4/T}) / 2.
inline double corner_class_bound(int n, Temperature t) {
    const double n4 = std::pow(static_cast<double>(n), 4);
    return 0.5 * n4 * (1.0 + std::exp(4.0 * t.inverse()));
}

namespace detail {

/// Spin reader over a state, optionally through the 180-degree rotation.
struct LatticeView {
    StateIndex state;
    int n;
    bool rotated;

    int operator()(int i, int j) const noexcept {
        if (rotated) {
            i = n + 1 - i;
            j = n + 1 - j;
        }
        return ((state >> ((j - 1) * n + (i - 1))) & 1U) ? 1 : -1;
    }
};

/// Exponent of the top-right corner (n,1) sum.
inline int corner_exponent(const LatticeView& w) {
    const int n = w.n;
    int e = 2 * (1 - w(n, 2));
    for (int i = 1; i <= n - 1; ++i) e += w(i, 1) - w(i, 2) - w(i, 1) * w(i, 2);
    return e;
}

/// Shared row-pair sum for the left-column site (1,q).
inline int column_body(const LatticeView& w, int q) {
    int e = 0;
    for (int i = 2; i <= w.n; ++i) e += w(i, q - 1) - w(i, q) - w(i, q - 1) * w(i, q);
    return e;
}

inline int column_plus_exponent(const LatticeView& w, int q) {
    return -2 * (w(2, q) + w(1, q + 1)) + column_body(w, q);
}
inline int column_minus_exponent(const LatticeView& w, int q) {
    return 2 * (1 + w(1, q - 1)) + column_body(w, q);
}

/// Shared sum for the top-row site (p,1).
inline int row_body(const LatticeView& w) {
    int e = 0;
    for (int i = 1; i <= w.n - 1; ++i) e += w(i, 1) - w(i, 2) - w(i, 1) * w(i, 2);
    return e;
}
inline int row_plus_exponent(const LatticeView& w, int p) {
    return -2 * (w(p + 1, 1) + w(p, 2)) + row_body(w);
}
inline int row_minus_exponent(const LatticeView& w, int p) {
    return 2 * (1 + w(p - 1, 1)) + row_body(w);
}

inline int interior_exponent(const LatticeView& w, int p, int q) {
    int e = 0;
    for (int i = 1; i <= p - 1; ++i) e += -w(i, q) + w(i, q + 1) - w(i, q) * w(i, q + 1);
    e -= 2 * (w(p + 1, q) + w(p, q + 1));
    for (int i = p + 1; i <= w.n; ++i) e += w(i, q - 1) - w(i, q) - w(i, q - 1) * w(i, q);
    return e;
}

/// Sum over w with w(site) = spin of pi(w) exp(exponent(w) / T).
template <class Exponent>
double weighted_sum(const BoltzmannDistribution& pi, bool rotated, int p, int q, int spin,
                    Exponent&& exponent) {
    const int n = pi.size().side();
    const double beta = pi.temperature().inverse();
    CompensatedSum sum;
    for (StateIndex s = 0; s < pi.state_count(); ++s) {
        const LatticeView w{s, n, rotated};
        if (w(p, q) != spin) continue;
        sum += pi[s] * std::exp(beta * exponent(w));
    }
    return sum.value();
}

}  // namespace detail

struct ClassBound {
    SiteClass site_class;
    int case_number = 0;
    double value = 0.0;
};

/// Right-hand side bounding Q(e)^-1 sum |gamma| pi(x) pi(y) for every edge
/// flipping `site`. Classes on the bottom row, right column and bottom-left
/// corner are evaluated through the 180-degree rotation of their mirror class.
inline ClassBound class_congestion_bound(const BoltzmannDistribution& pi, const SiteIndex& site,
                                     const EnumerationLimits& limits = {}) {
    const SiteClass c = site.site_class();
    const int n = site.size().side();
    const Temperature t = pi.temperature();
    const double beta = t.inverse();
    const double n4 = std::pow(static_cast<double>(n), 4);
    ClassBound out{c, class_bound_case(c), 0.0};
    if (out.case_number == 1) {
        out.value = corner_class_bound(n, t);
        return out;
    }
    if (!(pi.size() == site.size())) throw SizeMismatch("distribution and site differ in n");
    pi.size().require_enumerable(limits.max_states, "class bound w-sum");

    const bool rotated = c == SiteClass::corner_1n || c == SiteClass::boundary_rown ||
                         c == SiteClass::boundary_coln;
    const SiteIndex canon = rotated ? site.rotated() : site;
    const int p = canon.column();
    const int q = canon.row();
    switch (canon.site_class()) {
        case SiteClass::corner_n1: {
            const double s = detail::weighted_sum(pi, rotated, n, 1, +1, [](const auto& w) {
                return detail::corner_exponent(w);
            });
            out.value = 2.0 * n4 * std::exp((n - 1) * beta) * s;
            break;
        }
        case SiteClass::boundary_col1: {
            const double plus = detail::weighted_sum(pi, rotated, 1, q, +1, [q](const auto& w) {
                return detail::column_plus_exponent(w, q);
            });
            const double minus = detail::weighted_sum(pi, rotated, 1, q, -1, [q](const auto& w) {
                return detail::column_minus_exponent(w, q);
            });
            out.value = n4 * std::exp((n + 1) * beta) * (plus + minus);
            break;
        }
        case SiteClass::boundary_row1: {
            const double plus = detail::weighted_sum(pi, rotated, p, 1, +1, [p](const auto& w) {
                return detail::row_plus_exponent(w, p);
            });
            const double minus = detail::weighted_sum(pi, rotated, p, 1, -1, [p](const auto& w) {
                return detail::row_minus_exponent(w, p);
            });
            out.value = n4 * std::exp((n + 1) * beta) * (plus + minus);
            break;
        }
        case SiteClass::interior: {
            const double s = detail::weighted_sum(pi, false, p, q, +1, [p, q](const auto& w) {
                return detail::interior_exponent(w, p, q);
            });
            out.value = 2.0 * n4 * std::exp((n - 1) * beta) * s;
            break;
        }
        default: throw std::logic_error("unexpected canonical class");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Identities used in deriving the class bounds, checked exhaustively.

/// Relative mismatch of
///   sum_{w_s=+1} pi(w) e^{-(2/T)(w_right + w_below)} = sum_{w_s=-1} pi(w) e^{(2/T)(w_left + w_above)}
/// at an interior site.
inline double interior_symmetry_residual(const BoltzmannDistribution& pi, const SiteIndex& site) {
    if (site.site_class() != SiteClass::interior) throw std::invalid_argument("interior site required");
    const int n = pi.size().side();
    const int p = site.column(), q = site.row();
    const double beta = pi.temperature().inverse();
    detail::CompensatedSum lhs, rhs;
    for (StateIndex s = 0; s < pi.state_count(); ++s) {
        const detail::LatticeView w{s, n, false};
        if (w(p, q) == 1)
            lhs += pi[s] * std::exp(-2.0 * beta * (w(p + 1, q) + w(p, q + 1)));
        else
            rhs += pi[s] * std::exp(2.0 * beta * (w(p - 1, q) + w(p, q - 1)));
    }
    return std::fabs(lhs.value() - rhs.value()) / std::fabs(rhs.value());
}

/// max over w+ (w_s = +1) of the relative mismatch in
/// pi(w+) = pi(w-) exp((2/T)(sum of the four neighbours)), w- = w+ flipped at s.
inline double spin_flip_pairing_residual(const BoltzmannDistribution& pi, const SiteIndex& site) {
    if (site.site_class() != SiteClass::interior) throw std::invalid_argument("interior site required");
    const int n = pi.size().side();
    const int b = site.bit();
    const double beta = pi.temperature().inverse();
    double worst = 0.0;
    for (StateIndex s = 0; s < pi.state_count(); ++s) {
        if (((s >> b) & 1U) == 0) continue;
        const StateIndex minus = s ^ (StateIndex{1} << b);
        const double predicted = pi[minus] * std::exp(2.0 * beta * detail::local_field(s, b, n));
        worst = std::max(worst, std::fabs(pi[s] - predicted) / pi[s]);
    }
    return worst;
}

/// |sum_{w_s=+1} pi(w) - 1/2|.
inline double half_mass_residual(const BoltzmannDistribution& pi, const SiteIndex& site) {
    detail::CompensatedSum up;
    for (StateIndex s = 0; s < pi.state_count(); ++s)
        if ((s >> site.bit()) & 1U) up += pi[s];
    return std::fabs(up.value() - 0.5);
}

/// Worst cases of the exponents used to turn the class bounds into the global one.
struct WorstCaseBrackets {
    int max_lower_minus_upper = 0;  // max over a, b of a - b - ab
    int max_upper_minus_lower = 0;  // max over a, b of -a + b - ab
    int limit = 0;                  // 3n + 1
    int max_corner = std::numeric_limits<int>::min();          // i
    int max_column_plus = std::numeric_limits<int>::min();     // ii
    int max_column_minus = std::numeric_limits<int>::min();    // iii
    int max_interior = std::numeric_limits<int>::min();        // iv
    bool column_present = false;
    bool interior_present = false;

    bool holds() const noexcept {
        return max_lower_minus_upper == 3 && max_upper_minus_lower == 3 && max_corner <= limit &&
               (!column_present || (max_column_plus <= limit && max_column_minus <= limit)) &&
               (!interior_present || max_interior <= limit);
    }
};

inline WorstCaseBrackets worst_case_brackets(LatticeSize size, const EnumerationLimits& limits = {}) {
    size.require_enumerable(limits.max_states, "worst-case bracket scan");
    const int n = size.side();
    WorstCaseBrackets r;
    r.limit = 3 * n + 1;
    r.max_lower_minus_upper = std::numeric_limits<int>::min();
    r.max_upper_minus_lower = std::numeric_limits<int>::min();
    for (int a : {-1, 1}) {
        for (int b : {-1, 1}) {
            r.max_lower_minus_upper = std::max(r.max_lower_minus_upper, a - b - a * b);
            r.max_upper_minus_lower = std::max(r.max_upper_minus_lower, -a + b - a * b);
        }
    }
    if (n < 2) {
        r.max_corner = 0;
        return r;
    }
    r.column_present = n >= 3;
    r.interior_present = n >= 3;
    for (StateIndex s = 0; s < size.state_count(); ++s) {
        const detail::LatticeView w{s, n, false};
        r.max_corner = std::max(r.max_corner, detail::corner_exponent(w));
        for (int q = 2; q <= n - 1; ++q) {
            r.max_column_plus = std::max(r.max_column_plus, detail::column_plus_exponent(w, q));
            r.max_column_minus = std::max(r.max_column_minus, detail::column_minus_exponent(w, q));
        }
        for (int p = 2; p <= n - 1; ++p)
            for (int q = 2; q <= n - 1; ++q)
                r.max_interior = std::max(r.max_interior, detail::interior_exponent(w, p, q));
    }
    return r;
}

}  // namespace ising_gap
