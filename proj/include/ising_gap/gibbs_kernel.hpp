#pragma once

// Random-scan Gibbs sampler on the free-boundary Ising lattice: exact
// transition kernel, equilibrium edge flows and the per-class closed forms for
// single-flip probabilities.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "ising_gap/ising_model.hpp"

namespace ising_gap {

/// Transition (e-, e+) where e+ is e- with the spin at `site` negated.
class DirectedEdge {
public:
    DirectedEdge(SpinConfiguration minus, SiteIndex site)
        : minus_(std::move(minus)), site_(site) {
        if (!(minus_.size() == site.size())) throw SizeMismatch("edge site on a different lattice");
    }

    /// Edge with dense id state * n^2 + bit.
    static DirectedEdge from_id(LatticeSize size, std::uint64_t id) {
        const auto sites = static_cast<std::uint64_t>(size.sites());
        return DirectedEdge(SpinConfiguration(size, id / sites),
                            SiteIndex::from_linear(size, static_cast<int>(id % sites) + 1));
    }

    const SpinConfiguration& minus() const noexcept { return minus_; }
    SpinConfiguration plus() const { return minus_.flipped(site_); }
    const SiteIndex& site() const noexcept { return site_; }
    DirectedEdge reversed() const { return DirectedEdge(plus(), site_); }

    std::uint64_t id() const noexcept {
        return minus_.index() * static_cast<std::uint64_t>(minus_.size().sites()) +
               static_cast<std::uint64_t>(site_.bit());
    }

    friend bool operator==(const DirectedEdge&, const DirectedEdge&) = default;

private:
    SpinConfiguration minus_;
    SiteIndex site_;
};

/// Exact Gibbs-sampler kernel. Each row holds the n^2 single-flip
/// probabilities and the holding probability; all other entries are zero.
class TransitionKernel {
public:
    TransitionKernel(LatticeSize size, Temperature temperature,
                     const EnumerationLimits& limits = {})
        : pi_(size, temperature, limits) {
        const int n = size.side();
        const int sites = size.sites();
        const std::uint64_t count = pi_.state_count();
        const double beta = temperature.inverse();
        const double site_weight = 1.0 / sites;
        flips_.resize(count * static_cast<std::uint64_t>(sites));
        holding_.resize(count);
        for (StateIndex s = 0; s < count; ++s) {
            detail::CompensatedSum moved;
            for (int b = 0; b < sites; ++b) {
                const int spin = ((s >> b) & 1U) ? 1 : -1;
                const double cond =
                    detail::logistic_complement(2.0 * beta * spin * detail::local_field(s, b, n));
                const double p = site_weight * cond;
                flips_[s * sites + b] = p;
                moved += p;
            }
            holding_[s] = 1.0 - moved.value();
        }
    }

    LatticeSize size() const noexcept { return pi_.size(); }
    Temperature temperature() const noexcept { return pi_.temperature(); }
    const BoltzmannDistribution& stationary() const noexcept { return pi_; }
    std::uint64_t state_count() const noexcept { return holding_.size(); }
    int sites() const noexcept { return pi_.size().sites(); }

    /// P(x, x with bit b flipped).
    double flip(StateIndex x, int bit) const noexcept {
        return flips_[x * static_cast<std::uint64_t>(sites()) + bit];
    }
    double holding(StateIndex x) const noexcept { return holding_[x]; }

    /// Generic entry P(x, y).
    double operator()(StateIndex x, StateIndex y) const noexcept {
        if (x == y) return holding_[x];
        const StateIndex d = x ^ y;
        if (std::popcount(d) != 1) return 0.0;
        return flip(x, std::countr_zero(d));
    }

private:
    BoltzmannDistribution pi_;
    std::vector<double> flips_;
    std::vector<double> holding_;
};

inline TransitionKernel build_kernel(LatticeSize size, Temperature t,
                                     const EnumerationLimits& limits = {}) {
    return TransitionKernel(size, t, limits);
}

/// Q(e) = pi(e-) P(e-, e+).
inline double edge_flow(const TransitionKernel& k, const DirectedEdge& e) {
    const StateIndex x = e.minus().index();
    return k.stationary()[x] * k.flip(x, e.site().bit());
}

namespace detail {

// Each class is evaluated from one canonical representative: the corner
// (1,1) with bonds right/down, the left column (1,q) with bonds up/down/right,
// or an interior site with all four bonds. The frame maps canonical offsets to
// the actual site's orientation.
struct ClassFrame {
    bool transpose = false;
    bool mirror_column = false;
    bool mirror_row = false;

    std::pair<int, int> apply(int dp, int dq) const noexcept {
        if (transpose) std::swap(dp, dq);
        if (mirror_column) dp = -dp;
        if (mirror_row) dq = -dq;
        return {dp, dq};
    }
};

struct CanonicalBonds {
    ClassFrame frame;
    std::vector<std::pair<int, int>> offsets;
};

inline CanonicalBonds canonical_bonds(SiteClass c) {
    const std::vector<std::pair<int, int>> corner{{1, 0}, {0, 1}};
    const std::vector<std::pair<int, int>> edge{{0, -1}, {0, 1}, {1, 0}};
    const std::vector<std::pair<int, int>> bulk{{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
    switch (c) {
        case SiteClass::corner_11: return {{}, corner};
        case SiteClass::corner_n1: return {{false, true, false}, corner};
        case SiteClass::corner_1n: return {{false, false, true}, corner};
        case SiteClass::corner_nn: return {{false, true, true}, corner};
        case SiteClass::boundary_col1: return {{}, edge};
        case SiteClass::boundary_coln: return {{false, true, false}, edge};
        case SiteClass::boundary_row1: return {{true, false, false}, edge};
        case SiteClass::boundary_rown: return {{true, false, true}, edge};
        case SiteClass::interior: return {{}, bulk};
    }
    return {{}, {}};
}

}  // namespace detail

/// Closed-form P(e-, e+) = 1 / (n^2 (1 + exp((2/T) * sum of bonds z_s z_t)))
/// where the bond list is chosen by the class of the flipped site.
inline double class_flip_probability(const DirectedEdge& e, Temperature t) {
    const SiteIndex& s = e.site();
    const int n = s.size().side();
    const auto bonds = detail::canonical_bonds(s.site_class());
    const int z = e.minus().spin(s);
    int bond_sum = 0;
    for (auto [dp, dq] : bonds.offsets) {
        const auto [ap, aq] = bonds.frame.apply(dp, dq);
        const int p = s.column() + ap;
        const int q = s.row() + aq;
        if (p < 1 || p > n || q < 1 || q > n) continue;  // only for n = 1
        bond_sum += z * e.minus().spin(p, q);
    }
    const double nn = static_cast<double>(s.size().sites());
    const double a = 2.0 * t.inverse() * bond_sum;
    if (a > 0) {
        const double ex = std::exp(-a);
        return ex / (nn * (1.0 + ex));
    }
    return 1.0 / (nn * (1.0 + std::exp(a)));
}

/// Calls f(DirectedEdge) for each of the 2^(n^2) n^2 directed edges, in id order.
template <class F>
void for_each_directed_edge(LatticeSize size, const EnumerationLimits& limits, F&& f) {
    size.require_enumerable(limits.max_states, "directed edge enumeration");
    const std::uint64_t count = size.state_count();
    for (StateIndex s = 0; s < count; ++s)
        for (int k = 1; k <= size.sites(); ++k)
            f(DirectedEdge(SpinConfiguration(size, s), SiteIndex::from_linear(size, k)));
}

inline std::uint64_t directed_edge_count(LatticeSize size, const EnumerationLimits& limits = {}) {
    size.require_enumerable(limits.max_states, "directed edge enumeration");
    return size.state_count() * static_cast<std::uint64_t>(size.sites());
}

/// Kernel dump: one "x,y,probability" line per nonzero entry, rows in state
/// order and columns ascending.
inline void write_kernel_csv(std::ostream& out, const TransitionKernel& k) {
    char buf[96];
    out << "x,y,probability\n";
    std::vector<std::pair<StateIndex, double>> row;
    for (StateIndex x = 0; x < k.state_count(); ++x) {
        row.clear();
        row.emplace_back(x, k.holding(x));
        for (int b = 0; b < k.sites(); ++b) row.emplace_back(x ^ (StateIndex{1} << b), k.flip(x, b));
        std::sort(row.begin(), row.end());
        for (const auto& [y, p] : row) {
            std::snprintf(buf, sizeof buf, "%llu,%llu,%.17g\n", static_cast<unsigned long long>(x),
                          static_cast<unsigned long long>(y), p);
            out << buf;
        }
    }
}

}  // namespace ising_gap
