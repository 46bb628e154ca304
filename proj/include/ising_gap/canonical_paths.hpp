#pragma once

// Canonical paths: x is turned into y by flipping the differing sites in
// increasing linear order. Edge loads sum |gamma_xy| pi(x) pi(y) over the
// ordered pairs whose path crosses a directed edge.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <vector>

#include "ising_gap/detail/summation.hpp"
#include "ising_gap/gibbs_kernel.hpp"
#include "ising_gap/ising_model.hpp"

namespace ising_gap {

class CanonicalPath {
public:
    CanonicalPath(SpinConfiguration x, SpinConfiguration y) : x_(std::move(x)), y_(std::move(y)) {
        if (!(x_.size() == y_.size())) throw SizeMismatch("path endpoints on different lattices");
        StateIndex diff = x_.index() ^ y_.index();
        while (diff != 0) {
            const int b = std::countr_zero(diff);
            flips_.push_back(SiteIndex::from_linear(x_.size(), b + 1));
            diff &= diff - 1;
        }
    }

    const SpinConfiguration& from() const noexcept { return x_; }
    const SpinConfiguration& to() const noexcept { return y_; }
    int length() const noexcept { return static_cast<int>(flips_.size()); }

    /// Sites flipped at steps 1..m, increasing in linear index.
    const std::vector<SiteIndex>& flipped_sites() const noexcept { return flips_; }

    /// Vertex after t flips; vertex(0) == from(), vertex(length()) == to().
    SpinConfiguration vertex(int t) const {
        SpinConfiguration v = x_;
        for (int i = 0; i < t; ++i) v = v.flipped(flips_.at(i));
        return v;
    }

    /// Edge traversed at step t (1-based).
    DirectedEdge edge(int t) const { return DirectedEdge(vertex(t - 1), flips_.at(t - 1)); }

private:
    SpinConfiguration x_;
    SpinConfiguration y_;
    std::vector<SiteIndex> flips_;
};

inline CanonicalPath canonical_path(const SpinConfiguration& x, const SpinConfiguration& y) {
    return CanonicalPath(x, y);
}

/// Calls f(x, y) for every ordered pair whose canonical path traverses e:
/// x agrees with e- on sites k..n^2 and is free below k, y agrees with e+ on
/// sites 1..k and is free above k. Yields 2^(n^2 - 1) pairs.
template <class F>
void for_each_pair_through_edge(const DirectedEdge& e, const EnumerationLimits& limits, F&& f) {
    const LatticeSize size = e.minus().size();
    size.require_enumerable(limits.max_states, "pairs through an edge");
    const int b = e.site().bit();
    const int sites = size.sites();
    const StateIndex below = (StateIndex{1} << b) - 1;
    const StateIndex x_fixed = e.minus().index() & ~below;
    const StateIndex y_fixed = e.plus().index() & (below | (StateIndex{1} << b));
    const StateIndex x_free = StateIndex{1} << b;
    const StateIndex y_free = StateIndex{1} << (sites - b - 1);
    for (StateIndex a = 0; a < x_free; ++a)
        for (StateIndex c = 0; c < y_free; ++c) f(x_fixed | a, y_fixed | (c << (b + 1)));
}

/// Per directed edge: sum of |gamma_xy| pi(x) pi(y) over paths through it, and
/// the number of such paths. Indexed by DirectedEdge::id().
class EdgeLoadTable {
public:
    EdgeLoadTable(LatticeSize size, std::vector<double> loads, std::vector<std::uint64_t> traversals)
        : size_(size), loads_(std::move(loads)), traversals_(std::move(traversals)) {}

    LatticeSize size() const noexcept { return size_; }
    std::uint64_t edge_count() const noexcept { return loads_.size(); }
    double load(const DirectedEdge& e) const { return loads_.at(e.id()); }
    double load(std::uint64_t id) const { return loads_.at(id); }
    std::uint64_t traversals(const DirectedEdge& e) const { return traversals_.at(e.id()); }
    std::uint64_t traversals(std::uint64_t id) const { return traversals_.at(id); }
    const std::vector<double>& loads() const noexcept { return loads_; }
    const std::vector<std::uint64_t>& traversal_counts() const noexcept { return traversals_; }

private:
    LatticeSize size_;
    std::vector<double> loads_;
    std::vector<std::uint64_t> traversals_;
};

/// Loads from the per-edge characterisation of the pairs through each edge.
/// Every edge is independent of the others.
inline EdgeLoadTable accumulate_edge_loads(const TransitionKernel& k,
                                           const EnumerationLimits& limits = {}) {
    const LatticeSize size = k.size();
    size.require_enumerable(limits.max_quadratic_states, "edge load accumulation");
    const auto& pi = k.stationary().probabilities();
    const std::uint64_t edges = k.state_count() * static_cast<std::uint64_t>(k.sites());
    std::vector<double> loads(edges);
    std::vector<std::uint64_t> counts(edges);
    for (std::uint64_t id = 0; id < edges; ++id) {
        detail::CompensatedSum sum;
        std::uint64_t n_pairs = 0;
        for_each_pair_through_edge(DirectedEdge::from_id(size, id), limits,
                                   [&](StateIndex x, StateIndex y) {
                                       sum += std::popcount(x ^ y) * pi[x] * pi[y];
                                       ++n_pairs;
                                   });
        loads[id] = sum.value();
        counts[id] = n_pairs;
    }
    return EdgeLoadTable(size, std::move(loads), std::move(counts));
}

/// Loads obtained by walking every ordered pair's canonical path and charging
/// each traversed edge. Independent of the edge characterisation above.
inline EdgeLoadTable accumulate_edge_loads_by_walking(const TransitionKernel& k,
                                                      const EnumerationLimits& limits = {}) {
    const LatticeSize size = k.size();
    size.require_enumerable(limits.max_quadratic_states, "path walking");
    const auto& pi = k.stationary().probabilities();
    const std::uint64_t states = k.state_count();
    const auto sites = static_cast<std::uint64_t>(k.sites());
    std::vector<detail::CompensatedSum> sums(states * sites);
    std::vector<std::uint64_t> counts(states * sites);
    for (StateIndex x = 0; x < states; ++x) {
        for (StateIndex y = 0; y < states; ++y) {
            if (x == y) continue;
            const CanonicalPath path(SpinConfiguration(size, x), SpinConfiguration(size, y));
            const double contribution = path.length() * pi[x] * pi[y];
            StateIndex cur = x;
            for (const SiteIndex& s : path.flipped_sites()) {
                const std::uint64_t id = cur * sites + static_cast<std::uint64_t>(s.bit());
                sums[id] += contribution;
                ++counts[id];
                cur ^= StateIndex{1} << s.bit();
            }
        }
    }
    std::vector<double> loads(sums.size());
    for (std::size_t i = 0; i < sums.size(); ++i) loads[i] = sums[i].value();
    return EdgeLoadTable(size, std::move(loads), std::move(counts));
}

/// CSV: edge_state,site,load,traversals with site the 1-based linear index.
inline void write_edge_loads_csv(std::ostream& out, const EdgeLoadTable& table) {
    char buf[128];
    const auto sites = static_cast<std::uint64_t>(table.size().sites());
    out << "edge_state,site,load,traversals\n";
    for (std::uint64_t id = 0; id < table.edge_count(); ++id) {
        std::snprintf(buf, sizeof buf, "%llu,%llu,%.17g,%llu\n",
                      static_cast<unsigned long long>(id / sites),
                      static_cast<unsigned long long>(id % sites + 1), table.load(id),
                      static_cast<unsigned long long>(table.traversals(id)));
        out << buf;
    }
}

}  // namespace ising_gap
