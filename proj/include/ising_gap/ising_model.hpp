#pragma once

// Free-boundary n x n Ising lattice: geometry, spin configurations, energy,
// Boltzmann weights and single-site conditionals.
//
// Conventions used throughout the library:
//   * site (p, q): p is the column (1..n), q is the row (1..n);
//   * linear index k = (q - 1) * n + p, rows major, columns minor;
//   * a configuration is stored as an integer whose bit k - 1 is set iff the
//     spin at linear site k is +1. That integer is also the state index.
//   * the weight of x is exp(H(x) / T) with H(x) the sum over nearest-neighbour
//     bonds of x_s * x_t (ferromagnetic, no field, no wraparound).

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ising_gap/detail/summation.hpp"

namespace ising_gap {

using StateIndex = std::uint64_t;

/// Thrown when an exhaustive computation would exceed the configured number
/// of states.
class LatticeTooLarge : public std::runtime_error {
public:
    LatticeTooLarge(int side, std::uint64_t ceiling, const std::string& what)
        : std::runtime_error("lattice-too-large: " + what + " needs 2^" +
                             std::to_string(side * side) + " states, ceiling is " +
                             std::to_string(ceiling)),
          side_(side), ceiling_(ceiling) {}

    int side() const noexcept { return side_; }
    std::uint64_t ceiling() const noexcept { return ceiling_; }

private:
    int side_;
    std::uint64_t ceiling_;
};

class SizeMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Ceilings for exhaustive work. `max_states` bounds anything linear in the
/// state space (partition function, kernel rows, w-sums); `max_quadratic_states`
/// bounds work that is quadratic in it (dense spectrum, matrix powers, path loads).
struct EnumerationLimits {
    std::uint64_t max_states = std::uint64_t{1} << 16;
    std::uint64_t max_quadratic_states = std::uint64_t{1} << 9;

    /// Defaults, overridden by ISING_GAP_MAX_STATES / ISING_GAP_MAX_QUADRATIC_STATES.
    static EnumerationLimits from_environment() {
        EnumerationLimits limits;
        auto read = [](const char* name, std::uint64_t& slot) {
            if (const char* raw = std::getenv(name); raw != nullptr && *raw != '\0') {
                char* end = nullptr;
                const unsigned long long v = std::strtoull(raw, &end, 10);
                if (end != nullptr && *end == '\0' && v > 0) slot = v;
            }
        };
        read("ISING_GAP_MAX_STATES", limits.max_states);
        read("ISING_GAP_MAX_QUADRATIC_STATES", limits.max_quadratic_states);
        return limits;
    }
};

class LatticeSize {
public:
    explicit LatticeSize(int side) : side_(side) {
        if (side < 1) throw std::invalid_argument("lattice side must be >= 1");
    }

    int side() const noexcept { return side_; }
    int sites() const noexcept { return side_ * side_; }

    /// True when 2^(n^2) <= ceiling.
    bool enumerable(std::uint64_t ceiling) const noexcept {
        return sites() < 63 && (std::uint64_t{1} << sites()) <= ceiling;
    }

    /// 2^(n^2); only meaningful for lattices that fit a 64-bit state index.
    std::uint64_t state_count() const {
        if (sites() > 62) throw std::overflow_error("state count does not fit in 64 bits");
        return std::uint64_t{1} << sites();
    }

    void require_enumerable(std::uint64_t ceiling, const std::string& what) const {
        if (!enumerable(ceiling)) throw LatticeTooLarge(side_, ceiling, what);
    }

    friend bool operator==(LatticeSize, LatticeSize) = default;

private:
    int side_;
};

/// Temperature with an exact infinite-temperature point (1/T = 0).
class Temperature {
public:
    static Temperature finite(double t) {
        if (!(t > 0.0) || !std::isfinite(t))
            throw std::invalid_argument("temperature must be a positive finite real");
        return Temperature(1.0 / t, t);
    }
    static Temperature infinite() noexcept {
        return Temperature(0.0, std::numeric_limits<double>::infinity());
    }
    /// Accepts a positive real or one of "inf", "infinity".
    static Temperature parse(std::string_view text) {
        if (text == "inf" || text == "Inf" || text == "infinity" || text == "INF")
            return infinite();
        const std::string s(text);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("cannot parse temperature '" + s + "'");
        }
        if (used != s.size()) throw std::invalid_argument("cannot parse temperature '" + s + "'");
        if (std::isinf(v) && v > 0) return infinite();
        return finite(v);
    }

    double inverse() const noexcept { return inverse_; }
    double value() const noexcept { return value_; }
    bool is_infinite() const noexcept { return inverse_ == 0.0; }

    std::string label() const {
        if (is_infinite()) return "inf";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", value_);
        return buf;
    }

private:
    Temperature(double inverse, double value) : inverse_(inverse), value_(value) {}
    double inverse_;
    double value_;
};

enum class SiteClass {
    corner_11,
    corner_1n,
    corner_n1,
    corner_nn,
    boundary_row1,
    boundary_rown,
    boundary_col1,
    boundary_coln,
    interior,
};

inline constexpr SiteClass kAllSiteClasses[] = {
    SiteClass::corner_11,     SiteClass::corner_1n,     SiteClass::corner_n1,
    SiteClass::corner_nn,     SiteClass::boundary_row1, SiteClass::boundary_rown,
    SiteClass::boundary_col1, SiteClass::boundary_coln, SiteClass::interior,
};

inline std::string_view to_string(SiteClass c) {
    switch (c) {
        case SiteClass::corner_11: return "corner-11";
        case SiteClass::corner_1n: return "corner-1n";
        case SiteClass::corner_n1: return "corner-n1";
        case SiteClass::corner_nn: return "corner-nn";
        case SiteClass::boundary_row1: return "boundary-row1";
        case SiteClass::boundary_rown: return "boundary-rown";
        case SiteClass::boundary_col1: return "boundary-col1";
        case SiteClass::boundary_coln: return "boundary-coln";
        case SiteClass::interior: return "interior";
    }
    return "?";
}

/// Class of site (p, q) on an n x n lattice. For n = 1 the single site is
/// reported as corner-11.
inline SiteClass classify_site(int p, int q, int n) noexcept {
    const bool first_col = p == 1, last_col = p == n;
    const bool first_row = q == 1, last_row = q == n;
    if (first_col && first_row) return SiteClass::corner_11;
    if (first_col && last_row) return SiteClass::corner_1n;
    if (last_col && first_row) return SiteClass::corner_n1;
    if (last_col && last_row) return SiteClass::corner_nn;
    if (first_row) return SiteClass::boundary_row1;
    if (last_row) return SiteClass::boundary_rown;
    if (first_col) return SiteClass::boundary_col1;
    if (last_col) return SiteClass::boundary_coln;
    return SiteClass::interior;
}

class SiteIndex {
public:
    SiteIndex(LatticeSize size, int column, int row) : size_(size), p_(column), q_(row) {
        if (column < 1 || column > size.side() || row < 1 || row > size.side())
            throw std::out_of_range("site outside the lattice");
    }

    /// From the 1-based linear index k = (q - 1) n + p.
    static SiteIndex from_linear(LatticeSize size, int k) {
        if (k < 1 || k > size.sites()) throw std::out_of_range("linear site index out of range");
        return SiteIndex(size, (k - 1) % size.side() + 1, (k - 1) / size.side() + 1);
    }

    LatticeSize size() const noexcept { return size_; }
    int column() const noexcept { return p_; }
    int row() const noexcept { return q_; }
    int linear() const noexcept { return (q_ - 1) * size_.side() + p_; }
    int bit() const noexcept { return linear() - 1; }
    SiteClass site_class() const noexcept { return classify_site(p_, q_, size_.side()); }

    /// Image under the 180-degree rotation of the lattice.
    SiteIndex rotated() const {
        const int n = size_.side();
        return SiteIndex(size_, n + 1 - p_, n + 1 - q_);
    }

    friend bool operator==(const SiteIndex&, const SiteIndex&) = default;

private:
    LatticeSize size_;
    int p_;
    int q_;
};

class SpinConfiguration {
public:
    /// Configuration with state index `index`; n^2 must be at most 64.
    SpinConfiguration(LatticeSize size, StateIndex index) : size_(size), bits_(index) {
        if (size.sites() > 64) throw std::invalid_argument("configurations limited to n <= 8");
        if (size.sites() < 64 && (index >> size.sites()) != 0)
            throw std::out_of_range("state index outside the state space");
    }

    static SpinConfiguration uniform(LatticeSize size, int spin) {
        check_spin(spin);
        return SpinConfiguration(size, spin > 0 ? full_mask(size) : 0);
    }

    /// Spins listed row by row (linear order), each -1 or +1.
    static SpinConfiguration from_spins(LatticeSize size, const std::vector<int>& spins) {
        if (static_cast<int>(spins.size()) != size.sites())
            throw SizeMismatch("spin list length must equal n^2");
        StateIndex bits = 0;
        for (std::size_t k = 0; k < spins.size(); ++k) {
            check_spin(spins[k]);
            if (spins[k] > 0) bits |= StateIndex{1} << k;
        }
        return SpinConfiguration(size, bits);
    }

    LatticeSize size() const noexcept { return size_; }
    StateIndex index() const noexcept { return bits_; }

    int spin(int column, int row) const {
        return spin_at_bit((row - 1) * size_.side() + (column - 1));
    }
    int spin(const SiteIndex& s) const { return spin_at_bit(s.bit()); }
    int spin_at_bit(int bit) const noexcept { return ((bits_ >> bit) & 1U) ? 1 : -1; }

    SpinConfiguration flipped(const SiteIndex& s) const {
        return SpinConfiguration(size_, bits_ ^ (StateIndex{1} << s.bit()));
    }
    SpinConfiguration global_flip() const {
        return SpinConfiguration(size_, bits_ ^ full_mask(size_));
    }

    friend bool operator==(const SpinConfiguration&, const SpinConfiguration&) = default;

    static StateIndex full_mask(LatticeSize size) noexcept {
        return size.sites() >= 64 ? ~StateIndex{0} : (StateIndex{1} << size.sites()) - 1;
    }

private:
    static void check_spin(int s) {
        if (s != 1 && s != -1) throw std::invalid_argument("spins must be -1 or +1");
    }

    LatticeSize size_;
    StateIndex bits_;
};

namespace detail {

/// Sum of the spins of the in-lattice nearest neighbours of bit `bit`.
inline int local_field(StateIndex state, int bit, int n) noexcept {
    const int p = bit % n;
    const int q = bit / n;
    auto s = [state](int b) { return ((state >> b) & 1U) ? 1 : -1; };
    int h = 0;
    if (p > 0) h += s(bit - 1);
    if (p + 1 < n) h += s(bit + 1);
    if (q > 0) h += s(bit - n);
    if (q + 1 < n) h += s(bit + n);
    return h;
}

inline int energy(StateIndex state, int n) noexcept {
    // Aligned bonds count +1, broken bonds -1: H = bonds - 2 * broken.
    const int bonds = 2 * n * (n - 1);
    int broken = 0;
    for (int q = 0; q < n; ++q) {
        for (int p = 0; p < n; ++p) {
            const int b = q * n + p;
            const unsigned self = (state >> b) & 1U;
            if (p + 1 < n) broken += static_cast<int>(self ^ ((state >> (b + 1)) & 1U));
            if (q + 1 < n) broken += static_cast<int>(self ^ ((state >> (b + n)) & 1U));
        }
    }
    return bonds - 2 * broken;
}

/// 1 / (1 + exp(a)) without overflow for large positive a.
inline double logistic_complement(double a) noexcept {
    if (a > 0) {
        const double e = std::exp(-a);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(a));
}

}  // namespace detail

/// H(x): sum over free-boundary nearest-neighbour bonds of x_s x_t.
inline int energy(const SpinConfiguration& x) { return detail::energy(x.index(), x.size().side()); }

inline int local_field(const SpinConfiguration& x, const SiteIndex& s) {
    return detail::local_field(x.index(), s.bit(), x.size().side());
}

inline int hamming_distance(const SpinConfiguration& x, const SpinConfiguration& y) {
    if (!(x.size() == y.size())) throw SizeMismatch("configurations on different lattices");
    return std::popcount(x.index() ^ y.index());
}

/// Exact Boltzmann distribution over all 2^(n^2) configurations.
class BoltzmannDistribution {
public:
    BoltzmannDistribution(LatticeSize size, Temperature temperature,
                          const EnumerationLimits& limits = {})
        : size_(size), temperature_(temperature) {
        size.require_enumerable(limits.max_states, "Boltzmann distribution");
        const std::uint64_t count = size.state_count();
        const int n = size.side();
        energies_.resize(count);
        int top = std::numeric_limits<int>::min();
        for (StateIndex s = 0; s < count; ++s) {
            energies_[s] = detail::energy(s, n);
            top = std::max(top, energies_[s]);
        }
        // Weights are shifted by the ground energy so that nothing overflows.
        const double beta = temperature.inverse();
        probabilities_.resize(count);
        detail::CompensatedSum total;
        for (StateIndex s = 0; s < count; ++s) {
            probabilities_[s] = std::exp(beta * (energies_[s] - top));
            total += probabilities_[s];
        }
        const double shifted_z = total.value();
        log_partition_ = std::log(shifted_z) + beta * top;
        for (double& p : probabilities_) p /= shifted_z;
    }

    LatticeSize size() const noexcept { return size_; }
    Temperature temperature() const noexcept { return temperature_; }
    std::uint64_t state_count() const noexcept { return probabilities_.size(); }

    double partition_function() const noexcept { return std::exp(log_partition_); }
    double log_partition_function() const noexcept { return log_partition_; }

    double operator[](StateIndex s) const noexcept { return probabilities_[s]; }
    double probability(const SpinConfiguration& x) const { return probabilities_.at(x.index()); }
    int energy(StateIndex s) const noexcept { return energies_[s]; }

    const std::vector<double>& probabilities() const noexcept { return probabilities_; }
    const std::vector<int>& energies() const noexcept { return energies_; }

private:
    LatticeSize size_;
    Temperature temperature_;
    std::vector<int> energies_;
    std::vector<double> probabilities_;
    double log_partition_ = 0.0;
};

/// Z_T by exhaustive enumeration.
inline double partition_function(LatticeSize size, Temperature t,
                                 const EnumerationLimits& limits = {}) {
    return BoltzmannDistribution(size, t, limits).partition_function();
}

/// exp(H(x)/T) / Z.
inline double stationary_probability(const SpinConfiguration& x, Temperature t, double z) {
    return std::exp(t.inverse() * energy(x)) / z;
}

/// pi(x with spin at s negated | other spins), from the local field:
/// 1 / (1 + exp((2/T) x_s * sum of neighbours)).
inline double conditional_flip_probability(const SpinConfiguration& x, const SiteIndex& s,
                                           Temperature t) {
    return detail::logistic_complement(2.0 * t.inverse() * x.spin(s) * local_field(x, s));
}

/// Same quantity from the ratio pi(y) / (pi(y) + pi(x)) with y = x flipped at s,
/// using full-lattice energies.
inline double conditional_flip_probability_by_ratio(const SpinConfiguration& x,
                                                    const SiteIndex& s, Temperature t) {
    const int hx = energy(x);
    const int hy = energy(x.flipped(s));
    // pi(y)/(pi(y)+pi(x)) = 1/(1 + exp((H(x)-H(y))/T))
    return detail::logistic_complement(t.inverse() * (hx - hy));
}

}  // namespace ising_gap
