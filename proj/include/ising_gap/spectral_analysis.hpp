#pragma once

// Exact spectrum of the Gibbs kernel, total-variation decay under matrix
// powering, and the check 4 tv^2 <= ((1 - pi(x)) / pi(x)) beta*^(2k).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ising_gap/detail/summation.hpp"
#include "ising_gap/gibbs_kernel.hpp"
#include "ising_gap/ising_model.hpp"

namespace ising_gap {

struct Spectrum {
    /// Descending: 1 = beta_0 >= beta_1 >= ... >= beta_min.
    std::vector<double> eigenvalues;
    double beta1 = 0.0;
    double beta_min = 0.0;
    double beta_star = 0.0;
    /// max |S - S^T| of the symmetrised kernel before symmetric solve.
    double symmetry_residual = 0.0;

    /// Distinct eigenvalues (descending) with multiplicities; values closer
    /// than `tol` to the previous cluster's first member are merged.
    std::vector<std::pair<double, int>> multiplicities(double tol = 1e-8) const {
        std::vector<std::pair<double, int>> out;
        for (double v : eigenvalues) {
            if (!out.empty() && std::fabs(out.back().first - v) <= tol)
                ++out.back().second;
            else
                out.emplace_back(v, 1);
        }
        return out;
    }
};

class DetailedBalanceViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void finish_spectrum(Spectrum& s) {
    std::sort(s.eigenvalues.begin(), s.eigenvalues.end(), std::greater<>());
    s.beta1 = s.eigenvalues.size() > 1 ? s.eigenvalues[1] : 0.0;
    s.beta_min = s.eigenvalues.back();
    s.beta_star = std::max(s.beta1, std::fabs(s.beta_min));
}

}  // namespace detail

/// Dense symmetric eigendecomposition of S = Pi^{1/2} P Pi^{-1/2}, which has
/// the same eigenvalues as P and is symmetric by detailed balance.
inline Spectrum exact_spectrum(const TransitionKernel& k, const EnumerationLimits& limits = {}) {
    k.size().require_enumerable(limits.max_quadratic_states, "dense spectrum");
    const auto count = static_cast<Eigen::Index>(k.state_count());
    const auto& pi = k.stationary().probabilities();
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(count, count);
    for (Eigen::Index x = 0; x < count; ++x) {
        s(x, x) = k.holding(static_cast<StateIndex>(x));
        for (int b = 0; b < k.sites(); ++b) {
            const auto y = static_cast<Eigen::Index>(static_cast<StateIndex>(x) ^ (StateIndex{1} << b));
            s(x, y) = std::sqrt(pi[x] / pi[y]) * k.flip(static_cast<StateIndex>(x), b);
        }
    }
    Spectrum out;
    out.symmetry_residual = (s - s.transpose()).cwiseAbs().maxCoeff();
    if (out.symmetry_residual > 1e-10)
        throw DetailedBalanceViolation("symmetrised kernel is not symmetric (residual " +
                                       std::to_string(out.symmetry_residual) + ")");
    const Eigen::MatrixXd sym = 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigensolver did not converge");
    out.eigenvalues.assign(solver.eigenvalues().data(),
                           solver.eigenvalues().data() + solver.eigenvalues().size());
    detail::finish_spectrum(out);
    return out;
}

/// beta_1 and beta_min only, from a Lanczos run (full reorthogonalisation) on
/// the symmetrised kernel restricted to the complement of sqrt(pi). Intended
/// for lattices beyond the dense ceiling (n = 4).
struct ExtremalSpectrum {
    double beta1 = 0.0;
    double beta_min = 0.0;
    double beta_star = 0.0;
    /// Lanczos residual estimates |b_m s_m| of the two Ritz pairs.
    double residual_beta1 = 0.0;
    double residual_beta_min = 0.0;
    int iterations = 0;
};

inline ExtremalSpectrum extremal_spectrum(const TransitionKernel& k, int max_iterations = 200) {
    const auto dim = static_cast<Eigen::Index>(k.state_count());
    if (dim < 2) throw std::invalid_argument("state space too small");
    const int sites = k.sites();
    const auto& pi = k.stationary().probabilities();

    auto apply = [&](const Eigen::VectorXd& v, Eigen::VectorXd& out) {
        for (Eigen::Index x = 0; x < dim; ++x) {
            const auto xs = static_cast<StateIndex>(x);
            double acc = k.holding(xs) * v[x];
            for (int b = 0; b < sites; ++b) {
                const StateIndex y = xs ^ (StateIndex{1} << b);
                // S(x,y) = sqrt(P(x,y) P(y,x)) under detailed balance.
                acc += std::sqrt(k.flip(xs, b) * k.flip(y, b)) * v[static_cast<Eigen::Index>(y)];
            }
            out[x] = acc;
        }
    };

    Eigen::VectorXd root(dim);
    for (Eigen::Index x = 0; x < dim; ++x) root[x] = std::sqrt(pi[x]);
    root.normalize();

    const int m = static_cast<int>(std::min<Eigen::Index>(max_iterations, dim - 1));
    Eigen::MatrixXd basis(dim, m);
    std::vector<double> alpha, beta;

    // Deterministic start vector (xorshift), orthogonal to sqrt(pi).
    Eigen::VectorXd v(dim);
    std::uint64_t state = 0x9E3779B97F4A7C15ULL;
    for (Eigen::Index x = 0; x < dim; ++x) {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        v[x] = static_cast<double>(state >> 11) * 0x1.0p-53 - 0.5;
    }
    v -= root.dot(v) * root;
    v.normalize();

    Eigen::VectorXd w(dim);
    int used = 0;
    for (int j = 0; j < m; ++j) {
        basis.col(j) = v;
        ++used;
        apply(v, w);
        const double a = v.dot(w);
        alpha.push_back(a);
        w -= a * v;
        if (j > 0) w -= beta.back() * basis.col(j - 1);
        // Full reorthogonalisation, including against sqrt(pi).
        for (int pass = 0; pass < 2; ++pass) {
            w -= root.dot(w) * root;
            w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).transpose() * w);
        }
        const double b = w.norm();
        if (j + 1 == m || b < 1e-14) {
            beta.push_back(b);
            break;
        }
        beta.push_back(b);
        v = w / b;
    }

    Eigen::VectorXd diag(used), sub(std::max(used - 1, 0));
    for (int i = 0; i < used; ++i) diag[i] = alpha[i];
    for (int i = 0; i + 1 < used; ++i) sub[i] = beta[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
    tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    const auto& vals = tri.eigenvalues();
    const auto& vecs = tri.eigenvectors();
    const double last_beta = beta.back();

    ExtremalSpectrum out;
    out.iterations = used;
    out.beta_min = vals[0];
    out.beta1 = vals[used - 1];
    out.residual_beta_min = std::fabs(last_beta * vecs(used - 1, 0));
    out.residual_beta1 = std::fabs(last_beta * vecs(used - 1, used - 1));
    out.beta_star = std::max(out.beta1, std::fabs(out.beta_min));
    return out;
}

/// Half L1 distance (1/2) sum |row(y) - pi(y)|; both inputs must be
/// probability vectors (sum 1 within 1e-10).
inline double tv_distance(std::span<const double> row, std::span<const double> pi) {
    if (row.size() != pi.size()) throw SizeMismatch("vectors of different length");
    detail::CompensatedSum a, b, l1;
    for (std::size_t i = 0; i < row.size(); ++i) {
        a += row[i];
        b += pi[i];
        l1 += std::fabs(row[i] - pi[i]);
    }
    if (std::fabs(a.value() - 1.0) > 1e-10 || std::fabs(b.value() - 1.0) > 1e-10)
        throw std::invalid_argument("tv_distance needs normalised probability vectors");
    return 0.5 * l1.value();
}

/// row * P for a row vector over the state space.
inline std::vector<double> step_distribution(const TransitionKernel& k, std::span<const double> row) {
    std::vector<double> next(row.size(), 0.0);
    for (StateIndex x = 0; x < row.size(); ++x) {
        const double mass = row[x];
        if (mass == 0.0) continue;
        next[x] += mass * k.holding(x);
        for (int b = 0; b < k.sites(); ++b) next[x ^ (StateIndex{1} << b)] += mass * k.flip(x, b);
    }
    return next;
}

/// P^0(x,.), P^1(x,.), ..., P^horizon(x,.).
inline std::vector<std::vector<double>> power_rows(const TransitionKernel& k, StateIndex x, int horizon,
                                                   const EnumerationLimits& limits = {}) {
    k.size().require_enumerable(limits.max_quadratic_states, "matrix powers");
    if (horizon < 0) throw std::invalid_argument("horizon must be >= 0");
    if (x >= k.state_count()) throw std::out_of_range("start state outside the state space");
    std::vector<std::vector<double>> rows;
    rows.reserve(static_cast<std::size_t>(horizon) + 1);
    std::vector<double> row(k.state_count(), 0.0);
    row[x] = 1.0;
    rows.push_back(row);
    for (int step = 1; step <= horizon; ++step) rows.push_back(step_distribution(k, rows.back()));
    return rows;
}

struct TvDecayRow {
    int step = 0;
    StateIndex start = 0;
    double tv = 0.0;
    /// tv <= (1/2) sqrt((1 - pi(x))/pi(x)) beta*^k with the exact beta* ...
    double bound_exact = 0.0;
    /// ... and with the closed-form beta* bound.
    double bound_closed_form = 0.0;
};

struct TvDecayReport {
    int horizon = 0;
    std::uint64_t checks = 0;
    std::uint64_t failures_exact = 0;
    std::uint64_t failures_closed_form = 0;
    /// min over (x, k) of rhs - lhs in 4 tv^2 <= ((1 - pi)/pi) beta*^(2k).
    double worst_margin_exact = 0.0;
    double worst_margin_closed_form = 0.0;
    /// max |4 tv^2 - (sum |P^k(x,.) - pi|)^2|.
    double identity_residual = 0.0;
    std::vector<TvDecayRow> decay;

    bool passed() const noexcept { return failures_exact == 0 && failures_closed_form == 0; }
};

inline constexpr double kTvDecaySlack = 1e-10;

/// Checks the TV decay inequality for every start state and every k <= horizon,
/// once with the exact beta* and once with `beta_star_bound`.
inline TvDecayReport verify_tv_decay(const TransitionKernel& k, const Spectrum& spectrum,
                                      double beta_star_bound, int horizon,
                                      const EnumerationLimits& limits = {}) {
    k.size().require_enumerable(limits.max_quadratic_states, "decay verification");
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    const auto& pi = k.stationary().probabilities();
    TvDecayReport r;
    r.horizon = horizon;
    r.worst_margin_exact = std::numeric_limits<double>::infinity();
    r.worst_margin_closed_form = std::numeric_limits<double>::infinity();
    for (StateIndex x = 0; x < k.state_count(); ++x) {
        const double odds = (1.0 - pi[x]) / pi[x];
        std::vector<double> row(k.state_count(), 0.0);
        row[x] = 1.0;
        for (int step = 0; step <= horizon; ++step) {
            if (step > 0) row = step_distribution(k, row);
            const double tv = tv_distance(row, pi);
            detail::CompensatedSum l1;
            for (std::size_t y = 0; y < row.size(); ++y) l1 += std::fabs(row[y] - pi[y]);
            const double lhs = 4.0 * tv * tv;
            r.identity_residual =
                std::max(r.identity_residual, std::fabs(lhs - l1.value() * l1.value()));
            const double rhs_exact = odds * std::pow(spectrum.beta_star, 2.0 * step);
            const double rhs_cor = odds * std::pow(beta_star_bound, 2.0 * step);
            const double m_exact = rhs_exact - lhs;
            const double m_cor = rhs_cor - lhs;
            r.worst_margin_exact = std::min(r.worst_margin_exact, m_exact);
            r.worst_margin_closed_form = std::min(r.worst_margin_closed_form, m_cor);
            if (m_exact < -kTvDecaySlack) ++r.failures_exact;
            if (m_cor < -kTvDecaySlack) ++r.failures_closed_form;
            ++r.checks;
            r.decay.push_back({step, x, tv, 0.5 * std::sqrt(odds) * std::pow(spectrum.beta_star, step),
                               0.5 * std::sqrt(odds) * std::pow(beta_star_bound, step)});
        }
    }
    return r;
}

/// Geometric rate (tv(k_hi) / tv(k_lo))^(1 / (k_hi - k_lo)) of TV decay from x.
inline double fitted_decay_rate(const TransitionKernel& k, StateIndex x, int k_lo, int k_hi,
                                const EnumerationLimits& limits = {}) {
    if (!(0 <= k_lo && k_lo < k_hi)) throw std::invalid_argument("need 0 <= k_lo < k_hi");
    const auto rows = power_rows(k, x, k_hi, limits);
    const auto& pi = k.stationary().probabilities();
    const double lo = tv_distance(rows[k_lo], pi);
    const double hi = tv_distance(rows[k_hi], pi);
    return std::pow(hi / lo, 1.0 / (k_hi - k_lo));
}

inline void write_eigenvalues_csv(std::ostream& out, const Spectrum& s) {
    char buf[64];
    out << "index,eigenvalue\n";
    for (std::size_t i = 0; i < s.eigenvalues.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, s.eigenvalues[i]);
        out << buf;
    }
}

inline void write_tv_decay_csv(std::ostream& out, const TvDecayReport& r) {
    char buf[160];
    out << "k,x,tv,bound_exact_beta_star,bound_closed_form_beta_star\n";
    for (const TvDecayRow& row : r.decay) {
        std::snprintf(buf, sizeof buf, "%d,%llu,%.17g,%.17g,%.17g\n", row.step,
                      static_cast<unsigned long long>(row.start), row.tv, row.bound_exact,
                      row.bound_closed_form);
        out << buf;
    }
}

}  // namespace ising_gap
