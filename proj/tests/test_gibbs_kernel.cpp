#include <gtest/gtest.h>

#include <cmath>
#include <queue>
#include <set>
#include <sstream>

#include "ising_gap/gibbs_kernel.hpp"
#include "oracles.hpp"

using namespace ising_gap;

namespace {

const Temperature kT1 = Temperature::finite(1.0);
const LatticeSize kN1(1), kN2(2), kN3(3);

std::vector<Temperature> grid() {
    return {Temperature::finite(0.5), Temperature::finite(1.0), Temperature::finite(2.0),
            Temperature::finite(5.0), Temperature::infinite()};
}

}  // namespace

TEST(Kernel, SingleSiteLatticeIsAllHalves) {
    const TransitionKernel k(kN1, kT1);
    for (StateIndex x = 0; x < 2; ++x)
        for (StateIndex y = 0; y < 2; ++y) EXPECT_DOUBLE_EQ(k(x, y), 0.5);
}

TEST(Kernel, InfiniteTemperatureEntries) {
    const TransitionKernel k(kN2, Temperature::infinite());
    for (StateIndex x = 0; x < 16; ++x) {
        EXPECT_DOUBLE_EQ(k.holding(x), 0.5);
        for (int b = 0; b < 4; ++b) EXPECT_DOUBLE_EQ(k.flip(x, b), 0.125);
    }
}

TEST(Kernel, AllUpFlipCornerAtUnitTemperature) {
    const TransitionKernel k(kN2, kT1);
    EXPECT_NEAR(k.flip(15, 0), 0.25 / (1 + std::exp(4.0)), 1e-17);
    EXPECT_NEAR(k.flip(15, 0), 0.0044964, 2e-7);  // quoted value is rounded low in its last digit
}

TEST(Kernel, MatchesDenseOracleAndStructure) {
    for (int n = 1; n <= 3; ++n) {
        for (const Temperature& t : grid()) {
            const TransitionKernel k(LatticeSize(n), t);
            const auto ref = oracle::kernel(n, t.inverse());
            for (StateIndex x = 0; x < k.state_count(); ++x) {
                detail::CompensatedSum row;
                for (StateIndex y = 0; y < k.state_count(); ++y) {
                    const double p = k(x, y);
                    row += p;
                    EXPECT_GE(p, 0.0);
                    if (std::popcount(x ^ y) > 1) {
                        EXPECT_EQ(p, 0.0);
                    }
                    EXPECT_NEAR(p, ref[x][y], 1e-13);
                }
                EXPECT_LE(std::fabs(row.value() - 1.0), 1e-12);
            }
        }
    }
}

TEST(Kernel, DetailedBalanceExhaustive) {
    for (int n = 1; n <= 3; ++n)
        for (const Temperature& t : grid()) {
            const TransitionKernel k(LatticeSize(n), t);
            for_each_directed_edge(k.size(), {}, [&](const DirectedEdge& e) {
                const double q = edge_flow(k, e);
                EXPECT_GT(q, 0.0);
                EXPECT_LE(std::fabs(q - edge_flow(k, e.reversed())) / q, 1e-12);
            });
        }
}

TEST(Kernel, IrreducibleAndAperiodic) {
    for (const Temperature& t : grid()) {
        const TransitionKernel k(kN3, t);
        std::vector<bool> seen(k.state_count(), false);
        std::queue<StateIndex> todo;
        todo.push(0);
        seen[0] = true;
        while (!todo.empty()) {
            const StateIndex x = todo.front();
            todo.pop();
            for (int b = 0; b < k.sites(); ++b) {
                const StateIndex y = x ^ (StateIndex{1} << b);
                if (k.flip(x, b) > 0 && !seen[y]) {
                    seen[y] = true;
                    todo.push(y);
                }
            }
        }
        EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
        for (StateIndex x = 0; x < k.state_count(); ++x) EXPECT_GT(k.holding(x), 0.0);
    }
}

TEST(Kernel, CeilingRejected) {
    EXPECT_THROW(TransitionKernel(LatticeSize(5), kT1), LatticeTooLarge);
    EnumerationLimits tight;
    tight.max_states = 8;
    EXPECT_THROW(build_kernel(kN2, kT1, tight), LatticeTooLarge);
}

TEST(EdgeFlow, Examples) {
    const TransitionKernel k1(kN1, kT1);
    for (StateIndex x = 0; x < 2; ++x)
        EXPECT_DOUBLE_EQ(edge_flow(k1, DirectedEdge(SpinConfiguration(kN1, x), SiteIndex(kN1, 1, 1))), 0.25);
    const TransitionKernel k2(kN2, Temperature::infinite());
    for_each_directed_edge(kN2, {}, [&](const DirectedEdge& e) { EXPECT_DOUBLE_EQ(edge_flow(k2, e), 1.0 / 128); });
    const TransitionKernel k(kN2, kT1);
    const DirectedEdge e(SpinConfiguration::uniform(kN2, 1), SiteIndex(kN2, 1, 1));
    const double expected = k.stationary()[15] * 0.25 / (1 + std::exp(4.0));
    EXPECT_NEAR(edge_flow(k, e), expected, 1e-16);
    EXPECT_NEAR(edge_flow(k, e), 0.0020250, 1e-7);
}

TEST(DirectedEdge, PlusDiffersAtTheSite) {
    const DirectedEdge e(SpinConfiguration(kN3, 77), SiteIndex(kN3, 2, 3));
    EXPECT_EQ(hamming_distance(e.minus(), e.plus()), 1);
    EXPECT_NE(e.minus().spin(2, 3), e.plus().spin(2, 3));
    EXPECT_EQ(DirectedEdge::from_id(kN3, e.id()), e);
    EXPECT_EQ(e.reversed().reversed(), e);
    EXPECT_THROW(DirectedEdge(SpinConfiguration(kN2, 0), SiteIndex(kN3, 1, 1)), SizeMismatch);
}

TEST(DirectedEdge, EnumerationCounts) {
    for (auto [n, expected] : {std::pair{1, 2}, std::pair{2, 64}, std::pair{3, 4608}}) {
        const LatticeSize size(n);
        std::set<std::uint64_t> ids;
        for_each_directed_edge(size, {}, [&](const DirectedEdge& e) { ids.insert(e.id()); });
        EXPECT_EQ(ids.size(), static_cast<std::size_t>(expected));
        EXPECT_EQ(directed_edge_count(size), static_cast<std::uint64_t>(expected));
    }
    EXPECT_THROW(directed_edge_count(LatticeSize(5)), LatticeTooLarge);
}

TEST(ClassClosedForm, Examples) {
    const DirectedEdge corner(SpinConfiguration::uniform(kN2, 1), SiteIndex(kN2, 1, 1));
    EXPECT_NEAR(class_flip_probability(corner, kT1), 1.0 / (4 * (1 + std::exp(4.0))), 1e-17);
    const DirectedEdge inner(SpinConfiguration::uniform(kN3, 1), SiteIndex(kN3, 2, 2));
    EXPECT_NEAR(class_flip_probability(inner, kT1), 1.0 / (9 * (1 + std::exp(8.0))), 1e-19);
    for_each_directed_edge(kN3, {}, [&](const DirectedEdge& e) {
        EXPECT_DOUBLE_EQ(class_flip_probability(e, Temperature::infinite()), 1.0 / 18);
    });
}

TEST(ClassClosedForm, EqualsKernelEntryOnEveryEdge) {
    for (int n = 1; n <= 3; ++n)
        for (const Temperature& t : grid()) {
            const TransitionKernel k(LatticeSize(n), t);
            for_each_directed_edge(k.size(), {}, [&](const DirectedEdge& e) {
                const double generic = k.flip(e.minus().index(), e.site().bit());
                ASSERT_LE(std::fabs(class_flip_probability(e, t) - generic), 1e-14 * generic);
            });
        }
}

TEST(KernelCsv, HeaderAndRowCount) {
    const TransitionKernel k(kN2, kT1);
    std::ostringstream out;
    write_kernel_csv(out, k);
    const std::string s = out.str();
    EXPECT_EQ(s.rfind("x,y,probability\n", 0), 0U);
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1 + 16 * 5);
}
