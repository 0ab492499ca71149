#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <map>
#include <random>

using namespace bnprune;
using bnprune::testing::from_rows;
using bnprune::testing::random_subset;

namespace {

// Nested-loop recount of N_{x,pi}, independent of ContingencyTable.
std::map<std::pair<std::vector<Dataset::Code>, Dataset::Code>, std::uint64_t>
recount(const Dataset& ds, std::size_t child, ParentSet parents)
{
    std::map<std::pair<std::vector<Dataset::Code>, Dataset::Code>, std::uint64_t> out;
    auto members = parents.members();
    for (std::size_t row = 0; row < ds.rows(); ++row) {
        std::vector<Dataset::Code> key;
        for (auto p : members)
            key.push_back(ds.at(row, p));
        ++out[{key, ds.at(row, child)}];
    }
    return out;
}

Dataset balanced_binary_8()
{
    return from_rows({{0, 0}, {1, 0}, {0, 1}, {1, 1}, {0, 0}, {1, 0}, {0, 1}, {1, 1}});
}

// Child X (binary), three binary parents and a 7-valued Y over 214 rows:
// arities matching a known threshold on the UCI glass data.
Dataset glass_shaped()
{
    std::vector<std::vector<Dataset::Code>> rows;
    for (std::size_t r = 0; r < 214; ++r)
        rows.push_back({Dataset::Code(r % 2), Dataset::Code((r / 2) % 2), Dataset::Code((r / 4) % 2),
                        Dataset::Code((r / 8) % 2), Dataset::Code(r % 7)});
    return from_rows(rows);
}

} // namespace

TEST(Contingency, EmptyParentSetGivesMarginalCounts)
{
    auto ds = from_rows({{0, 0}, {0, 1}, {1, 0}, {2, 1}, {2, 1}});
    auto t = contingency(ds, 0, {});
    ASSERT_EQ(t.configurations(), 1u);
    EXPECT_EQ(t.count(0, 0), 2u);
    EXPECT_EQ(t.count(0, 1), 1u);
    EXPECT_EQ(t.count(0, 2), 2u);
    EXPECT_EQ(t.total(0), 5u);
}

TEST(Contingency, FourSingletonCells)
{
    auto ds = from_rows({{0, 0}, {0, 1}, {1, 0}, {1, 1}});
    auto m = contingency(ds, 0, ParentSet::of({1})).as_map(ds, ParentSet::of({1}));
    ASSERT_EQ(m.size(), 4u);
    for (const auto& [key, count] : m)
        EXPECT_EQ(count, 1u);
}

TEST(Contingency, MatchesNestedLoopRecount)
{
    oracle::RandomSpec spec;
    spec.min_vars = spec.max_vars = 6;
    spec.min_rows = spec.max_rows = 50;
    std::mt19937_64 rng(5);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto ds = oracle::random_dataset(seed, spec);
        for (std::size_t child = 0; child < ds.variables(); ++child) {
            auto parents = random_subset(rng, ds.variables(), child);
            auto t = contingency(ds, child, parents);
            EXPECT_EQ(t.as_map(ds, parents), recount(ds, child, parents));
            std::uint64_t sum = 0;
            for (std::size_t c = 0; c < t.configurations(); ++c)
                sum += t.total(c);
            EXPECT_EQ(sum, ds.rows());
        }
    }
}

TEST(Contingency, HugeJointSpaceStaysSparse)
{
    // 10 columns with 200 distinct values each: |Omega| = 200^9 overflows 64 bits.
    std::vector<std::vector<Dataset::Code>> cols(10);
    for (std::size_t v = 0; v < 10; ++v)
        for (Dataset::Code r = 0; r < 200; ++r)
            cols[v].push_back((r * (2 * v + 1)) % 200);
    std::vector<std::string> names;
    for (int i = 0; i < 10; ++i)
        names.push_back("v" + std::to_string(i));
    auto ds = Dataset::from_codes(names, cols);
    ParentSet all;
    for (std::size_t v = 1; v < 10; ++v)
        all = all.with(v);
    EXPECT_FALSE(joint_state_space(ds, all).has_value());
    EXPECT_EQ(contingency(ds, 0, all).configurations(), 200u);
    auto e = bic(ds, 0, all, LogBase::e());
    EXPECT_EQ(e.ll, 0.0);
    EXPECT_EQ(e.pen, -std::numeric_limits<double>::infinity());
    EXPECT_EQ(e.bic, -std::numeric_limits<double>::infinity());
}

TEST(LogLikelihood, DeterministicChildIsZero)
{
    // X0 = X1 xor X2
    auto ds = from_rows({{0, 0, 0}, {1, 1, 0}, {1, 0, 1}, {0, 1, 1}, {0, 0, 0}, {1, 0, 1}});
    EXPECT_EQ(log_likelihood(ds, 0, ParentSet::of({1, 2}), LogBase::e()), 0.0);
    EXPECT_LT(log_likelihood(ds, 0, ParentSet::of({1}), LogBase::e()), 0.0);
}

TEST(LogLikelihood, BalancedBinaryBase2)
{
    EXPECT_EQ(log_likelihood(balanced_binary_8(), 0, {}, LogBase::two()), -8.0);
}

TEST(Penalty, ClosedForms)
{
    EXPECT_EQ(penalty(balanced_binary_8(), 0, {}, LogBase::two()), -1.5);

    // Parents with arities 3 and 4 on a binary child, N = 100, base 2.
    // Frozen from an independent calculator: -(log2(100)/2) * 1 * 12.
    std::vector<std::vector<Dataset::Code>> rows;
    for (Dataset::Code r = 0; r < 100; ++r)
        rows.push_back({r % 2, r % 3, r % 4});
    auto ds = from_rows(rows);
    EXPECT_NEAR(penalty(ds, 0, ParentSet::of({1, 2}), LogBase::two()), -39.86313713864835, 1e-12);

    // Arity-5 child, parents of arity 2 and 3, N = 37, base e: -(ln 37 / 2) * 4 * 6.
    rows.clear();
    for (Dataset::Code r = 0; r < 37; ++r)
        rows.push_back({r % 5, r % 2, r % 3});
    EXPECT_NEAR(penalty(from_rows(rows), 0, ParentSet::of({1, 2}), LogBase::e()), -43.331014951730694, 1e-12);
}

TEST(Penalty, GlassShapedThreshold)
{
    // (1 - |Omega_Y|) Pen(X | Pi*) with |Omega_Pi*| = 8, |Omega_Y| = 7, N = 214, base e.
    auto ds = glass_shaped();
    const double pen = penalty(ds, 0, ParentSet::of({1, 2, 3}), LogBase::e());
    EXPECT_NEAR(pen, -21.46, 0.05);
    EXPECT_NEAR(rule_threshold(ds, 4, pen), 128.76, 0.05);
}

TEST(Penalty, SingleValuedChildHasNoPenalty)
{
    auto ds = from_rows({{0, 0}, {0, 1}, {0, 1}}, true);
    EXPECT_EQ(penalty(ds, 0, ParentSet::of({1}), LogBase::e()), 0.0);
}

TEST(Bic, ComposesLikelihoodAndPenalty)
{
    auto e = bic(balanced_binary_8(), 0, {}, LogBase::two());
    EXPECT_EQ(e.ll, -8.0);
    EXPECT_EQ(e.pen, -1.5);
    EXPECT_EQ(e.bic, -9.5);

    std::mt19937_64 rng(3);
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto ds = oracle::random_dataset(seed);
        for (std::size_t x = 0; x < ds.variables(); ++x) {
            auto s = bic(ds, x, random_subset(rng, ds.variables(), x), LogBase::e());
            EXPECT_EQ(s.bic, s.ll + s.pen);
            EXPECT_LE(s.ll, 0.0);
            EXPECT_LT(s.pen, 0.0);
        }
    }
}

TEST(CondEntropy, EdgeCases)
{
    auto ds = from_rows({{0, 0, 1}, {1, 1, 0}, {2, 2, 0}, {0, 0, 0}, {1, 1, 1}});
    auto h = column_entropy_all(ds, LogBase::e());
    EXPECT_NEAR(cond_entropy(ds, 0, {}, LogBase::e()), h[0], 1e-15);
    // X1 is a relabeled copy of X0.
    EXPECT_EQ(cond_entropy(ds, 1, ParentSet::of({0}), LogBase::e()), 0.0);
    EXPECT_EQ(cond_entropy(ds, 1, ParentSet::of({0, 2}), LogBase::e()), 0.0);
}

TEST(ScoringProperties, LikelihoodEqualsNegatedJointEntropyDifference)
{
    std::mt19937_64 rng(17);
    for (std::uint64_t seed = 100; seed < 200; ++seed) {
        auto ds = oracle::random_dataset(seed);
        for (int t = 0; t < 5; ++t) {
            std::size_t x = rng() % ds.variables();
            auto given = random_subset(rng, ds.variables(), x);
            for (auto base : {LogBase::e(), LogBase::two()}) {
                const double n = static_cast<double>(ds.rows());
                const double h = joint_entropy(ds, given.with(x), base) - joint_entropy(ds, given, base);
                const double ll = log_likelihood(ds, x, given, base);
                EXPECT_NEAR(n * h, -ll, 1e-9 * std::max(1.0, std::abs(ll)));
            }
        }
    }
}

TEST(ScoringProperties, MonotoneInParentSet)
{
    std::mt19937_64 rng(23);
    for (std::uint64_t seed = 200; seed < 300; ++seed) {
        auto ds = oracle::random_dataset(seed);
        for (int t = 0; t < 5; ++t) {
            std::size_t x = rng() % ds.variables();
            auto big = random_subset(rng, ds.variables(), x);
            ParentSet small;
            big.for_each([&](std::size_t v) {
                if (rng() % 3 == 0)
                    small = small.with(v);
            });
            if (small == big) {
                if (big.empty())
                    continue;
                small = big.without(big.members().front());
            }
            auto a = bic(ds, x, small, LogBase::e());
            auto b = bic(ds, x, big, LogBase::e());
            EXPECT_LE(a.ll, b.ll + 1e-9 * std::abs(a.ll));
            EXPECT_GT(a.pen, b.pen);
            EXPECT_GE(cond_entropy(ds, x, small, LogBase::e()) + 1e-12, cond_entropy(ds, x, big, LogBase::e()));
        }
    }
}

TEST(ScoringProperties, GainBoundedByConditionalEntropies)
{
    std::mt19937_64 rng(29);
    for (std::uint64_t seed = 300; seed < 400; ++seed) {
        auto ds = oracle::random_dataset(seed);
        std::size_t x = rng() % ds.variables();
        std::size_t y = (x + 1 + rng() % (ds.variables() - 1)) % ds.variables();
        auto base_set = random_subset(rng, ds.variables(), x).without(y);
        const auto b = LogBase::e();
        const double n = static_cast<double>(ds.rows());
        const double gain = log_likelihood(ds, x, base_set.with(y), b) - log_likelihood(ds, x, base_set, b);
        const double bound = n * std::min(cond_entropy(ds, x, base_set, b), cond_entropy(ds, y, base_set, b));
        EXPECT_LE(gain, bound + 1e-9);
    }
}

TEST(ScoringProperties, BaseChangeScalesScores)
{
    std::mt19937_64 rng(31);
    for (std::uint64_t seed = 400; seed < 430; ++seed) {
        auto ds = oracle::random_dataset(seed);
        for (std::size_t x = 0; x < ds.variables(); ++x) {
            ParentSet best_e, best_2;
            double score_e = -1e300, score_2 = -1e300;
            for (std::uint64_t bits = 0; bits < (1ull << ds.variables()); ++bits) {
                auto s = ParentSet::from_bits(bits);
                if (s.contains(x))
                    continue;
                auto e = bic(ds, x, s, LogBase::e());
                auto two = bic(ds, x, s, LogBase::two());
                EXPECT_NEAR(e.bic, two.bic * std::log(2.0), 1e-9 * std::abs(e.bic));
                if (e.bic > score_e)
                    score_e = e.bic, best_e = s;
                if (two.bic > score_2)
                    score_2 = two.bic, best_2 = s;
            }
            EXPECT_EQ(best_e, best_2);
        }
    }
}

TEST(LogBaseTest, ParseAndNames)
{
    EXPECT_EQ(LogBase::parse("e"), LogBase::e());
    EXPECT_EQ(LogBase::parse("2"), LogBase::two());
    EXPECT_EQ(LogBase::parse("10").name(), "10");
    EXPECT_NEAR(LogBase::parse("10").log(1000.0), 3.0, 1e-12);
    EXPECT_THROW(LogBase::parse("1.5"), Error);
    EXPECT_THROW(LogBase::parse("ten"), Error);
}

TEST(ParentSetTest, LexicographicOrder)
{
    EXPECT_TRUE(lex_less(ParentSet::of({1, 2}), ParentSet::of({1, 3})));
    EXPECT_TRUE(lex_less(ParentSet::of({1}), ParentSet::of({1, 2})));
    EXPECT_TRUE(lex_less(ParentSet{}, ParentSet::of({0})));
    EXPECT_TRUE(lex_less(ParentSet::of({1, 3}), ParentSet::of({2})));
    EXPECT_FALSE(lex_less(ParentSet::of({2}), ParentSet::of({2})));
    EXPECT_EQ(ParentSet::of({3, 1}).members(), (std::vector<std::size_t>{1, 3}));
    EXPECT_TRUE(ParentSet::of({1}).is_proper_subset_of(ParentSet::of({1, 4})));
    EXPECT_FALSE(ParentSet::of({1}).is_proper_subset_of(ParentSet::of({1})));
}
