#include "commands.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace bnprune;
using namespace bnprune::cli;
using bnprune::testing::slurp;
using bnprune::testing::TempDir;

namespace {

const std::string sample = std::string(BNPRUNE_DATA_DIR) + "/sample.csv";

std::string drop_wall_time(const std::string& s)
{
    auto pos = s.find("wall time:");
    return pos == std::string::npos ? s : s.substr(0, pos);
}

} // namespace

TEST(CliScores, WritesCacheAndSummary)
{
    TempDir dir;
    RunConfig rc;
    rc.input = sample;
    rc.max_indegree = 3;
    rc.output = dir.file("c.jkl").string();
    std::ostringstream out, log;
    EXPECT_EQ(cmd_scores(rc, out, log), exit_ok);
    EXPECT_TRUE(log.str().empty());
    EXPECT_NE(out.str().find("total evaluated="), std::string::npos);
    EXPECT_NE(out.str().find("|S|=" + std::to_string(search_space_size(6, 3).value)), std::string::npos);

    auto cache = read_cache(rc.output);
    auto ds = load_csv(sample);
    EXPECT_EQ(cache.names, std::vector<std::string>(ds.names().begin(), ds.names().end()));
    EXPECT_EQ(cache.meta.max_indegree, 3u);
    EXPECT_EQ(cache.meta.rows, ds.rows());
}

TEST(CliScores, StdoutGetsCacheWhenNoOutput)
{
    RunConfig rc;
    rc.input = sample;
    rc.max_indegree = 2;
    rc.format = CacheFormat::json;
    std::ostringstream out, log;
    EXPECT_EQ(cmd_scores(rc, out, log), exit_ok);
    auto j = nlohmann::json::parse(out.str());
    EXPECT_EQ(j["metadata"]["max_indegree"], 2);
    EXPECT_NE(log.str().find("total evaluated="), std::string::npos);
}

TEST(CliScores, IndegreeIsClampedAndThreadsDoNotMatter)
{
    TempDir dir;
    std::string first;
    for (std::size_t threads : {1u, 3u}) {
        RunConfig rc;
        rc.input = sample;
        rc.max_indegree = 40;
        rc.threads = threads;
        rc.output = dir.file("c" + std::to_string(threads) + ".csv").string();
        std::ostringstream out, log;
        cmd_scores(rc, out, log);
        auto text = slurp(rc.output);
        EXPECT_NE(text.find("k=5"), std::string::npos);
        if (first.empty())
            first = text;
        else
            EXPECT_EQ(first, text);
    }
}

TEST(CliScores, BadInputThrows)
{
    TempDir dir;
    RunConfig rc;
    rc.input = dir.write("bad.csv", "a,b\n1,2\n3\n").string();
    std::ostringstream out, log;
    EXPECT_THROW(cmd_scores(rc, out, log), DataError);
}

TEST(CliBounds, TableAndJson)
{
    TempDir dir;
    RunConfig rc;
    rc.input = sample;
    rc.base = LogBase::two();
    rc.output = dir.file("b.json").string();
    std::ostringstream out;
    EXPECT_EQ(cmd_bounds(rc, out), exit_ok);
    auto ds = load_csv(sample);
    const auto expected = corollary1_bound(ds.rows(), LogBase::two());
    EXPECT_NE(out.str().find("corollary1: " + std::to_string(expected)), std::string::npos);
    auto j = nlohmann::json::parse(slurp(rc.output));
    EXPECT_EQ(j["corollary1"], expected);
    ASSERT_EQ(j["nodes"].size(), ds.variables());
    auto h = column_entropy_all(ds, LogBase::two());
    for (std::size_t x = 0; x < ds.variables(); ++x)
        EXPECT_EQ(j["nodes"][x]["theorem3"], theorem3_bound(ds, x, h, LogBase::two()));
}

TEST(CliStats, RowsMatchIndependentSweeps)
{
    auto ds = load_csv(sample);
    auto rows = compute_stats(ds, {2, 3}, LogBase::e(), 1);
    ASSERT_EQ(rows.size(), 2u);
    for (const auto& r : rows) {
        EXPECT_EQ(r.search_space, search_space_size(6, r.indegree).value);
        for (std::size_t c = 0; c < 7; ++c) {
            auto raw = build_lists(ds, PruneConfig{r.indegree, stats_columns()[c], LogBase::e(), 1});
            EXPECT_EQ(r.pruned[c], raw.stats.total.pruned_total);
        }
        EXPECT_GE(r.pruned[0], r.pruned[3]);
        EXPECT_GE(r.pruned[1], r.pruned[4]);
        EXPECT_GE(r.pruned[2], std::max(r.pruned[0], r.pruned[1]));
        EXPECT_LE(r.pruned[2], r.pruned[0] + r.pruned[1]);
    }
}

TEST(CliStats, RatioIsEmptyWithoutAlg1Prunes)
{
    StatsRow r;
    r.pruned = {0, 5, 5, 0, 2, 2, 2};
    EXPECT_FALSE(r.ratio_alg12());
    auto csv = stats_csv({r}, "fp");
    EXPECT_NE(csv.find(",0,5,5,0,2,2,2,,\n"), std::string::npos) << csv;
    auto j = nlohmann::json::parse(stats_json({r}, "fp"));
    EXPECT_TRUE(j["rows"][0]["ratio_alg1_alg2"].is_null());

    r.pruned = {4, 0, 6, 0, 0, 0, 5};
    EXPECT_DOUBLE_EQ(*r.ratio_alg12(), 1.5);
    EXPECT_DOUBLE_EQ(*r.ratio_alg14(), 1.25);
}

TEST(CliStats, OutputFilesAreDeterministic)
{
    TempDir dir;
    std::string first;
    for (std::size_t threads : {1u, 2u}) {
        RunConfig rc;
        rc.input = sample;
        rc.indegrees = {2, 4};
        rc.threads = threads;
        rc.output = dir.file("s.csv").string();
        std::ostringstream out;
        EXPECT_EQ(cmd_stats(rc, out), exit_ok);
        auto text = slurp(rc.output);
        EXPECT_EQ(text.find("wall"), std::string::npos);
        if (first.empty())
            first = text;
        else
            EXPECT_EQ(first, text);
    }
}

TEST(CliVerify, RandomCampaignPasses)
{
    TempDir dir;
    RunConfig rc;
    rc.random = 3;
    rc.seed = 11;
    rc.output = dir.file("v.json").string();
    std::ostringstream out;
    EXPECT_EQ(cmd_verify(rc, out), exit_ok);
    EXPECT_NE(out.str().find("safe: 48/48"), std::string::npos) << out.str();
    auto j = nlohmann::json::parse(slurp(rc.output));
    EXPECT_EQ(j["certifications"], 48);
    EXPECT_EQ(j["safe"], 48);
}

TEST(CliVerify, DatasetWithSingleRuleSet)
{
    RunConfig rc;
    rc.input = sample;
    rc.max_indegree = 3;
    rc.rules = RuleSet{Rule::alg1, Rule::alg4};
    std::ostringstream out;
    EXPECT_EQ(cmd_verify(rc, out), exit_ok);
    EXPECT_NE(out.str().find("safe: 1/1"), std::string::npos);
}

TEST(CliVerify, CampaignOutputIsReproducible)
{
    auto run = [](std::size_t threads) {
        RunConfig rc;
        rc.random = 2;
        rc.seed = 5;
        rc.threads = threads;
        std::ostringstream out;
        cmd_verify(rc, out);
        return drop_wall_time(out.str());
    };
    EXPECT_EQ(run(1), run(4));
}

TEST(CliVerify, BudgetRefusal)
{
    RunConfig rc;
    rc.input = sample;
    rc.budget = 3;
    std::ostringstream out;
    EXPECT_THROW(cmd_verify(rc, out), BudgetExceeded);
}
