#include "commands.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <thread>

using namespace bnprune;
using namespace bnprune::cli;

namespace {

std::size_t default_threads()
{
    if (const char* env = std::getenv("BNPRUNE_THREADS")) {
        try {
            auto v = std::stoul(env);
            if (v > 0)
                return v;
        } catch (const std::exception&) {
        }
        std::cerr << "warning: ignoring invalid BNPRUNE_THREADS='" << env << "'\n";
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Pruned BIC score caches for Bayesian-network structure learning"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(version));

    RunConfig rc;
    rc.threads = default_threads();
    std::string base = "e", rules, format, delimiter = ",";
    bool no_header = false;
    std::size_t k = 0;

    auto common = [&](CLI::App* sub, bool needs_input) {
        auto* in = sub->add_option("input", rc.input, "input CSV dataset")->check(CLI::ExistingFile);
        if (needs_input)
            in->required();
        sub->add_option("--log-base", base, "logarithm base")->check(CLI::IsMember({"e", "2"}));
        sub->add_option("--threads", rc.threads, "worker threads (default: $BNPRUNE_THREADS or all cores)")
            ->check(CLI::PositiveNumber);
        sub->add_option("--delimiter", delimiter, "CSV field delimiter");
        sub->add_flag("--no-header", no_header, "CSV has no header row; names become X0..Xn-1");
        sub->add_flag("--allow-constant", rc.csv.allow_constant, "keep single-valued columns");
        sub->add_option("--arities", rc.arities, "JSON sidecar {\"name\": arity} raising declared domain sizes")
            ->check(CLI::ExistingFile);
    };

    auto* scores = app.add_subcommand("scores", "build the pruned score cache");
    common(scores, true);
    scores->add_option("-k,--max-indegree", k, "maximum number of parents");
    scores->add_option("--rules", rules, "pruning rules, e.g. alg1,alg4 (default: all)");
    scores->add_option("-o,--output", rc.output, "cache file (default: stdout)");
    scores->add_option("--format", format, "cache format")->check(CLI::IsMember({"jkl", "csv", "json"}));

    auto* bounds = app.add_subcommand("bounds", "per-node and global parent-count bounds");
    common(bounds, true);
    bounds->add_option("-k,--max-indegree", k, "maximum number of parents");
    bounds->add_option("-o,--output", rc.output, "JSON report");

    auto* stats = app.add_subcommand("stats", "pruning counts per rule combination");
    common(stats, true);
    stats->add_option("--indegrees", rc.indegrees, "in-degrees to sweep (default: 3 4 5)")->delimiter(',');
    stats->add_option("-o,--output", rc.output, "csv or json report");
    stats->add_option("--format", format, "report format")->check(CLI::IsMember({"csv", "json"}));

    auto* verify = app.add_subcommand("verify", "certify pruning against the exhaustive oracle");
    common(verify, false);
    verify->add_option("-k,--max-indegree", k, "maximum number of parents (dataset mode)");
    verify->add_option("--rules", rules, "certify only this rule set (default: all 16 subsets)");
    verify->add_option("--random", rc.random, "certify this many seeded random instances");
    verify->add_option("--seed", rc.seed, "campaign seed");
    verify->add_option("--budget", rc.budget, "maximum parent sets scored exhaustively per child");
    verify->add_option("-o,--output", rc.output, "JSON report");

    try {
        app.parse(argc, argv);
        rc.base = LogBase::parse(base);
        if (!rules.empty())
            rc.rules = RuleSet::parse(rules);
        if (!format.empty())
            rc.format = parse_cache_format(format);
        if (delimiter.size() != 1)
            throw CLI::ValidationError("--delimiter", "must be a single character");
        rc.csv.delimiter = delimiter[0];
        rc.csv.header = !no_header;
        for (auto* sub : {scores, bounds, verify})
            if (sub->parsed() && sub->count("--max-indegree") > 0)
                rc.max_indegree = k;
        if (verify->parsed() && rc.random == 0 && rc.input.empty())
            throw CLI::ValidationError("verify", "needs an input dataset or --random N");
        if (verify->parsed() && rc.random > 0 && !rc.input.empty())
            throw CLI::ValidationError("verify", "takes either an input dataset or --random N, not both");
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n' << app.help();
        return exit_usage;
    }

    try {
        if (scores->parsed())
            return cmd_scores(rc, std::cout, std::cerr);
        if (bounds->parsed())
            return cmd_bounds(rc, std::cout);
        if (stats->parsed())
            return cmd_stats(rc, std::cout);
        return cmd_verify(rc, std::cout);
    } catch (const BudgetExceeded& e) {
        std::cerr << "refused: " << e.what() << '\n';
        return exit_budget;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_data;
    }
}
