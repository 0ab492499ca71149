#pragma once

#include <bnprune/bnprune.hpp>

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace bnprune::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_usage = 1,
    exit_data = 2,
    exit_verification = 3,
    exit_budget = 4,
};

struct RunConfig
{
    std::string input;
    std::optional<std::size_t> max_indegree;
    LogBase base = LogBase::e();
    std::optional<RuleSet> rules;
    std::string output;
    std::optional<CacheFormat> format;
    std::size_t threads = 1;
    std::uint64_t budget = oracle::default_budget;
    std::uint64_t seed = 0;
    std::size_t random = 0;
    std::vector<std::size_t> indegrees;
    std::string arities;
    CsvOptions csv;
};

namespace detail {

inline Dataset load(const RunConfig& rc)
{
    auto ds = load_csv(rc.input, rc.csv);
    if (!rc.arities.empty())
        ds = ds.with_arities(load_arity_overrides(rc.arities));
    return ds;
}

inline std::size_t clamp_k(const RunConfig& rc, const Dataset& ds)
{
    return std::min(rc.max_indegree.value_or(ds.variables() - 1), ds.variables() - 1);
}

// Header line shared by every report; identifies the run without timing or
// thread count so that outputs stay byte-identical across machines.
inline std::string fingerprint(std::string_view command, const RunConfig& rc, const Dataset* ds)
{
    std::string s = "bnprune " + std::string(version) + " " + std::string(command);
    if (!rc.input.empty())
        s += " input=" + std::filesystem::path(rc.input).filename().string();
    if (ds)
        s += " n=" + std::to_string(ds->variables()) + " N=" + std::to_string(ds->rows());
    s += " base=" + rc.base.name();
    return s;
}

inline void write_file(const std::string& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot open '" + path + "' for writing");
    out << content;
    out.flush();
    if (!out)
        throw Error("failed writing '" + path + "'");
}

inline double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace detail

/// Builds and writes the pruned score cache; prints a per-child summary.
/// Without -o the cache goes to `out` and the summary to `log`.
inline int cmd_scores(const RunConfig& rc, std::ostream& out, std::ostream& log)
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto ds = detail::load(rc);
    PruneConfig config;
    config.max_indegree = detail::clamp_k(rc, ds);
    config.rules = rc.rules.value_or(RuleSet::all());
    config.base = rc.base;
    config.threads = rc.threads;

    const auto raw = build_lists(ds, config);
    const auto cache = make_cache(ds, raw, config);

    std::ostream& summary = rc.output.empty() ? log : out;
    if (rc.output.empty()) {
        write_cache(cache, out, rc.format.value_or(CacheFormat::jkl));
    } else {
        write_cache(cache, rc.output, rc.format.value_or(format_from_path(rc.output)));
    }

    summary << "# " << detail::fingerprint("scores", rc, &ds) << " k=" << config.max_indegree
            << " rules=" << config.rules.to_string() << '\n';
    summary << std::left << std::setw(6) << "child" << std::setw(16) << "name" << std::right << std::setw(12)
            << "evaluated" << std::setw(12) << "pruned" << std::setw(10) << "list" << '\n';
    for (std::size_t x = 0; x < ds.variables(); ++x) {
        const auto& s = raw.stats.per_child[x];
        summary << std::left << std::setw(6) << x << std::setw(16) << ds.name(x) << std::right << std::setw(12)
                << s.evaluated << std::setw(12) << s.pruned_total << std::setw(10)
                << cache.lists[x].entries.size() << '\n';
    }
    const auto& t = raw.stats.total;
    const auto space = search_space_size(ds.variables(), config.max_indegree);
    summary << "total evaluated=" << t.evaluated << " pruned=" << t.pruned_total << " |S|=" << space.value
            << (space.saturated ? " (saturated)" : "") << '\n';
    summary << "wall time: " << std::fixed << std::setprecision(3) << detail::seconds_since(t0) << " s\n";
    summary.unsetf(std::ios::floatfield);
    return exit_ok;
}

inline nlohmann::ordered_json bounds_json(const Dataset& ds, const BoundsReport& b, const RunConfig& rc,
                                          std::size_t k)
{
    nlohmann::ordered_json j;
    j["fingerprint"] = detail::fingerprint("bounds", rc, &ds) + " k=" + std::to_string(k);
    j["corollary1"] = b.corollary1;
    j["theorem3_grouped"] = b.grouped_string();
    auto nodes = nlohmann::ordered_json::array();
    for (std::size_t x = 0; x < ds.variables(); ++x)
        nodes.push_back({{"index", x},
                         {"name", ds.name(x)},
                         {"arity", ds.arity(x)},
                         {"theorem3", b.theorem3[x]},
                         {"effective", b.effective[x]}});
    j["nodes"] = std::move(nodes);
    return j;
}

/// Per-node parent bounds and the global bound; -o writes the JSON form.
inline int cmd_bounds(const RunConfig& rc, std::ostream& out)
{
    const auto ds = detail::load(rc);
    const auto k = detail::clamp_k(rc, ds);
    const auto report = compute_bounds(ds, rc.base, k);
    const auto entropies = column_entropy_all(ds, rc.base);

    out << "# " << detail::fingerprint("bounds", rc, &ds) << " k=" << k << '\n';
    out << std::left << std::setw(6) << "node" << std::setw(16) << "name" << std::right << std::setw(7) << "arity"
        << std::setw(12) << "entropy" << std::setw(10) << "theorem3" << std::setw(11) << "effective" << '\n';
    for (std::size_t x = 0; x < ds.variables(); ++x) {
        char h[32];
        std::snprintf(h, sizeof h, "%.6f", entropies[x]);
        out << std::left << std::setw(6) << x << std::setw(16) << ds.name(x) << std::right << std::setw(7)
            << ds.arity(x) << std::setw(12) << h << std::setw(10) << report.theorem3[x] << std::setw(11)
            << report.effective[x] << '\n';
    }
    out << "theorem3: " << report.grouped_string() << '\n';
    out << "corollary1: " << report.corollary1 << '\n';

    if (!rc.output.empty())
        detail::write_file(rc.output, bounds_json(ds, report, rc, k).dump(2) + "\n");
    return exit_ok;
}

struct StatsRow
{
    std::size_t indegree = 0;
    std::uint64_t search_space = 0;
    // alg1, alg2, alg1+alg2, alg3, alg4, alg3+alg4, alg1+alg4
    std::array<std::uint64_t, 7> pruned{};

    std::optional<double> ratio(std::size_t column) const
    {
        if (pruned[0] == 0)
            return std::nullopt;
        return static_cast<double>(pruned[column]) / static_cast<double>(pruned[0]);
    }
    std::optional<double> ratio_alg12() const { return ratio(2); }
    std::optional<double> ratio_alg14() const { return ratio(6); }
};

inline const std::array<RuleSet, 7>& stats_columns()
{
    static const std::array<RuleSet, 7> cols = {
        RuleSet{Rule::alg1},
        RuleSet{Rule::alg2},
        RuleSet{Rule::alg1, Rule::alg2},
        RuleSet{Rule::alg3},
        RuleSet{Rule::alg4},
        RuleSet{Rule::alg3, Rule::alg4},
        RuleSet{Rule::alg1, Rule::alg4},
    };
    return cols;
}

/// One row per in-degree; every count column is its own sweep with exactly
/// that rule set active.
inline std::vector<StatsRow> compute_stats(const Dataset& ds, const std::vector<std::size_t>& indegrees,
                                           LogBase base, std::size_t threads)
{
    std::vector<StatsRow> rows;
    for (auto k : indegrees) {
        StatsRow row;
        row.indegree = std::min(k, ds.variables() - 1);
        row.search_space = search_space_size(ds.variables(), row.indegree).value;
        for (std::size_t c = 0; c < 7; ++c) {
            PruneConfig config{row.indegree, stats_columns()[c], base, threads};
            row.pruned[c] = build_lists(ds, config).stats.total.pruned_total;
        }
        rows.push_back(row);
    }
    return rows;
}

namespace detail {

inline std::string ratio_text(std::optional<double> r, std::string_view missing)
{
    if (!r)
        return std::string(missing);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", *r);
    return buf;
}

inline constexpr std::array<std::string_view, 7> stats_headers = {"alg1",      "alg2", "alg1+alg2",
                                                                  "alg3",      "alg4", "alg3+alg4",
                                                                  "alg1+alg4"};

} // namespace detail

inline std::string stats_csv(const std::vector<StatsRow>& rows, const std::string& fingerprint)
{
    std::ostringstream s;
    s << "# " << fingerprint << '\n' << "in_d,S";
    for (auto h : detail::stats_headers)
        s << ',' << h;
    s << ",ratio_alg1_alg2,ratio_alg1_alg4\n";
    for (const auto& r : rows) {
        s << r.indegree << ',' << r.search_space;
        for (auto v : r.pruned)
            s << ',' << v;
        s << ',' << detail::ratio_text(r.ratio_alg12(), "") << ',' << detail::ratio_text(r.ratio_alg14(), "")
          << '\n';
    }
    return s.str();
}

inline std::string stats_json(const std::vector<StatsRow>& rows, const std::string& fingerprint)
{
    nlohmann::ordered_json j;
    j["fingerprint"] = fingerprint;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json row;
        row["in_d"] = r.indegree;
        row["S"] = r.search_space;
        for (std::size_t c = 0; c < 7; ++c)
            row[std::string(detail::stats_headers[c])] = r.pruned[c];
        auto ratio = [](std::optional<double> v) {
            return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
        };
        row["ratio_alg1_alg2"] = ratio(r.ratio_alg12());
        row["ratio_alg1_alg4"] = ratio(r.ratio_alg14());
        arr.push_back(std::move(row));
    }
    j["rows"] = std::move(arr);
    return j.dump(2) + "\n";
}

/// Pruning counts shaped like the activation tables; -o writes csv or json.
inline int cmd_stats(const RunConfig& rc, std::ostream& out)
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto ds = detail::load(rc);
    auto indegrees = rc.indegrees.empty() ? std::vector<std::size_t>{3, 4, 5} : rc.indegrees;
    const auto rows = compute_stats(ds, indegrees, rc.base, rc.threads);
    const auto fp = detail::fingerprint("stats", rc, &ds);

    out << "# " << fp << '\n';
    out << std::setw(5) << "in-d" << std::setw(10) << "|S|";
    for (auto h : detail::stats_headers)
        out << std::setw(11) << h;
    out << std::setw(9) << "(1+2)/1" << std::setw(9) << "(1+4)/1" << '\n';
    for (const auto& r : rows) {
        out << std::setw(5) << r.indegree << std::setw(10) << r.search_space;
        for (auto v : r.pruned)
            out << std::setw(11) << v;
        out << std::setw(9) << detail::ratio_text(r.ratio_alg12(), "-") << std::setw(9)
            << detail::ratio_text(r.ratio_alg14(), "-") << '\n';
    }
    char t[64];
    std::snprintf(t, sizeof t, "wall time: %.3f s\n", detail::seconds_since(t0));
    out << t;

    if (!rc.output.empty()) {
        auto fmt = rc.format.value_or(format_from_path(rc.output) == CacheFormat::csv ? CacheFormat::csv
                                                                                       : CacheFormat::json);
        detail::write_file(rc.output, fmt == CacheFormat::csv ? stats_csv(rows, fp) : stats_json(rows, fp));
    }
    return exit_ok;
}

/// Certifies the sweep against the exhaustive oracle, on a dataset or on a
/// seeded random campaign. Without --rules every one of the 16 rule subsets
/// is certified.
inline int cmd_verify(const RunConfig& rc, std::ostream& out)
{
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<RuleSet> rule_sets;
    if (rc.rules)
        rule_sets.push_back(*rc.rules);
    else
        for (std::uint8_t b = 0; b < 16; ++b)
            rule_sets.push_back(RuleSet::from_bits(b));

    std::vector<oracle::OracleReport> reports;
    auto certify = [&](const Dataset& ds, std::size_t k, std::string name, std::optional<std::uint64_t> seed) {
        for (auto rules : rule_sets) {
            PruneConfig config{k, rules, rc.base, rc.threads};
            auto rep = oracle::certify_safety(ds, config, rc.budget, name);
            rep.seed = seed;
            reports.push_back(std::move(rep));
        }
    };

    std::string header;
    if (rc.random > 0) {
        header = detail::fingerprint("verify", rc, nullptr) + " random=" + std::to_string(rc.random)
                 + " seed=" + std::to_string(rc.seed);
        for (std::size_t i = 0; i < rc.random; ++i) {
            const auto seed = oracle::instance_seed(rc.seed, i);
            const auto ds = oracle::random_dataset(seed);
            certify(ds, ds.variables() - 1, "random#" + std::to_string(i), seed);
        }
    } else {
        const auto ds = detail::load(rc);
        const auto k = detail::clamp_k(rc, ds);
        header = detail::fingerprint("verify", rc, &ds) + " k=" + std::to_string(k);
        certify(ds, k, std::filesystem::path(rc.input).filename().string(), std::nullopt);
    }

    std::size_t unsafe = 0, disagree = 0, dominance = 0, skipped = 0;
    double worst_err = 0.0;
    for (const auto& r : reports) {
        unsafe += !r.safe();
        disagree += !r.scores_agree();
        dominance += !r.dominance_holds();
        skipped += r.total_skipped();
        for (const auto& c : r.children)
            worst_err = std::max(worst_err, c.max_rel_error);
    }
    const std::size_t instances = rc.random > 0 ? rc.random : 1;

    out << "# " << header << '\n';
    out << "instances: " << instances << ", certifications: " << reports.size() << " (" << rule_sets.size()
        << " rule set" << (rule_sets.size() == 1 ? "" : "s") << " each)\n";
    out << "safe: " << reports.size() - unsafe << "/" << reports.size() << '\n';
    out << "score agreement (1e-9 relative): " << reports.size() - disagree << "/" << reports.size()
        << ", worst relative error " << worst_err << '\n';
    out << "rule dominance (alg3=>alg1, alg4=>alg2): " << reports.size() - dominance << "/" << reports.size()
        << '\n';
    out << "skipped candidates checked: " << skipped << '\n';
    for (const auto& r : reports)
        if (!r.passed())
            out << "FAILED: " << r.instance << " rules=" << r.rules.to_string() << '\n';
    char t[64];
    std::snprintf(t, sizeof t, "wall time: %.3f s\n", detail::seconds_since(t0));
    out << t;

    if (!rc.output.empty()) {
        nlohmann::ordered_json j;
        j["fingerprint"] = header;
        j["certifications"] = reports.size();
        j["safe"] = reports.size() - unsafe;
        j["scores_agree"] = reports.size() - disagree;
        j["dominance_holds"] = reports.size() - dominance;
        auto arr = nlohmann::ordered_json::array();
        for (const auto& r : reports)
            arr.push_back(r.to_json());
        j["reports"] = std::move(arr);
        detail::write_file(rc.output, j.dump(2) + "\n");
    }
    return unsafe + disagree + dominance == 0 ? exit_ok : exit_verification;
}

} // namespace bnprune::cli
