#pragma once

// Brute-force reference paths used to certify the fast scorer and the
// pruning sweep. The exhaustive scorer deliberately shares no code with
// scoring.hpp: it counts with nested std::maps and evaluates logs as
// differences, so an error in either path shows up as a disagreement.

#include "cache.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "log_base.hpp"
#include "parent_set.hpp"
#include "pruning.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace bnprune::oracle {

inline constexpr std::uint64_t default_budget = 1'000'000;

struct OracleScore
{
    ParentSet parents;
    double ll = 0.0;
    double pen = 0.0;
    double bic = 0.0;
};

namespace detail {

inline double plain_log(double x, LogBase base)
{
    return std::log(x) / std::log(base.value());
}

inline OracleScore plain_score(const Dataset& ds, std::size_t child, const std::vector<std::size_t>& parents,
                               LogBase base)
{
    std::map<std::vector<Dataset::Code>, std::map<Dataset::Code, std::uint64_t>> table;
    for (std::size_t row = 0; row < ds.rows(); ++row) {
        std::vector<Dataset::Code> key;
        for (auto p : parents)
            key.push_back(ds.at(row, p));
        table[key][ds.at(row, child)] += 1;
    }
    OracleScore s;
    for (const auto& [cfg, cells] : table) {
        std::uint64_t total = 0;
        for (const auto& [x, c] : cells)
            total += c;
        for (const auto& [x, c] : cells)
            s.ll += static_cast<double>(c)
                    * (plain_log(static_cast<double>(c), base) - plain_log(static_cast<double>(total), base));
    }
    long double omega = 1;
    for (auto p : parents)
        omega *= static_cast<long double>(ds.arity(p));
    s.pen = static_cast<double>(-(plain_log(static_cast<double>(ds.rows()), base) / 2.0L)
                                * static_cast<long double>(ds.arity(child) - 1) * omega);
    s.bic = s.ll + s.pen;
    for (auto p : parents)
        s.parents = s.parents.with(p);
    return s;
}

inline void enumerate(const std::vector<std::size_t>& pool, std::size_t start, std::size_t k,
                      std::vector<std::size_t>& current, std::vector<std::vector<std::size_t>>& out)
{
    out.push_back(current);
    if (current.size() == k)
        return;
    for (std::size_t i = start; i < pool.size(); ++i) {
        current.push_back(pool[i]);
        enumerate(pool, i + 1, k, current, out);
        current.pop_back();
    }
}

} // namespace detail

/// Number of parent sets (including the empty one) of size <= k out of n-1
/// candidates, capped at cap + 1.
inline std::uint64_t lattice_size(std::size_t n, std::size_t k, std::uint64_t cap)
{
    long double total = 0, c = 1;
    for (std::size_t j = 0; j <= k && j + 1 <= n; ++j) {
        total += c;
        if (total > static_cast<long double>(cap))
            return cap + 1;
        c = c * static_cast<long double>(n - 1 - j) / static_cast<long double>(j + 1);
    }
    return static_cast<std::uint64_t>(total);
}

/// Scores every parent set of `child` with at most k members.
/// Throws BudgetExceeded when that lattice is larger than `budget`.
inline std::vector<OracleScore> exhaustive_scores(const Dataset& ds, std::size_t child, std::size_t k, LogBase base,
                                                  std::uint64_t budget = default_budget)
{
    k = std::min(k, ds.variables() - 1);
    if (lattice_size(ds.variables(), k, budget) > budget)
        throw BudgetExceeded("exhaustive scoring of '" + ds.name(child) + "' needs more than "
                             + std::to_string(budget) + " parent sets");
    std::vector<std::size_t> pool;
    for (std::size_t v = 0; v < ds.variables(); ++v)
        if (v != child)
            pool.push_back(v);
    std::vector<std::vector<std::size_t>> sets;
    std::vector<std::size_t> current;
    detail::enumerate(pool, 0, k, current, sets);

    std::vector<OracleScore> out;
    out.reserve(sets.size());
    for (const auto& s : sets)
        out.push_back(detail::plain_score(ds, child, s, base));
    return out;
}

// ---------------------------------------------------------------------------
// Safety certification
// ---------------------------------------------------------------------------

struct ChildCertificate
{
    std::size_t child = 0;
    std::uint64_t candidates = 0; // non-empty sets within k
    std::uint64_t evaluated = 0;
    std::uint64_t skipped = 0;
    std::uint64_t retained = 0; // after lemma1_filter(), including the empty set
    std::uint64_t violations = 0;
    // max over skipped S of BIC(S) - max{BIC(P) : P retained, P subset of S};
    // <= 0 means nothing was lost. -inf when nothing was skipped.
    double worst_deficit = -std::numeric_limits<double>::infinity();
    double max_rel_error = 0.0; // fast path vs oracle over evaluated sets
    std::uint64_t dominance_pairs = 0;
    std::uint64_t alg3_without_alg1 = 0;
    std::uint64_t alg4_without_alg2 = 0;
};

struct OracleReport
{
    std::string instance;
    std::optional<std::uint64_t> seed;
    std::size_t variables = 0;
    std::size_t rows = 0;
    std::size_t max_indegree = 0;
    RuleSet rules;
    LogBase base = LogBase::e();
    double tolerance = 1e-9;
    std::vector<ChildCertificate> children;

    bool safe() const
    {
        return std::all_of(children.begin(), children.end(), [](const auto& c) { return c.violations == 0; });
    }

    bool scores_agree() const
    {
        return std::all_of(children.begin(), children.end(),
                           [&](const auto& c) { return c.max_rel_error <= tolerance; });
    }

    bool dominance_holds() const
    {
        return std::all_of(children.begin(), children.end(), [](const auto& c) {
            return c.alg3_without_alg1 == 0 && c.alg4_without_alg2 == 0;
        });
    }

    bool passed() const { return safe() && scores_agree() && dominance_holds(); }

    std::uint64_t total_skipped() const
    {
        std::uint64_t s = 0;
        for (const auto& c : children)
            s += c.skipped;
        return s;
    }

    nlohmann::ordered_json to_json() const
    {
        nlohmann::ordered_json j;
        j["instance"] = instance;
        j["seed"] = seed ? nlohmann::ordered_json(*seed) : nlohmann::ordered_json(nullptr);
        j["variables"] = variables;
        j["rows"] = rows;
        j["max_indegree"] = max_indegree;
        j["rules"] = rules.to_string();
        j["base"] = base.name();
        j["verdict"] = safe() ? "safe" : "unsafe";
        j["scores_agree"] = scores_agree();
        j["dominance_holds"] = dominance_holds();
        auto arr = nlohmann::ordered_json::array();
        for (const auto& c : children) {
            arr.push_back({{"child", c.child},
                           {"candidates", c.candidates},
                           {"evaluated", c.evaluated},
                           {"skipped", c.skipped},
                           {"retained", c.retained},
                           {"violations", c.violations},
                           {"worst_deficit", std::isfinite(c.worst_deficit)
                                                 ? nlohmann::ordered_json(c.worst_deficit)
                                                 : nlohmann::ordered_json(nullptr)},
                           {"max_rel_error", c.max_rel_error},
                           {"dominance_pairs", c.dominance_pairs},
                           {"alg3_without_alg1", c.alg3_without_alg1},
                           {"alg4_without_alg2", c.alg4_without_alg2}});
        }
        j["children"] = std::move(arr);
        return j;
    }
};

/// Runs the pruning sweep and checks it against exhaustive scoring: every
/// skipped candidate must have a retained subset scoring at least as well
/// (up to `tolerance`, relative), every evaluated score must agree with the
/// oracle, and alg3/alg4 activations must imply alg1/alg2 on every (Pi*, Y).
inline OracleReport certify_safety(const Dataset& ds, const PruneConfig& config,
                                   std::uint64_t budget = default_budget, std::string instance = {})
{
    OracleReport report;
    report.instance = std::move(instance);
    report.variables = ds.variables();
    report.rows = ds.rows();
    report.max_indegree = std::min(config.max_indegree, ds.variables() - 1);
    report.rules = config.rules;
    report.base = config.base;

    std::vector<std::vector<OracleScore>> tables;
    for (std::size_t x = 0; x < ds.variables(); ++x)
        tables.push_back(exhaustive_scores(ds, x, report.max_indegree, config.base, budget));

    const auto raw = build_lists(ds, config);
    const auto nh = marginal_nh(ds, config.base);
    const double tol = report.tolerance;

    for (std::size_t x = 0; x < ds.variables(); ++x) {
        ChildCertificate cert;
        cert.child = x;
        std::map<std::uint64_t, const OracleScore*> truth;
        for (const auto& s : tables[x])
            truth.emplace(s.parents.bits(), &s);

        std::map<std::uint64_t, const ScoreEntry*> evaluated;
        for (const auto& e : raw.lists[x]) {
            evaluated.emplace(e.parents.bits(), &e);
            const double want = truth.at(e.parents.bits())->bic;
            const double err = std::abs(e.bic - want) / std::max(1.0, std::abs(want));
            cert.max_rel_error = std::max(cert.max_rel_error, err);
        }
        cert.evaluated = raw.lists[x].size() - 1;
        cert.candidates = tables[x].size() - 1;

        const auto filtered = lemma1_filter(x, raw.lists[x]);
        cert.retained = filtered.entries.size();

        for (const auto& s : tables[x]) {
            if (evaluated.contains(s.parents.bits()))
                continue;
            ++cert.skipped;
            double best = -std::numeric_limits<double>::infinity();
            for (const auto& r : filtered.entries)
                if (r.parents.is_proper_subset_of(s.parents))
                    best = std::max(best, truth.at(r.parents.bits())->bic);
            const double deficit = s.bic - best;
            cert.worst_deficit = std::max(cert.worst_deficit, deficit);
            if (deficit > tol * std::max(1.0, std::abs(s.bic)))
                ++cert.violations;
        }

        // Per-pair rule dominance over every Pi* that can still be extended.
        for (const auto& s : tables[x]) {
            if (s.parents.size() >= report.max_indegree)
                continue;
            const ScoreEntry score{s.parents, s.ll, s.pen, s.bic};
            for (std::size_t y = 0; y < ds.variables(); ++y) {
                if (y == x || s.parents.contains(y))
                    continue;
                ++cert.dominance_pairs;
                auto fires = [&](Rule r) { return rule_check(r, ds, x, s.parents, y, &score, nh, config.base); };
                if (fires(Rule::alg3) && !fires(Rule::alg1))
                    ++cert.alg3_without_alg1;
                if (fires(Rule::alg4) && !fires(Rule::alg2))
                    ++cert.alg4_without_alg2;
            }
        }
        report.children.push_back(cert);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Seeded random instances
// ---------------------------------------------------------------------------

struct RandomSpec
{
    std::size_t min_vars = 3, max_vars = 6;
    std::size_t min_rows = 20, max_rows = 200;
    std::size_t min_arity = 2, max_arity = 4;
};

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of the i-th instance of a campaign started from `seed`.
inline std::uint64_t instance_seed(std::uint64_t seed, std::uint64_t i) { return splitmix64(seed ^ splitmix64(i)); }

/// Random complete dataset with planted dependencies: each variable after
/// the first is, with probability 2/3, a noisy function of one or two earlier
/// variables. Noise levels range from none (deterministic children) to 50%.
/// Bounded draws use plain modulo on mt19937_64 so the output is the same on
/// every standard library.
inline Dataset random_dataset(std::uint64_t seed, const RandomSpec& spec = {})
{
    std::mt19937_64 rng(seed);
    auto draw = [&](std::size_t lo, std::size_t hi) { return lo + static_cast<std::size_t>(rng() % (hi - lo + 1)); };

    const std::size_t n = draw(spec.min_vars, spec.max_vars);
    const std::size_t rows = draw(spec.min_rows, spec.max_rows);
    static constexpr std::size_t noise_percent[] = {0, 5, 20, 50};

    std::vector<std::vector<Dataset::Code>> cols(n, std::vector<Dataset::Code>(rows));
    std::vector<std::string> names;
    for (std::size_t v = 0; v < n; ++v) {
        names.push_back("X" + std::to_string(v));
        const std::size_t r = draw(spec.min_arity, spec.max_arity);
        const bool dependent = v > 0 && draw(0, 2) > 0;
        const std::size_t a = draw(0, v == 0 ? 0 : v - 1), b = draw(0, v == 0 ? 0 : v - 1);
        const std::size_t ca = draw(1, 3), cb = draw(0, 2), shift = draw(0, r - 1);
        const std::size_t noise = noise_percent[draw(0, 3)];
        for (std::size_t row = 0; row < rows; ++row) {
            if (dependent && draw(0, 99) >= noise)
                cols[v][row] = static_cast<Dataset::Code>((ca * cols[a][row] + cb * cols[b][row] + shift) % r);
            else
                cols[v][row] = static_cast<Dataset::Code>(draw(0, r - 1));
        }
        if (std::all_of(cols[v].begin(), cols[v].end(), [&](auto c) { return c == cols[v][0]; }))
            cols[v][0] = static_cast<Dataset::Code>((cols[v][0] + 1) % r);
    }
    return Dataset::from_codes(std::move(names), cols);
}

} // namespace bnprune::oracle
