#pragma once

#include "dataset.hpp"
#include "error.hpp"
#include "log_base.hpp"
#include "parent_set.hpp"
#include "scoring.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

namespace bnprune {

/// The four pruning rules. Each one tests, for an extension Pi* -> Pi* u {Y}
/// of a child X,
///
///     N * term <= (1 - |Omega_Y|) * Pen(X | Pi*)
///
/// and licenses skipping Pi* u {Y} together with all of its supersets. The
/// rules differ only in the entropy term:
///   alg1: H(X | Pi*)  (equivalent to BIC(X|Pi*) >= Pen(X|Pi* u {Y}))
///   alg2: H(Y | Pi*)
///   alg3: H(X)
///   alg4: H(Y)
enum class Rule : std::uint8_t { alg1 = 0, alg2 = 1, alg3 = 2, alg4 = 3 };

inline constexpr std::array<Rule, 4> all_rules = {Rule::alg1, Rule::alg2, Rule::alg3, Rule::alg4};

inline std::string_view rule_name(Rule r)
{
    static constexpr std::array<std::string_view, 4> names = {"alg1", "alg2", "alg3", "alg4"};
    return names[static_cast<std::size_t>(r)];
}

class RuleSet
{
public:
    constexpr RuleSet() noexcept = default;
    constexpr RuleSet(std::initializer_list<Rule> rules) noexcept
    {
        for (auto r : rules)
            bits_ |= bit(r);
    }

    static constexpr RuleSet none() noexcept { return {}; }
    static constexpr RuleSet all() noexcept { return {Rule::alg1, Rule::alg2, Rule::alg3, Rule::alg4}; }
    static constexpr RuleSet from_bits(std::uint8_t bits) noexcept
    {
        RuleSet s;
        s.bits_ = bits & 0xF;
        return s;
    }

    /// Parses a comma-separated list such as "alg1,alg4"; also "all" and "none".
    static RuleSet parse(std::string_view text)
    {
        if (text == "all")
            return all();
        if (text == "none" || text.empty())
            return none();
        RuleSet s;
        for (bool more = true; more;) {
            auto comma = text.find(',');
            more = comma != std::string_view::npos;
            auto tok = text.substr(0, comma);
            bool found = false;
            for (auto r : all_rules)
                if (tok == rule_name(r)) {
                    s.bits_ |= bit(r);
                    found = true;
                }
            if (!found)
                throw Error("unknown pruning rule '" + std::string(tok) + "' (expected alg1..alg4)");
            if (more)
                text = text.substr(comma + 1);
        }
        return s;
    }

    constexpr bool contains(Rule r) const noexcept { return (bits_ & bit(r)) != 0; }
    constexpr bool empty() const noexcept { return bits_ == 0; }
    constexpr std::uint8_t bits() const noexcept { return bits_; }

    std::string to_string() const
    {
        if (empty())
            return "none";
        std::string out;
        for (auto r : all_rules)
            if (contains(r)) {
                if (!out.empty())
                    out += ',';
                out += rule_name(r);
            }
        return out;
    }

    friend constexpr bool operator==(RuleSet, RuleSet) noexcept = default;

private:
    static constexpr std::uint8_t bit(Rule r) noexcept { return std::uint8_t(1u << static_cast<unsigned>(r)); }
    std::uint8_t bits_ = 0;
};

struct PruneConfig
{
    std::size_t max_indegree = 0;
    RuleSet rules = RuleSet::all();
    LogBase base = LogBase::e();
    // Worker threads for the per-child sweeps; 0 picks the hardware default.
    std::size_t threads = 1;
};

// ---------------------------------------------------------------------------
// Search space and parent-count bounds
// ---------------------------------------------------------------------------

struct Count
{
    std::uint64_t value = 0;
    bool saturated = false;
};

namespace detail {

inline std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b, bool& sat)
{
    std::uint64_t r;
    if (__builtin_add_overflow(a, b, &r)) {
        sat = true;
        return std::numeric_limits<std::uint64_t>::max();
    }
    return r;
}

// C(n, j) for j = 0..k, saturating.
inline std::vector<std::uint64_t> binomials(std::uint64_t n, std::size_t k, bool& sat)
{
    std::vector<std::uint64_t> out(k + 1, 0);
    out[0] = 1;
    for (std::size_t j = 1; j <= k && j <= n; ++j) {
        // C(n, j) = C(n, j-1) * (n - j + 1) / j, exact in 128-bit.
        unsigned __int128 v = static_cast<unsigned __int128>(out[j - 1]) * (n - j + 1) / j;
        if (out[j - 1] == std::numeric_limits<std::uint64_t>::max() || v > std::numeric_limits<std::uint64_t>::max()) {
            sat = true;
            out[j] = std::numeric_limits<std::uint64_t>::max();
        } else {
            out[j] = static_cast<std::uint64_t>(v);
        }
    }
    return out;
}

} // namespace detail

/// Non-empty candidates per child within in-degree k: sum_{j=1..k} C(n-1, j).
inline Count candidates_per_child(std::size_t n, std::size_t k)
{
    Count c;
    if (n == 0)
        return c;
    k = std::min(k, n - 1);
    auto b = detail::binomials(n - 1, k, c.saturated);
    for (std::size_t j = 1; j <= k; ++j)
        c.value = detail::saturating_add(c.value, b[j], c.saturated);
    return c;
}

/// |S| = n * sum_{j=1..k} C(n-1, j). The empty parent set is always scored
/// and is not part of |S|.
inline Count search_space_size(std::size_t n, std::size_t k)
{
    Count per = candidates_per_child(n, k);
    Count total{0, per.saturated};
    for (std::size_t i = 0; i < n; ++i)
        total.value = detail::saturating_add(total.value, per.value, total.saturated);
    return total;
}

/// Smallest natural number >= x; 0 for negative x.
inline std::size_t ceil_plus(double x)
{
    if (!(x > 0.0))
        return 0;
    return static_cast<std::size_t>(std::ceil(x));
}

/// Global bound on the number of parents of any node:
/// ceil(1 + log2 N - log2 log_b N).
inline std::size_t corollary1_bound(std::size_t rows, LogBase base)
{
    const double n = static_cast<double>(rows);
    return ceil_plus(1.0 + std::log2(n) - std::log2(base.log(n)));
}

/// Per-node bound from marginal entropies:
///
///   max_{Y != X} ceil+( 1 + log2( min{H(X),H(Y)} / ((|Omega_X|-1)(|Omega_Y|-1)) )
///                       + log2 N - log2 log_b N )
///
/// A Y whose min-entropy term is zero contributes 0.
inline std::size_t theorem3_bound(const Dataset& ds, std::size_t child, std::span<const double> entropies,
                                  LogBase base)
{
    const double n = static_cast<double>(ds.rows());
    const double sample_term = std::log2(n) - std::log2(base.log(n));
    std::size_t best = 0;
    for (std::size_t y = 0; y < ds.variables(); ++y) {
        if (y == child)
            continue;
        const double h = std::min(entropies[child], entropies[y]);
        if (!(h > 0.0))
            continue;
        const double free = static_cast<double>(ds.arity(child) - 1) * static_cast<double>(ds.arity(y) - 1);
        best = std::max(best, ceil_plus(1.0 + std::log2(h / free) + sample_term));
    }
    return best;
}

struct BoundsReport
{
    std::vector<std::size_t> theorem3;
    std::size_t corollary1 = 0;
    std::vector<std::size_t> effective; // min(theorem3, corollary1, k)

    /// (bound, number of nodes) pairs, largest bound first.
    std::vector<std::pair<std::size_t, std::size_t>> grouped() const
    {
        std::map<std::size_t, std::size_t, std::greater<>> counts;
        for (auto b : theorem3)
            ++counts[b];
        return {counts.begin(), counts.end()};
    }

    /// "6 (7), 3 (1)" notation.
    std::string grouped_string() const
    {
        std::string out;
        for (auto [bound, count] : grouped()) {
            if (!out.empty())
                out += ", ";
            out += std::to_string(bound) + " (" + std::to_string(count) + ")";
        }
        return out;
    }
};

inline BoundsReport compute_bounds(const Dataset& ds, LogBase base, std::size_t max_indegree)
{
    BoundsReport r;
    const auto h = column_entropy_all(ds, base);
    r.corollary1 = corollary1_bound(ds.rows(), base);
    const auto k = std::min(max_indegree, ds.variables() - 1);
    for (std::size_t x = 0; x < ds.variables(); ++x) {
        r.theorem3.push_back(theorem3_bound(ds, x, h, base));
        r.effective.push_back(std::min({r.theorem3.back(), r.corollary1, k}));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Rule checks
// ---------------------------------------------------------------------------

/// N * H(X_i) for every variable, computed as -LL(X_i | {}) so that alg3 and
/// alg1 see bit-identical values at Pi* = {}.
inline std::vector<double> marginal_nh(const Dataset& ds, LogBase base)
{
    std::vector<double> out;
    out.reserve(ds.variables());
    for (std::size_t v = 0; v < ds.variables(); ++v)
        out.push_back(-log_likelihood(ds, v, ParentSet{}, base));
    return out;
}

struct RuleTerms
{
    double lhs = 0.0; // N * (entropy term)
    double rhs = 0.0; // (1 - |Omega_Y|) * Pen(X | Pi*)
    bool fires() const noexcept { return lhs <= rhs; }
};

/// (1 - |Omega_Y|) * Pen(X|Pi*), with a single-valued Y giving 0.
inline double rule_threshold(const Dataset& ds, std::size_t y, double pen_pi_star)
{
    const auto y_free = ds.arity(y) - 1;
    if (y_free == 0)
        return 0.0;
    return -static_cast<double>(y_free) * pen_pi_star;
}

/// Evaluates both sides of `rule` for extending `pi_star` by `y`.
///
/// `score_of_pi_star` supplies LL and Pen of Pi* when the caller already has
/// them; otherwise they are computed here. alg2 always pays for one
/// conditional-entropy evaluation.
inline RuleTerms rule_terms(Rule rule, const Dataset& ds, std::size_t child, ParentSet pi_star, std::size_t y,
                            const ScoreEntry* score_of_pi_star, std::span<const double> marginal_nh,
                            LogBase base)
{
    assert(y != child && !pi_star.contains(y) && !pi_star.contains(child));
    ScoreEntry local;
    if (score_of_pi_star == nullptr) {
        local = bic(ds, child, pi_star, base);
        score_of_pi_star = &local;
    }
    RuleTerms t;
    t.rhs = rule_threshold(ds, y, score_of_pi_star->pen);
    switch (rule) {
    case Rule::alg1: t.lhs = -score_of_pi_star->ll; break;
    case Rule::alg2: t.lhs = -log_likelihood(ds, y, pi_star, base); break;
    case Rule::alg3: t.lhs = marginal_nh[child]; break;
    case Rule::alg4: t.lhs = marginal_nh[y]; break;
    }
    return t;
}

inline bool rule_check(Rule rule, const Dataset& ds, std::size_t child, ParentSet pi_star, std::size_t y,
                       const ScoreEntry* score_of_pi_star, std::span<const double> marginal_nh, LogBase base)
{
    return rule_terms(rule, ds, child, pi_star, y, score_of_pi_star, marginal_nh, base).fires();
}

// ---------------------------------------------------------------------------
// Lattice sweep
// ---------------------------------------------------------------------------

struct ChildStats
{
    std::uint64_t search_space = 0; // non-empty candidates within k
    std::uint64_t evaluated = 0;    // non-empty candidates scored
    std::uint64_t pruned_total = 0;
    std::array<std::uint64_t, 4> pruned_by_rule{}; // attribution, sums to pruned_total
    std::uint64_t propagated = 0;                  // skips inherited from a skipped subset
    std::uint64_t cond_entropy_evals = 0;          // extra H(Y|Pi*) evaluations for alg2

    ChildStats& operator+=(const ChildStats& o)
    {
        search_space += o.search_space;
        evaluated += o.evaluated;
        pruned_total += o.pruned_total;
        for (std::size_t i = 0; i < 4; ++i)
            pruned_by_rule[i] += o.pruned_by_rule[i];
        propagated += o.propagated;
        cond_entropy_evals += o.cond_entropy_evals;
        return *this;
    }

    std::uint64_t pruned(Rule r) const { return pruned_by_rule[static_cast<std::size_t>(r)]; }

    friend bool operator==(const ChildStats&, const ChildStats&) = default;
};

struct PruneStats
{
    std::size_t max_indegree = 0;
    RuleSet rules;
    std::vector<ChildStats> per_child;
    ChildStats total;

    friend bool operator==(const PruneStats&, const PruneStats&) = default;
};

struct RawLists
{
    // lists[x][0] is always the empty parent set; the rest follow sweep order.
    std::vector<std::vector<ScoreEntry>> lists;
    PruneStats stats;
};

namespace detail {

// Calls f(set) for every size-`size` subset of `pool` in lexicographic order.
template <typename F>
void for_each_combination(std::span<const std::size_t> pool, std::size_t size, F&& f)
{
    if (size > pool.size())
        return;
    std::vector<std::size_t> idx(size);
    for (std::size_t i = 0; i < size; ++i)
        idx[i] = i;
    while (true) {
        ParentSet s;
        for (auto i : idx)
            s = s.with(pool[i]);
        f(s);
        std::size_t i = size;
        while (i > 0 && idx[i - 1] == pool.size() - size + i - 1)
            --i;
        if (i == 0)
            return;
        ++idx[i - 1];
        for (std::size_t j = i; j < size; ++j)
            idx[j] = idx[j - 1] + 1;
    }
}

// Order in which rules are tried on one decomposition; the first that fires
// gets the attribution. alg2 is last since it is the only one that costs an
// extra entropy evaluation.
inline constexpr std::array<Rule, 4> rule_try_order = {Rule::alg1, Rule::alg3, Rule::alg4, Rule::alg2};

} // namespace detail

/// Builds the raw candidate list of one child.
///
/// The lattice is swept layer by layer (|S| = 1..k), lexicographically within
/// a layer. A candidate S is skipped when one of its immediate subsets
/// S \ {Y} was skipped (prune marks cover all supersets), or when an active
/// rule fires on an evaluated S \ {Y} extended by Y. Decompositions are tried
/// in lexicographic order of S \ {Y}; the first hit decides the attribution.
inline std::pair<std::vector<ScoreEntry>, ChildStats>
sweep_child(const Dataset& ds, std::size_t child, const PruneConfig& config, std::span<const double> nh)
{
    const std::size_t n = ds.variables();
    const std::size_t k = std::min(config.max_indegree, n - 1);

    std::vector<std::size_t> pool;
    for (std::size_t v = 0; v < n; ++v)
        if (v != child)
            pool.push_back(v);

    struct Node
    {
        std::int64_t entry; // index into the list, -1 when skipped
        Rule origin;
    };

    std::vector<ScoreEntry> list;
    ChildStats stats;
    stats.search_space = candidates_per_child(n, k).value;

    list.push_back(bic(ds, child, ParentSet{}, config.base));
    std::unordered_map<ParentSet, Node> previous{{ParentSet{}, Node{0, Rule::alg1}}};
    std::unordered_map<ParentSet, Node> current;

    for (std::size_t size = 1; size <= k; ++size) {
        current.clear();
        detail::for_each_combination(pool, size, [&](ParentSet s) {
            std::optional<Rule> origin;
            bool inherited = false;
            // Members in descending order give the subsets S \ {Y} in ascending lex order.
            auto members = s.members();
            for (auto it = members.rbegin(); it != members.rend() && !origin; ++it) {
                const std::size_t y = *it;
                const ParentSet base_set = s.without(y);
                const Node& node = previous.at(base_set);
                if (node.entry < 0) {
                    origin = node.origin;
                    inherited = true;
                    break;
                }
                const ScoreEntry& base_score = list[static_cast<std::size_t>(node.entry)];
                for (auto rule : detail::rule_try_order) {
                    if (!config.rules.contains(rule))
                        continue;
                    if (rule == Rule::alg2)
                        ++stats.cond_entropy_evals;
                    if (rule_check(rule, ds, child, base_set, y, &base_score, nh, config.base)) {
                        origin = rule;
                        break;
                    }
                }
            }
            if (origin) {
                ++stats.pruned_total;
                ++stats.pruned_by_rule[static_cast<std::size_t>(*origin)];
                if (inherited)
                    ++stats.propagated;
                current.emplace(s, Node{-1, *origin});
            } else {
                ++stats.evaluated;
                current.emplace(s, Node{static_cast<std::int64_t>(list.size()), Rule::alg1});
                list.push_back(bic(ds, child, s, config.base));
            }
        });
        std::swap(previous, current);
    }
    return {std::move(list), stats};
}

/// Sweeps every child, in parallel when config.threads > 1. Results and
/// statistics are assembled in child order, so the output does not depend on
/// the thread count.
inline RawLists build_lists(const Dataset& ds, const PruneConfig& config)
{
    const std::size_t n = ds.variables();
    const auto nh = marginal_nh(ds, config.base);

    RawLists out;
    out.lists.resize(n);
    out.stats.max_indegree = std::min(config.max_indegree, n - 1);
    out.stats.rules = config.rules;
    out.stats.per_child.resize(n);

    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t x = next++; x < n; x = next++) {
            try {
                auto [list, stats] = sweep_child(ds, x, config, nh);
                out.lists[x] = std::move(list);
                out.stats.per_child[x] = stats;
            } catch (...) {
                errors[x] = std::current_exception();
            }
        }
    };

    std::size_t threads = config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.threads;
    threads = std::min(threads, n);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back(worker);
    }

    for (std::size_t x = 0; x < n; ++x) {
        if (errors[x]) {
            try {
                std::rethrow_exception(errors[x]);
            } catch (const std::exception& e) {
                throw Error("building list for '" + ds.name(x) + "': " + e.what());
            }
        }
        out.stats.total += out.stats.per_child[x];
    }
    return out;
}

} // namespace bnprune
