#pragma once

#include "dataset.hpp"
#include "log_base.hpp"
#include "parent_set.hpp"

#include <cassert>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

namespace bnprune {

struct ScoreEntry
{
    ParentSet parents;
    double ll = 0.0;
    double pen = 0.0;
    double bic = 0.0;
};

namespace detail {

// Assigns each row a dense id for its joint configuration over `vars`, in
// first-appearance order. Ids stay below N no matter how large the joint
// state space is. Returns the number of distinct observed configurations.
inline std::size_t configuration_ids(const Dataset& ds, ParentSet vars, std::vector<std::uint32_t>& ids)
{
    const std::size_t n = ds.rows();
    ids.assign(n, 0);
    std::size_t distinct = 1;
    std::vector<std::uint32_t> remap;
    std::unordered_map<std::uint64_t, std::uint32_t> sparse;
    constexpr auto unset = std::numeric_limits<std::uint32_t>::max();

    vars.for_each([&](std::size_t var) {
        const std::uint64_t r = ds.arity(var);
        const auto col = ds.column(var);
        const std::uint64_t span = distinct * r;
        std::uint32_t next = 0;
        if (span <= 8 * n + 1024) {
            remap.assign(span, unset);
            for (std::size_t row = 0; row < n; ++row) {
                auto& slot = remap[ids[row] * r + col[row]];
                if (slot == unset)
                    slot = next++;
                ids[row] = slot;
            }
        } else {
            sparse.clear();
            for (std::size_t row = 0; row < n; ++row) {
                auto [it, fresh] = sparse.try_emplace(ids[row] * r + col[row], next);
                if (fresh)
                    ++next;
                ids[row] = it->second;
            }
        }
        distinct = next;
    });
    return distinct;
}

} // namespace detail

/// Counts N_{x,pi} over observed parent configurations only.
///
/// Configurations are numbered in order of first appearance in the data;
/// representative_row() gives a row that exhibits each one.
class ContingencyTable
{
public:
    ContingencyTable(const Dataset& ds, std::size_t child, ParentSet parents)
        : child_arity_(ds.arity(child))
    {
        assert(!parents.contains(child));
        std::vector<std::uint32_t> ids;
        configs_ = detail::configuration_ids(ds, parents, ids);
        counts_.assign(configs_ * child_arity_, 0);
        totals_.assign(configs_, 0);
        representative_.assign(configs_, ds.rows());
        const auto col = ds.column(child);
        for (std::size_t row = 0; row < ds.rows(); ++row) {
            auto c = ids[row];
            ++counts_[c * child_arity_ + col[row]];
            ++totals_[c];
            if (representative_[c] == ds.rows())
                representative_[c] = row;
        }
    }

    std::size_t configurations() const noexcept { return configs_; }
    std::size_t child_arity() const noexcept { return child_arity_; }

    std::uint64_t count(std::size_t config, Dataset::Code x) const { return counts_[config * child_arity_ + x]; }
    std::uint64_t total(std::size_t config) const { return totals_[config]; }
    std::size_t representative_row(std::size_t config) const { return representative_[config]; }

    /// Materializes the table as {(parent values, child value) -> count},
    /// omitting zero cells. Parent values follow ascending variable index.
    std::map<std::pair<std::vector<Dataset::Code>, Dataset::Code>, std::uint64_t>
    as_map(const Dataset& ds, ParentSet parents) const
    {
        std::map<std::pair<std::vector<Dataset::Code>, Dataset::Code>, std::uint64_t> out;
        for (std::size_t c = 0; c < configs_; ++c) {
            std::vector<Dataset::Code> key;
            parents.for_each([&](std::size_t p) { key.push_back(ds.at(representative_[c], p)); });
            for (Dataset::Code x = 0; x < child_arity_; ++x)
                if (auto k = count(c, x); k > 0)
                    out[{key, x}] = k;
        }
        return out;
    }

    /// Sum of N_{x,pi} log_b(N_{x,pi} / N_pi) with empty cells contributing 0.
    double log_likelihood(LogBase base) const
    {
        double ll = 0.0;
        for (std::size_t c = 0; c < configs_; ++c) {
            const double total = static_cast<double>(totals_[c]);
            for (std::size_t x = 0; x < child_arity_; ++x) {
                const auto k = counts_[c * child_arity_ + x];
                if (k > 0 && k != totals_[c])
                    ll += static_cast<double>(k) * base.log(static_cast<double>(k) / total);
            }
        }
        return ll;
    }

private:
    std::size_t child_arity_;
    std::size_t configs_ = 0;
    std::vector<std::uint64_t> counts_;
    std::vector<std::uint64_t> totals_;
    std::vector<std::size_t> representative_;
};

inline ContingencyTable contingency(const Dataset& ds, std::size_t child, ParentSet parents)
{
    return ContingencyTable(ds, child, parents);
}

inline double log_likelihood(const Dataset& ds, std::size_t child, ParentSet parents, LogBase base)
{
    return ContingencyTable(ds, child, parents).log_likelihood(base);
}

/// |Omega_Pi|, the product of the members' arities; nullopt on 64-bit overflow.
inline std::optional<std::uint64_t> joint_state_space(const Dataset& ds, ParentSet vars)
{
    std::uint64_t omega = 1;
    bool overflow = false;
    vars.for_each([&](std::size_t v) {
        if (!overflow && __builtin_mul_overflow(omega, static_cast<std::uint64_t>(ds.arity(v)), &omega))
            overflow = true;
    });
    if (overflow)
        return std::nullopt;
    return omega;
}

/// -(log_b N / 2) (|Omega_X| - 1) |Omega_Pi|.
///
/// An unrepresentable |Omega_Pi| saturates to -infinity, which every pruning
/// rule treats as an immediate prune. A single-valued child has penalty 0.
inline double penalty(const Dataset& ds, std::size_t child, ParentSet parents, LogBase base)
{
    assert(!parents.contains(child));
    const auto child_free = ds.arity(child) - 1;
    if (child_free == 0)
        return 0.0;
    const auto omega = joint_state_space(ds, parents);
    if (!omega)
        return -std::numeric_limits<double>::infinity();
    return -(base.log(static_cast<double>(ds.rows())) / 2.0) * static_cast<double>(child_free)
           * static_cast<double>(*omega);
}

inline ScoreEntry bic(const Dataset& ds, std::size_t child, ParentSet parents, LogBase base)
{
    ScoreEntry e;
    e.parents = parents;
    e.ll = log_likelihood(ds, child, parents, base);
    e.pen = penalty(ds, child, parents, base);
    e.bic = e.ll + e.pen;
    return e;
}

/// H(target | given), via the identity N * H(X|Pi) = -LL(X|Pi).
inline double cond_entropy(const Dataset& ds, std::size_t target, ParentSet given, LogBase base)
{
    return -log_likelihood(ds, target, given, base) / static_cast<double>(ds.rows());
}

/// Empirical entropy of the joint configuration of `vars` (0 for the empty set).
inline double joint_entropy(const Dataset& ds, ParentSet vars, LogBase base)
{
    std::vector<std::uint32_t> ids;
    const auto distinct = detail::configuration_ids(ds, vars, ids);
    std::vector<std::uint64_t> counts(distinct, 0);
    for (auto id : ids)
        ++counts[id];
    const double n = static_cast<double>(ds.rows());
    double h = 0.0;
    for (auto c : counts) {
        const double p = static_cast<double>(c) / n;
        h -= p * base.log(p);
    }
    return h;
}

} // namespace bnprune
