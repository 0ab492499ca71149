#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

namespace bnprune {

/// A set of variable indices in [0, 64), stored as a bit mask.
///
/// Equality is set equality. lex_less() orders sets by their ascending member
/// lists, which is the order the lattice sweep and the cache writers use.
class ParentSet
{
public:
    constexpr ParentSet() noexcept = default;

    static constexpr ParentSet from_bits(std::uint64_t bits) noexcept { return ParentSet(bits); }

    static constexpr ParentSet of(std::initializer_list<std::size_t> members) noexcept
    {
        ParentSet s;
        for (auto m : members)
            s.bits_ |= bit(m);
        return s;
    }

    template <typename Range>
    static constexpr ParentSet of_range(const Range& members) noexcept
    {
        ParentSet s;
        for (auto m : members)
            s.bits_ |= bit(static_cast<std::size_t>(m));
        return s;
    }

    constexpr std::uint64_t bits() const noexcept { return bits_; }
    constexpr bool empty() const noexcept { return bits_ == 0; }
    constexpr std::size_t size() const noexcept { return static_cast<std::size_t>(std::popcount(bits_)); }

    constexpr bool contains(std::size_t var) const noexcept { return (bits_ & bit(var)) != 0; }
    constexpr ParentSet with(std::size_t var) const noexcept { return ParentSet(bits_ | bit(var)); }
    constexpr ParentSet without(std::size_t var) const noexcept { return ParentSet(bits_ & ~bit(var)); }

    constexpr bool is_subset_of(ParentSet other) const noexcept { return (bits_ & ~other.bits_) == 0; }
    constexpr bool is_proper_subset_of(ParentSet other) const noexcept
    {
        return is_subset_of(other) && bits_ != other.bits_;
    }

    // Calls f(index) for each member in ascending order.
    template <typename F>
    constexpr void for_each(F&& f) const
    {
        for (std::uint64_t rest = bits_; rest != 0; rest &= rest - 1)
            f(static_cast<std::size_t>(std::countr_zero(rest)));
    }

    std::vector<std::size_t> members() const
    {
        std::vector<std::size_t> out;
        out.reserve(size());
        for_each([&](std::size_t v) { out.push_back(v); });
        return out;
    }

    friend constexpr bool operator==(ParentSet, ParentSet) noexcept = default;

    friend bool lex_less(ParentSet a, ParentSet b) noexcept
    {
        // Walk both member lists in ascending order; the first difference decides.
        std::uint64_t x = a.bits_, y = b.bits_;
        while (x != 0 && y != 0) {
            int i = std::countr_zero(x), j = std::countr_zero(y);
            if (i != j)
                return i < j;
            x &= x - 1;
            y &= y - 1;
        }
        return x == 0 && y != 0;
    }

private:
    explicit constexpr ParentSet(std::uint64_t bits) noexcept : bits_(bits) {}
    static constexpr std::uint64_t bit(std::size_t var) noexcept { return std::uint64_t{1} << var; }

    std::uint64_t bits_ = 0;
};

/// Renders {a,b,c} using the supplied names, e.g. "{X1,X3}".
template <typename Names>
std::string to_string(ParentSet s, const Names& names)
{
    std::string out = "{";
    bool first = true;
    s.for_each([&](std::size_t v) {
        if (!first)
            out += ',';
        out += names[v];
        first = false;
    });
    return out + "}";
}

} // namespace bnprune

template <>
struct std::hash<bnprune::ParentSet>
{
    std::size_t operator()(bnprune::ParentSet s) const noexcept { return std::hash<std::uint64_t>{}(s.bits()); }
};
