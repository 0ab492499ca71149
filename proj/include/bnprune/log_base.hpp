#pragma once

#include "error.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

namespace bnprune {

/// Logarithm base shared by every entropy, likelihood and penalty value.
///
/// Bases e and 2 go through std::log / std::log2 directly, so powers of two
/// stay exact in base 2 (log2(8) == 3). Any other base b >= 2 is evaluated as
/// ln(x) / ln(b).
class LogBase
{
public:
    static constexpr LogBase e() noexcept { return LogBase(Kind::natural, std::numbers::e); }
    static constexpr LogBase two() noexcept { return LogBase(Kind::binary, 2.0); }

    static LogBase of(double b)
    {
        if (!(b >= 2.0) || !std::isfinite(b))
            throw Error("log base must be a finite value >= 2, got " + std::to_string(b));
        if (b == 2.0)
            return two();
        return LogBase(Kind::other, b);
    }

    /// Accepts "e", "2" or any decimal number >= 2.
    static LogBase parse(std::string_view text)
    {
        if (text == "e")
            return e();
        double b = 0.0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), b);
        if (ec != std::errc{} || ptr != text.data() + text.size())
            throw Error("invalid log base '" + std::string(text) + "' (expected e or 2)");
        return of(b);
    }

    constexpr double value() const noexcept { return value_; }

    double log(double x) const noexcept
    {
        switch (kind_) {
        case Kind::natural: return std::log(x);
        case Kind::binary: return std::log2(x);
        default: return std::log(x) / std::log(value_);
        }
    }

    std::string name() const
    {
        switch (kind_) {
        case Kind::natural: return "e";
        case Kind::binary: return "2";
        default: {
            char buf[32];
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value_);
            return std::string(buf, ptr);
        }
        }
    }

    friend constexpr bool operator==(LogBase a, LogBase b) noexcept { return a.value_ == b.value_; }

private:
    enum class Kind { natural, binary, other };

    constexpr LogBase(Kind kind, double value) noexcept : kind_(kind), value_(value) {}

    Kind kind_;
    double value_;
};

} // namespace bnprune
