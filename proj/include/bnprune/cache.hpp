#pragma once

#include "dataset.hpp"
#include "error.hpp"
#include "log_base.hpp"
#include "parent_set.hpp"
#include "pruning.hpp"
#include "scoring.hpp"
#include "version.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace bnprune {

/// Final order of a candidate list: descending BIC, then fewer parents, then
/// lexicographic members. Total on distinct parent sets.
inline bool entry_order(const ScoreEntry& a, const ScoreEntry& b) noexcept
{
    if (a.bic != b.bic)
        return a.bic > b.bic;
    if (a.parents.size() != b.parents.size())
        return a.parents.size() < b.parents.size();
    return lex_less(a.parents, b.parents);
}

struct CandidateList
{
    std::size_t child = 0;
    std::vector<ScoreEntry> entries;
};

/// Keeps exactly the entries that strictly beat every evaluated proper subset
/// in `raw`, sorted by entry_order(). Ties go to the smaller set.
inline CandidateList lemma1_filter(std::size_t child, std::span<const ScoreEntry> raw)
{
    constexpr double none = -std::numeric_limits<double>::infinity();
    std::unordered_map<ParentSet, double> score;
    score.reserve(raw.size());
    for (const auto& e : raw)
        score.emplace(e.parents, e.bic);

    // best_below(S) = max BIC over evaluated proper subsets of S, memoized
    // over the part of the lattice below the raw entries.
    std::unordered_map<ParentSet, double> memo;
    auto best_below = [&](auto&& self, ParentSet s) -> double {
        if (s.empty())
            return none;
        if (auto it = memo.find(s); it != memo.end())
            return it->second;
        double best = none;
        s.for_each([&](std::size_t v) {
            const ParentSet t = s.without(v);
            if (auto it = score.find(t); it != score.end())
                best = std::max(best, it->second);
            best = std::max(best, self(self, t));
        });
        memo.emplace(s, best);
        return best;
    };

    CandidateList out;
    out.child = child;
    for (const auto& e : raw)
        if (e.parents.empty() || e.bic > best_below(best_below, e.parents))
            out.entries.push_back(e);
    std::sort(out.entries.begin(), out.entries.end(), entry_order);
    return out;
}

// ---------------------------------------------------------------------------
// Score cache files
// ---------------------------------------------------------------------------

enum class CacheFormat { jkl, csv, json };

inline CacheFormat parse_cache_format(std::string_view s)
{
    if (s == "jkl")
        return CacheFormat::jkl;
    if (s == "csv")
        return CacheFormat::csv;
    if (s == "json")
        return CacheFormat::json;
    throw Error("unknown cache format '" + std::string(s) + "' (expected jkl, csv or json)");
}

inline std::string_view format_name(CacheFormat f)
{
    switch (f) {
    case CacheFormat::jkl: return "jkl";
    case CacheFormat::csv: return "csv";
    default: return "json";
    }
}

/// Guesses the format from a file extension; anything unknown is jkl.
inline CacheFormat format_from_path(const std::filesystem::path& path)
{
    auto ext = path.extension().string();
    if (ext == ".csv")
        return CacheFormat::csv;
    if (ext == ".json")
        return CacheFormat::json;
    return CacheFormat::jkl;
}

struct CacheMetadata
{
    LogBase base = LogBase::e();
    std::size_t max_indegree = 0;
    RuleSet rules;
    std::size_t rows = 0;
    std::string version{bnprune::version};
};

struct ScoreCache
{
    std::vector<std::string> names;
    CacheMetadata meta;
    std::vector<CandidateList> lists;
};

/// Applies lemma1_filter() to every raw list.
inline ScoreCache make_cache(const Dataset& ds, const RawLists& raw, const PruneConfig& config)
{
    ScoreCache cache;
    cache.names.assign(ds.names().begin(), ds.names().end());
    cache.meta.base = config.base;
    cache.meta.max_indegree = raw.stats.max_indegree;
    cache.meta.rules = config.rules;
    cache.meta.rows = ds.rows();
    for (std::size_t x = 0; x < raw.lists.size(); ++x)
        cache.lists.push_back(lemma1_filter(x, raw.lists[x]));
    return cache;
}

namespace detail {

inline std::string metadata_comment(const CacheMetadata& m)
{
    return "# base=" + m.base.name() + " k=" + std::to_string(m.max_indegree) + " rules=" + m.rules.to_string()
           + " rows=" + std::to_string(m.rows) + " version=" + m.version;
}

inline void read_metadata_comment(std::string_view line, CacheMetadata& m)
{
    std::istringstream in{std::string(line.substr(1))};
    std::string tok;
    while (in >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos)
            continue;
        auto key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "base")
            m.base = LogBase::parse(val);
        else if (key == "k")
            m.max_indegree = std::stoul(val);
        else if (key == "rules")
            m.rules = RuleSet::parse(val);
        else if (key == "rows")
            m.rows = std::stoul(val);
        else if (key == "version")
            m.version = val;
    }
}

inline std::string fixed6(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

inline std::string exact(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline double parse_double(std::string_view s, std::size_t line)
{
    if (s == "nan")
        return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ParseError("expected a number, found '" + std::string(s) + "'", line);
    return v;
}

inline void require_plain_names(const ScoreCache& c, CacheFormat f)
{
    for (const auto& n : c.names)
        if (n.empty() || n.find_first_of(" \t,\"#") != std::string::npos)
            throw DataError("variable name '" + n + "' cannot be written in " + std::string(format_name(f))
                            + " format; use json");
}

inline std::vector<std::string> split_ws(std::string_view line)
{
    std::vector<std::string> out;
    std::istringstream in{std::string(line)};
    std::string tok;
    while (in >> tok)
        out.push_back(tok);
    return out;
}

class NameIndex
{
public:
    explicit NameIndex(const std::vector<std::string>& names)
    {
        for (std::size_t i = 0; i < names.size(); ++i)
            index_.emplace(names[i], i);
        size_ = names.size();
    }

    // Resolves a name; a bare integer below n is accepted as an index.
    std::size_t resolve(const std::string& tok, std::size_t line) const
    {
        if (auto it = index_.find(tok); it != index_.end())
            return it->second;
        std::size_t v = 0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec == std::errc{} && ptr == tok.data() + tok.size() && v < size_)
            return v;
        throw ParseError("unknown variable '" + tok + "'", line);
    }

private:
    std::unordered_map<std::string, std::size_t> index_;
    std::size_t size_ = 0;
};

inline void write_jkl(const ScoreCache& c, std::ostream& out)
{
    require_plain_names(c, CacheFormat::jkl);
    out << metadata_comment(c.meta) << '\n' << c.names.size() << '\n';
    for (const auto& list : c.lists) {
        out << c.names[list.child] << ' ' << list.entries.size() << '\n';
        for (const auto& e : list.entries) {
            out << fixed6(e.bic) << ' ' << e.parents.size();
            e.parents.for_each([&](std::size_t p) { out << ' ' << c.names[p]; });
            out << '\n';
        }
    }
}

inline void write_csv(const ScoreCache& c, std::ostream& out)
{
    require_plain_names(c, CacheFormat::csv);
    out << metadata_comment(c.meta) << '\n' << "child,parents,ll,pen,bic\n";
    for (const auto& list : c.lists)
        for (const auto& e : list.entries) {
            out << c.names[list.child] << ',';
            bool first = true;
            e.parents.for_each([&](std::size_t p) {
                out << (first ? "" : " ") << c.names[p];
                first = false;
            });
            out << ',' << exact(e.ll) << ',' << exact(e.pen) << ',' << exact(e.bic) << '\n';
        }
}

inline nlohmann::ordered_json number_or_null(double v)
{
    if (std::isfinite(v))
        return v;
    return nullptr;
}

inline void write_json(const ScoreCache& c, std::ostream& out)
{
    nlohmann::ordered_json doc;
    doc["metadata"] = {{"tool", "bnprune"},
                       {"version", c.meta.version},
                       {"base", c.meta.base.name()},
                       {"max_indegree", c.meta.max_indegree},
                       {"rules", c.meta.rules.to_string()},
                       {"rows", c.meta.rows}};
    doc["variables"] = c.names;
    auto& lists = doc["lists"] = nlohmann::ordered_json::object();
    for (const auto& list : c.lists) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& e : list.entries) {
            auto parents = nlohmann::ordered_json::array();
            e.parents.for_each([&](std::size_t p) { parents.push_back(c.names[p]); });
            arr.push_back({{"parents", parents},
                           {"ll", number_or_null(e.ll)},
                           {"pen", number_or_null(e.pen)},
                           {"bic", number_or_null(e.bic)}});
        }
        lists[c.names[list.child]] = std::move(arr);
    }
    out << doc.dump(2) << '\n';
}

inline ScoreCache read_jkl(std::istream& in)
{
    ScoreCache c;
    std::string line;
    std::size_t lineno = 0;

    // Next non-blank, non-comment line split on whitespace; empty at EOF.
    auto next = [&]() -> std::vector<std::string> {
        while (std::getline(in, line)) {
            ++lineno;
            auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos)
                continue;
            if (line[first] == '#') {
                if (line.find("base=") != std::string::npos)
                    read_metadata_comment(std::string_view(line).substr(first), c.meta);
                continue;
            }
            return split_ws(line);
        }
        return {};
    };

    auto head = next();
    if (head.size() != 1)
        throw ParseError("expected the variable count", lineno);
    const auto n = static_cast<std::size_t>(parse_double(head[0], lineno));

    struct Pending
    {
        std::size_t line;
        double bic;
        std::vector<std::string> parents;
    };
    std::vector<std::vector<Pending>> blocks(n);
    for (std::size_t b = 0; b < n; ++b) {
        auto hdr = next();
        if (hdr.empty())
            throw ParseError("file ends before variable block " + std::to_string(b + 1) + " of "
                                 + std::to_string(n),
                             lineno);
        if (hdr.size() != 2)
            throw ParseError("expected '<variable> <count>' block header", lineno);
        c.names.push_back(hdr[0]);
        const auto count = static_cast<std::size_t>(parse_double(hdr[1], lineno));
        for (std::size_t i = 0; i < count; ++i) {
            auto tok = next();
            if (tok.empty())
                throw ParseError("variable block '" + hdr[0] + "' is truncated: expected " + std::to_string(count)
                                     + " entries, found " + std::to_string(i),
                                 lineno);
            if (tok.size() < 2)
                throw ParseError("expected '<score> <count> <parents...>' in block '" + hdr[0] + "'", lineno);
            Pending p{lineno, parse_double(tok[0], lineno), {}};
            const auto k = static_cast<std::size_t>(parse_double(tok[1], lineno));
            if (tok.size() != k + 2)
                throw ParseError("parent count " + std::to_string(k) + " does not match "
                                     + std::to_string(tok.size() - 2) + " listed parents in block '" + hdr[0]
                                     + "'",
                                 lineno);
            p.parents.assign(tok.begin() + 2, tok.end());
            blocks[b].push_back(std::move(p));
        }
    }

    NameIndex index(c.names);
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t b = 0; b < n; ++b) {
        CandidateList list;
        list.child = b;
        for (const auto& p : blocks[b]) {
            ParentSet s;
            for (const auto& name : p.parents)
                s = s.with(index.resolve(name, p.line));
            list.entries.push_back(ScoreEntry{s, nan, nan, p.bic});
        }
        c.lists.push_back(std::move(list));
    }
    return c;
}

inline ScoreCache read_csv_cache(std::istream& in)
{
    ScoreCache c;
    std::string line;
    std::size_t lineno = 0;
    bool header = false;

    struct Row
    {
        std::size_t line;
        std::string child;
        std::vector<std::string> parents;
        double ll, pen, bic;
    };
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (line.front() == '#') {
            read_metadata_comment(line, c.meta);
            continue;
        }
        if (!header) {
            if (line != "child,parents,ll,pen,bic")
                throw ParseError("expected header 'child,parents,ll,pen,bic'", lineno);
            header = true;
            continue;
        }
        auto f = split_record(line, ',', lineno);
        if (f.size() != 5)
            throw ParseError("expected 5 fields, found " + std::to_string(f.size()), lineno);
        rows.push_back(Row{lineno, f[0], split_ws(f[1]), parse_double(f[2], lineno), parse_double(f[3], lineno),
                           parse_double(f[4], lineno)});
        if (std::find(c.names.begin(), c.names.end(), f[0]) == c.names.end())
            c.names.push_back(f[0]);
    }
    if (!header)
        throw ParseError("missing header 'child,parents,ll,pen,bic'", lineno);

    NameIndex index(c.names);
    c.lists.resize(c.names.size());
    for (std::size_t i = 0; i < c.names.size(); ++i)
        c.lists[i].child = i;
    for (const auto& r : rows) {
        const auto child = index.resolve(r.child, r.line);
        ParentSet s;
        for (const auto& p : r.parents)
            s = s.with(index.resolve(p, r.line));
        c.lists[child].entries.push_back(ScoreEntry{s, r.ll, r.pen, r.bic});
    }
    return c;
}

inline double json_number(const nlohmann::json& v)
{
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

inline ScoreCache read_json_cache(std::istream& in)
{
    ScoreCache c;
    try {
        auto doc = nlohmann::json::parse(in);
        const auto& m = doc.at("metadata");
        c.meta.base = LogBase::parse(m.at("base").get<std::string>());
        c.meta.max_indegree = m.at("max_indegree").get<std::size_t>();
        c.meta.rules = RuleSet::parse(m.at("rules").get<std::string>());
        c.meta.rows = m.at("rows").get<std::size_t>();
        c.meta.version = m.at("version").get<std::string>();
        c.names = doc.at("variables").get<std::vector<std::string>>();
        NameIndex index(c.names);
        const auto& lists = doc.at("lists");
        for (std::size_t x = 0; x < c.names.size(); ++x) {
            CandidateList list;
            list.child = x;
            for (const auto& e : lists.at(c.names[x])) {
                ParentSet s;
                for (const auto& p : e.at("parents"))
                    s = s.with(index.resolve(p.get<std::string>(), 0));
                list.entries.push_back(
                    ScoreEntry{s, json_number(e.at("ll")), json_number(e.at("pen")), json_number(e.at("bic"))});
            }
            c.lists.push_back(std::move(list));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed json cache: ") + e.what());
    }
    return c;
}

} // namespace detail

/// jkl: a metadata comment, the variable count, then per variable a
/// "<name> <count>" header followed by "<bic> <p> <parent...>" lines with the
/// score printed to 6 decimals. csv and json carry ll/pen/bic at full
/// precision.
inline void write_cache(const ScoreCache& cache, std::ostream& out, CacheFormat format)
{
    switch (format) {
    case CacheFormat::jkl: detail::write_jkl(cache, out); break;
    case CacheFormat::csv: detail::write_csv(cache, out); break;
    case CacheFormat::json: detail::write_json(cache, out); break;
    }
}

inline void write_cache(const ScoreCache& cache, const std::filesystem::path& path, CacheFormat format)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot open '" + path.string() + "' for writing");
    write_cache(cache, out, format);
    out.flush();
    if (!out)
        throw Error("failed writing '" + path.string() + "'");
}

inline ScoreCache read_cache(std::istream& in, CacheFormat format)
{
    switch (format) {
    case CacheFormat::jkl: return detail::read_jkl(in);
    case CacheFormat::csv: return detail::read_csv_cache(in);
    default: return detail::read_json_cache(in);
    }
}

inline ScoreCache read_cache(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open '" + path.string() + "'");
    try {
        return read_cache(in, format_from_path(path));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

} // namespace bnprune
