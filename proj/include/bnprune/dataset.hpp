#pragma once

#include "error.hpp"
#include "log_base.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace bnprune {

struct CsvOptions
{
    char delimiter = ',';
    bool header = true;
    // Fields equal to any of these are treated as missing values.
    std::vector<std::string> missing_markers = {"", "?", "NA"};
    // Keep single-valued columns (arity 1) instead of rejecting them.
    bool allow_constant = false;
};

/// Complete categorical data, stored column-major as dense category codes.
///
/// Codes are assigned per column in order of first appearance, and each
/// column's arity is its observed support unless raised by with_arities().
/// A Dataset never changes after construction.
class Dataset
{
public:
    using Code = std::uint32_t;

    // ParentSet is a 64-bit mask.
    static constexpr std::size_t max_variables = 64;

    Dataset() = default;

    /// Builds a dataset from arbitrary integer codes; every column is
    /// re-encoded in first-appearance order.
    static Dataset from_codes(std::vector<std::string> names,
                              const std::vector<std::vector<Code>>& columns,
                              bool allow_constant = false)
    {
        Dataset ds;
        ds.names_ = std::move(names);
        if (ds.names_.size() != columns.size())
            throw DataError("got " + std::to_string(ds.names_.size()) + " names for "
                            + std::to_string(columns.size()) + " columns");
        ds.rows_ = columns.empty() ? 0 : columns.front().size();
        ds.columns_.reserve(columns.size());
        for (const auto& raw : columns) {
            if (raw.size() != ds.rows_)
                throw DataError("columns have different lengths");
            std::unordered_map<Code, Code> codes;
            std::vector<Code> col;
            col.reserve(raw.size());
            for (Code v : raw) {
                auto [it, fresh] = codes.try_emplace(v, static_cast<Code>(codes.size()));
                col.push_back(it->second);
            }
            ds.arities_.push_back(codes.size());
            ds.columns_.push_back(std::move(col));
        }
        ds.validate(allow_constant);
        return ds;
    }

    std::size_t variables() const noexcept { return names_.size(); }
    std::size_t rows() const noexcept { return rows_; }

    const std::string& name(std::size_t var) const { return names_.at(var); }
    std::span<const std::string> names() const noexcept { return names_; }

    std::size_t arity(std::size_t var) const { return arities_.at(var); }
    std::span<const std::size_t> arities() const noexcept { return arities_; }

    std::span<const Code> column(std::size_t var) const { return columns_.at(var); }
    Code at(std::size_t row, std::size_t var) const { return columns_[var][row]; }

    std::optional<std::size_t> index_of(std::string_view name) const
    {
        auto it = std::find(names_.begin(), names_.end(), name);
        if (it == names_.end())
            return std::nullopt;
        return static_cast<std::size_t>(it - names_.begin());
    }

    /// Returns a copy whose arities are raised to the declared domain sizes.
    /// Lowering an arity below the observed support is an error.
    Dataset with_arities(const std::map<std::string, std::size_t>& overrides) const
    {
        Dataset out = *this;
        for (const auto& [var, arity] : overrides) {
            auto idx = index_of(var);
            if (!idx)
                throw DataError("arity override names unknown variable '" + var + "'");
            if (arity < arities_[*idx])
                throw DataError("arity override for '" + var + "' (" + std::to_string(arity)
                                + ") is below its observed support ("
                                + std::to_string(arities_[*idx]) + ")");
            out.arities_[*idx] = arity;
        }
        return out;
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    void validate(bool allow_constant) const
    {
        if (names_.size() < 2)
            throw DataError("need at least 2 variables, got " + std::to_string(names_.size()));
        if (names_.size() > max_variables)
            throw DataError("at most " + std::to_string(max_variables) + " variables are supported, got "
                            + std::to_string(names_.size()));
        if (rows_ < 2)
            throw DataError("need at least 2 rows, got " + std::to_string(rows_));
        for (std::size_t i = 0; i < names_.size(); ++i) {
            if (std::find(names_.begin(), names_.begin() + i, names_[i]) != names_.begin() + i)
                throw DataError("duplicate variable name '" + names_[i] + "'");
            if (arities_[i] < 2 && !allow_constant)
                throw DataError("column '" + names_[i]
                                + "' is constant (arity 1); pass --allow-constant to keep it");
        }
    }

    std::vector<std::string> names_;
    std::vector<std::size_t> arities_;
    std::vector<std::vector<Code>> columns_;
    std::size_t rows_ = 0;
};

namespace detail {

// Splits one CSV record; supports double-quoted fields with "" escapes.
inline std::vector<std::string> split_record(std::string_view line, char delim, std::size_t lineno)
{
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == delim) {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    if (quoted)
        throw ParseError("unterminated quoted field", lineno);
    fields.push_back(std::move(field));
    return fields;
}

} // namespace detail

inline Dataset parse_csv(std::istream& in, const CsvOptions& opts = {})
{
    std::vector<std::string> names;
    std::vector<std::vector<Dataset::Code>> columns;
    std::vector<std::unordered_map<std::string, Dataset::Code>> dictionaries;

    std::string line;
    std::size_t lineno = 0;
    bool have_width = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        auto fields = detail::split_record(line, opts.delimiter, lineno);
        if (!have_width) {
            have_width = true;
            columns.resize(fields.size());
            dictionaries.resize(fields.size());
            if (opts.header) {
                names = std::move(fields);
                continue;
            }
            for (std::size_t i = 0; i < fields.size(); ++i)
                names.push_back("X" + std::to_string(i));
        }
        if (fields.size() != names.size())
            throw ParseError("expected " + std::to_string(names.size()) + " fields, found "
                                 + std::to_string(fields.size()),
                             lineno);
        for (std::size_t i = 0; i < fields.size(); ++i) {
            const auto& v = fields[i];
            if (std::find(opts.missing_markers.begin(), opts.missing_markers.end(), v)
                != opts.missing_markers.end())
                throw ParseError("missing value in column '" + names[i]
                                     + "': incomplete data unsupported",
                                 lineno);
            auto& dict = dictionaries[i];
            auto [it, fresh] = dict.try_emplace(v, static_cast<Dataset::Code>(dict.size()));
            columns[i].push_back(it->second);
        }
    }
    return Dataset::from_codes(std::move(names), columns, opts.allow_constant);
}

inline Dataset load_csv(const std::filesystem::path& path, const CsvOptions& opts = {})
{
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open '" + path.string() + "'");
    try {
        return parse_csv(in, opts);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

/// Reads a sidecar of declared domain sizes: a JSON object {"name": arity}.
inline std::map<std::string, std::size_t> load_arity_overrides(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open '" + path.string() + "'");
    std::map<std::string, std::size_t> out;
    try {
        auto doc = nlohmann::json::parse(in);
        for (const auto& [k, v] : doc.items())
            out[k] = v.get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return out;
}

/// Marginal empirical entropy of every column, one O(N) pass each.
inline std::vector<double> column_entropy_all(const Dataset& ds, LogBase base)
{
    std::vector<double> out;
    out.reserve(ds.variables());
    const double n = static_cast<double>(ds.rows());
    std::vector<std::size_t> counts;
    for (std::size_t v = 0; v < ds.variables(); ++v) {
        counts.assign(ds.arity(v), 0);
        for (auto c : ds.column(v))
            ++counts[c];
        double h = 0.0;
        for (auto c : counts)
            if (c > 0) {
                double p = static_cast<double>(c) / n;
                h -= p * base.log(p);
            }
        out.push_back(h);
    }
    return out;
}

} // namespace bnprune
