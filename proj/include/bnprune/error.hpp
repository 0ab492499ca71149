#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bnprune {

class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Malformed or unsupported input data (CSV, cache files, sidecars).
class DataError : public Error
{
public:
    using Error::Error;
};

class ParseError : public DataError
{
public:
    ParseError(const std::string& what, std::size_t line)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line)
    {
    }

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// The oracle refuses instances whose lattice exceeds its evaluation budget.
class BudgetExceeded : public Error
{
public:
    using Error::Error;
};

} // namespace bnprune
