#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace isinglab {

// Every failure raised by the library carries a stable kind tag so the CLI
// can print a machine-parsable "error: <kind>: <message>" line.
class Error : public std::runtime_error
{
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind))
    {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define ISINGLAB_DEFINE_ERROR(Name)                                        \
    class Name : public Error                                              \
    {                                                                      \
    public:                                                                \
        explicit Name(const std::string& what) : Error(#Name, what) {}    \
    }

ISINGLAB_DEFINE_ERROR(DimensionTooLarge);
ISINGLAB_DEFINE_ERROR(DimensionMismatch);
ISINGLAB_DEFINE_ERROR(NonFinite);
ISINGLAB_DEFINE_ERROR(IndexOutOfRange);
ISINGLAB_DEFINE_ERROR(NotPositiveDefinite);
ISINGLAB_DEFINE_ERROR(NonPositiveDefiniteInput);
ISINGLAB_DEFINE_ERROR(NotConverged);
ISINGLAB_DEFINE_ERROR(UnsupportedMethod);
ISINGLAB_DEFINE_ERROR(InvalidGrid);
ISINGLAB_DEFINE_ERROR(InvalidArgument);
ISINGLAB_DEFINE_ERROR(NoTrueEdges);
ISINGLAB_DEFINE_ERROR(DuplicateName);
ISINGLAB_DEFINE_ERROR(ConfigError);
ISINGLAB_DEFINE_ERROR(IoError);

#undef ISINGLAB_DEFINE_ERROR

class ConstantColumn : public Error
{
public:
    explicit ConstantColumn(std::size_t column)
        : Error("ConstantColumn",
                "variable " + std::to_string(column) + " has zero variance"),
          column_(column)
    {}

    std::size_t column() const noexcept { return column_; }

private:
    std::size_t column_;
};

// Errors tied to a position in an input file (1-based line and column).
class LocatedError : public Error
{
public:
    LocatedError(std::string kind, std::size_t line, std::size_t column,
                 const std::string& what)
        : Error(std::move(kind), "line " + std::to_string(line) + ", column " +
                                     std::to_string(column) + ": " + what),
          line_(line), column_(column)
    {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

class ParseError : public LocatedError
{
public:
    ParseError(std::size_t line, std::size_t column, const std::string& what)
        : LocatedError("ParseError", line, column, what)
    {}
};

class NonBinaryValue : public LocatedError
{
public:
    NonBinaryValue(std::size_t line, std::size_t column, const std::string& token)
        : LocatedError("NonBinaryValue", line, column,
                       "expected 0 or 1, got '" + token + "'")
    {}
};

} // namespace isinglab
