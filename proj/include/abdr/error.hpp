#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace abdr {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed text input. Row and column are 1-based; 0 means "not applicable".
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t row, std::size_t col)
        : Error(what), row_(row), col_(col) {}
    std::size_t row() const noexcept { return row_; }
    std::size_t col() const noexcept { return col_; }

private:
    std::size_t row_;
    std::size_t col_;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class ZeroColumnError : public Error {
public:
    ZeroColumnError(const std::string& what, std::ptrdiff_t column) : Error(what), column_(column) {}
    std::ptrdiff_t column() const noexcept { return column_; }

private:
    std::ptrdiff_t column_;
};

class NonFiniteError : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A solver iterate became non-finite.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, int iteration) : Error(what), iteration_(iteration) {}
    int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

/// Run configuration rejected; `field()` names the offending key.
class ConfigError : public Error {
public:
    ConfigError(const std::string& field, const std::string& reason)
        : Error(field + ": " + reason), field_(field) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace abdr
