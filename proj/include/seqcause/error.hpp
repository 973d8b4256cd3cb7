#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace seqcause {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A malformed input row. `row` is 1-based over data rows (header excluded).
class ParseError : public Error {
public:
    ParseError(std::size_t row, const std::string& what)
        : Error("row " + std::to_string(row) + ": " + what), row_(row) {}

    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class EmptyDatasetError : public Error {
public:
    EmptyDatasetError() : Error("dataset is empty") {}
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// An event label or index that is not part of the catalog.
class CatalogError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    InsufficientDataError(std::size_t have, std::size_t required)
        : Error("insufficient data: " + std::to_string(have) + " rows, at least " +
                std::to_string(required) + " required"),
          have_(have), required_(required) {}

    std::size_t have() const noexcept { return have_; }
    std::size_t required() const noexcept { return required_; }

private:
    std::size_t have_;
    std::size_t required_;
};

class NumericError : public Error {
public:
    using Error::Error;
};

/// Raised when a graph that must be acyclic is not.
class CycleError : public Error {
public:
    CycleError(std::size_t src, std::size_t dst)
        : Error("graph has a cycle through edge " + std::to_string(src) + "->" +
                std::to_string(dst)),
          src_(src), dst_(dst) {}

    std::size_t src() const noexcept { return src_; }
    std::size_t dst() const noexcept { return dst_; }

private:
    std::size_t src_;
    std::size_t dst_;
};

}  // namespace seqcause
