#pragma once

#include <stdexcept>
#include <string>

namespace hvm {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// A data structure was asked to do something its current state forbids
/// (occupied way, missing mapping, double map).
class StateError : public Error {
public:
    using Error::Error;
};

class OutOfMemoryError : public Error {
public:
    using Error::Error;
};

class TraceParseError : public Error {
public:
    TraceParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

}  // namespace hvm
