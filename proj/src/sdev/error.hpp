#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sdev {

// Base of every exception raised by the core. The C API maps the concrete
// type onto a status code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or invariant-violating input text. `line` is 1-based, 0 if unknown.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class VocabularyMismatch : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace sdev
