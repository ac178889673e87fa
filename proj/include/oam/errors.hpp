#pragma once

#include <stdexcept>
#include <string>

namespace oam {

/// Base of every failure raised by the library. The CLI maps subclasses onto
/// process exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Precondition on an argument violated (bad parameter, bad mode set, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Iterative method or quadrature failed to reach its tolerance.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Sampling grid too coarse for the requested operation.
class ResolutionError : public Error {
public:
    using Error::Error;
};

/// Two routes that must agree did not (e.g. a Laplacian expectation value with
/// an imaginary part that the boundary flux does not account for).
class ConsistencyError : public Error {
public:
    using Error::Error;
};

class LookupError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class FitError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(std::string key, int line, const std::string& what)
        : Error(format(key, line, what)), key_(std::move(key)), line_(line) {}

    const std::string& key() const noexcept { return key_; }
    int line() const noexcept { return line_; }

private:
    static std::string format(const std::string& key, int line, const std::string& what) {
        std::string out = "config";
        if (line > 0) out += " line " + std::to_string(line);
        if (!key.empty()) out += " key '" + key + "'";
        return out + ": " + what;
    }

    std::string key_;
    int line_;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace oam
