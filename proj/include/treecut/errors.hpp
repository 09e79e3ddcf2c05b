#ifndef TREECUT_ERRORS_HPP
#define TREECUT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace treecut {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or inconsistent input data (bad config, invariant violation).
class InvalidInput : public Error {
public:
    explicit InvalidInput(const std::string& msg) : Error(msg) {}
};

/// File parsing / schema errors, with file and field context in the message.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

/// Numerical failure during a solve (iteration limit, NaN loss, ...).
class SolveError : public Error {
public:
    explicit SolveError(const std::string& msg) : Error(msg) {}
};

} // namespace treecut

#endif
