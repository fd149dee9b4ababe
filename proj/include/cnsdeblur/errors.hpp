#pragma once

#include <stdexcept>
#include <string>

namespace cnsdeblur {

enum class ErrorKind { input, consistency, numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Unreadable files, malformed arguments, bad synthesis specs.
class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error(ErrorKind::input, what) {}
};

// Shape mismatches and violated preconditions between arguments.
class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& what) : Error(ErrorKind::consistency, what) {}
};

class ContractError : public Error {
public:
    explicit ContractError(const std::string& what) : Error(ErrorKind::consistency, what) {}
};

class InsufficientDataError : public Error {
public:
    explicit InsufficientDataError(const std::string& what) : Error(ErrorKind::consistency, what) {}
};

class DegenerateError : public Error {
public:
    explicit DegenerateError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

inline int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::input: return 2;
    case ErrorKind::consistency: return 3;
    case ErrorKind::numerical: return 4;
    }
    return 1;
}

} // namespace cnsdeblur
