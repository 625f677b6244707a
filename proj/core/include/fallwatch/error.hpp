#pragma once

#include <stdexcept>
#include <string>

namespace fallwatch {

// Error categories double as the CLI exit-code contract.
enum class ErrorKind {
    Config,     // bad path, bad option value
    Data,       // malformed input data, purity violations, empty sets
    Integrity,  // corrupt checkpoint or cache entry
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class IntegrityError : public Error {
public:
    explicit IntegrityError(const std::string& what) : Error(ErrorKind::Integrity, what) {}
};

/// Raised when a training stream would include frames labelled as falls.
class PurityError : public DataError {
public:
    explicit PurityError(const std::string& what) : DataError(what) {}
};

}  // namespace fallwatch
