#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mggan {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shape disagreement between operands.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Input outside the mathematical domain of an op (e.g. log of a non-positive value).
class DomainError : public Error {
public:
    using Error::Error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

// An op produced NaN or Inf.
class NumericError : public Error {
public:
    using Error::Error;
};

class TrainingFailure : public Error {
public:
    TrainingFailure(const std::string& what, std::int64_t step, std::vector<double> history = {})
        : Error(what), step_(step), history_(std::move(history)) {}

    std::int64_t step() const { return step_; }
    const std::vector<double>& history() const { return history_; }

private:
    std::int64_t step_;
    std::vector<double> history_;
};

class CheckpointError : public Error {
public:
    using Error::Error;
};

class CheckpointMagicError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};

class CheckpointVersionError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};

class CheckpointTruncatedError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};

class UnknownTensorError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};

class IdxError : public Error {
public:
    using Error::Error;
};

class IdxMagicError : public IdxError {
public:
    using IdxError::IdxError;
};

class IdxTruncatedError : public IdxError {
public:
    using IdxError::IdxError;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line = 0, std::string key = {})
        : Error(what), line_(line), key_(std::move(key)) {}

    int line() const { return line_; }
    const std::string& key() const { return key_; }

private:
    int line_;
    std::string key_;
};

} // namespace mggan
