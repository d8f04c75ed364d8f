#pragma once

#include <stdexcept>
#include <string>

namespace igrate {

// Error categories map onto CLI exit codes: config 2, data 3, convergence 4.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 1; }
};

class ConfigError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

class DataError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

// Raised for out-of-range arguments to numeric routines (e.g. a PMC above 10).
class DomainError : public DataError {
public:
    using DataError::DataError;
};

class CollinearityError : public DataError {
public:
    using DataError::DataError;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
};

// Wraps an error with the pipeline stage it came from and a remediation hint.
class StageError : public Error {
public:
    StageError(std::string stage, const Error& cause, std::string hint);
    int exit_code() const noexcept override { return code_; }
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
    int code_;
};

}  // namespace igrate
