#pragma once

#include <stdexcept>
#include <string>

namespace deephedge {

// All library failures derive from Error so callers can map them to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Model or configuration value outside its admissible domain.
class ParameterError : public Error {
public:
    using Error::Error;
};

class EmptyInputError : public Error {
public:
    using Error::Error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

// Mismatched series lengths or tensor shapes.
class ShapeError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Variance of fewer than two samples.
class DegenerateBatchError : public Error {
public:
    using Error::Error;
};

// Non-finite values in inputs, losses or gradients.
class NumericError : public Error {
public:
    using Error::Error;
};

class DivergenceError : public NumericError {
public:
    DivergenceError(const std::string& what, long step)
        : NumericError(what + " at step " + std::to_string(step)), step_(step) {}

    long step() const noexcept { return step_; }

private:
    long step_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace deephedge
