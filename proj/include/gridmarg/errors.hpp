#pragma once

#include <stdexcept>
#include <string>

namespace gridmarg {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input problems. The CLI maps every InputError to exit code 1.
class InputError : public Error {
public:
    using Error::Error;
};

class ParseError : public InputError {
public:
    ParseError(const std::string& what, int line = 0)
        : InputError(line > 0 ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

class ValidationError : public InputError {
public:
    using InputError::InputError;
};

class MissingSeries : public InputError {
public:
    using InputError::InputError;
};

class ModelBuildError : public InputError {
public:
    using InputError::InputError;
};

class MissingCapacity : public InputError {
public:
    using InputError::InputError;
};

class UnknownZone : public InputError {
public:
    using InputError::InputError;
};

class DimensionMismatch : public InputError {
public:
    using InputError::InputError;
};

class InfeasibleWindow : public InputError {
public:
    using InputError::InputError;
};

class ScheduleMismatch : public InputError {
public:
    using InputError::InputError;
};

class NumericalFailure : public Error {
public:
    using Error::Error;
};

class ZeroDemand : public Error {
public:
    using Error::Error;
};

class DegenerateDelta : public Error {
public:
    using Error::Error;
};

class CostCapInfeasible : public Error {
public:
    using Error::Error;
};

class InfeasiblePerturbation : public Error {
public:
    using Error::Error;
};

}  // namespace gridmarg
