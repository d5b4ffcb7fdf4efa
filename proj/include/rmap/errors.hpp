#pragma once

#include <stdexcept>
#include <string>

namespace rmap {

// Base class for every error the toolkit raises on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Expression layer.
class SyntaxError : public Error {
public:
    SyntaxError(const std::string& msg, std::size_t position)
        : Error(msg + " (at position " + std::to_string(position) + ")"),
          position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

class UnknownSymbol : public Error {
public:
    using Error::Error;
};

class ArityError : public Error {
public:
    using Error::Error;
};

class EvalError : public Error {
public:
    using Error::Error;
};

// Geometry layer.
class DegenerateMetric : public Error {
public:
    using Error::Error;
};

class StepError : public Error {
public:
    using Error::Error;
};

class OddDimension : public Error {
public:
    using Error::Error;
};

// Decomposition layer.
class VariableRank : public Error {
public:
    using Error::Error;
};

class RankTolAmbiguous : public Error {
public:
    using Error::Error;
};

class NotVertical : public Error {
public:
    using Error::Error;
};

class NotHorizontal : public Error {
public:
    using Error::Error;
};

class NotInBundle : public Error {
public:
    using Error::Error;
};

class DecompositionResidual : public Error {
public:
    using Error::Error;
};

class NoFibers : public Error {
public:
    using Error::Error;
};

// Scenario / IO layer.
class SchemaError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class DegenerateStart : public Error {
public:
    using Error::Error;
};

} // namespace rmap
