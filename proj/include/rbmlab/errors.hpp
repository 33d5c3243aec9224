#pragma once

#include <stdexcept>
#include <string>

namespace rbmlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unknown preset or study name.
class NameError : public Error {
public:
    using Error::Error;
};

/// Invalid parameters or inconsistent configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A trajectory produced a non-finite value or left the admissible box.
class NumericalBlowup : public Error {
public:
    NumericalBlowup(std::size_t particle, double time, const std::string& what)
        : Error("numerical blowup at particle " + std::to_string(particle) + ", t=" +
                std::to_string(time) + ": " + what),
          particle_(particle), time_(time) {}

    std::size_t particle() const noexcept { return particle_; }
    double time() const noexcept { return time_; }

private:
    std::size_t particle_;
    double time_;
};

/// Operation requires a model family it was not given (e.g. closed forms for linear models).
class UnsupportedModel : public Error {
public:
    using Error::Error;
};

/// An iteration did not reach its tolerance within the step budget.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Explicit time step exceeds the positivity/stability bound.
class StabilityError : public Error {
public:
    StabilityError(double requested, double admissible)
        : Error("time step " + std::to_string(requested) + " exceeds admissible " +
                std::to_string(admissible)),
          admissible_(admissible) {}

    double admissible_dt() const noexcept { return admissible_; }

private:
    double admissible_;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

/// Problem instance exceeds an exact method's size cap.
class SizeError : public Error {
public:
    using Error::Error;
};

/// Monte-Carlo noise floor too high relative to the signal being measured.
class FloorError : public Error {
public:
    FloorError(const std::string& what, std::size_t recommended_m)
        : Error(what + " (recommended M >= " + std::to_string(recommended_m) + ")"),
          recommended_(recommended_m) {}

    std::size_t recommended_m() const noexcept { return recommended_; }

private:
    std::size_t recommended_;
};

}  // namespace rbmlab
