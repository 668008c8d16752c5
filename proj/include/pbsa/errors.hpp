#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace pbsa {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class InvalidConfig : public Error {
public:
    using Error::Error;
};

// Broken precondition on a call (shape mismatch, non-positive sigma, ...).
class ContractViolation : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& path, std::size_t line, const std::string& what)
        : Error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class VersionError : public Error {
public:
    using Error::Error;
};

class IntegrityError : public Error {
public:
    using Error::Error;
};

class LookupError : public Error {
public:
    using Error::Error;
};

class MiningError : public Error {
public:
    MiningError(std::uint64_t sample_id, int step, const std::string& what)
        : Error("mining sample " + std::to_string(sample_id) + " diverged at step " +
                std::to_string(step) + ": " + what),
          step_(step) {}

    int step() const { return step_; }

private:
    int step_;
};

class TrainingError : public Error {
public:
    TrainingError(int epoch, int batch, const std::string& what)
        : Error("training failed at epoch " + std::to_string(epoch) + ", batch " +
                std::to_string(batch) + ": " + what),
          batch_(batch) {}

    int batch() const { return batch_; }

private:
    int batch_;
};

// A pipeline phase failed; carries the phase name and outer iteration.
class PhaseError : public Error {
public:
    PhaseError(const std::string& phase, int iteration, const std::string& what)
        : Error("phase '" + phase + "' (iteration " + std::to_string(iteration) + ") failed: " + what),
          phase_(phase),
          iteration_(iteration) {}

    const std::string& phase() const { return phase_; }
    int iteration() const { return iteration_; }

private:
    std::string phase_;
    int iteration_;
};

}  // namespace pbsa
