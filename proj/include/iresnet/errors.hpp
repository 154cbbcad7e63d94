#pragma once

#include <stdexcept>
#include <string>

namespace iresnet {

// Base class for every error thrown by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimMismatch : Error {
    explicit DimMismatch(const std::string& msg) : Error("dimension mismatch: " + msg) {}
};

struct NotSymmetric : Error {
    explicit NotSymmetric(const std::string& msg) : Error("matrix not symmetric: " + msg) {}
};

struct NoConvergence : Error {
    explicit NoConvergence(const std::string& msg) : Error("no convergence: " + msg) {}
};

struct ZeroOperator : Error {
    explicit ZeroOperator(const std::string& msg) : Error("zero operator: " + msg) {}
};

struct BudgetNotContractive : Error {
    explicit BudgetNotContractive(const std::string& msg)
        : Error("Lipschitz budget not contractive: " + msg) {}
};

struct DegenerateMode : Error {
    explicit DegenerateMode(const std::string& msg) : Error("degenerate mode: " + msg) {}
};

struct DatasetAssumptionViolated : Error {
    explicit DatasetAssumptionViolated(const std::string& msg)
        : Error("dataset assumption violated: " + msg) {}
};

struct NonFiniteLoss : Error {
    explicit NonFiniteLoss(const std::string& msg) : Error("non-finite loss: " + msg) {}
};

struct DegenerateGrid : Error {
    explicit DegenerateGrid(const std::string& msg) : Error("degenerate grid: " + msg) {}
};

struct TooFewSamples : Error {
    explicit TooFewSamples(const std::string& msg) : Error("too few samples: " + msg) {}
};

struct BadMagic : Error {
    explicit BadMagic(const std::string& msg) : Error("bad magic number: " + msg) {}
};

struct TruncatedFile : Error {
    explicit TruncatedFile(const std::string& msg) : Error("truncated file: " + msg) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error("config error: " + msg) {}
};

}  // namespace iresnet
