#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace popdiff {

/// Base of every error raised by the library. `kind()` is a stable
/// machine-readable tag used by the CLI's structured error output.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

struct DomainError : Error {
    explicit DomainError(const std::string& w) : Error("domain", w) {}
};

struct InvalidParameter : Error {
    explicit InvalidParameter(const std::string& w) : Error("invalid-parameter", w) {}
};

/// The density has (numerically) left its support box or fallen below the
/// lower bound required of the Galerkin weights. Optimizers backtrack on it.
struct DegenerateDensity : Error {
    explicit DegenerateDensity(const std::string& w) : Error("degenerate-density", w) {}
};

struct SingularOperator : Error {
    explicit SingularOperator(const std::string& w) : Error("singular-operator", w) {}
};

struct ConditioningError : Error {
    explicit ConditioningError(const std::string& w) : Error("conditioning", w) {}
};

struct SimulationDivergence : Error {
    explicit SimulationDivergence(const std::string& w) : Error("simulation-divergence", w) {}
};

struct ParseError : Error {
    explicit ParseError(const std::string& w) : Error("parse", w) {}
};

struct IngestionError : Error {
    explicit IngestionError(const std::string& w) : Error("ingestion", w) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error("config", w) {}
};

}  // namespace popdiff
