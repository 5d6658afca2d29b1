#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace swarmrelax {

// Failure of a numerical measurement (a run, not the program). The harness
// catches these and carries the row as failed; the CLI maps them to exit 1.
class SimError : public std::runtime_error {
public:
    SimError(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    // Stable machine-readable tag, used verbatim in report status columns.
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

// The tracked velocity branch ceased to exist (or Newton diverged off it).
class RootLostError : public SimError {
public:
    explicit RootLostError(const std::string& what) : SimError("root-lost", what) {}
};

// No admissible jump target beyond the degenerate angle in the escape direction.
class NoJumpTargetError : public SimError {
public:
    explicit NoJumpTargetError(const std::string& what) : SimError("no-jump-target", what) {}
};

// Speed variable fell to the hard floor; the polar form divides by r.
class SpeedCollapseError : public SimError {
public:
    SpeedCollapseError(const std::string& what, double t, double r)
        : SimError("speed-collapse", what), t_(t), r_(r) {}
    double t() const noexcept { return t_; }
    double r() const noexcept { return r_; }

private:
    double t_;
    double r_;
};

// Two interacting particles closer than the distance floor.
class DegenerateConfigError : public SimError {
public:
    explicit DegenerateConfigError(const std::string& what)
        : SimError("degenerate-config", what) {}
};

class StepBudgetError : public SimError {
public:
    explicit StepBudgetError(const std::string& what) : SimError("step-budget", what) {}
};

class FitDomainError : public SimError {
public:
    explicit FitDomainError(const std::string& what) : SimError("fit-domain", what) {}
};

// Request outside the regime the jump analysis covers (e.g. A* <= 0).
// Deliberately not a SimError: callers must not fold it into ordinary
// measurement failure. The CLI maps it to exit 3.
class UnsupportedRegimeError : public std::runtime_error {
public:
    explicit UnsupportedRegimeError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace swarmrelax
