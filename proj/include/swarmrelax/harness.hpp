#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "swarmrelax/field.hpp"
#include "swarmrelax/first_order.hpp"
#include "swarmrelax/one_d.hpp"
#include "swarmrelax/relaxation.hpp"

namespace swarmrelax {

enum class Scenario { SyntheticRP, SyntheticRN, ParticleFixture, OneD };
enum class Mode { SingleMover, AllMoving };

std::string to_string(Scenario s);
std::string to_string(Mode m);

struct SweepSpec {
    Scenario scenario = Scenario::SyntheticRP;
    Mode mode = Mode::SingleMover;
    // Strictly decreasing, all positive.
    std::vector<double> eps_list = {1e-2, 3.1622776601683794e-3, 1e-3, 3.1622776601683794e-4,
                                    1e-4};
    double a1 = 1.0;
    double a2 = 1.0;
    double a3 = 1.0;
    std::uint64_t seed = 2026;
    int jobs = 1;
    int k = 1;  // one-d only
    int l = 1;  // one-d only
    RelaxOptions relax;
    OneDOptions oned;
    MilestoneParams milestones;
    // Synthetic scenarios build their field from this; empty selects the
    // scenario's stock profile (constant for RP, the dip profile for RN).
    std::optional<SyntheticParams> synthetic;
    // Kernel parameters for the particle fixture; empty keeps the frozen
    // fixture's own.
    std::optional<ModelParams> model;
    // One-d sweeps keep extending downward (factor 10^{1/2}, kappa >= 40,
    // floor 1e-7) until the fitted slope moves by < 0.02.
    bool auto_extend_1d = true;
};

struct RowResult {
    double epsilon = 0.0;
    bool ok = false;
    std::string status = "ok";  // SimError kind on failure
    double tau = 0.0;
    double final_dist = 0.0;
    double r_exc = 0.0;  // 2D scenarios only
    long long steps = 0;
    std::optional<Milestones> milestones;  // 2D scenarios only
};

struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;  // in log tau units
    double r_squared = 0.0;
    int n = 0;
};

// Where the tau clock starts and how sharply that origin is resolved.
struct TauOrigin {
    std::string kind;  // "constructed-crossing" or "bisected-breakdown"
    double tol_time = 0.0;
    double delta_dbl = 0.0;
};

struct ScalingResult {
    SweepSpec spec;
    std::vector<RowResult> rows;
    std::optional<FitResult> fit;  // empty when fewer than 3 rows succeeded
    std::string fit_status = "ok";
    double predicted_exponent = 0.0;
    TauOrigin tau_origin;
    std::string classification;  // speed-profile case for 2D scenarios
};

// Ordinary least squares of log tau on log eps. Throws FitDomainError on
// fewer than 3 points, non-positive coordinates, or a degenerate design
// (all abscissae equal).
FitResult fit_loglog(const std::vector<std::pair<double, double>>& points);

// Everything a 2D transition measurement needs, fixed across a sweep.
struct ScenarioSetup {
    TransitionProblem problem;
    std::string classification;
    TauOrigin origin;
    std::optional<BreakdownEvent> event;  // particle scenarios only
};

// Builds the transition problem from a breakdown event: the tracked particle
// starts exactly at the fold data, the rest on their branches. Throws
// UnsupportedRegimeError when the event's target is unsupported.
ScenarioSetup setup_from_event(std::shared_ptr<const FieldSystem> sys, const BreakdownEvent& event,
                               Mode mode, const TauOrigin& origin);

// Stock field parameters of the synthetic scenarios: constant speed profile
// for the positive case, the dip profile for the negative one.
SyntheticParams stock_synthetic_params(Scenario s);

// Scenario construction for the 2D scenarios (synthetic fields, or the
// frozen particle fixture taken through breakdown detection). Throws
// UnsupportedRegimeError for folds the analysis does not cover and SimError
// kinds for detection failures.
ScenarioSetup make_scenario_setup(const SweepSpec& spec);

// Runs one transition measurement per epsilon (concurrently up to
// spec.jobs), collects rows keyed by epsilon, and fits the scaling law.
// Per-row randomness derives from (spec.seed, row index), so results do not
// depend on the worker count. Failed rows carry their error kind and never
// abort the sweep.
ScalingResult run_sweep(const SweepSpec& spec);

// Writes <out_dir>/rows.csv, fit.json, plot.txt. Bytes are a pure function
// of `result`.
void emit_report(const ScalingResult& result, const std::string& out_dir);

}  // namespace swarmrelax
