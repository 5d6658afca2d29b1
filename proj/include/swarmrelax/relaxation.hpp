#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "swarmrelax/first_order.hpp"
#include "swarmrelax/system.hpp"

namespace swarmrelax {

struct RelaxOptions {
    double dt_max = 1e-3;
    double kappa = 20.0;  // dt = min(dt_max, epsilon / kappa)
    // Hard floor for the speed variable; the polar equations divide by r, and
    // a crash here signals a hypothesis violation rather than a value to clamp.
    double r_floor = 1e-12;
    long long step_budget = 1000000000;
    int sample_stride = 1;  // trajectory recording period, in accepted steps
};

struct MilestoneParams {
    // Threshold factors for the four layer milestones on theta - theta*:
    // eps^{1/3}, alpha * eps^{1/6}, beta * (theta_tilde - theta*), and the
    // terminal window c_diag * eps^{2/3} around theta_tilde. alpha must
    // exceed eps^{1/6} for the first two thresholds to be ordered; 0.25
    // keeps them ordered down through eps = 2.4e-4.
    double alpha = 0.25;
    double beta = 0.1;
    // Expected escape-to-terminal duration exponent: interval IV lasts
    // O(eps^{1 - lambda}). Diagnostic only, never asserted.
    double lambda = 0.1;
    double c_diag = 1.0;
};

// State of the relaxation system. Angles are tracked continuously (never
// wrapped) so threshold crossings are well defined. Particles with
// mobile[i] == false keep (x, theta, r) fixed; the others see them as
// static scenery.
struct RelaxState {
    double t = 0.0;
    std::vector<Vec2> x;
    std::vector<double> theta;
    std::vector<double> r;
    std::vector<char> mobile;
};

// One classical Runge-Kutta step of the coupled system
//   dx/dt = r e(theta),  eps dtheta/dt = H / r,  eps dr/dt = -r + R,
// with per-stage field snapshots. Throws SpeedCollapseError if any stage
// evaluates a mobile particle at r <= r_floor.
void step_relax(const FieldSystem& sys, RelaxState& state, double epsilon, double dt,
                const RelaxOptions& opts = {});

struct TrajectorySample {
    double t;
    double theta;
    double r;
    double eta;  // (H(x, theta) - H(x*, theta)) / r at the sample
    double H;
    double R;
    Vec2 x;
};

// Stored trace of the tracked particle along one transition run.
struct Trajectory {
    int tracked = 0;
    std::vector<TrajectorySample> samples;
};

// A transition-layer measurement setup: the system, the state at breakdown,
// and the fold data of the tracked particle.
struct TransitionProblem {
    std::shared_ptr<const FieldSystem> system;
    RelaxState init;  // tracked particle sits at (x*, theta*, r*)
    int tracked = 0;
    Vec2 x_star = Vec2::Zero();
    double theta_star = 0.0;
    double theta_tilde = 0.0;
    double r_star = 0.0;
};

// One epsilon run: perturbation scales keep the initial data within
// |x0 - x*| <= a1 eps, |theta0 - theta*| <= a2 eps, |r0 - r*| <= a3 eps.
struct EpsRunSpec {
    double epsilon = 1e-3;
    double a1 = 1.0;
    double a2 = 1.0;
    double a3 = 1.0;
    std::uint64_t seed = 0;
    RelaxOptions relax;
};

struct TransitionOutcome {
    double tau = 0.0;         // first time |theta - theta_tilde| <= eps^{2/3}, interpolated
    double final_dist = 0.0;  // |theta - theta_tilde| at the first accepted step past the rule
    long long steps = 0;
    Trajectory trajectory;
};

// Perturbs the breakdown state per spec.seed and integrates with
// dt = min(dt_max, eps/kappa) until the terminal rule first holds. Throws
// SpeedCollapseError or StepBudgetError on measurement failure.
TransitionOutcome transition_time(const TransitionProblem& problem, const EpsRunSpec& spec);

struct Milestones {
    // Absolute thresholds on dir * (theta - theta*), in listed order.
    double thr_layer = 0.0;     // eps^{1/3}
    double thr_escape = 0.0;    // alpha * eps^{1/6}
    double thr_gap = 0.0;       // beta * |theta_tilde - theta*|
    double thr_terminal = 0.0;  // |theta_tilde - theta*| - c_diag * eps^{2/3}
    std::optional<double> t_layer, t_escape, t_gap, t_terminal;
    // Thresholds listed above fail to increase (e.g. alpha * eps^{1/6} below
    // eps^{1/3} at large eps): the four-interval picture is absent by
    // geometry at this epsilon. Crossing times are still recorded.
    bool degenerate_geometry = false;
    bool ordered = false;          // all four present, geometry fine, times nondecreasing
    double interval4 = 0.0;        // t_terminal - t_gap when both present, else NaN
    double lambda_used = 0.0;      // echoed for the interval-IV diagnostic
};

// First-crossing times of the four layer thresholds, scanned from the stored
// trajectory with linear interpolation between samples.
Milestones interval_milestones(const Trajectory& traj, double theta_star, double theta_tilde,
                               double epsilon, const MilestoneParams& params = {});

// Sup over the trajectory of |r(t) - r_star|.
double r_excursion(const Trajectory& traj, double r_star);

// Max position gap, over all particles and times in [0, T], between the
// first-order trajectory from `start` and the relaxation trajectory started
// on the same branch (theta at the tracked root, r = R there). Compared on a
// shared grid of `grid_n` intervals.
double branch_gap(const FieldSystem& sys, const FOState& start, double T, double epsilon,
                  int grid_n = 512, const FOOptions& fo_opts = {},
                  const RelaxOptions& relax_opts = {});

}  // namespace swarmrelax
