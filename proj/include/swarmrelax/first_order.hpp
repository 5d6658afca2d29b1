#pragma once

#include <optional>
#include <string>
#include <vector>

#include "swarmrelax/roots.hpp"
#include "swarmrelax/system.hpp"

namespace swarmrelax {

struct FOOptions {
    RefineOptions refine;           // per-stage root continuation
    double max_root_motion = 0.2;   // per accepted step, radians
    int max_halvings = 25;          // dt halvings before declaring the root lost
    // |dH/dtheta| threshold that counts a tracked root as degenerate. <= 0:
    // resolved once at detection start as delta_dbl_rel * (max |dH| over a
    // 256-point grid per particle).
    double delta_dbl = 0.0;
    double delta_dbl_rel = 1e-5;
    double tol_time = 1e-10;   // breakdown time bisection width
    double fd_step_rel = 1e-6; // finite-difference step for A*, relative to field scale
};

// Positions plus the tracked velocity branch (root angle and its speed) of
// every particle.
struct FOState {
    double t = 0.0;
    std::vector<Vec2> x;
    std::vector<PolarVelocity> branch;
};

// Solves every particle's branch from the guesses and returns the initialized
// state. Each guess must converge under refine_root with nonnegative speed.
FOState init_branch(const FieldSystem& sys, const std::vector<Vec2>& x0,
                    const std::vector<double>& theta_guess, const FOOptions& opts = {});

// One Runge-Kutta step with per-stage root continuation. Halves dt (up to
// max_halvings) whenever a stage loses its root or the root moves farther than
// max_root_motion; returns the step actually taken. Throws RootLostError when
// even the smallest step fails.
double step_fo(const FieldSystem& sys, FOState& state, double dt, const FOOptions& opts = {});

struct BreakdownEvent {
    double t_star = 0.0;
    int particle = -1;
    double theta_star = 0.0;  // fold angle: critical point of H at x*
    double r_star = 0.0;      // R(x*, theta_star)
    double A_star = 0.0;      // d(H/r)/dx . v* by finite differences
    double theta_tilde = 0.0; // jump target (valid only when target_supported)
    double delta_dbl_used = 0.0; // resolved degeneracy threshold, for reports
    bool target_supported = false;
    std::string unsupported_reason;
    FOState state;            // full snapshot at t_star
    const Vec2& x_star() const { return state.x[static_cast<size_t>(particle)]; }
};

// Integrates until some tracked root degenerates (|dH| below the threshold)
// or disappears, bisects the event time to tol_time, and fills the fold data
// plus the jump target. Returns nullopt when nothing happens before t_max.
// A* <= 0 or failed target selection yields target_supported = false; the
// jump analysis covers only rising fold profiles.
std::optional<BreakdownEvent> detect_breakdown(const FieldSystem& sys, FOState state, double dt,
                                               double t_max, const FOOptions& opts = {});

// Restarts the model on the post-jump branch: the event particle's branch is
// reseated at theta_tilde. Throws UnsupportedRegimeError when the event's
// target is unsupported.
FOState continue_through_jump(const FieldSystem& sys, const BreakdownEvent& event,
                              const FOOptions& opts = {});

}  // namespace swarmrelax
