#include "swarmrelax/first_order.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "swarmrelax/errors.hpp"

namespace swarmrelax {

namespace {

constexpr double kPi = std::numbers::pi;

// Velocity of every particle at the given positions, continuing each root from
// its seed. Updates seeds in place. Throws RootLostError on loss, excessive
// motion (relative to anchor), or an inadmissible branch.
std::vector<Vec2> stage_velocities(const FieldSystem& sys, const std::vector<Vec2>& xs,
                                   std::vector<double>& seeds,
                                   const std::vector<double>& anchor, const FOOptions& opts) {
    const int n = sys.size();
    std::vector<Vec2> v(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto f = sys.field(xs, i);
        const Root root = refine_root(*f, xs[static_cast<size_t>(i)],
                                      seeds[static_cast<size_t>(i)], opts.refine);
        if (angle_dist(root.theta, anchor[static_cast<size_t>(i)]) > opts.max_root_motion) {
            throw RootLostError("tracked root of particle " + std::to_string(i) +
                                " moved more than the per-step bound");
        }
        if (!root.admissible) {
            throw RootLostError("tracked root of particle " + std::to_string(i) +
                                " lost admissibility (R < 0)");
        }
        seeds[static_cast<size_t>(i)] = root.theta;
        v[static_cast<size_t>(i)] = std::max(0.0, root.R_value) * heading(root.theta);
    }
    return v;
}

// One classical Runge-Kutta step over h; commits into state only on success.
void attempt_fo_step(const FieldSystem& sys, FOState& state, double h, const FOOptions& opts) {
    const int n = sys.size();
    const std::vector<Vec2>& x0 = state.x;
    std::vector<double> anchor(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) anchor[static_cast<size_t>(i)] = state.branch[static_cast<size_t>(i)].theta;

    std::vector<double> seeds = anchor;
    const std::vector<Vec2> k1 = stage_velocities(sys, x0, seeds, anchor, opts);

    std::vector<Vec2> xs(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) xs[i] = x0[i] + 0.5 * h * k1[i];
    const std::vector<Vec2> k2 = stage_velocities(sys, xs, seeds, anchor, opts);

    for (int i = 0; i < n; ++i) xs[i] = x0[i] + 0.5 * h * k2[i];
    const std::vector<Vec2> k3 = stage_velocities(sys, xs, seeds, anchor, opts);

    for (int i = 0; i < n; ++i) xs[i] = x0[i] + h * k3[i];
    const std::vector<Vec2> k4 = stage_velocities(sys, xs, seeds, anchor, opts);

    for (int i = 0; i < n; ++i) {
        xs[i] = x0[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    std::vector<PolarVelocity> branch(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto f = sys.field(xs, i);
        const Root root = refine_root(*f, xs[static_cast<size_t>(i)],
                                      seeds[static_cast<size_t>(i)], opts.refine);
        if (angle_dist(root.theta, anchor[static_cast<size_t>(i)]) > opts.max_root_motion) {
            throw RootLostError("tracked root of particle " + std::to_string(i) +
                                " moved more than the per-step bound");
        }
        if (!root.admissible) {
            throw RootLostError("tracked root of particle " + std::to_string(i) +
                                " lost admissibility (R < 0)");
        }
        branch[static_cast<size_t>(i)] = {root.theta, std::max(0.0, root.R_value)};
    }
    state.x = std::move(xs);
    state.branch = std::move(branch);
    state.t += h;
}

// max |dH/dtheta| over a coarse angular grid, across all particles.
double slope_scale(const FieldSystem& sys, const FOState& state) {
    double scale = 0.0;
    for (int i = 0; i < sys.size(); ++i) {
        const auto f = sys.field(state.x, i);
        for (int k = 0; k < 256; ++k) {
            const double th = -kPi + 2.0 * kPi * k / 256;
            scale = std::max(scale, std::abs(f->dH_dtheta(state.x[static_cast<size_t>(i)], th)));
        }
    }
    return scale;
}

// Smallest |dH/dtheta| across the tracked roots, and which particle holds it.
std::pair<double, int> min_branch_slope(const FieldSystem& sys, const FOState& state) {
    double best = std::numeric_limits<double>::infinity();
    int who = 0;
    for (int i = 0; i < sys.size(); ++i) {
        const auto f = sys.field(state.x, i);
        const double s = std::abs(f->dH_dtheta(state.x[static_cast<size_t>(i)],
                                               state.branch[static_cast<size_t>(i)].theta));
        if (s < best) {
            best = s;
            who = i;
        }
    }
    return {best, who};
}

}  // namespace

FOState init_branch(const FieldSystem& sys, const std::vector<Vec2>& x0,
                    const std::vector<double>& theta_guess, const FOOptions& opts) {
    if (static_cast<int>(x0.size()) != sys.size() || x0.size() != theta_guess.size()) {
        throw std::invalid_argument("init_branch: positions/guesses must match the system size");
    }
    FOState st;
    st.t = 0.0;
    st.x = x0;
    st.branch.resize(x0.size());
    for (int i = 0; i < sys.size(); ++i) {
        const auto f = sys.field(st.x, i);
        const Root root = refine_root(*f, st.x[static_cast<size_t>(i)],
                                      theta_guess[static_cast<size_t>(i)], opts.refine);
        if (!root.admissible) {
            throw std::invalid_argument("init_branch: guess for particle " + std::to_string(i) +
                                        " lands on an inadmissible root (R < 0)");
        }
        st.branch[static_cast<size_t>(i)] = {root.theta, std::max(0.0, root.R_value)};
    }
    return st;
}

double step_fo(const FieldSystem& sys, FOState& state, double dt, const FOOptions& opts) {
    if (!(dt > 0.0)) throw std::invalid_argument("step_fo: dt must be positive");
    for (int lvl = 0;; ++lvl) {
        const double h = std::ldexp(dt, -lvl);
        try {
            attempt_fo_step(sys, state, h, opts);
            return h;
        } catch (const RootLostError&) {
            if (lvl >= opts.max_halvings) throw;
        }
    }
}

std::optional<BreakdownEvent> detect_breakdown(const FieldSystem& sys, FOState state, double dt,
                                               double t_max, const FOOptions& opts) {
    FOOptions o = opts;
    if (o.delta_dbl <= 0.0) o.delta_dbl = o.delta_dbl_rel * slope_scale(sys, state);
    o.refine.delta_dbl = o.delta_dbl;

    const auto triggered = [&](const FOState& s) { return min_branch_slope(sys, s).first < o.delta_dbl; };

    FOState lo = state;
    double hi_t = std::numeric_limits<double>::quiet_NaN();
    if (!triggered(lo)) {
        bool found = false;
        while (lo.t < t_max) {
            FOState trial = lo;
            try {
                step_fo(sys, trial, std::min(dt, t_max - lo.t), o);
            } catch (const RootLostError&) {
                // Even dt / 2^max_halvings failed from lo: the root dies
                // inside that sliver.
                hi_t = lo.t + std::ldexp(std::min(dt, t_max - lo.t), -o.max_halvings);
                found = true;
                break;
            }
            if (triggered(trial)) {
                hi_t = trial.t;
                found = true;
                break;
            }
            lo = std::move(trial);
        }
        if (!found) return std::nullopt;

        while (hi_t - lo.t > o.tol_time) {
            const double mid = 0.5 * (lo.t + hi_t);
            FOState trial = lo;
            bool bad;
            try {
                attempt_fo_step(sys, trial, mid - lo.t, o);
                bad = triggered(trial);
            } catch (const RootLostError&) {
                bad = true;
            }
            if (bad) {
                hi_t = mid;
            } else {
                lo = std::move(trial);
            }
        }
    }

    BreakdownEvent ev;
    ev.t_star = lo.t;
    ev.delta_dbl_used = o.delta_dbl;
    ev.particle = min_branch_slope(sys, lo).second;
    const auto f = sys.field(lo.x, ev.particle);
    const Vec2& xs = lo.x[static_cast<size_t>(ev.particle)];
    ev.theta_star = find_critical_point(*f, xs, lo.branch[static_cast<size_t>(ev.particle)].theta,
                                        0.5 * o.max_root_motion);
    ev.r_star = f->R(xs, ev.theta_star);
    // A* = grad_x(H/r) . v* with r frozen at r*; since v* = r* heading(theta*)
    // the speed cancels and the finite-difference gradient of H suffices.
    ev.A_star = fd_grad_x_H(*f, xs, ev.theta_star, o.fd_step_rel).dot(heading(ev.theta_star));
    ev.state = std::move(lo);
    if (!(ev.A_star > 0.0)) {
        ev.target_supported = false;
        ev.unsupported_reason = "A* <= 0: the fold profile is not rising along the motion";
        return ev;
    }
    try {
        RootScanOptions scan;
        scan.delta_dbl = o.delta_dbl;
        const RootSet set = scan_roots(*f, xs, scan);
        ev.theta_tilde = select_jump_target(*f, xs, set, ev.theta_star, +1);
        ev.target_supported = true;
    } catch (const NoJumpTargetError& e) {
        ev.target_supported = false;
        ev.unsupported_reason = e.what();
    }
    return ev;
}

FOState continue_through_jump(const FieldSystem& sys, const BreakdownEvent& event,
                              const FOOptions& opts) {
    if (!event.target_supported) {
        throw UnsupportedRegimeError("continue_through_jump: " +
                                     (event.unsupported_reason.empty()
                                          ? std::string("event target unsupported")
                                          : event.unsupported_reason));
    }
    FOState st = event.state;
    const auto f = sys.field(st.x, event.particle);
    const Root root = refine_root(*f, st.x[static_cast<size_t>(event.particle)],
                                  event.theta_tilde, opts.refine);
    if (!root.admissible || !(root.R_value > 0.0)) {
        throw UnsupportedRegimeError("continue_through_jump: jump target has nonpositive speed");
    }
    st.branch[static_cast<size_t>(event.particle)] = {root.theta, root.R_value};
    return st;
}

}  // namespace swarmrelax
