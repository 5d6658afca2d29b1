#include "swarmrelax/relaxation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "swarmrelax/errors.hpp"
#include "swarmrelax/rng.hpp"

namespace swarmrelax {

namespace {

struct Deriv {
    std::vector<Vec2> dx;
    std::vector<double> dtheta;
    std::vector<double> dr;
};

// Derivatives of the coupled system at a stage snapshot. Frozen particles
// contribute zero; every mobile particle's field is rebuilt from the snapshot.
Deriv eval_deriv(const FieldSystem& sys, const std::vector<Vec2>& xs,
                 const std::vector<double>& ths, const std::vector<double>& rs,
                 const std::vector<char>& mobile, double epsilon, double r_floor,
                 double t_report) {
    const int n = sys.size();
    Deriv d;
    d.dx.assign(static_cast<size_t>(n), Vec2::Zero());
    d.dtheta.assign(static_cast<size_t>(n), 0.0);
    d.dr.assign(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        const auto k = static_cast<size_t>(i);
        if (!mobile[k]) continue;
        if (!(rs[k] > r_floor)) {
            throw SpeedCollapseError("speed of particle " + std::to_string(i) +
                                         " fell to the floor during a stage evaluation",
                                     t_report, rs[k]);
        }
        const auto f = sys.field(xs, i);
        const double H = f->H(xs[k], ths[k]);
        const double R = f->R(xs[k], ths[k]);
        d.dx[k] = rs[k] * heading(ths[k]);
        d.dtheta[k] = H / (epsilon * rs[k]);
        d.dr[k] = (R - rs[k]) / epsilon;
    }
    return d;
}

void validate_state(const FieldSystem& sys, const RelaxState& state) {
    const auto n = static_cast<size_t>(sys.size());
    if (state.x.size() != n || state.theta.size() != n || state.r.size() != n ||
        state.mobile.size() != n) {
        throw std::invalid_argument("relaxation state arrays must match the system size");
    }
}

// First time the piecewise-linear signal s(t) through the samples reaches
// `threshold` from below. Samples are (t, s) pairs in time order.
std::optional<double> first_crossing(const std::vector<TrajectorySample>& samples,
                                     double dir, double theta_star, double threshold) {
    if (samples.empty()) return std::nullopt;
    double s_prev = dir * (samples.front().theta - theta_star);
    if (s_prev >= threshold) return samples.front().t;
    for (size_t k = 1; k < samples.size(); ++k) {
        const double s = dir * (samples[k].theta - theta_star);
        if (s >= threshold) {
            const double t0 = samples[k - 1].t;
            const double t1 = samples[k].t;
            const double w = (threshold - s_prev) / (s - s_prev);
            return t0 + w * (t1 - t0);
        }
        s_prev = s;
    }
    return std::nullopt;
}

}  // namespace

void step_relax(const FieldSystem& sys, RelaxState& state, double epsilon, double dt,
                const RelaxOptions& opts) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("step_relax: epsilon must be positive");
    if (!(dt > 0.0)) throw std::invalid_argument("step_relax: dt must be positive");
    validate_state(sys, state);
    const auto n = static_cast<size_t>(sys.size());

    std::vector<Vec2> xs(n);
    std::vector<double> ths(n), rs(n);
    const auto place = [&](double h, const Deriv& d) {
        for (size_t k = 0; k < n; ++k) {
            xs[k] = state.x[k] + h * d.dx[k];
            ths[k] = state.theta[k] + h * d.dtheta[k];
            rs[k] = state.r[k] + h * d.dr[k];
        }
    };

    const Deriv k1 =
        eval_deriv(sys, state.x, state.theta, state.r, state.mobile, epsilon, opts.r_floor, state.t);
    place(0.5 * dt, k1);
    const Deriv k2 = eval_deriv(sys, xs, ths, rs, state.mobile, epsilon, opts.r_floor, state.t);
    place(0.5 * dt, k2);
    const Deriv k3 = eval_deriv(sys, xs, ths, rs, state.mobile, epsilon, opts.r_floor, state.t);
    place(dt, k3);
    const Deriv k4 = eval_deriv(sys, xs, ths, rs, state.mobile, epsilon, opts.r_floor, state.t);

    for (size_t k = 0; k < n; ++k) {
        state.x[k] += (dt / 6.0) * (k1.dx[k] + 2.0 * k2.dx[k] + 2.0 * k3.dx[k] + k4.dx[k]);
        state.theta[k] +=
            (dt / 6.0) * (k1.dtheta[k] + 2.0 * k2.dtheta[k] + 2.0 * k3.dtheta[k] + k4.dtheta[k]);
        state.r[k] += (dt / 6.0) * (k1.dr[k] + 2.0 * k2.dr[k] + 2.0 * k3.dr[k] + k4.dr[k]);
        if (state.mobile[k] && !(state.r[k] > opts.r_floor)) {
            throw SpeedCollapseError("speed of particle " + std::to_string(k) +
                                         " fell to the floor after a step",
                                     state.t + dt, state.r[k]);
        }
    }
    state.t += dt;
}

TransitionOutcome transition_time(const TransitionProblem& problem, const EpsRunSpec& spec) {
    if (!problem.system) throw std::invalid_argument("transition_time: missing system");
    if (!(spec.epsilon > 0.0)) throw std::invalid_argument("transition_time: epsilon must be positive");
    const auto& sys = *problem.system;
    validate_state(sys, problem.init);
    const auto tr = static_cast<size_t>(problem.tracked);
    if (problem.tracked < 0 || problem.tracked >= sys.size() || !problem.init.mobile[tr]) {
        throw std::invalid_argument("transition_time: tracked particle must be mobile");
    }
    const double gap = problem.theta_tilde - problem.theta_star;
    if (gap == 0.0) throw std::invalid_argument("transition_time: theta_tilde equals theta_star");
    const double dir = gap > 0.0 ? 1.0 : -1.0;

    const double eps = spec.epsilon;
    RelaxState st = problem.init;

    // Perturbation within the stated balls: position offset of radius a1*eps
    // in a uniform direction, angle and speed offsets uniform in +-a_i*eps.
    auto rng = make_rng(spec.seed);
    std::uniform_real_distribution<double> u_angle(-std::numbers::pi, std::numbers::pi);
    std::uniform_real_distribution<double> u_sym(-1.0, 1.0);
    const double phi = u_angle(rng);
    st.x[tr] += spec.a1 * eps * Vec2(std::cos(phi), std::sin(phi));
    st.theta[tr] += spec.a2 * eps * u_sym(rng);
    st.r[tr] += spec.a3 * eps * u_sym(rng);

    const double dt = std::min(spec.relax.dt_max, eps / spec.relax.kappa);
    const double window = std::pow(eps, 2.0 / 3.0);

    TransitionOutcome out;
    out.trajectory.tracked = problem.tracked;
    const auto record = [&] {
        TrajectorySample s;
        s.t = st.t;
        s.theta = st.theta[tr];
        s.r = st.r[tr];
        const auto f = sys.field(st.x, problem.tracked);
        s.H = f->H(st.x[tr], st.theta[tr]);
        s.R = f->R(st.x[tr], st.theta[tr]);
        s.eta = (s.H - f->H(problem.x_star, st.theta[tr])) / st.r[tr];
        s.x = st.x[tr];
        out.trajectory.samples.push_back(s);
    };
    record();

    double d_prev = dir * (problem.theta_tilde - st.theta[tr]);
    if (std::abs(d_prev) <= window) {
        out.tau = 0.0;
        out.final_dist = std::abs(d_prev);
        return out;
    }
    for (;;) {
        if (out.steps >= spec.relax.step_budget) {
            throw StepBudgetError("transition run exceeded " +
                                  std::to_string(spec.relax.step_budget) + " steps at eps=" +
                                  std::to_string(eps));
        }
        const double t_before = st.t;
        step_relax(sys, st, eps, dt, spec.relax);
        ++out.steps;
        if (out.steps % spec.relax.sample_stride == 0) record();
        const double d = dir * (problem.theta_tilde - st.theta[tr]);
        if (std::abs(d) <= window) {
            if (out.steps % spec.relax.sample_stride != 0) record();
            // Linear interpolation of the first |theta - theta_tilde| <= eps^{2/3}
            // crossing inside the last step. Approach is from d_prev > window.
            const double w = (d_prev - window) / (d_prev - d);
            out.tau = t_before + w * (st.t - t_before);
            out.final_dist = std::abs(d);
            return out;
        }
        d_prev = d;
    }
}

Milestones interval_milestones(const Trajectory& traj, double theta_star, double theta_tilde,
                               double epsilon, const MilestoneParams& params) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("interval_milestones: epsilon must be positive");
    const double gap = theta_tilde - theta_star;
    if (gap == 0.0) throw std::invalid_argument("interval_milestones: zero fold-to-target gap");
    const double dir = gap > 0.0 ? 1.0 : -1.0;
    const double agap = std::abs(gap);

    Milestones m;
    m.thr_layer = std::cbrt(epsilon);
    m.thr_escape = params.alpha * std::pow(epsilon, 1.0 / 6.0);
    m.thr_gap = params.beta * agap;
    m.thr_terminal = agap - params.c_diag * std::pow(epsilon, 2.0 / 3.0);
    m.lambda_used = params.lambda;

    m.degenerate_geometry = !(m.thr_layer < m.thr_escape && m.thr_escape < m.thr_gap &&
                              m.thr_gap < m.thr_terminal && m.thr_terminal > 0.0);

    m.t_layer = first_crossing(traj.samples, dir, theta_star, m.thr_layer);
    m.t_escape = first_crossing(traj.samples, dir, theta_star, m.thr_escape);
    m.t_gap = first_crossing(traj.samples, dir, theta_star, m.thr_gap);
    m.t_terminal = first_crossing(traj.samples, dir, theta_star, m.thr_terminal);

    const bool all = m.t_layer && m.t_escape && m.t_gap && m.t_terminal;
    m.ordered = all && !m.degenerate_geometry && *m.t_layer <= *m.t_escape &&
                *m.t_escape <= *m.t_gap && *m.t_gap <= *m.t_terminal;
    m.interval4 = (m.t_gap && m.t_terminal) ? *m.t_terminal - *m.t_gap
                                            : std::numeric_limits<double>::quiet_NaN();
    return m;
}

double r_excursion(const Trajectory& traj, double r_star) {
    double sup = 0.0;
    for (const auto& s : traj.samples) sup = std::max(sup, std::abs(s.r - r_star));
    return sup;
}

double branch_gap(const FieldSystem& sys, const FOState& start, double T, double epsilon,
                  int grid_n, const FOOptions& fo_opts, const RelaxOptions& relax_opts) {
    if (!(T > 0.0) || grid_n < 1) throw std::invalid_argument("branch_gap: bad grid");
    const auto n = static_cast<size_t>(sys.size());

    FOState fo = start;
    RelaxState rx;
    rx.t = start.t;
    rx.x = start.x;
    rx.theta.resize(n);
    rx.r.resize(n);
    rx.mobile.assign(n, 1);
    for (size_t k = 0; k < n; ++k) {
        rx.theta[k] = start.branch[k].theta;
        rx.r[k] = start.branch[k].r;
    }

    const double dt_grid = T / grid_n;
    const double dt_fast = std::min(relax_opts.dt_max, epsilon / relax_opts.kappa);
    const int sub = std::max(1, static_cast<int>(std::ceil(dt_grid / dt_fast)));
    const double dt_rx = dt_grid / sub;

    double gap = 0.0;
    for (int g = 0; g < grid_n; ++g) {
        double remaining = dt_grid;
        while (remaining > 1e-15 * T) {
            remaining -= step_fo(sys, fo, remaining, fo_opts);
        }
        for (int s = 0; s < sub; ++s) step_relax(sys, rx, epsilon, dt_rx, relax_opts);
        for (size_t k = 0; k < n; ++k) {
            gap = std::max(gap, (fo.x[k] - rx.x[k]).norm());
        }
    }
    return gap;
}

}  // namespace swarmrelax
