#include "swarmrelax/one_d.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "swarmrelax/errors.hpp"
#include "swarmrelax/rng.hpp"

namespace swarmrelax {

namespace {

double ipow(double b, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
}

// Doubling order of f near 0: log2 of f(d)/f(d/2) should approach the local
// power. Returns the estimate at the finer pair.
double doubling_order(const std::function<double(double)>& f, double d) {
    const double f0 = f(d);
    const double f1 = f(0.5 * d);
    if (f1 == 0.0) throw std::invalid_argument("doubling_order: vanishing sample");
    return std::log2(std::abs(f0 / f1));
}

}  // namespace

OneDField::OneDField(const OneDParams& params) : p_(params) {
    if (p_.k < 1 || p_.l < 1) throw std::invalid_argument("k and l must be >= 1");
    if (!(p_.v_star < p_.v_tilde)) throw std::invalid_argument("v* must lie below v_tilde");
    if (!p_.h_fn && !(p_.h0 > 0.0)) throw std::invalid_argument("constant h must be positive");

    const double span = p_.v_tilde - p_.v_star;
    for (int i = 0; i <= 32; ++i) {
        const double v = p_.v_star + span * i / 32.0;
        if (!(h(v) > 0.0)) throw std::invalid_argument("h must be positive on [v*, v_tilde]");
    }
    if (F(p_.x_star, p_.v_star) != 0.0 || F(p_.x_star, p_.v_tilde) != 0.0) {
        throw std::invalid_argument("forcing must vanish exactly at v* and v_tilde");
    }
    for (int i = 1; i < 16; ++i) {
        const double v = p_.v_star + span * i / 16.0;
        if (!(F(p_.x_star, v) > 0.0)) {
            throw std::invalid_argument("forcing must be positive strictly between v* and v_tilde");
        }
    }
    // Local orders at the two roots, recovered from doubling ratios of the
    // uncoupled forcing. 0.05 absolute slack absorbs the smooth prefactors.
    const double d = 1e-3 * span;
    const auto at_star = [&](double dd) { return F(p_.x_star, p_.v_star + dd); };
    const auto at_tilde = [&](double dd) { return F(p_.x_star, p_.v_tilde + dd); };
    if (std::abs(doubling_order(at_star, d) - 2.0 * p_.k) > 0.05) {
        throw std::invalid_argument("forcing does not vanish to order 2k at v*");
    }
    if (std::abs(doubling_order(at_tilde, d) - (2.0 * p_.l - 1.0)) > 0.05) {
        throw std::invalid_argument("forcing does not vanish to order 2l-1 at v_tilde");
    }
}

double OneDField::F(double x, double v) const {
    return -h(v) * ipow(v - p_.v_star, 2 * p_.k) * ipow(v - p_.v_tilde, 2 * p_.l - 1) +
           p_.mu * (x - p_.x_star);
}

double OneDField::h(double v) const { return p_.h_fn ? p_.h_fn(v) : p_.h0; }

void step_1d(const OneDField& field, OneDState& state, double epsilon, double dt) {
    if (!(epsilon > 0.0) || !(dt > 0.0)) {
        throw std::invalid_argument("step_1d: epsilon and dt must be positive");
    }
    const auto fx = [](const OneDState& s) { return s.v; };
    const auto fv = [&](const OneDState& s) { return field.F(s.x, s.v) / epsilon; };

    const OneDState s0 = state;
    OneDState s;
    const double kx1 = fx(s0), kv1 = fv(s0);
    s = {s0.t, s0.x + 0.5 * dt * kx1, s0.v + 0.5 * dt * kv1};
    const double kx2 = fx(s), kv2 = fv(s);
    s = {s0.t, s0.x + 0.5 * dt * kx2, s0.v + 0.5 * dt * kv2};
    const double kx3 = fx(s), kv3 = fv(s);
    s = {s0.t, s0.x + dt * kx3, s0.v + dt * kv3};
    const double kx4 = fx(s), kv4 = fv(s);

    state.x += (dt / 6.0) * (kx1 + 2.0 * kx2 + 2.0 * kx3 + kx4);
    state.v += (dt / 6.0) * (kv1 + 2.0 * kv2 + 2.0 * kv3 + kv4);
    state.t += dt;
}

OneDExponents predicted_exponents(int k, int l) {
    if (k < 1 || l < 1) throw std::invalid_argument("predicted_exponents: k and l must be >= 1");
    OneDExponents e;
    e.time_exp = 2.0 * k / (4.0 * k - 1.0);
    e.nu = (l == 1) ? e.time_exp : (2.0 * k - 1.0) / ((4.0 * k - 1.0) * (2.0 * l - 1.0));
    return e;
}

OneDOutcome transition_measure_1d(const OneDField& field, double epsilon, double a1, double a2,
                                  std::uint64_t seed, double stop_exponent,
                                  const OneDOptions& opts) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    const OneDParams& p = field.params();
    if (!(p.mu * p.v_star > 0.0)) {
        throw std::invalid_argument("transition_measure_1d: needs mu * v* > 0 (rising drift)");
    }
    const double nu = stop_exponent > 0.0
                          ? stop_exponent
                          : predicted_exponents(p.k, p.l).nu;
    const double window = std::pow(epsilon, nu);

    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> u_sym(-1.0, 1.0);
    OneDState st;
    st.x = p.x_star + a1 * epsilon * u_sym(rng);
    st.v = p.v_star + a2 * epsilon * u_sym(rng);

    const double dt = std::min(opts.dt_max, epsilon / opts.kappa);

    OneDOutcome out;
    const auto record = [&] { out.samples.push_back({st.t, st.x, st.v}); };
    record();

    double d_prev = std::abs(st.v - p.v_tilde);
    if (d_prev <= window) {
        out.tau = 0.0;
        out.final_dist = d_prev;
        return out;
    }
    for (;;) {
        if (out.steps >= opts.step_budget) {
            throw StepBudgetError("1d transition exceeded " + std::to_string(opts.step_budget) +
                                  " steps; last state t=" + std::to_string(st.t) + " x=" +
                                  std::to_string(st.x) + " v=" + std::to_string(st.v));
        }
        const double t_before = st.t;
        step_1d(field, st, epsilon, dt);
        ++out.steps;
        if (out.steps % opts.sample_stride == 0) record();
        const double d = std::abs(st.v - p.v_tilde);
        if (d <= window) {
            if (out.steps % opts.sample_stride != 0) record();
            const double w = (d_prev - window) / (d_prev - d);
            out.tau = t_before + w * (st.t - t_before);
            out.final_dist = d;
            return out;
        }
        d_prev = d;
    }
}

}  // namespace swarmrelax
