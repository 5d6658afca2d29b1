#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace swarmrelax {

// Scalar bottleneck model: the forcing on v factors through a root of even
// multiplicity 2k at v* and one of odd multiplicity 2l-1 at v_tilde, with a
// linear x-coupling.
struct OneDParams {
    int k = 1;
    int l = 1;
    double h0 = 2.0;  // constant positive factor used when h_fn is empty
    std::function<double(double)> h_fn;
    double v_star = 0.5;
    double v_tilde = 1.5;
    double mu = 1.0;
    double x_star = 0.0;
};

class OneDField {
public:
    // Validates the factored structure numerically: exact zeros at v* and
    // v_tilde, positive forcing strictly between them, h positive on the
    // interval, and the local orders 2k and 2l-1 recovered from doubling
    // ratios of finite samples.
    explicit OneDField(const OneDParams& params);

    // -h(v) (v - v*)^{2k} (v - v_tilde)^{2l-1} + mu (x - x*)
    double F(double x, double v) const;
    double h(double v) const;
    double eta(double x) const { return p_.mu * (x - p_.x_star); }
    const OneDParams& params() const { return p_; }

private:
    OneDParams p_;
};

struct OneDState {
    double t = 0.0;
    double x = 0.0;
    double v = 0.0;
};

// One classical Runge-Kutta step of dx/dt = v, eps dv/dt = F(x, v).
void step_1d(const OneDField& field, OneDState& state, double epsilon, double dt);

struct OneDExponents {
    double time_exp;  // 2k / (4k - 1)
    double nu;        // equal to time_exp when l = 1, else (2k-1) / ((4k-1)(2l-1))
};

OneDExponents predicted_exponents(int k, int l);

struct OneDOptions {
    double dt_max = 1e-3;
    double kappa = 20.0;  // dt = min(dt_max, epsilon / kappa)
    long long step_budget = 1000000000;
    int sample_stride = 64;
};

struct OneDSample {
    double t;
    double x;
    double v;
};

struct OneDOutcome {
    double tau = 0.0;         // first |v - v_tilde| <= eps^nu, interpolated
    double final_dist = 0.0;  // |v - v_tilde| at the first accepted step past the rule
    long long steps = 0;
    std::vector<OneDSample> samples;
};

// Integrates from the perturbed bottleneck state (|x0 - x*| <= a1 eps,
// |v0 - v*| <= a2 eps, seeded) until |v - v_tilde| <= eps^stop_exponent.
// stop_exponent <= 0 selects the predicted nu for (k, l). Requires
// mu * v* > 0 so the slow drift actually feeds the escape. Throws
// StepBudgetError on budget exhaustion.
OneDOutcome transition_measure_1d(const OneDField& field, double epsilon, double a1, double a2,
                                  std::uint64_t seed, double stop_exponent = -1.0,
                                  const OneDOptions& opts = {});

}  // namespace swarmrelax
