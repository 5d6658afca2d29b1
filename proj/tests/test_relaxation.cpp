#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <memory>

#include "doctest.h"
#include "support.hpp"
#include "swarmrelax/errors.hpp"
#include "swarmrelax/relaxation.hpp"
#include "swarmrelax/system.hpp"

using namespace swarmrelax;
using swarmrelax::testing::FunctionField;

namespace {

std::shared_ptr<AmbientSystem> ambient(std::shared_ptr<const Field> f) {
    return std::make_shared<AmbientSystem>(std::move(f));
}

RelaxState single_state(const Vec2& x, double theta, double r) {
    RelaxState st;
    st.x = {x};
    st.theta = {theta};
    st.r = {r};
    st.mobile = {1};
    return st;
}

}  // namespace

TEST_CASE("speed relaxes along the exact exponential when the angle is pinned") {
    // H == 0 freezes theta; eps r' = -r + R_c has the closed-form solution
    // r(t) = R_c + (r0 - R_c) e^{-t/eps}.
    const double R_c = 0.8, eps = 1e-2, r0 = 0.3;
    auto f = std::make_shared<FunctionField>(
        [](const Vec2&, double) { return 0.0; },
        [R_c](const Vec2&, double) { return R_c; });
    auto sys = ambient(f);
    RelaxState st = single_state(Vec2(0, 0), 0.4, r0);
    const double dt = eps / 50.0;
    const int steps = 600;
    for (int i = 0; i < steps; ++i) step_relax(*sys, st, eps, dt);
    const double t = steps * dt;
    const double want = R_c + (r0 - R_c) * std::exp(-t / eps);
    CHECK(st.theta[0] == 0.4);
    CHECK(st.r[0] == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("equilibrium branch state drifts in a straight line") {
    // At a root with r = R the fast variables are stationary and the position
    // derivative is a constant vector, which Runge-Kutta integrates exactly.
    const double theta_r = 0.7, R_c = 0.55, eps = 1e-3;
    auto f = std::make_shared<FunctionField>(
        [theta_r](const Vec2&, double t) { return std::sin(theta_r - t); },
        [R_c](const Vec2&, double) { return R_c; });
    auto sys = ambient(f);
    RelaxState st = single_state(Vec2(0.1, -0.2), theta_r, R_c);
    for (int i = 0; i < 500; ++i) step_relax(*sys, st, eps, 1e-3);
    const double T = 0.5;
    CHECK(st.theta[0] == doctest::Approx(theta_r).epsilon(1e-12));
    CHECK(st.r[0] == doctest::Approx(R_c).epsilon(1e-12));
    const Vec2 want = Vec2(0.1, -0.2) + T * R_c * heading(theta_r);
    CHECK(st.x[0].x() == doctest::Approx(want.x()).epsilon(1e-12));
    CHECK(st.x[0].y() == doctest::Approx(want.y()).epsilon(1e-12));
}

TEST_CASE("immobile particles are frozen scenery") {
    const double R_c = 0.55;
    auto f = std::make_shared<FunctionField>(
        [](const Vec2&, double t) { return std::sin(0.7 - t); },
        [R_c](const Vec2&, double) { return R_c; });
    auto sys = std::make_shared<IndependentFieldsSystem>(
        std::vector<std::shared_ptr<const Field>>{f, f});
    RelaxState st;
    st.x = {Vec2(0, 0), Vec2(1, 1)};
    st.theta = {0.7, 0.7};
    st.r = {R_c, R_c};
    st.mobile = {1, 0};
    for (int i = 0; i < 100; ++i) step_relax(*sys, st, 1e-3, 1e-3);
    CHECK(st.x[0].norm() > 0.01);       // the mobile one moved
    CHECK(st.x[1] == Vec2(1, 1));       // the frozen one did not
    CHECK(st.theta[1] == 0.7);
    CHECK(st.r[1] == R_c);
}

TEST_CASE("independent copies integrate exactly like the single particle") {
    SyntheticParams p;
    auto f = std::make_shared<SyntheticField>(p);
    auto solo = ambient(f);
    auto duo = std::make_shared<IndependentFieldsSystem>(
        std::vector<std::shared_ptr<const Field>>{f, f});
    const double eps = 1e-2;
    RelaxState a = single_state(p.x_star, p.theta_star + 0.05, 1.0);
    RelaxState b;
    b.x = {p.x_star, p.x_star};
    b.theta = {p.theta_star + 0.05, p.theta_star + 0.05};
    b.r = {1.0, 1.0};
    b.mobile = {1, 1};
    for (int i = 0; i < 400; ++i) {
        step_relax(*solo, a, eps, eps / 20.0);
        step_relax(*duo, b, eps, eps / 20.0);
    }
    // Uncoupled dynamics: both copies reproduce the solo run bitwise.
    CHECK(a.theta[0] == b.theta[0]);
    CHECK(a.theta[0] == b.theta[1]);
    CHECK(a.r[0] == b.r[0]);
    CHECK(a.x[0] == b.x[0]);
    CHECK(a.x[0] == b.x[1]);
}

TEST_CASE("relaxation step converges at fourth order") {
    SyntheticParams p;
    auto sys = ambient(std::make_shared<SyntheticField>(p));
    const double eps = 1e-2;
    const RelaxState st0 = single_state(p.x_star - 0.05 * p.coupling, p.theta_star - 0.3, 0.9);
    auto march = [&](double dt) {
        RelaxState st = st0;
        const int steps = static_cast<int>(std::round(0.04 / dt));
        for (int i = 0; i < steps; ++i) step_relax(*sys, st, eps, dt);
        return st;
    };
    const RelaxState a = march(4e-4), b = march(2e-4), c = march(1e-4);
    const double e1 = std::abs(a.theta[0] - b.theta[0]) + std::abs(a.r[0] - b.r[0]);
    const double e2 = std::abs(b.theta[0] - c.theta[0]) + std::abs(b.r[0] - c.r[0]);
    REQUIRE(e2 > 0.0);
    CHECK(e1 / e2 > 9.0);
    CHECK(e1 / e2 < 35.0);
}

TEST_CASE("speed collapse is a diagnosed failure, not a clamp") {
    // R = -0.5 everywhere pulls r across the floor within a few fast times;
    // the stepper must throw instead of clamping.
    auto f = std::make_shared<FunctionField>(
        [](const Vec2&, double) { return 0.0; },
        [](const Vec2&, double) { return -0.5; });
    auto sys = ambient(f);
    RelaxState st = single_state(Vec2(0, 0), 0.0, 0.4);
    CHECK_THROWS_AS(
        [&] {
            for (int i = 0; i < 100000; ++i) step_relax(*sys, st, 1e-3, 1e-5);
        }(),
        SpeedCollapseError);
    // The error carries the crash time and speed for reports.
    try {
        RelaxState st2 = single_state(Vec2(0, 0), 0.0, 0.4);
        for (int i = 0; i < 100000; ++i) step_relax(*sys, st2, 1e-3, 1e-5);
    } catch (const SpeedCollapseError& e) {
        CHECK(e.t() >= 0.0);
        CHECK(e.r() <= 1e-3);
        CHECK(std::string(e.kind()) == "speed-collapse");
    }
}

TEST_CASE("transition time through the stock fold layer") {
    SyntheticParams p;
    auto f = std::make_shared<SyntheticField>(p);
    TransitionProblem prob;
    prob.system = ambient(f);
    prob.init = single_state(p.x_star, p.theta_star, f->r_star());
    prob.tracked = 0;
    prob.x_star = p.x_star;
    prob.theta_star = p.theta_star;
    prob.theta_tilde = p.theta_tilde;
    prob.r_star = f->r_star();

    EpsRunSpec spec;
    spec.epsilon = 1e-3;
    spec.seed = 42;
    const TransitionOutcome out = transition_time(prob, spec);
    const double eps23 = std::pow(spec.epsilon, 2.0 / 3.0);
    CHECK(out.tau > 0.0);
    CHECK(out.final_dist <= eps23);
    CHECK(out.steps > 0);
    REQUIRE(out.trajectory.samples.size() > 10);
    // Samples are time-ordered and the angle sweeps from the fold to the target.
    for (size_t i = 1; i < out.trajectory.samples.size(); ++i) {
        CHECK(out.trajectory.samples[i].t > out.trajectory.samples[i - 1].t);
    }
    CHECK(out.trajectory.samples.front().theta < p.theta_tilde - 0.5);
    CHECK(std::abs(out.trajectory.samples.back().theta - p.theta_tilde) < 2.0 * eps23);
    // The layer constant: tau / eps^{2/3} sits at order one.
    CHECK(out.tau / eps23 > 0.5);
    CHECK(out.tau / eps23 < 10.0);

    // Same seed, same run, bitwise.
    const TransitionOutcome again = transition_time(prob, spec);
    CHECK(again.tau == out.tau);
    CHECK(again.steps == out.steps);

    // Halving the step (kappa doubled) moves the interpolated crossing only
    // by the interpolation error, far below the layer-time scale.
    EpsRunSpec fine = spec;
    fine.relax.kappa = 40.0;
    const TransitionOutcome out2 = transition_time(prob, fine);
    CHECK(std::abs(out2.tau - out.tau) < 1e-4);
}

TEST_CASE("milestones from a hand-built trajectory") {
    // Linear angle ramp theta(t) = theta* + t on unit time, r flat: every
    // crossing time equals its threshold, which the scanner must reproduce
    // through interpolation.
    const double ts = -0.57, tt = 0.22, eps = 1e-4;
    Trajectory traj;
    traj.tracked = 0;
    for (int i = 0; i <= 1000; ++i) {
        TrajectorySample s{};
        s.t = i * 1e-3;
        s.theta = ts + s.t;
        s.r = 1.0;
        traj.samples.push_back(s);
    }
    const MilestoneParams mp;  // alpha 0.25, beta 0.1, c_diag 1
    const Milestones m = interval_milestones(traj, ts, tt, eps, mp);
    const double gap = tt - ts;
    CHECK(m.thr_layer == doctest::Approx(std::pow(eps, 1.0 / 3.0)));
    CHECK(m.thr_escape == doctest::Approx(0.25 * std::pow(eps, 1.0 / 6.0)));
    CHECK(m.thr_gap == doctest::Approx(0.1 * gap));
    CHECK(m.thr_terminal == doctest::Approx(gap - std::pow(eps, 2.0 / 3.0)));
    CHECK_FALSE(m.degenerate_geometry);
    REQUIRE(m.t_layer.has_value());
    REQUIRE(m.t_escape.has_value());
    REQUIRE(m.t_gap.has_value());
    REQUIRE(m.t_terminal.has_value());
    CHECK(*m.t_layer == doctest::Approx(m.thr_layer).epsilon(1e-9));
    CHECK(*m.t_escape == doctest::Approx(m.thr_escape).epsilon(1e-9));
    CHECK(*m.t_gap == doctest::Approx(m.thr_gap).epsilon(1e-9));
    CHECK(*m.t_terminal == doctest::Approx(m.thr_terminal).epsilon(1e-9));
    CHECK(m.ordered);
    CHECK(m.interval4 == doctest::Approx(*m.t_terminal - *m.t_gap).epsilon(1e-12));

    // Negative escape direction: mirrored geometry gives the same times.
    Trajectory down;
    down.tracked = 0;
    for (int i = 0; i <= 1000; ++i) {
        TrajectorySample s{};
        s.t = i * 1e-3;
        s.theta = -ts - s.t;
        s.r = 1.0;
        down.samples.push_back(s);
    }
    const Milestones md = interval_milestones(down, -ts, -tt, eps, mp);
    CHECK(*md.t_layer == doctest::Approx(*m.t_layer).epsilon(1e-12));
    CHECK(*md.t_terminal == doctest::Approx(*m.t_terminal).epsilon(1e-12));

    // Large eps: the escape threshold drops below the layer threshold and the
    // geometry is flagged degenerate.
    const Milestones big = interval_milestones(traj, ts, tt, 1e-2, mp);
    CHECK(big.degenerate_geometry);
    CHECK_FALSE(big.ordered);

    // A ramp that stops early leaves the later milestones absent.
    Trajectory stub;
    stub.tracked = 0;
    for (int i = 0; i <= 100; ++i) {
        TrajectorySample s{};
        s.t = i * 1e-3;
        s.theta = ts + s.t;
        s.r = 1.0;
        stub.samples.push_back(s);
    }
    const Milestones ms = interval_milestones(stub, ts, tt, eps, mp);
    CHECK(ms.t_layer.has_value());
    CHECK(ms.t_gap.has_value());
    CHECK_FALSE(ms.t_terminal.has_value());
    CHECK_FALSE(ms.ordered);
}

TEST_CASE("speed excursion over a stored trajectory") {
    Trajectory traj;
    for (double r : {1.0, 1.2, 0.7, 1.05}) {
        TrajectorySample s{};
        s.r = r;
        traj.samples.push_back(s);
    }
    CHECK(r_excursion(traj, 1.0) == doctest::Approx(0.3));
    CHECK(r_excursion(Trajectory{}, 1.0) == 0.0);
}

TEST_CASE("relaxation shadows the reduced dynamics at vanishing epsilon") {
    // Tikhonov gap between the constrained branch march and the relaxation
    // run, measured before any fold: first order in epsilon.
    SyntheticParams p;
    auto f = std::make_shared<SyntheticField>(p);
    auto sys = ambient(f);
    const Vec2 x0 = p.x_star - 0.3 * p.coupling;
    // Branch angle below the fold from the cubic geometry.
    const double gap = p.theta_tilde - p.theta_star;
    double sv = std::sqrt(0.3 / gap);
    for (int it = 0; it < 60; ++it) {
        sv -= (sv * sv * (gap + sv) - 0.3) / (2.0 * sv * (gap + sv) + sv * sv);
    }
    const FOState st0 = init_branch(*sys, {x0}, {p.theta_star - sv});
    const double g2 = branch_gap(*sys, st0, 0.15, 1e-2);
    const double g3 = branch_gap(*sys, st0, 0.15, 1e-3);
    const double g4 = branch_gap(*sys, st0, 0.15, 1e-4);
    CHECK(g2 / g3 == doctest::Approx(10.0).epsilon(0.35));
    CHECK(g3 / g4 == doctest::Approx(10.0).epsilon(0.35));
}
