#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <memory>

#include "doctest.h"
#include "support.hpp"
#include "swarmrelax/errors.hpp"
#include "swarmrelax/first_order.hpp"
#include "swarmrelax/fixtures.hpp"
#include "swarmrelax/system.hpp"

using namespace swarmrelax;
using swarmrelax::testing::FunctionField;

namespace {

// Descending-branch start of the stock synthetic field at drift coordinate
// eta0 = -dist: the root below the fold solves s^2 (gap + s) = dist.
struct SyntheticStart {
    std::shared_ptr<SyntheticField> field;
    std::shared_ptr<AmbientSystem> sys;
    Vec2 x0;
    double guess;
};

SyntheticStart make_start(double dist, SyntheticParams p = {}) {
    SyntheticStart s;
    s.field = std::make_shared<SyntheticField>(p);
    s.sys = std::make_shared<AmbientSystem>(s.field);
    const Vec2 mu_hat = p.coupling.normalized();
    s.x0 = p.x_star - dist / p.coupling.norm() * mu_hat;
    const double gap = p.theta_tilde - p.theta_star;
    s.guess = p.theta_star - std::sqrt(dist / (p.h_coeff * gap));
    return s;
}

// Newton for the branch angle offset s > 0 with s^2 (gap + s) = -eta.
double branch_offset(double eta, double gap) {
    double s = std::sqrt(-eta / gap);
    for (int it = 0; it < 80; ++it) {
        const double f = s * s * (gap + s) + eta;
        const double d = 2.0 * s * (gap + s) + s * s;
        const double step = f / d;
        s -= step;
        if (std::abs(step) < 1e-15) break;
    }
    return s;
}

}  // namespace

TEST_CASE("breakdown time matches the drift quadrature oracle") {
    const double dist = 0.25;
    const SyntheticParams p;
    const SyntheticStart s = make_start(dist);
    const double gap = p.theta_tilde - p.theta_star;

    // On the branch, eta advances at R(theta) * mu . e(theta) with
    // theta = theta* - s(eta), so the arrival time at the fold is the
    // integral of the reciprocal speed. Composite Simpson, 20000 panels.
    const auto integrand = [&](double eta) {
        const double sv = eta < 0.0 ? branch_offset(eta, gap) : 0.0;
        const double theta = p.theta_star - sv;
        const double drift = p.coupling.dot(heading(theta));
        return 1.0 / (s.field->R(p.x_star, theta) * drift);
    };
    const int n = 20000;
    const double h = dist / n;
    double acc = integrand(-dist) + integrand(0.0);
    for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * integrand(-dist + i * h);
    const double t_oracle = acc * h / 3.0;

    const FOState st0 = init_branch(*s.sys, {s.x0}, {s.guess});
    const auto ev = detect_breakdown(*s.sys, st0, 0.01, 10.0);
    REQUIRE(ev.has_value());
    CHECK(ev->t_star == doctest::Approx(t_oracle).epsilon(1e-4));
}

TEST_CASE("breakdown event reproduces the synthetic fold data") {
    const SyntheticParams p;
    const SyntheticStart s = make_start(0.25);
    const FOState st0 = init_branch(*s.sys, {s.x0}, {s.guess});
    const auto ev = detect_breakdown(*s.sys, st0, 0.01, 10.0);
    REQUIRE(ev.has_value());
    CHECK(ev->particle == 0);
    CHECK(ev->theta_star == doctest::Approx(p.theta_star).epsilon(1e-3));
    CHECK(ev->r_star == doctest::Approx(1.0).epsilon(1e-6));
    // A* = d(H/r)/dx . v* = mu . e(theta*) for the unit-speed profile.
    CHECK(ev->A_star == doctest::Approx(p.coupling.dot(heading(p.theta_star))).epsilon(1e-3));
    CHECK(ev->target_supported);
    CHECK(ev->theta_tilde == doctest::Approx(p.theta_tilde).epsilon(1e-3));
    CHECK(ev->delta_dbl_used > 0.0);
    // The snapshot sits essentially at the fold: drift coordinate near zero.
    CHECK(std::abs(p.coupling.dot(ev->x_star() - p.x_star)) < 1e-4);

    const FOState post = continue_through_jump(*s.sys, *ev);
    CHECK(post.t == ev->t_star);
    CHECK(post.branch[0].theta == doctest::Approx(p.theta_tilde).epsilon(1e-3));
    CHECK(post.branch[0].r == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("flipped coupling yields an unsupported event and a refused jump") {
    SyntheticParams p;
    p.coupling = -p.coupling;  // fold profile falls along the motion: A* < 0
    // With the flipped coupling the drift runs away from the fold from the
    // stock start side, so begin on the other side: eta0 = -dist still, which
    // now means x0 on the +mu_hat side of x*.
    const SyntheticStart s = make_start(0.25, p);
    const FOState st0 = init_branch(*s.sys, {s.x0}, {s.guess});
    // Drift check: with A* < 0 eta decreases, the branch never folds.
    FOState probe = st0;
    for (int i = 0; i < 200; ++i) step_fo(*s.sys, probe, 0.01);
    const double eta0 = p.coupling.dot(st0.x[0] - p.x_star);
    const double eta1 = p.coupling.dot(probe.x[0] - p.x_star);
    CHECK(eta1 < eta0);
    CHECK(!detect_breakdown(*s.sys, st0, 0.01, 3.0).has_value());

    // An event manufactured at the fold of the flipped field must be refused.
    SyntheticStart at_fold = s;
    BreakdownEvent ev;
    ev.t_star = 0.0;
    ev.particle = 0;
    ev.theta_star = p.theta_star;
    ev.r_star = 1.0;
    ev.A_star = s.field->A_star();
    ev.target_supported = false;
    ev.unsupported_reason = "A* <= 0";
    ev.state.t = 0.0;
    ev.state.x = {p.x_star};
    ev.state.branch = {{p.theta_star, 1.0}};
    CHECK(ev.A_star < 0.0);
    CHECK_THROWS_AS(continue_through_jump(*at_fold.sys, ev), UnsupportedRegimeError);
}

TEST_CASE("step_fo keeps the branch solved and converges at fourth order") {
    const SyntheticStart s = make_start(0.3);
    const FOState st0 = init_branch(*s.sys, {s.x0}, {s.guess});
    CHECK(std::abs(s.field->H(st0.x[0], st0.branch[0].theta)) < 1e-10);

    FOState one = st0;
    const double taken = step_fo(*s.sys, one, 0.05);
    CHECK(taken == 0.05);
    CHECK(std::abs(s.field->H(one.x[0], one.branch[0].theta)) < 1e-10);
    CHECK(std::abs(one.branch[0].theta - st0.branch[0].theta) < 0.2);

    // Richardson: march to T with dt, dt/2, dt/4; consecutive differences
    // shrink by about 2^4 for the classical Runge-Kutta scheme.
    const double T = 0.2;
    auto march = [&](double dt) {
        FOState st = st0;
        int steps = static_cast<int>(std::round(T / dt));
        for (int i = 0; i < steps; ++i) step_fo(*s.sys, st, dt);
        return st.x[0];
    };
    const Vec2 xa = march(0.05), xb = march(0.025), xc = march(0.0125);
    const double e1 = (xa - xb).norm();
    const double e2 = (xb - xc).norm();
    REQUIRE(e2 > 0.0);
    CHECK(e1 / e2 > 9.0);
    CHECK(e1 / e2 < 35.0);
}

TEST_CASE("init_branch rejects mismatched input and inadmissible roots") {
    const SyntheticStart s = make_start(0.25);
    CHECK_THROWS_AS(init_branch(*s.sys, {s.x0, s.x0}, {0.0, 0.0}), std::invalid_argument);

    // Pick the drift coordinate so the inner root lands at -0.27, inside the
    // dip where the speed profile is negative: eta = -s^2 (gap - s) at s = 0.3.
    SyntheticParams p;
    p.r_profile = RProfile::rn_dip(-0.35, -0.05, 0.5, 0.5);
    const SyntheticField probe(p);
    REQUIRE(probe.R(p.x_star, -0.27) < 0.0);
    const double sv = 0.3;
    const double gap = p.theta_tilde - p.theta_star;
    const double dist = sv * sv * (gap - sv);
    const SyntheticStart neg = make_start(dist, p);
    CHECK_THROWS_AS(init_branch(*neg.sys, {neg.x0}, {p.theta_star + sv}), std::invalid_argument);
}

TEST_CASE("root loss raises through step_fo when the branch vanishes") {
    const SyntheticStart s = make_start(0.02);  // start close to the fold
    FOState st = init_branch(*s.sys, {s.x0}, {s.guess});
    CHECK_THROWS_AS(
        [&] {
            for (int i = 0; i < 4000; ++i) step_fo(*s.sys, st, 0.01);
        }(),
        RootLostError);
}

TEST_CASE("frozen fixture produces its pinned breakdown event") {
    const FixtureSetup fx = run1_fixture();
    ParticleSystem sys(static_cast<int>(fx.positions.size()), fx.params);
    const FOState st0 = init_branch(sys, fx.positions, fx.theta_guess);
    const auto ev = detect_breakdown(sys, st0, fx.dt, fx.t_max);
    REQUIRE(ev.has_value());
    CHECK(ev->particle == 2);
    CHECK(ev->t_star == doctest::Approx(0.826897057052702).epsilon(1e-7));
    CHECK(ev->theta_star == doctest::Approx(-0.57).epsilon(1e-9));
    CHECK(ev->r_star == doctest::Approx(0.020649507209366546).epsilon(1e-6));
    CHECK(ev->A_star == doctest::Approx(0.015255464671306247).epsilon(1e-5));
    CHECK(ev->theta_tilde == doctest::Approx(-0.34449001508573313).epsilon(1e-6));
    CHECK(ev->target_supported);

    const FOState post = continue_through_jump(sys, *ev);
    CHECK(post.branch[2].r > 0.01);
    // The jump lands on a genuine root of the post-jump configuration.
    const auto f2 = sys.field(post.x, 2);
    CHECK(std::abs(f2->H(post.x[2], post.branch[2].theta)) < 1e-9);
}
