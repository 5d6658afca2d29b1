#pragma once

#include <vector>

#include "swarmrelax/field.hpp"

namespace swarmrelax {

// A frozen particle configuration with everything a breakdown study needs:
// positions, branch guesses, kernel parameters, and the stepping window for
// the detector.
struct FixtureSetup {
    std::vector<Vec2> positions;
    std::vector<double> theta_guess;
    ModelParams params;
    double dt = 0.05;     // detector step
    double t_max = 80.0;  // give up beyond this time
};

// Four-particle configuration whose third particle loses its velocity root at
// t near 0.83 with a supported jump target. Found by seeded search over small
// clusters biased toward marginal-but-moving branches, then rotated rigidly so
// the fold angle lands at -0.57 (the dynamics are equivariant under global
// rotation), and frozen here. Values are load-bearing: tests pin the
// breakdown data they produce (fold angle -0.57, target near -0.3445,
// fold speed near 0.0206).
inline FixtureSetup run1_fixture() {
    FixtureSetup fx;
    fx.params.morse = MorseParams{1.0, 0.5, 0.5, 2.0};
    fx.params.vision = VisionParams{5.0, std::numbers::pi};
    fx.positions = {
        Vec2(0.0, 0.0),
        Vec2(1.0941173782303619, 0.45832593075608374),
        Vec2(-1.3836072153001879, 0.81237013061661179),
        Vec2(-2.1910292125404895, -0.68092176787087166),
    };
    fx.theta_guess = {-3.1213244742427282, -3.3858768874914205, -0.66436480232276129,
                      0.52332282282346432};
    fx.dt = 0.05;
    fx.t_max = 80.0;
    return fx;
}

}  // namespace swarmrelax
