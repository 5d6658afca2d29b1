#pragma once

#include <numbers>

namespace swarmrelax {

// Pair potential K(r) = C_r exp(-r/l_r) - C_a exp(-r/l_a): short-range
// repulsion against long-range attraction.
struct MorseParams {
    double C_r = 1.0;
    double l_r = 0.5;
    double C_a = 0.5;
    double l_a = 2.0;

    // All four parameters must be strictly positive.
    void validate() const;
};

// Defaults where repulsion is shorter-ranged (l_r < l_a) but dominates at
// contact (C_r/l_r > C_a/l_a), so K' has exactly one sign change.
MorseParams biological_defaults();

// K'(dist). dist must be > 0; the model never evaluates the pair kernel at
// zero separation.
double morse_grad_mag(double dist, const MorseParams& p);

// Vision weight g(s) = (tanh(a(-s + 1 - b/pi)) + 1) / c_norm with
// c_norm = tanh(a(2 - b/pi)) + 1, so that g(-1) = 1 exactly: an agent gives
// full weight to neighbors straight ahead of it, and nearly none to those
// behind when the cone is narrow. a = 0 switches interactions isotropic
// (g == 1 for every s).
struct VisionParams {
    double a = 5.0;
    double b = std::numbers::pi;

    // a >= 0 and 0 < b < 2*pi.
    void validate() const;
    double c_norm() const;
};

// s is the cosine between the neighbor-to-agent offset and the agent's
// heading, so s = -1 puts the neighbor straight ahead. Values outside [-1, 1]
// by more than 1e-9 are rejected; roundoff-sized excursions are clamped.
double weight_g(double s, const VisionParams& vp);

// d/ds of weight_g at clamped s.
double weight_g_prime(double s, const VisionParams& vp);

}  // namespace swarmrelax
