#include "swarmrelax/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace swarmrelax {

namespace {
constexpr double kClampTol = 1e-9;
}

void MorseParams::validate() const {
    if (!(C_r > 0.0) || !(l_r > 0.0) || !(C_a > 0.0) || !(l_a > 0.0)) {
        throw std::invalid_argument("MorseParams: all of C_r, l_r, C_a, l_a must be positive");
    }
}

MorseParams biological_defaults() {
    MorseParams p;  // C_r=1, l_r=0.5, C_a=0.5, l_a=2
    p.validate();
    if (!(p.l_r < p.l_a) || !(p.C_r / p.l_r > p.C_a / p.l_a)) {
        throw std::logic_error("biological defaults lost the repulsion-dominant regime");
    }
    return p;
}

double morse_grad_mag(double dist, const MorseParams& p) {
    if (!(dist > 0.0)) {
        throw std::domain_error("morse_grad_mag: dist must be positive, got " +
                                std::to_string(dist));
    }
    return -(p.C_r / p.l_r) * std::exp(-dist / p.l_r) +
           (p.C_a / p.l_a) * std::exp(-dist / p.l_a);
}

void VisionParams::validate() const {
    if (!(a >= 0.0)) {
        throw std::invalid_argument("VisionParams: a must be >= 0 (0 means isotropic)");
    }
    if (!(b > 0.0) || !(b < 2.0 * std::numbers::pi)) {
        throw std::invalid_argument("VisionParams: b must lie in (0, 2*pi)");
    }
}

double VisionParams::c_norm() const {
    return std::tanh(a * (2.0 - b / std::numbers::pi)) + 1.0;
}

namespace {

double clamp_cosine(double s) {
    if (s > 1.0 + kClampTol || s < -1.0 - kClampTol) {
        throw std::domain_error("weight_g: cosine argument " + std::to_string(s) +
                                " is outside [-1, 1] beyond roundoff");
    }
    return std::clamp(s, -1.0, 1.0);
}

}  // namespace

double weight_g(double s, const VisionParams& vp) {
    s = clamp_cosine(s);
    // At s = -1 the numerator reproduces c_norm bit for bit, so g(-1) == 1.
    return (std::tanh(vp.a * (-s + 1.0 - vp.b / std::numbers::pi)) + 1.0) / vp.c_norm();
}

double weight_g_prime(double s, const VisionParams& vp) {
    s = clamp_cosine(s);
    const double u = vp.a * (-s + 1.0 - vp.b / std::numbers::pi);
    const double ch = std::cosh(u);
    // sech^2(u) underflows to 0 for large |u|, which is the right limit.
    const double sech2 = 1.0 / (ch * ch);
    return -vp.a * sech2 / vp.c_norm();
}

}  // namespace swarmrelax
