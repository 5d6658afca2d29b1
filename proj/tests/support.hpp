#pragma once

#include <cmath>
#include <functional>
#include <random>

#include "swarmrelax/field.hpp"
#include "swarmrelax/rng.hpp"

namespace swarmrelax::testing {

// Field defined by plain callables, for driving the root and stepping code
// over hand-picked shapes whose answers are known in closed form.
class FunctionField final : public Field {
public:
    using Fn = std::function<double(const Vec2&, double)>;

    FunctionField(Fn h, Fn r, bool periodic = true, double scale = 1.0)
        : h_(std::move(h)), r_(std::move(r)), periodic_(periodic), scale_(scale) {}

    double H(const Vec2& x, double theta) const override { return h_(x, theta); }
    double R(const Vec2& x, double theta) const override { return r_(x, theta); }
    double dH_dtheta(const Vec2& x, double theta) const override {
        // Fourth-order central difference keeps the slope oracle well below
        // the tolerances these tests assert on.
        const double e = 1e-6;
        return (-h_(x, theta + 2 * e) + 8 * h_(x, theta + e) - 8 * h_(x, theta - e) +
                h_(x, theta - 2 * e)) /
               (12 * e);
    }
    bool periodic_in_theta() const override { return periodic_; }
    double length_scale(const Vec2&) const override { return scale_; }

private:
    Fn h_;
    Fn r_;
    bool periodic_;
    double scale_;
};

// Random particle positions with all pairwise distances in a sane band, so
// kernel sums stay well conditioned.
inline std::vector<Vec2> random_config(std::mt19937_64& rng, int n, double box = 2.5,
                                       double min_dist = 0.3) {
    std::uniform_real_distribution<double> place(-box, box);
    std::vector<Vec2> x;
    while (static_cast<int>(x.size()) < n) {
        const Vec2 p(place(rng), place(rng));
        bool far = true;
        for (const auto& q : x) {
            if ((p - q).norm() < min_dist) far = false;
        }
        if (far) x.push_back(p);
    }
    return x;
}

// The velocity sum F_i = -(1/N) sum_j K'(|x_i - x_j|) unit(x_i - x_j): the
// pair gradient is taken in the owner's own position. With isotropic weights
// the implicit equation collapses to v = F, so this is the independent oracle
// the field evaluation is checked against.
inline Vec2 isotropic_force(const std::vector<Vec2>& x, int i, const MorseParams& morse) {
    Vec2 f = Vec2::Zero();
    for (int j = 0; j < static_cast<int>(x.size()); ++j) {
        if (j == i) continue;
        const Vec2 d = x[static_cast<size_t>(i)] - x[static_cast<size_t>(j)];
        f -= morse_grad_mag(d.norm(), morse) * d.normalized();
    }
    return f / static_cast<double>(x.size());
}

}  // namespace swarmrelax::testing
