#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <vector>

#include "swarmrelax/kernels.hpp"

namespace swarmrelax {

using Vec2 = Eigen::Vector2d;

// Wrap into [-pi, pi).
double wrap_angle(double theta);

// Shortest arc distance between two angles, in [0, pi].
double angle_dist(double a, double b);

inline Vec2 heading(double theta) { return Vec2(std::cos(theta), std::sin(theta)); }
inline Vec2 normal(double theta) { return Vec2(-std::sin(theta), std::cos(theta)); }

// Heading angle plus nonnegative speed; the polar form of one velocity.
struct PolarVelocity {
    double theta = 0.0;  // wrapped to [-pi, pi)
    double r = 0.0;      // >= 0
    Vec2 vec() const { return r * heading(theta); }
};

struct ModelParams {
    MorseParams morse;
    VisionParams vision;
    void validate() const {
        morse.validate();
        vision.validate();
    }
};

// Validated particle configuration: every pairwise distance exceeds the floor.
class SpatialConfig {
public:
    explicit SpatialConfig(std::vector<Vec2> positions);
    int size() const { return static_cast<int>(positions_.size()); }
    const std::vector<Vec2>& positions() const { return positions_; }
    const Vec2& operator[](int i) const { return positions_[static_cast<size_t>(i)]; }

    static constexpr double kMinPairDist = 1e-12;

private:
    std::vector<Vec2> positions_;
};

// One particle's view of the model: the angular force component H, the speed
// component R, and the theta-derivative of H, all as functions of that
// particle's own position x (everything else frozen inside the object).
//
// At a heading root H(x, theta) = 0 with r = R(x, theta) >= 0, the velocity
// r*heading(theta) solves the implicit velocity equation.
class Field {
public:
    virtual ~Field() = default;
    virtual double H(const Vec2& x, double theta) const = 0;
    virtual double R(const Vec2& x, double theta) const = 0;
    virtual double dH_dtheta(const Vec2& x, double theta) const = 0;

    // Gradient of H in the particle's own position. Default: central finite
    // differences with a step relative to the field's length scale.
    virtual Vec2 grad_x_H(const Vec2& x, double theta) const;

    // True when H, R are 2*pi-periodic in theta. Non-periodic fields must not
    // be scanned across the +-pi seam.
    virtual bool periodic_in_theta() const { return true; }

    // Length scale used to size finite-difference steps.
    virtual double length_scale(const Vec2& x) const;
};

// Central finite differences of H in x; step = rel * scale.
Vec2 fd_grad_x_H(const Field& f, const Vec2& x, double theta, double rel = 1e-6);

// Field seen by one particle of an interacting group. `others` holds the
// remaining particles' positions (a snapshot; the caller rebuilds per stage),
// n_total counts the whole group including the owner, matching the 1/N weight
// of the velocity sum.
class ParticleField final : public Field {
public:
    ParticleField(std::vector<Vec2> others, int n_total, ModelParams params);

    double H(const Vec2& x, double theta) const override;
    double R(const Vec2& x, double theta) const override;
    double dH_dtheta(const Vec2& x, double theta) const override;
    double length_scale(const Vec2& x) const override;

    const std::vector<Vec2>& others() const { return others_; }
    int n_total() const { return n_total_; }
    const ModelParams& params() const { return params_; }

private:
    std::vector<Vec2> others_;
    int n_total_;
    ModelParams params_;
};

ParticleField make_particle_field(const SpatialConfig& config, int i, const ModelParams& params);

// Speed profile R(x*, .) for the synthetic bottleneck field. Three shapes:
//   constant(R_c)                       R == R_c everywhere
//   positive_bump(R_base, amp)         R_base plus a sin^2 arch over the gap,
//                                       strictly positive, non-constant
//   rn_dip(phi_star, phi_tilde, depth,
//          R_base, width)              2*R_base outside, a -depth sin arch on
//                                       [phi_star, phi_tilde] whose zeros land
//                                       exactly at phi_star, phi_tilde, joined
//                                       by C^2 quintic shoulders of the given
//                                       width (width <= 0: sized automatically)
class RProfile {
public:
    enum class Kind { Constant, PositiveBump, RnDip };

    static RProfile constant(double R_c);
    static RProfile positive_bump(double R_base, double amp);
    static RProfile rn_dip(double phi_star, double phi_tilde, double depth, double R_base,
                           double width = 0.0);

    // Fixes the geometry to the gap [theta_star, theta_tilde] and validates.
    void resolve(double theta_star, double theta_tilde);
    double value(double theta) const;

    Kind kind() const { return kind_; }
    double phi_star() const { return phi_star_; }
    double phi_tilde() const { return phi_tilde_; }
    double width() const { return width_; }
    double depth() const { return depth_; }
    double base() const { return base_; }
    double amp() const { return amp_; }

private:
    RProfile() = default;
    Kind kind_ = Kind::Constant;
    double base_ = 1.0;        // R_c or R_base
    double amp_ = 0.0;         // positive_bump only
    double phi_star_ = 0.0;    // rn_dip only
    double phi_tilde_ = 0.0;   // rn_dip only
    double depth_ = 0.0;       // rn_dip only
    double width_ = 0.0;       // rn_dip shoulder width
    double gap_lo_ = 0.0;      // resolved gap
    double gap_hi_ = 0.0;
    bool resolved_ = false;
};

// Synthetic single-particle field with a prescribed fold at theta_star:
//   H(x, theta) = -h (theta - theta_star)^2 (theta - theta_tilde)
//                 + coupling . (x - x_star)
// (the cubic extended over the whole line, so theta is not periodic here),
// R(x, theta) = profile(theta). At x = x_star the fold sits exactly at
// theta_star with the next admissible root at theta_tilde.
struct SyntheticParams {
    double theta_star = -0.57;
    double theta_tilde = 0.22;
    double h_coeff = 1.0;
    Vec2 coupling = Vec2(std::cos(-0.57), std::sin(-0.57));  // mu; mu . v* > 0
    Vec2 x_star = Vec2(0.0, 0.0);
    RProfile r_profile = RProfile::constant(1.0);
};

class SyntheticField final : public Field {
public:
    explicit SyntheticField(SyntheticParams p);

    double H(const Vec2& x, double theta) const override;
    double R(const Vec2& x, double theta) const override;
    double dH_dtheta(const Vec2& x, double theta) const override;
    Vec2 grad_x_H(const Vec2& x, double theta) const override;  // exact coupling
    bool periodic_in_theta() const override { return false; }

    double theta_star() const { return p_.theta_star; }
    double theta_tilde() const { return p_.theta_tilde; }
    const Vec2& x_star() const { return p_.x_star; }
    const Vec2& coupling() const { return p_.coupling; }
    double r_star() const { return r_star_; }
    // d(H/r)/dx . v* at the fold. The jump analysis only covers A* > 0;
    // construction permits either sign so the unsupported case stays
    // representable.
    double A_star() const { return A_star_; }
    bool supported() const { return A_star_ > 0.0; }
    const SyntheticParams& params() const { return p_; }

private:
    SyntheticParams p_;
    double r_star_;
    double A_star_;
};

// Residual of the implicit velocity equation for particle i, evaluated from
// the raw pairwise sum (deliberately not via H/R): zero iff H(theta) = 0 and
// |v| = R(theta). |v| must be positive.
Vec2 fixed_point_residual(const SpatialConfig& config, int i, const Vec2& v,
                          const ModelParams& params);

// Height of the gap profile relative to the fold configuration:
// (H(x, theta) - H(x_star, theta)) / r. r must be positive.
double eval_eta(const Field& f, const Vec2& x, const Vec2& x_star, double theta, double r);

// Sign structure of R(x*, .) on the gap [theta_star, theta_tilde].
enum class RCase {
    Positive,     // R > 0 on the whole gap
    NegativeDip,  // R has zeros; escape estimates fall back to the flanks
};

struct RCaseAnalysis {
    RCase kind = RCase::Positive;
    double R0 = 0.0;          // floor constant for the interval estimates
    double phi_star = 0.0;    // first zero of R in the gap (NegativeDip only)
    double phi_tilde = 0.0;   // last zero (NegativeDip only)
    double omega_star = 0.0;  // (theta_star + phi_star) / 2
    double omega_tilde = 0.0; // (phi_tilde + theta_tilde) / 2
};

struct RClassifyOptions {
    int grid_n = 1024;
    double tol_zero_rel = 1e-9;  // relative to the profile scale on the gap
};

// Requires R(x*, theta_star) > 0 and R(x*, theta_tilde) > 0.
RCaseAnalysis classify_R_case(const Field& f, const Vec2& x_star, double theta_star,
                              double theta_tilde, const RClassifyOptions& opts = {});

}  // namespace swarmrelax
