#include "swarmrelax/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "swarmrelax/errors.hpp"

namespace swarmrelax {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double wrap_angle(double theta) {
    double w = theta - kTwoPi * std::floor((theta + kPi) / kTwoPi);
    // floor rounding can leave w == pi when theta is a hair under a wrap point
    if (w >= kPi) w -= kTwoPi;
    return w;
}

double angle_dist(double a, double b) { return std::abs(wrap_angle(a - b)); }

SpatialConfig::SpatialConfig(std::vector<Vec2> positions) : positions_(std::move(positions)) {
    const int n = static_cast<int>(positions_.size());
    if (n == 0) throw std::invalid_argument("SpatialConfig: empty configuration");
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double d = (positions_[i] - positions_[j]).norm();
            if (!(d > kMinPairDist)) {
                throw std::invalid_argument("SpatialConfig: particles " + std::to_string(i) +
                                            " and " + std::to_string(j) +
                                            " are closer than the distance floor");
            }
        }
    }
}

Vec2 Field::grad_x_H(const Vec2& x, double theta) const { return fd_grad_x_H(*this, x, theta); }

double Field::length_scale(const Vec2& x) const { return std::max(1.0, x.norm()); }

Vec2 fd_grad_x_H(const Field& f, const Vec2& x, double theta, double rel) {
    const double h = rel * f.length_scale(x);
    Vec2 g;
    for (int d = 0; d < 2; ++d) {
        Vec2 dx = Vec2::Zero();
        dx[d] = h;
        g[d] = (f.H(x + dx, theta) - f.H(x - dx, theta)) / (2.0 * h);
    }
    return g;
}

ParticleField::ParticleField(std::vector<Vec2> others, int n_total, ModelParams params)
    : others_(std::move(others)), n_total_(n_total), params_(params) {
    if (others_.empty()) throw std::invalid_argument("ParticleField: no interaction partners");
    if (n_total_ != static_cast<int>(others_.size()) + 1) {
        throw std::invalid_argument("ParticleField: n_total must count the owner and the others");
    }
    params_.validate();
}

namespace {

// Offset direction and kernel magnitude for one pair, with the coincidence guard.
struct PairGeom {
    Vec2 u;
    double kprime;
};

PairGeom pair_geom(const Vec2& x, const Vec2& xj, const ModelParams& params) {
    const Vec2 d = x - xj;
    const double dist = d.norm();
    if (!(dist > SpatialConfig::kMinPairDist)) {
        throw DegenerateConfigError("particle pair separated by " + std::to_string(dist) +
                                    ", below the distance floor");
    }
    return {d / dist, morse_grad_mag(dist, params.morse)};
}

}  // namespace

double ParticleField::H(const Vec2& x, double theta) const {
    const Vec2 er = heading(theta);
    const Vec2 et = normal(theta);
    double acc = 0.0;
    for (const Vec2& xj : others_) {
        const PairGeom pg = pair_geom(x, xj, params_);
        acc += pg.kprime * pg.u.dot(et) * weight_g(pg.u.dot(er), params_.vision);
    }
    return -acc / n_total_;
}

double ParticleField::R(const Vec2& x, double theta) const {
    const Vec2 er = heading(theta);
    double acc = 0.0;
    for (const Vec2& xj : others_) {
        const PairGeom pg = pair_geom(x, xj, params_);
        acc += pg.kprime * pg.u.dot(er) * weight_g(pg.u.dot(er), params_.vision);
    }
    return -acc / n_total_;
}

double ParticleField::dH_dtheta(const Vec2& x, double theta) const {
    const Vec2 er = heading(theta);
    const Vec2 et = normal(theta);
    double acc = 0.0;
    for (const Vec2& xj : others_) {
        const PairGeom pg = pair_geom(x, xj, params_);
        const double s = pg.u.dot(er);
        const double t = pg.u.dot(et);
        acc += pg.kprime * (-s * weight_g(s, params_.vision) +
                            t * t * weight_g_prime(s, params_.vision));
    }
    return -acc / n_total_;
}

double ParticleField::length_scale(const Vec2& x) const {
    double m = 1.0;
    for (const Vec2& xj : others_) m = std::max(m, (x - xj).norm());
    return m;
}

ParticleField make_particle_field(const SpatialConfig& config, int i, const ModelParams& params) {
    if (i < 0 || i >= config.size()) throw std::invalid_argument("make_particle_field: bad index");
    std::vector<Vec2> others;
    others.reserve(static_cast<size_t>(config.size()) - 1);
    for (int j = 0; j < config.size(); ++j) {
        if (j != i) others.push_back(config[j]);
    }
    return ParticleField(std::move(others), config.size(), params);
}

RProfile RProfile::constant(double R_c) {
    RProfile p;
    p.kind_ = Kind::Constant;
    p.base_ = R_c;
    return p;
}

RProfile RProfile::positive_bump(double R_base, double amp) {
    RProfile p;
    p.kind_ = Kind::PositiveBump;
    p.base_ = R_base;
    p.amp_ = amp;
    return p;
}

RProfile RProfile::rn_dip(double phi_star, double phi_tilde, double depth, double R_base,
                          double width) {
    RProfile p;
    p.kind_ = Kind::RnDip;
    p.phi_star_ = phi_star;
    p.phi_tilde_ = phi_tilde;
    p.depth_ = depth;
    p.base_ = R_base;
    p.width_ = width;
    return p;
}

void RProfile::resolve(double theta_star, double theta_tilde) {
    if (!(theta_star < theta_tilde)) {
        throw std::invalid_argument("RProfile: gap endpoints out of order");
    }
    gap_lo_ = theta_star;
    gap_hi_ = theta_tilde;
    switch (kind_) {
        case Kind::Constant:
            if (!(base_ > 0.0)) throw std::invalid_argument("RProfile: constant level must be > 0");
            break;
        case Kind::PositiveBump:
            if (!(base_ > 0.0) || !(base_ + std::min(0.0, amp_) > 0.0)) {
                throw std::invalid_argument("RProfile: bump profile must stay positive");
            }
            if (amp_ == 0.0) {
                throw std::invalid_argument("RProfile: bump amplitude of zero is the constant case");
            }
            break;
        case Kind::RnDip: {
            if (!(base_ > 0.0) || !(depth_ > 0.0)) {
                throw std::invalid_argument("RProfile: dip needs R_base > 0 and depth > 0");
            }
            if (!(gap_lo_ < phi_star_) || !(phi_star_ < phi_tilde_) || !(phi_tilde_ < gap_hi_)) {
                throw std::invalid_argument(
                    "RProfile: dip interval must sit strictly inside the gap");
            }
            if (width_ <= 0.0) {
                width_ = std::min({0.45 * (phi_star_ - gap_lo_), 0.45 * (gap_hi_ - phi_tilde_),
                                   0.75 * (phi_tilde_ - phi_star_)});
            }
            if (!(width_ > 0.0) || !(phi_star_ - width_ > gap_lo_) ||
                !(phi_tilde_ + width_ < gap_hi_)) {
                throw std::invalid_argument("RProfile: dip shoulders leave the gap");
            }
            break;
        }
    }
    resolved_ = true;
}

namespace {
// Quintic smoothstep and the slope-carrying quintic: q has zero slope and
// curvature at both ends, u5 has unit slope at s = 1 and nothing else.
double quintic_q(double s) { return s * s * s * (10.0 + s * (-15.0 + 6.0 * s)); }
double quintic_u(double s) { return s * s * s * (-4.0 + s * (7.0 - 3.0 * s)); }
}  // namespace

double RProfile::value(double theta) const {
    if (!resolved_) throw std::logic_error("RProfile: value() before resolve()");
    switch (kind_) {
        case Kind::Constant:
            return base_;
        case Kind::PositiveBump: {
            const double ph = std::sin(kPi * (theta - gap_lo_) / (gap_hi_ - gap_lo_));
            return base_ + amp_ * ph * ph;
        }
        case Kind::RnDip: {
            const double L = phi_tilde_ - phi_star_;
            const double m = width_ * depth_ * kPi / L;  // shoulder slope carry, s-units
            if (theta <= phi_star_ - width_ || theta >= phi_tilde_ + width_) return 2.0 * base_;
            if (theta < phi_star_) {
                const double s = (theta - (phi_star_ - width_)) / width_;
                return 2.0 * base_ * (1.0 - quintic_q(s)) - m * quintic_u(s);
            }
            if (theta <= phi_tilde_) {
                // The sine argument is folded to the nearer endpoint so both
                // zeros are exact, not sin(pi)-sized residue.
                const double u = (theta - phi_star_) / L;
                return -depth_ * std::sin(kPi * (u <= 0.5 ? u : 1.0 - u));
            }
            const double s = (theta - phi_tilde_) / width_;
            return 2.0 * base_ * quintic_q(s) - m * quintic_u(1.0 - s);
        }
    }
    return base_;  // unreachable
}

SyntheticField::SyntheticField(SyntheticParams p) : p_(std::move(p)) {
    if (!(p_.h_coeff > 0.0)) throw std::invalid_argument("SyntheticField: h_coeff must be > 0");
    if (!(p_.theta_star < p_.theta_tilde)) {
        throw std::invalid_argument("SyntheticField: theta_star must lie below theta_tilde");
    }
    p_.r_profile.resolve(p_.theta_star, p_.theta_tilde);
    r_star_ = p_.r_profile.value(p_.theta_star);
    if (!(r_star_ > 0.0)) throw std::invalid_argument("SyntheticField: R(x*, theta_star) must be > 0");
    if (!(p_.r_profile.value(p_.theta_tilde) > 0.0)) {
        throw std::invalid_argument("SyntheticField: R(x*, theta_tilde) must be > 0");
    }
    // A* <= 0 is a legal field but an unsupported regime; escape analysis
    // callers must check supported() rather than rely on construction.
    A_star_ = p_.coupling.dot(heading(p_.theta_star));
}

double SyntheticField::H(const Vec2& x, double theta) const {
    const double d = theta - p_.theta_star;
    return -p_.h_coeff * d * d * (theta - p_.theta_tilde) + p_.coupling.dot(x - p_.x_star);
}

double SyntheticField::R(const Vec2& /*x*/, double theta) const {
    return p_.r_profile.value(theta);
}

double SyntheticField::dH_dtheta(const Vec2& /*x*/, double theta) const {
    const double d = theta - p_.theta_star;
    return -p_.h_coeff * (2.0 * d * (theta - p_.theta_tilde) + d * d);
}

Vec2 SyntheticField::grad_x_H(const Vec2& /*x*/, double /*theta*/) const { return p_.coupling; }

Vec2 fixed_point_residual(const SpatialConfig& config, int i, const Vec2& v,
                          const ModelParams& params) {
    const double r = v.norm();
    if (!(r > 0.0)) throw std::invalid_argument("fixed_point_residual: |v| must be positive");
    const Vec2 vhat = v / r;
    const Vec2& x = config[i];
    Vec2 acc = Vec2::Zero();
    for (int j = 0; j < config.size(); ++j) {
        if (j == i) continue;
        const PairGeom pg = pair_geom(x, config[j], params);
        acc += pg.kprime * pg.u * weight_g(pg.u.dot(vhat), params.vision);
    }
    return v + acc / config.size();
}

double eval_eta(const Field& f, const Vec2& x, const Vec2& x_star, double theta, double r) {
    if (!(r > 0.0)) throw std::invalid_argument("eval_eta: r must be positive");
    return (f.H(x, theta) - f.H(x_star, theta)) / r;
}

namespace {

// Bisect R(x*, .) = 0 on a bracket with R(lo) and R(hi) of opposite sign.
double bisect_R_zero(const Field& f, const Vec2& x_star, double lo, double hi, double f_lo) {
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f.R(x_star, mid);
        if ((fm > 0.0) == (f_lo > 0.0)) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double grid_min_R(const Field& f, const Vec2& x_star, double lo, double hi, int n) {
    double m = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= n; ++k) {
        const double th = lo + (hi - lo) * k / n;
        m = std::min(m, f.R(x_star, th));
    }
    return m;
}

}  // namespace

RCaseAnalysis classify_R_case(const Field& f, const Vec2& x_star, double theta_star,
                              double theta_tilde, const RClassifyOptions& opts) {
    if (!(theta_star < theta_tilde)) {
        throw std::invalid_argument("classify_R_case: gap endpoints out of order");
    }
    if (!(f.R(x_star, theta_star) > 0.0) || !(f.R(x_star, theta_tilde) > 0.0)) {
        throw std::invalid_argument("classify_R_case: R must be positive at both gap endpoints");
    }
    const int n = std::max(64, opts.grid_n);
    std::vector<double> th(static_cast<size_t>(n) + 1), rv(static_cast<size_t>(n) + 1);
    double scale = 0.0, rmin = std::numeric_limits<double>::infinity();
    int argmin = 0;
    for (int k = 0; k <= n; ++k) {
        th[k] = theta_star + (theta_tilde - theta_star) * k / n;
        rv[k] = f.R(x_star, th[k]);
        scale = std::max(scale, std::abs(rv[k]));
        if (rv[k] < rmin) {
            rmin = rv[k];
            argmin = k;
        }
    }
    const double tol = opts.tol_zero_rel * std::max(1.0, scale);

    RCaseAnalysis out;
    if (rmin > tol) {
        out.kind = RCase::Positive;
        out.R0 = 0.5 * rmin;
        return out;
    }

    out.kind = RCase::NegativeDip;
    // First crossing from above into the dip, last crossing back out. A
    // touching minimum with no sign change degenerates to a point dip.
    int first = -1, last = -1;
    for (int k = 0; k < n; ++k) {
        if (rv[k] > 0.0 && rv[k + 1] <= 0.0) {
            first = k;
            break;
        }
    }
    for (int k = n - 1; k >= 0; --k) {
        if (rv[k] <= 0.0 && rv[k + 1] > 0.0) {
            last = k;
            break;
        }
    }
    if (first < 0 || last < 0) {
        out.phi_star = out.phi_tilde = th[argmin];
    } else {
        out.phi_star = bisect_R_zero(f, x_star, th[first], th[first + 1], rv[first]);
        out.phi_tilde = bisect_R_zero(f, x_star, th[last], th[last + 1], rv[last]);
    }
    out.omega_star = 0.5 * (theta_star + out.phi_star);
    out.omega_tilde = 0.5 * (out.phi_tilde + theta_tilde);
    const int side_n = std::max(64, n / 2);
    const double m1 = grid_min_R(f, x_star, theta_star, out.omega_star, side_n);
    const double m2 = grid_min_R(f, x_star, out.omega_tilde, theta_tilde, side_n);
    out.R0 = 0.5 * std::min(m1, m2);
    if (!(out.R0 > 0.0)) {
        throw std::invalid_argument(
            "classify_R_case: R is not positive on the flanks outside the dip");
    }
    return out;
}

}  // namespace swarmrelax
