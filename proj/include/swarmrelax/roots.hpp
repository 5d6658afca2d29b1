#pragma once

#include <vector>

#include "swarmrelax/field.hpp"

namespace swarmrelax {

enum class RootKind {
    SimpleDescending,  // dH/dtheta < -delta_dbl: the stable branch sign
    SimpleAscending,   // dH/dtheta > +delta_dbl
    NearDegenerate,    // |dH/dtheta| <= delta_dbl: at or next to a fold
};

struct Root {
    double theta = 0.0;  // [-pi, pi) for periodic fields
    double dH = 0.0;     // dH/dtheta at the root
    RootKind kind = RootKind::SimpleDescending;
    double R_value = 0.0;
    // R_value >= -1e-12: force-balanced roots can carry roundoff-negative R.
    bool admissible = false;
};

struct RootSet {
    std::vector<Root> roots;  // sorted by theta
    // H vanished on the whole scan grid (an exactly balanced configuration);
    // every heading is then a root and none is reported individually.
    bool degenerate_everywhere = false;
    double grid_scale_H = 0.0;   // max |H| over the scan grid
    double grid_scale_dH = 0.0;  // max |dH/dtheta| over the scan grid
    double delta_dbl = 0.0;      // near-degenerate threshold actually applied
};

struct RootScanOptions {
    int grid_n = 2048;        // >= 64
    double tol_root = 1e-12;  // |H| after refinement
    // <= 0 resolves to delta_dbl_rel * (max |dH| on the grid).
    double delta_dbl = 0.0;
    double delta_dbl_rel = 1e-5;
};

// Samples H over [-pi, pi) (wrapping across the seam only for periodic
// fields), brackets every sign change, bisects, polishes with Newton on
// dH_dtheta, and inspects local |H| minima below sqrt(tol_root) for tangency
// roots that never change sign.
RootSet scan_roots(const Field& f, const Vec2& x, const RootScanOptions& opts = {});

struct RefineOptions {
    double tol_root = 1e-12;
    // Newton leaving [guess - max_excursion, guess + max_excursion] means the
    // tracked branch is gone (or a different branch would be grabbed).
    double max_excursion = 0.2;
    int max_iter = 50;
    double delta_dbl = 0.0;  // <= 0: resolved from the local slope scale
    double delta_dbl_rel = 1e-5;
};

// Polishes a root from a nearby guess, falling back to bisection on a local
// bracket when Newton stalls. Throws RootLostError when no root survives
// inside the excursion window.
Root refine_root(const Field& f, const Vec2& x, double theta_guess,
                 const RefineOptions& opts = {});

// Newton on dH_dtheta toward the critical point of H(x, .) nearest the seed
// (finite-difference curvature, iterates confined to [seed - span,
// seed + span], lowest-slope iterate returned). Used to pin the fold angle
// once a branch degenerates.
double find_critical_point(const Field& f, const Vec2& x, double seed, double span);

struct JumpSelectOptions {
    int arc_samples = 256;
    double arc_tol_rel = 1e-7;  // slack for bisection-sized dips on the arc
    double skip_radius = 1e-6;  // candidates this close to theta_star are its own fold pair
};

// First root beyond theta_star in the escape direction (+1: increasing theta)
// that the dynamics can actually reach and settle on: H keeps the escape sign
// on the open arc, the root is simple-descending (fast-time stable), and its
// speed R is strictly positive. theta_star itself need not appear in `set`.
// Throws NoJumpTargetError when no candidate qualifies.
double select_jump_target(const Field& f, const Vec2& x_star, const RootSet& set,
                          double theta_star, int direction,
                          const JumpSelectOptions& opts = {});

}  // namespace swarmrelax
