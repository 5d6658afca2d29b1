#include "swarmrelax/roots.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "swarmrelax/errors.hpp"

namespace swarmrelax {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kAdmissibleSlack = 1e-12;  // roundoff-negative R still admissible
constexpr double kDedupeTol = 1e-9;

RootKind classify_kind(double dH, double delta_dbl) {
    if (std::abs(dH) <= delta_dbl) return RootKind::NearDegenerate;
    return dH < 0.0 ? RootKind::SimpleDescending : RootKind::SimpleAscending;
}

Root finish_root(const Field& f, const Vec2& x, double theta, double delta_dbl, bool wrap) {
    Root r;
    r.theta = wrap ? wrap_angle(theta) : theta;
    r.dH = f.dH_dtheta(x, r.theta);
    r.kind = classify_kind(r.dH, delta_dbl);
    r.R_value = f.R(x, r.theta);
    r.admissible = r.R_value >= -kAdmissibleSlack;
    return r;
}

// Safeguarded Newton inside a sign-change bracket: Newton steps that stay in
// the bracket, bisection otherwise.
double polish_bracket(const Field& f, const Vec2& x, double lo, double hi, double h_lo,
                      double tol_root) {
    double theta = 0.5 * (lo + hi);
    for (int it = 0; it < 120; ++it) {
        const double hv = f.H(x, theta);
        if (std::abs(hv) < tol_root) return theta;
        if ((hv > 0.0) == (h_lo > 0.0)) {
            lo = theta;
        } else {
            hi = theta;
        }
        if (hi - lo < 1e-15) return 0.5 * (lo + hi);
        const double dv = f.dH_dtheta(x, theta);
        double next = (dv != 0.0) ? theta - hv / dv : lo - 1.0;
        if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
        theta = next;
    }
    return theta;
}

}  // namespace

double find_critical_point(const Field& f, const Vec2& x, double seed, double span) {
    // The critical point is known to sit near the seed (the tracked branch
    // degenerated there), so the iteration never leaves [seed - span,
    // seed + span]; on a flat feature the lowest-slope iterate wins rather
    // than whatever angle Newton wandered to.
    double theta = seed;
    double best = seed;
    double best_d1 = std::abs(f.dH_dtheta(x, seed));
    const double fd_h = 1e-6;
    for (int it = 0; it < 60; ++it) {
        const double d1 = f.dH_dtheta(x, theta);
        if (std::abs(d1) < best_d1) {
            best_d1 = std::abs(d1);
            best = theta;
        }
        const double d2 = (f.dH_dtheta(x, theta + fd_h) - f.dH_dtheta(x, theta - fd_h)) /
                          (2.0 * fd_h);
        if (d2 == 0.0) break;
        const double step = std::clamp(-d1 / d2, -span, span);
        theta = std::clamp(theta + step, seed - span, seed + span);
        if (std::abs(step) < 1e-14) break;
    }
    const double d1_end = std::abs(f.dH_dtheta(x, theta));
    return d1_end < best_d1 ? theta : best;
}

RootSet scan_roots(const Field& f, const Vec2& x, const RootScanOptions& opts) {
    const int n = std::max(64, opts.grid_n);
    const bool periodic = f.periodic_in_theta();
    const double dx = kTwoPi / n;

    std::vector<double> th(static_cast<size_t>(n)), hv(static_cast<size_t>(n));
    RootSet out;
    for (int k = 0; k < n; ++k) {
        th[k] = -kPi + dx * k;
        hv[k] = f.H(x, th[k]);
        out.grid_scale_H = std::max(out.grid_scale_H, std::abs(hv[k]));
        out.grid_scale_dH = std::max(out.grid_scale_dH, std::abs(f.dH_dtheta(x, th[k])));
    }
    out.delta_dbl = opts.delta_dbl > 0.0 ? opts.delta_dbl : opts.delta_dbl_rel * out.grid_scale_dH;

    if (out.grid_scale_H < opts.tol_root) {
        out.degenerate_everywhere = true;
        return out;
    }

    std::vector<double> found;

    auto try_add = [&](double theta) {
        for (double t : found) {
            if (std::abs(t - theta) < kDedupeTol) return;
        }
        found.push_back(theta);
    };

    // Sign-change brackets between consecutive samples (seam included only on
    // periodic fields, where H(pi) continues H(-pi)).
    const int last = periodic ? n : n - 1;
    for (int k = 0; k < last; ++k) {
        const double a = th[k];
        const double b = a + dx;
        const double ha = hv[k];
        const double hb = (k + 1 < n) ? hv[k + 1] : f.H(x, b);
        if (std::abs(ha) < opts.tol_root) {
            try_add(a);
            continue;
        }
        if (std::abs(hb) < opts.tol_root) continue;  // owned by the next interval
        if ((ha > 0.0) != (hb > 0.0)) {
            try_add(polish_bracket(f, x, a, b, ha, opts.tol_root));
        }
    }

    // Tangency roots: local |H| minima that never change sign get a critical
    // point chase; only a critical point with |H| at refinement tolerance is a
    // genuine (double) root.
    const double tangency_gate = std::sqrt(opts.tol_root) * std::max(1.0, out.grid_scale_H);
    for (int k = 0; k < n; ++k) {
        if (!periodic && (k == 0 || k == n - 1)) continue;
        const int km = (k + n - 1) % n;
        const int kp = (k + 1) % n;
        const double a = std::abs(hv[km]), b = std::abs(hv[k]), c = std::abs(hv[kp]);
        if (!(b <= a && b <= c) || b >= tangency_gate) continue;
        if ((hv[km] > 0.0) != (hv[k] > 0.0) || (hv[k] > 0.0) != (hv[kp] > 0.0)) continue;
        const double tc = find_critical_point(f, x, th[k], dx);
        if (std::abs(f.H(x, tc)) < opts.tol_root) try_add(tc);
    }

    for (double t : found) out.roots.push_back(finish_root(f, x, t, out.delta_dbl, periodic));
    std::sort(out.roots.begin(), out.roots.end(),
              [](const Root& a, const Root& b) { return a.theta < b.theta; });
    // Wrapping can fold a seam root onto an existing one.
    out.roots.erase(std::unique(out.roots.begin(), out.roots.end(),
                                [](const Root& a, const Root& b) {
                                    return std::abs(a.theta - b.theta) < kDedupeTol;
                                }),
                    out.roots.end());
    return out;
}

Root refine_root(const Field& f, const Vec2& x, double theta_guess, const RefineOptions& opts) {
    const double w = opts.max_excursion;

    auto resolve_delta = [&](double theta_root) {
        if (opts.delta_dbl > 0.0) return opts.delta_dbl;
        const double s = std::max({std::abs(f.dH_dtheta(x, theta_guess)),
                                   std::abs(f.dH_dtheta(x, theta_root)), 1e-300});
        return opts.delta_dbl_rel * s;
    };

    // Newton first: the guess is supposed to be close.
    double theta = theta_guess;
    for (int it = 0; it < opts.max_iter; ++it) {
        const double hv = f.H(x, theta);
        if (std::abs(hv) < opts.tol_root) {
            return finish_root(f, x, theta, resolve_delta(theta), f.periodic_in_theta());
        }
        const double dv = f.dH_dtheta(x, theta);
        if (dv == 0.0) break;
        double step = -hv / dv;
        step = std::clamp(step, -0.5 * w, 0.5 * w);
        theta += step;
        if (std::abs(theta - theta_guess) > w) break;
    }

    // Fallback: bracket hunt inside the excursion window, nearest bracket wins.
    constexpr int m = 33;
    double best_lo = 0.0, best_hi = 0.0, best_hlo = 0.0;
    double best_dist = std::numeric_limits<double>::infinity();
    double prev_t = theta_guess - w;
    double prev_h = f.H(x, prev_t);
    for (int j = 1; j < m; ++j) {
        const double t = theta_guess - w + 2.0 * w * j / (m - 1);
        const double h = f.H(x, t);
        if (std::abs(prev_h) < opts.tol_root) {
            const double d = std::abs(prev_t - theta_guess);
            if (d < best_dist) {
                best_dist = d;
                best_lo = best_hi = prev_t;
            }
        } else if (std::abs(h) >= opts.tol_root && (prev_h > 0.0) != (h > 0.0)) {
            const double mid = 0.5 * (prev_t + t);
            const double d = std::abs(mid - theta_guess);
            if (d < best_dist) {
                best_dist = d;
                best_lo = prev_t;
                best_hi = t;
                best_hlo = prev_h;
            }
        }
        prev_t = t;
        prev_h = h;
    }
    if (!std::isfinite(best_dist)) {
        throw RootLostError("refine_root: no sign change within " + std::to_string(w) +
                            " rad of theta = " + std::to_string(theta_guess));
    }
    const double root = (best_lo == best_hi)
                            ? best_lo
                            : polish_bracket(f, x, best_lo, best_hi, best_hlo, opts.tol_root);
    return finish_root(f, x, root, resolve_delta(root), f.periodic_in_theta());
}

double select_jump_target(const Field& f, const Vec2& x_star, const RootSet& set,
                          double theta_star, int direction, const JumpSelectOptions& opts) {
    if (direction != 1 && direction != -1) {
        throw std::invalid_argument("select_jump_target: direction must be +1 or -1");
    }
    if (set.degenerate_everywhere) {
        throw NoJumpTargetError("select_jump_target: field is degenerate at every heading");
    }
    const bool periodic = f.periodic_in_theta();

    struct Candidate {
        double arc;  // distance from theta_star along the escape direction
        const Root* root;
    };
    std::vector<Candidate> cands;
    for (const Root& r : set.roots) {
        double arc;
        if (periodic) {
            arc = wrap_angle(direction * (r.theta - theta_star));
            if (arc < 0.0) arc += kTwoPi;
        } else {
            arc = direction * (r.theta - theta_star);
        }
        if (arc <= opts.skip_radius) continue;
        if (periodic && arc >= kTwoPi - opts.skip_radius) continue;  // own fold pair, behind
        cands.push_back({arc, &r});
    }
    std::sort(cands.begin(), cands.end(),
              [](const Candidate& a, const Candidate& b) { return a.arc < b.arc; });

    for (const Candidate& c : cands) {
        // The landing root must be fast-time stable and carry positive speed.
        if (c.root->kind != RootKind::SimpleDescending) continue;
        if (!(c.root->R_value > 0.0)) continue;
        // H must keep the escape sign over the whole open arc; slack covers
        // dips of bisection-tolerance size next to the fold.
        const int m = std::max(16, opts.arc_samples);
        std::vector<double> hs(static_cast<size_t>(m));
        double scale = 0.0;
        for (int j = 0; j < m; ++j) {
            const double t = theta_star + direction * c.arc * (j + 1) / (m + 1);
            hs[j] = f.H(x_star, t);
            scale = std::max(scale, std::abs(hs[j]));
        }
        const double tol = opts.arc_tol_rel * std::max(1.0, scale);
        bool ok = true;
        for (double h : hs) {
            if (!(direction * h > -tol)) {
                ok = false;
                break;
            }
        }
        if (ok) return c.root->theta;
    }
    throw NoJumpTargetError("select_jump_target: no admissible stable root beyond theta = " +
                            std::to_string(theta_star) + " in direction " +
                            std::to_string(direction));
}

}  // namespace swarmrelax
