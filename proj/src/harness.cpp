#include "swarmrelax/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "swarmrelax/errors.hpp"
#include "swarmrelax/first_order.hpp"
#include "swarmrelax/fixtures.hpp"
#include "swarmrelax/rng.hpp"
#include "swarmrelax/system.hpp"
#include "swarmrelax/version.hpp"

namespace swarmrelax {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string classification_name(RCase c) {
    return c == RCase::Positive ? "positive" : "negative-dip";
}

RowResult run_2d_row(const ScenarioSetup& setup, const SweepSpec& spec, double eps,
                     std::uint64_t row_seed) {
    RowResult row;
    row.epsilon = eps;
    try {
        EpsRunSpec rs;
        rs.epsilon = eps;
        rs.a1 = spec.a1;
        rs.a2 = spec.a2;
        rs.a3 = spec.a3;
        rs.seed = row_seed;
        rs.relax = spec.relax;
        const TransitionOutcome out = transition_time(setup.problem, rs);
        row.ok = true;
        row.tau = out.tau;
        row.final_dist = out.final_dist;
        row.steps = out.steps;
        row.r_exc = r_excursion(out.trajectory, setup.problem.r_star);
        row.milestones = interval_milestones(out.trajectory, setup.problem.theta_star,
                                             setup.problem.theta_tilde, eps, spec.milestones);
    } catch (const SimError& e) {
        row.status = e.kind();
    }
    return row;
}

RowResult run_1d_row(const OneDField& field, const SweepSpec& spec, double eps,
                     std::uint64_t row_seed, const OneDOptions& opts) {
    RowResult row;
    row.epsilon = eps;
    try {
        const OneDOutcome out =
            transition_measure_1d(field, eps, spec.a1, spec.a2, row_seed, -1.0, opts);
        row.ok = true;
        row.tau = out.tau;
        row.final_dist = out.final_dist;
        row.steps = out.steps;
    } catch (const SimError& e) {
        row.status = e.kind();
    }
    return row;
}

// Runs fn(i) for i in [0, n) on up to `jobs` workers. Results are stored by
// index, so scheduling cannot affect the outcome.
void parallel_rows(int n, int jobs, const std::function<void(int)>& fn) {
    const int workers = std::max(1, std::min(jobs, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mu);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::vector<std::pair<double, double>> fit_points(const std::vector<RowResult>& rows) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : rows) {
        if (r.ok && r.tau > 0.0) pts.emplace_back(r.epsilon, r.tau);
    }
    return pts;
}

void refit(ScalingResult& res) {
    const auto pts = fit_points(res.rows);
    if (pts.size() < 3) {
        res.fit.reset();
        res.fit_status =
            "fit-unavailable: " + std::to_string(pts.size()) + " usable rows (needs 3)";
        return;
    }
    try {
        res.fit = fit_loglog(pts);
        res.fit_status = "ok";
    } catch (const FitDomainError& e) {
        res.fit.reset();
        res.fit_status = std::string("fit-unavailable: ") + e.what();
    }
}

ordered_json milestones_json(const Milestones& m) {
    const auto opt = [](const std::optional<double>& v) {
        return v ? ordered_json(*v) : ordered_json(nullptr);
    };
    ordered_json j;
    j["thresholds"] = {{"layer", m.thr_layer},
                       {"escape", m.thr_escape},
                       {"gap", m.thr_gap},
                       {"terminal", m.thr_terminal}};
    j["t_layer"] = opt(m.t_layer);
    j["t_escape"] = opt(m.t_escape);
    j["t_gap"] = opt(m.t_gap);
    j["t_terminal"] = opt(m.t_terminal);
    j["ordered"] = m.ordered;
    j["degenerate_geometry"] = m.degenerate_geometry;
    j["interval4"] = std::isnan(m.interval4) ? ordered_json(nullptr) : ordered_json(m.interval4);
    j["lambda"] = m.lambda_used;
    return j;
}

}  // namespace

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::SyntheticRP: return "synthetic-rp";
        case Scenario::SyntheticRN: return "synthetic-rn";
        case Scenario::ParticleFixture: return "particle-fixture";
        case Scenario::OneD: return "one-d";
    }
    return "unknown";
}

std::string to_string(Mode m) {
    return m == Mode::SingleMover ? "single-mover" : "all-moving";
}

ScenarioSetup setup_from_event(std::shared_ptr<const FieldSystem> sys,
                               const BreakdownEvent& event, Mode mode, const TauOrigin& origin) {
    if (!event.target_supported) {
        throw UnsupportedRegimeError("breakdown has no supported jump target: " +
                                     (event.unsupported_reason.empty()
                                          ? std::string("unspecified")
                                          : event.unsupported_reason));
    }
    ScenarioSetup s;
    s.problem.system = sys;
    s.problem.tracked = event.particle;
    s.problem.x_star = event.x_star();
    s.problem.theta_star = event.theta_star;
    s.problem.theta_tilde = event.theta_tilde;
    s.problem.r_star = event.r_star;
    s.problem.init.t = 0.0;
    s.problem.init.x = event.state.x;
    const auto sz = event.state.x.size();
    s.problem.init.theta.resize(sz);
    s.problem.init.r.resize(sz);
    for (size_t k = 0; k < sz; ++k) {
        s.problem.init.theta[k] = event.state.branch[k].theta;
        s.problem.init.r[k] = event.state.branch[k].r;
    }
    // The tracked particle starts exactly at the fold data.
    const auto tr = static_cast<size_t>(event.particle);
    s.problem.init.theta[tr] = event.theta_star;
    s.problem.init.r[tr] = event.r_star;
    s.problem.init.mobile.assign(sz, mode == Mode::AllMoving ? 1 : 0);
    s.problem.init.mobile[tr] = 1;

    const auto f = sys->field(event.state.x, event.particle);
    s.classification = classification_name(
        classify_R_case(*f, event.x_star(), event.theta_star, event.theta_tilde).kind);
    s.origin = origin;
    s.event = event;
    return s;
}

SyntheticParams stock_synthetic_params(Scenario s) {
    if (s != Scenario::SyntheticRP && s != Scenario::SyntheticRN) {
        throw std::invalid_argument("stock_synthetic_params: not a synthetic scenario");
    }
    SyntheticParams p;  // constant profile, the positive stock case
    if (s == Scenario::SyntheticRN) {
        p.r_profile = RProfile::rn_dip(-0.35, -0.05, 0.35, 0.5);
    }
    return p;
}

ScenarioSetup make_scenario_setup(const SweepSpec& spec) {
    if (spec.scenario == Scenario::OneD) {
        throw std::invalid_argument("make_scenario_setup: one-d has no 2D setup");
    }
    if (spec.scenario == Scenario::ParticleFixture) {
        FixtureSetup fx = run1_fixture();
        if (spec.model) fx.params = *spec.model;
        const int n = static_cast<int>(fx.positions.size());
        auto sys = std::make_shared<ParticleSystem>(n, fx.params);

        const FOState st0 = init_branch(*sys, fx.positions, fx.theta_guess);
        const FOOptions fopts;
        const auto ev = detect_breakdown(*sys, st0, fx.dt, fx.t_max, fopts);
        if (!ev) throw RootLostError("fixture produced no breakdown before t_max");
        return setup_from_event(sys, *ev, spec.mode,
                                {"bisected-breakdown", fopts.tol_time, ev->delta_dbl_used});
    }

    const SyntheticParams params =
        spec.synthetic ? *spec.synthetic : stock_synthetic_params(spec.scenario);
    auto field = std::make_shared<SyntheticField>(params);
    if (!field->supported()) {
        throw UnsupportedRegimeError(
            "synthetic fold has A* <= 0; the transition analysis does not cover it");
    }

    ScenarioSetup s;
    s.problem.system = std::make_shared<AmbientSystem>(field);
    s.problem.tracked = 0;
    s.problem.x_star = field->x_star();
    s.problem.theta_star = field->theta_star();
    s.problem.theta_tilde = field->theta_tilde();
    s.problem.r_star = field->r_star();
    s.problem.init.t = 0.0;
    s.problem.init.x = {field->x_star()};
    s.problem.init.theta = {field->theta_star()};
    s.problem.init.r = {field->r_star()};
    s.problem.init.mobile = {1};
    s.classification = classification_name(
        classify_R_case(*field, field->x_star(), field->theta_star(), field->theta_tilde()).kind);
    s.origin = {"constructed-crossing", 0.0, 0.0};
    return s;
}

FitResult fit_loglog(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3) throw FitDomainError("log-log fit needs at least 3 points");
    const auto n = points.size();
    std::vector<double> lx(n), ly(n);
    for (size_t i = 0; i < n; ++i) {
        if (!(points[i].first > 0.0) || !(points[i].second > 0.0)) {
            throw FitDomainError("log-log fit needs strictly positive coordinates");
        }
        lx[i] = std::log(points[i].first);
        ly[i] = std::log(points[i].second);
    }
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) throw FitDomainError("log-log fit has a degenerate design (equal abscissae)");

    FitResult f;
    f.n = static_cast<int>(n);
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double e = ly[i] - (f.intercept + f.slope * lx[i]);
        ss_res += e * e;
    }
    f.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return f;
}

ScalingResult run_sweep(const SweepSpec& spec) {
    if (spec.eps_list.empty()) throw std::invalid_argument("run_sweep: empty eps_list");
    for (size_t i = 0; i < spec.eps_list.size(); ++i) {
        if (!(spec.eps_list[i] > 0.0)) throw std::invalid_argument("run_sweep: eps must be > 0");
        if (i > 0 && !(spec.eps_list[i] < spec.eps_list[i - 1])) {
            throw std::invalid_argument("run_sweep: eps_list must be strictly decreasing");
        }
    }
    if (spec.jobs < 1) throw std::invalid_argument("run_sweep: jobs must be >= 1");

    ScalingResult res;
    res.spec = spec;
    const int n = static_cast<int>(spec.eps_list.size());
    res.rows.resize(static_cast<size_t>(n));

    if (spec.scenario == Scenario::OneD) {
        OneDParams oned_params;
        oned_params.k = spec.k;
        oned_params.l = spec.l;
        const OneDField field{oned_params};
        res.predicted_exponent = predicted_exponents(spec.k, spec.l).time_exp;
        res.tau_origin = {"constructed-crossing", 0.0, 0.0};
        res.classification = "n/a";
        parallel_rows(n, spec.jobs, [&](int i) {
            res.rows[static_cast<size_t>(i)] =
                run_1d_row(field, spec, spec.eps_list[static_cast<size_t>(i)],
                           derive_seed(spec.seed, static_cast<std::uint64_t>(i)), spec.oned);
        });
        refit(res);

        if (spec.auto_extend_1d) {
            // Extend the sweep downward until the slope settles. Deep rows
            // need a finer step policy for the stiff stretch.
            OneDOptions deep = spec.oned;
            deep.kappa = std::max(40.0, deep.kappa);
            int idx = n;
            while (res.fit) {
                const double last_eps = res.rows.back().epsilon;
                const double next_eps = last_eps / std::sqrt(10.0);
                if (next_eps < 1e-7 * (1.0 - 1e-12)) break;
                const double prev_slope = res.fit->slope;
                res.rows.push_back(run_1d_row(field, spec, next_eps,
                                              derive_seed(spec.seed,
                                                          static_cast<std::uint64_t>(idx)),
                                              deep));
                ++idx;
                refit(res);
                if (res.fit && std::abs(res.fit->slope - prev_slope) < 0.02) break;
            }
        }
        return res;
    }

    ScenarioSetup setup;
    try {
        setup = make_scenario_setup(spec);
    } catch (const SimError& e) {
        // Scenario construction failed; every row inherits the reason.
        for (int i = 0; i < n; ++i) {
            res.rows[static_cast<size_t>(i)].epsilon = spec.eps_list[static_cast<size_t>(i)];
            res.rows[static_cast<size_t>(i)].status = e.kind();
        }
        res.predicted_exponent = 2.0 / 3.0;
        res.classification = "unavailable";
        refit(res);
        return res;
    }
    res.predicted_exponent = 2.0 / 3.0;
    res.tau_origin = setup.origin;
    res.classification = setup.classification;

    parallel_rows(n, spec.jobs, [&](int i) {
        res.rows[static_cast<size_t>(i)] =
            run_2d_row(setup, spec, spec.eps_list[static_cast<size_t>(i)],
                       derive_seed(spec.seed, static_cast<std::uint64_t>(i)));
    });
    refit(res);
    return res;
}

void emit_report(const ScalingResult& result, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    {
        std::ofstream csv(fs::path(out_dir) / "rows.csv", std::ios::binary);
        if (!csv) throw std::runtime_error("emit_report: cannot open rows.csv");
        csv << "epsilon,tau,final_dist,r_excursion,t_layer,t_escape,t_gap,t_terminal,"
               "milestones_ordered,steps,status\n";
        const auto opt = [](const std::optional<double>& v) {
            return v ? fmt_g17(*v) : std::string();
        };
        for (const auto& r : result.rows) {
            csv << fmt_g17(r.epsilon) << ',';
            csv << (r.ok ? fmt_g17(r.tau) : std::string()) << ',';
            csv << (r.ok ? fmt_g17(r.final_dist) : std::string()) << ',';
            csv << (r.ok && r.milestones ? fmt_g17(r.r_exc) : std::string()) << ',';
            if (r.milestones) {
                csv << opt(r.milestones->t_layer) << ',' << opt(r.milestones->t_escape) << ','
                    << opt(r.milestones->t_gap) << ',' << opt(r.milestones->t_terminal) << ','
                    << (r.milestones->ordered ? "true" : "false") << ',';
            } else {
                csv << ",,,,,";
            }
            csv << r.steps << ',' << r.status << '\n';
        }
    }

    {
        ordered_json j;
        j["version"] = kVersion;
        j["scenario"] = to_string(result.spec.scenario);
        j["mode"] = to_string(result.spec.mode);
        j["seed"] = result.spec.seed;
        j["k"] = result.spec.k;
        j["l"] = result.spec.l;
        j["eps_list"] = result.spec.eps_list;
        j["perturbation"] = {{"a1", result.spec.a1}, {"a2", result.spec.a2},
                             {"a3", result.spec.a3}};
        j["relax"] = {{"dt_max", result.spec.relax.dt_max},
                      {"kappa", result.spec.relax.kappa},
                      {"r_floor", result.spec.relax.r_floor},
                      {"step_budget", result.spec.relax.step_budget}};
        j["milestone_params"] = {{"alpha", result.spec.milestones.alpha},
                                 {"beta", result.spec.milestones.beta},
                                 {"lambda", result.spec.milestones.lambda},
                                 {"c_diag", result.spec.milestones.c_diag}};
        j["tau_origin"] = {{"kind", result.tau_origin.kind},
                           {"tol_time", result.tau_origin.tol_time},
                           {"delta_dbl", result.tau_origin.delta_dbl}};
        j["predicted_exponent"] = result.predicted_exponent;
        j["classification"] = result.classification;
        if (result.fit) {
            j["fit"] = {{"slope", result.fit->slope},
                        {"intercept", result.fit->intercept},
                        {"r_squared", result.fit->r_squared},
                        {"n", result.fit->n}};
        } else {
            j["fit"] = nullptr;
        }
        j["fit_status"] = result.fit_status;
        ordered_json rows = ordered_json::array();
        for (const auto& r : result.rows) {
            ordered_json row;
            row["epsilon"] = r.epsilon;
            row["status"] = r.status;
            row["ok"] = r.ok;
            if (r.ok) {
                row["tau"] = r.tau;
                row["final_dist"] = r.final_dist;
                row["steps"] = r.steps;
                if (r.milestones) {
                    row["r_excursion"] = r.r_exc;
                    row["milestones"] = milestones_json(*r.milestones);
                }
            }
            rows.push_back(std::move(row));
        }
        j["rows"] = std::move(rows);

        std::ofstream out(fs::path(out_dir) / "fit.json", std::ios::binary);
        if (!out) throw std::runtime_error("emit_report: cannot open fit.json");
        out << j.dump(2) << '\n';
    }

    {
        std::ofstream plot(fs::path(out_dir) / "plot.txt", std::ios::binary);
        if (!plot) throw std::runtime_error("emit_report: cannot open plot.txt");
        plot << "# log-log scatter of (epsilon, tau) with the fitted power law\n";
        plot << "set logscale xy\n";
        plot << "set xlabel 'epsilon'\n";
        plot << "set ylabel 'tau'\n";
        plot << "set datafile separator ','\n";
        if (result.fit) {
            plot << "slope = " << fmt_g17(result.fit->slope) << "\n";
            plot << "intercept = " << fmt_g17(result.fit->intercept) << "\n";
            plot << "plot 'rows.csv' using 1:2 with points title 'measured', \\\n";
            plot << "     exp(intercept) * x**slope with lines title 'fit'\n";
        } else {
            plot << "# " << result.fit_status << "\n";
            plot << "plot 'rows.csv' using 1:2 with points title 'measured'\n";
        }
    }
}

}  // namespace swarmrelax
