#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "swarmrelax/config.hpp"
#include "swarmrelax/errors.hpp"
#include "swarmrelax/first_order.hpp"
#include "swarmrelax/fixtures.hpp"
#include "swarmrelax/harness.hpp"
#include "swarmrelax/relaxation.hpp"
#include "swarmrelax/roots.hpp"
#include "swarmrelax/system.hpp"

namespace {

using nlohmann::json;
using nlohmann::ordered_json;
using namespace swarmrelax;

int g_log = 1;  // 0 quiet, 1 info, 2 debug

void log_info(const std::string& s) {
    if (g_log >= 1) std::cerr << s << "\n";
}

void log_debug(const std::string& s) {
    if (g_log >= 2) std::cerr << s << "\n";
}

std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Builds nested objects along a dotted key path.
void set_path(json& doc, const std::string& dotted, json v) {
    json* cur = &doc;
    size_t start = 0;
    for (;;) {
        const size_t dot = dotted.find('.', start);
        if (dot == std::string::npos) {
            (*cur)[dotted.substr(start)] = std::move(v);
            return;
        }
        cur = &((*cur)[dotted.substr(start, dot - start)]);
        start = dot + 1;
    }
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << content;
}

std::string kind_name(RootKind k) {
    switch (k) {
        case RootKind::SimpleDescending: return "simple-descending";
        case RootKind::SimpleAscending: return "simple-ascending";
        case RootKind::NearDegenerate: return "near-degenerate";
    }
    return "?";
}

ordered_json profile_json(const RProfile& pr) {
    ordered_json j;
    switch (pr.kind()) {
        case RProfile::Kind::Constant:
            j["kind"] = "constant";
            j["R"] = pr.base();
            break;
        case RProfile::Kind::PositiveBump:
            j["kind"] = "positive-bump";
            j["base"] = pr.base();
            j["amp"] = pr.amp();
            break;
        case RProfile::Kind::RnDip:
            j["kind"] = "rn-dip";
            j["phi_star"] = pr.phi_star();
            j["phi_tilde"] = pr.phi_tilde();
            j["depth"] = pr.depth();
            j["base"] = pr.base();
            j["width"] = pr.width();
            break;
    }
    return j;
}

// Same key layout the config schema accepts, so events re-enter through the
// regular validation path.
ordered_json synthetic_json(const SyntheticParams& p) {
    ordered_json j;
    j["theta_star"] = p.theta_star;
    j["theta_tilde"] = p.theta_tilde;
    j["h"] = p.h_coeff;
    j["coupling"] = {p.coupling.x(), p.coupling.y()};
    j["x_star"] = {p.x_star.x(), p.x_star.y()};
    j["profile"] = profile_json(p.r_profile);
    return j;
}

ordered_json model_json(const ModelParams& m) {
    ordered_json j;
    j["morse"] = {{"C_r", m.morse.C_r},
                  {"l_r", m.morse.l_r},
                  {"C_a", m.morse.C_a},
                  {"l_a", m.morse.l_a}};
    j["vision"] = {{"a", m.vision.a}, {"b", m.vision.b}};
    return j;
}

ordered_json state_to_json(const FOState& st) {
    ordered_json j;
    j["t"] = st.t;
    auto xs = ordered_json::array();
    for (const auto& p : st.x) xs.push_back({p.x(), p.y()});
    j["x"] = xs;
    auto br = ordered_json::array();
    for (const auto& b : st.branch) br.push_back({{"theta", b.theta}, {"r", b.r}});
    j["branch"] = br;
    return j;
}

FOState state_from_json(const json& j) {
    FOState st;
    st.t = j.at("t").get<double>();
    for (const auto& p : j.at("x")) {
        st.x.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    }
    for (const auto& b : j.at("branch")) {
        PolarVelocity pv;
        pv.theta = b.at("theta").get<double>();
        pv.r = b.at("r").get<double>();
        st.branch.push_back(pv);
    }
    if (st.x.empty() || st.x.size() != st.branch.size()) {
        throw ConfigError("event state needs matching non-empty x and branch arrays", "state");
    }
    return st;
}

ordered_json event_to_json(const BreakdownEvent& ev, ordered_json system_desc, double tol_time) {
    ordered_json j;
    j["version"] = 1;
    j["t_star"] = ev.t_star;
    j["particle"] = ev.particle;
    j["theta_star"] = ev.theta_star;
    j["r_star"] = ev.r_star;
    j["A_star"] = ev.A_star;
    j["theta_tilde"] = ev.theta_tilde;
    j["delta_dbl_used"] = ev.delta_dbl_used;
    j["tol_time"] = tol_time;
    j["target_supported"] = ev.target_supported;
    j["unsupported_reason"] = ev.unsupported_reason;
    j["state"] = state_to_json(ev.state);
    j["system"] = std::move(system_desc);
    return j;
}

struct LoadedEvent {
    BreakdownEvent event;
    std::shared_ptr<const FieldSystem> system;
    TauOrigin origin;
};

// Rebuilds a breakdown event and its field system from the JSON record
// simulate-fo writes. Field parameters pass through the config validator.
LoadedEvent event_from_json(const json& j) {
    LoadedEvent le;
    BreakdownEvent& ev = le.event;
    ev.t_star = j.at("t_star").get<double>();
    ev.particle = j.at("particle").get<int>();
    ev.theta_star = j.at("theta_star").get<double>();
    ev.r_star = j.at("r_star").get<double>();
    ev.A_star = j.at("A_star").get<double>();
    ev.theta_tilde = j.at("theta_tilde").get<double>();
    ev.delta_dbl_used = j.value("delta_dbl_used", 0.0);
    ev.target_supported = j.at("target_supported").get<bool>();
    ev.unsupported_reason = j.value("unsupported_reason", std::string());
    ev.state = state_from_json(j.at("state"));
    if (ev.particle < 0 || ev.particle >= static_cast<int>(ev.state.x.size())) {
        throw ConfigError("event particle index out of range", "particle");
    }

    const json& sys = j.at("system");
    const std::string kind = sys.at("kind").get<std::string>();
    if (kind == "particle") {
        if (ev.state.x.size() < 2) {
            throw ConfigError("particle events need at least two particles", "system");
        }
        json doc = json::object();
        if (sys.contains("morse")) doc["morse"] = sys.at("morse");
        if (sys.contains("vision")) doc["vision"] = sys.at("vision");
        RunConfig probe = default_config();
        apply_config_json(doc, probe);
        le.system = std::make_shared<ParticleSystem>(static_cast<int>(ev.state.x.size()),
                                                     probe.model);
    } else if (kind == "synthetic") {
        RunConfig probe = default_config();
        apply_config_json(json{{"synthetic", sys.at("synthetic")}}, probe);
        le.system = std::make_shared<AmbientSystem>(
            std::make_shared<SyntheticField>(*probe.sweep.synthetic));
    } else {
        throw ConfigError("unknown system kind '" + kind + "' (particle, synthetic)",
                          "system.kind");
    }

    le.origin = {"bisected-breakdown", j.value("tol_time", 1e-10), ev.delta_dbl_used};
    return le;
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

std::string fo_csv_header(int n, bool with_phase) {
    std::string h = with_phase ? "phase,t" : "t";
    for (int i = 0; i < n; ++i) {
        const std::string s = std::to_string(i);
        h += ",x" + s + ",y" + s + ",theta" + s + ",r" + s;
    }
    return h + "\n";
}

void fo_csv_row(std::string& out, const FOState& st, int phase) {
    if (phase > 0) out += std::to_string(phase) + ",";
    out += fmt_g17(st.t);
    for (size_t i = 0; i < st.x.size(); ++i) {
        out += ",";
        out += fmt_g17(st.x[i].x());
        out += ",";
        out += fmt_g17(st.x[i].y());
        out += ",";
        out += fmt_g17(st.branch[i].theta);
        out += ",";
        out += fmt_g17(st.branch[i].r);
    }
    out += "\n";
}

// Starting data for a first-order run of a synthetic scenario: the particle
// is placed on the root-carrying side of the fold, at distance `dist` from
// x* against the coupling, on the descending branch that drifts into the
// fold.
struct SyntheticStart {
    Vec2 x0;
    double theta_guess;
};

SyntheticStart synthetic_fo_start(const SyntheticField& f, double dist) {
    if (!(dist > 0.0)) throw ConfigError("must be positive", "start-dist");
    const double sigma = f.theta_tilde() > f.theta_star() ? 1.0 : -1.0;
    const double cnorm = f.coupling().norm();
    SyntheticStart s;
    s.x0 = f.x_star() - sigma * dist * f.coupling() / cnorm;
    // Fold pair angles at height eta: theta* +- sqrt(|eta| / (h |tilde - *|)).
    const double spread = std::sqrt(
        dist * cnorm /
        (f.params().h_coeff * std::abs(f.theta_tilde() - f.theta_star())));
    s.theta_guess = f.theta_star() - sigma * spread;
    return s;
}

SyntheticParams effective_synthetic(const RunConfig& cfg) {
    return cfg.sweep.synthetic ? *cfg.sweep.synthetic
                               : stock_synthetic_params(cfg.sweep.scenario);
}

// ---- subcommands ----

int cmd_roots(const RunConfig& cfg, int particle, const std::vector<double>& x_override) {
    std::shared_ptr<const Field> field;
    Vec2 x;
    if (cfg.sweep.scenario == Scenario::OneD) {
        throw ConfigError("roots needs a 2-d scenario", "scenario");
    }
    if (cfg.sweep.scenario == Scenario::ParticleFixture) {
        FixtureSetup fx = run1_fixture();
        if (cfg.model_given) fx.params = cfg.model;
        const int n = static_cast<int>(fx.positions.size());
        if (particle < 0 || particle >= n) {
            throw ConfigError("must index a fixture particle (0.." + std::to_string(n - 1) + ")",
                              "particle");
        }
        ParticleSystem sys(n, fx.params);
        field = sys.field(fx.positions, particle);
        x = fx.positions[static_cast<size_t>(particle)];
    } else {
        auto f = std::make_shared<SyntheticField>(effective_synthetic(cfg));
        x = f->x_star();
        field = f;
    }
    if (x_override.size() == 2) x = Vec2(x_override[0], x_override[1]);

    const RootSet set = scan_roots(*field, x);
    ordered_json j;
    j["scenario"] = to_string(cfg.sweep.scenario);
    j["x"] = {x.x(), x.y()};
    j["degenerate_everywhere"] = set.degenerate_everywhere;
    j["delta_dbl"] = set.delta_dbl;
    j["grid_scale_H"] = set.grid_scale_H;
    j["grid_scale_dH"] = set.grid_scale_dH;
    auto roots = ordered_json::array();
    for (const auto& r : set.roots) {
        roots.push_back({{"theta", r.theta},
                         {"dH", r.dH},
                         {"kind", kind_name(r.kind)},
                         {"R", r.R_value},
                         {"admissible", r.admissible}});
    }
    j["roots"] = roots;
    std::cout << j.dump(2) << "\n";
    return 0;
}

// Builds the first-order start state for simulate-fo / run1-demo, plus the
// JSON system descriptor embedded in event records.
struct FoSetup {
    std::shared_ptr<const FieldSystem> system;
    FOState start;
    double dt;
    double t_max;
    ordered_json system_desc;
};

FoSetup make_fo_setup(const RunConfig& cfg, double start_dist) {
    FoSetup s;
    if (cfg.sweep.scenario == Scenario::OneD) {
        throw ConfigError("needs a 2-d scenario", "scenario");
    }
    if (cfg.sweep.scenario == Scenario::ParticleFixture) {
        FixtureSetup fx = run1_fixture();
        if (cfg.model_given) fx.params = cfg.model;
        auto sys = std::make_shared<ParticleSystem>(static_cast<int>(fx.positions.size()),
                                                    fx.params);
        s.start = init_branch(*sys, fx.positions, fx.theta_guess);
        s.system = sys;
        s.dt = fx.dt;
        s.t_max = fx.t_max;
        s.system_desc = ordered_json{{"kind", "particle"}};
        const ordered_json mj = model_json(fx.params);
        s.system_desc["morse"] = mj.at("morse");
        s.system_desc["vision"] = mj.at("vision");
        return s;
    }
    auto field = std::make_shared<SyntheticField>(effective_synthetic(cfg));
    const SyntheticStart st = synthetic_fo_start(*field, start_dist);
    auto sys = std::make_shared<AmbientSystem>(field);
    s.start = init_branch(*sys, {st.x0}, {st.theta_guess});
    s.system = sys;
    s.dt = 0.01;
    s.t_max = 10.0;
    s.system_desc = ordered_json{{"kind", "synthetic"},
                                 {"synthetic", synthetic_json(field->params())}};
    return s;
}

int cmd_simulate_fo(const RunConfig& cfg, const FoSetup& setup, double dt, double t_max,
                    const std::string& out_csv, const std::string& event_out) {
    std::string csv = fo_csv_header(static_cast<int>(setup.start.x.size()), false);
    FOState st = setup.start;
    fo_csv_row(csv, st, 0);
    bool root_lost = false;
    while (st.t < t_max) {
        try {
            step_fo(*setup.system, st, std::min(dt, t_max - st.t));
        } catch (const RootLostError&) {
            root_lost = true;
            break;
        }
        fo_csv_row(csv, st, 0);
    }
    write_text_file(out_csv, csv);
    log_info("trajectory (" + std::to_string(st.t) + " time units) -> " + out_csv);

    const FOOptions fopts;
    const auto ev = detect_breakdown(*setup.system, setup.start, dt, t_max, fopts);
    ordered_json j;
    j["t_end"] = st.t;
    j["root_lost"] = root_lost;
    if (ev) {
        const ordered_json evj = event_to_json(*ev, setup.system_desc, fopts.tol_time);
        if (!event_out.empty()) {
            write_text_file(event_out, evj.dump(2) + "\n");
            log_info("breakdown event -> " + event_out);
        }
        j["breakdown"] = evj;
    } else {
        j["breakdown"] = nullptr;
        if (!event_out.empty()) log_info("no breakdown before t_max; no event written");
    }
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_simulate_relax(const RunConfig& cfg, const std::string& event_in,
                       const std::string& out_csv) {
    ScenarioSetup setup;
    if (!event_in.empty()) {
        json doc;
        try {
            doc = json::parse(read_text_file(event_in));
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("malformed event JSON: ") + e.what());
        }
        LoadedEvent le;
        try {
            le = event_from_json(doc);
        } catch (const json::exception& e) {
            throw ConfigError(std::string("bad event record: ") + e.what());
        }
        setup = setup_from_event(le.system, le.event, cfg.sweep.mode, le.origin);
    } else {
        setup = make_scenario_setup(cfg.sweep);
    }

    EpsRunSpec rs;
    rs.epsilon = cfg.epsilon;
    rs.a1 = cfg.sweep.a1;
    rs.a2 = cfg.sweep.a2;
    rs.a3 = cfg.sweep.a3;
    rs.seed = cfg.sweep.seed;
    rs.relax = cfg.sweep.relax;
    log_debug("relaxation run: epsilon=" + fmt_g17(cfg.epsilon) +
              " origin=" + setup.origin.kind);
    const TransitionOutcome out = transition_time(setup.problem, rs);

    std::string csv = "t,x,y,theta,r,eta,H,R\n";
    for (const auto& s : out.trajectory.samples) {
        csv += fmt_g17(s.t);
        csv += ",";
        csv += fmt_g17(s.x.x());
        csv += ",";
        csv += fmt_g17(s.x.y());
        csv += ",";
        csv += fmt_g17(s.theta);
        csv += ",";
        csv += fmt_g17(s.r);
        csv += ",";
        csv += fmt_g17(s.eta);
        csv += ",";
        csv += fmt_g17(s.H);
        csv += ",";
        csv += fmt_g17(s.R);
        csv += "\n";
    }
    write_text_file(out_csv, csv);
    log_info("trajectory (" + std::to_string(out.trajectory.samples.size()) + " samples) -> " +
             out_csv);

    const Milestones ms =
        interval_milestones(out.trajectory, setup.problem.theta_star, setup.problem.theta_tilde,
                            cfg.epsilon, cfg.sweep.milestones);
    ordered_json j;
    j["epsilon"] = cfg.epsilon;
    j["origin"] = setup.origin.kind;
    j["classification"] = setup.classification;
    j["theta_star"] = setup.problem.theta_star;
    j["theta_tilde"] = setup.problem.theta_tilde;
    j["r_star"] = setup.problem.r_star;
    j["tau"] = out.tau;
    j["tau_over_eps23"] = out.tau / std::pow(cfg.epsilon, 2.0 / 3.0);
    j["final_dist"] = out.final_dist;
    j["steps"] = out.steps;
    j["r_excursion"] = r_excursion(out.trajectory, setup.problem.r_star);
    j["milestones"] = milestones_json(ms);
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_scaling(const RunConfig& cfg, bool one_d) {
    SweepSpec sw = cfg.sweep;
    if (one_d) {
        sw.scenario = Scenario::OneD;
    } else if (sw.scenario == Scenario::OneD) {
        throw ConfigError("scaling-2d needs a 2-d scenario (use scaling-1d)", "scenario");
    }
    log_info("sweep: scenario=" + to_string(sw.scenario) + " rows=" +
             std::to_string(sw.eps_list.size()) + " jobs=" + std::to_string(sw.jobs));
    const ScalingResult result = run_sweep(sw);
    emit_report(result, cfg.out_dir);
    log_info("report -> " + cfg.out_dir + "/{rows.csv, fit.json, plot.txt}");

    int ok = 0;
    for (const auto& r : result.rows) ok += r.ok ? 1 : 0;
    ordered_json j;
    j["scenario"] = to_string(sw.scenario);
    j["classification"] = result.classification;
    j["predicted_exponent"] = result.predicted_exponent;
    j["rows_ok"] = ok;
    j["rows_total"] = static_cast<int>(result.rows.size());
    if (result.fit) {
        j["fit"] = {{"slope", result.fit->slope},
                    {"intercept", result.fit->intercept},
                    {"r_squared", result.fit->r_squared},
                    {"n", result.fit->n}};
    } else {
        j["fit"] = nullptr;
    }
    j["fit_status"] = result.fit_status;
    std::cout << j.dump(2) << "\n";
    return result.fit ? 0 : 1;
}

int cmd_run1_demo(const RunConfig& cfg, double t_post, const std::string& out_csv,
                  const std::string& event_out) {
    RunConfig fixture_cfg = cfg;
    fixture_cfg.sweep.scenario = Scenario::ParticleFixture;
    const FoSetup setup = make_fo_setup(fixture_cfg, 0.0);

    const FOOptions fopts;
    const auto ev = detect_breakdown(*setup.system, setup.start, setup.dt, setup.t_max, fopts);
    if (!ev) {
        std::cerr << "error [root-lost]: fixture produced no breakdown before t_max\n";
        return 1;
    }
    log_info("breakdown at t=" + fmt_g17(ev->t_star) + ", particle " +
             std::to_string(ev->particle));

    // Phase 1: the pre-breakdown march, stopped on the bisected event time.
    std::string csv = fo_csv_header(static_cast<int>(setup.start.x.size()), true);
    FOState st = setup.start;
    fo_csv_row(csv, st, 1);
    while (st.t < ev->t_star) {
        try {
            step_fo(*setup.system, st, std::min(setup.dt, ev->t_star - st.t));
        } catch (const RootLostError&) {
            break;  // lost within tol of the event time
        }
        fo_csv_row(csv, st, 1);
    }

    // The jump: reseat the tracked branch on the target root.
    FOState post = continue_through_jump(*setup.system, *ev);
    fo_csv_row(csv, post, 2);

    // Phase 2: continue on the new branch.
    const double t_end = post.t + t_post;
    bool post_root_lost = false;
    while (post.t < t_end) {
        try {
            step_fo(*setup.system, post, std::min(setup.dt, t_end - post.t));
        } catch (const RootLostError&) {
            post_root_lost = true;
            break;
        }
        fo_csv_row(csv, post, 2);
    }
    write_text_file(out_csv, csv);
    log_info("demo trajectory -> " + out_csv);

    const ordered_json evj = event_to_json(*ev, setup.system_desc, fopts.tol_time);
    if (!event_out.empty()) write_text_file(event_out, evj.dump(2) + "\n");

    const auto tr = static_cast<size_t>(ev->particle);
    ordered_json j;
    j["event"] = evj;
    j["jump"] = {{"particle", ev->particle},
                 {"theta_from", ev->theta_star},
                 {"theta_to", ev->theta_tilde},
                 {"r_from", ev->r_star},
                 {"r_to", post.branch[tr].r}};
    j["post_t_end"] = post.t;
    j["post_root_lost"] = post_root_lost;
    std::cout << j.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"swarm-relax: anisotropic swarm aggregation with implicit velocities,\n"
                 "its epsilon-relaxation, breakdown/jump detection, and scaling sweeps",
                 "swarm-relax"};
    app.require_subcommand(0, 1);

    json flags = json::object();
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (flags override its values)");

    // Every flag lands in a JSON document that passes through the same
    // validator as config files, so defaults, paths in error messages, and
    // precedence (file first, then flags) stay in one place.
    const auto on_num = [&flags](const std::string& key) {
        return [&flags, key](double v) { set_path(flags, key, v); };
    };
    const auto on_int = [&flags](const std::string& key) {
        return [&flags, key](long long v) { set_path(flags, key, v); };
    };
    const auto on_str = [&flags](const std::string& key) {
        return [&flags, key](const std::string& v) { set_path(flags, key, v); };
    };
    const auto on_bool = [&flags](const std::string& key) {
        return [&flags, key](bool v) { set_path(flags, key, v); };
    };
    const auto on_vec2 = [&flags](const std::string& key, const std::string& flag) {
        return [&flags, key, flag](const std::vector<double>& v) {
            if (v.size() != 2) throw CLI::ValidationError(flag + " expects x,y");
            set_path(flags, key, json::array({v[0], v[1]}));
        };
    };

    app.add_option_function<std::string>("--scenario", on_str("scenario"),
                                         "synthetic-rp | synthetic-rn | particle-fixture | one-d");
    app.add_option_function<std::string>("--mode", on_str("mode"),
                                         "single-mover | all-moving");
    app.add_option_function<std::uint64_t>(
        "--seed", [&flags](std::uint64_t v) { set_path(flags, "seed", v); },
        "base RNG seed (runs are bit-reproducible per seed)");
    app.add_option_function<long long>("--jobs", on_int("jobs"), "sweep worker threads");
    app.add_option_function<std::string>("--out-dir,--out_dir", on_str("out_dir"),
                                         "report directory for scaling runs");
    app.add_option_function<std::string>("--log-level,--log_level", on_str("log_level"),
                                         "quiet | info | debug (env SWARM_RELAX_LOG overrides "
                                         "the config file)");
    app.add_option_function<double>("--epsilon", on_num("epsilon"),
                                    "relaxation scale for single runs");
    app.add_option_function<std::vector<double>>(
        "--eps-list,--sweep.eps_list",
        [&flags](const std::vector<double>& v) {
            set_path(flags, "sweep.eps_list", json(v));
        },
        "sweep epsilons, comma separated, strictly decreasing")
        ->delimiter(',');
    app.add_option_function<std::vector<double>>(
        "--perturb",
        [&flags](const std::vector<double>& v) {
            if (v.size() != 3) throw CLI::ValidationError("--perturb expects a1,a2,a3");
            set_path(flags, "sweep.a1", v[0]);
            set_path(flags, "sweep.a2", v[1]);
            set_path(flags, "sweep.a3", v[2]);
        },
        "perturbation scales a1,a2,a3 (units of epsilon)")
        ->delimiter(',');
    app.add_option_function<double>("--sweep.a1", on_num("sweep.a1"), "position perturbation scale");
    app.add_option_function<double>("--sweep.a2", on_num("sweep.a2"), "angle perturbation scale");
    app.add_option_function<double>("--sweep.a3", on_num("sweep.a3"), "speed perturbation scale");
    app.add_option_function<bool>("--sweep.auto_extend_1d", on_bool("sweep.auto_extend_1d"),
                                  "extend 1-d sweeps until the slope settles");
    app.add_option_function<long long>("--k,--one_d.k", on_int("one_d.k"),
                                       "even multiplicity parameter (2k) of the 1-d fold");
    app.add_option_function<long long>("--l,--one_d.l", on_int("one_d.l"),
                                       "odd multiplicity parameter (2l-1) of the 1-d target");
    app.add_option_function<double>("--one_d.dt_max", on_num("one_d.dt_max"), "1-d step cap");
    app.add_option_function<double>("--one_d.kappa", on_num("one_d.kappa"),
                                    "1-d steps per epsilon (dt = eps/kappa)");
    app.add_option_function<long long>("--one_d.step_budget", on_int("one_d.step_budget"),
                                       "1-d step budget");
    app.add_option_function<long long>("--one_d.sample_stride", on_int("one_d.sample_stride"),
                                       "1-d recording period");
    app.add_option_function<double>("--dt-max,--relax.dt_max", on_num("relax.dt_max"),
                                    "relaxation step cap");
    app.add_option_function<double>("--kappa,--relax.kappa", on_num("relax.kappa"),
                                    "relaxation steps per epsilon (dt = eps/kappa)");
    app.add_option_function<double>("--relax.r_floor", on_num("relax.r_floor"),
                                    "speed floor; hitting it is a measurement failure");
    app.add_option_function<long long>("--relax.step_budget", on_int("relax.step_budget"),
                                       "relaxation step budget");
    app.add_option_function<long long>("--relax.sample_stride", on_int("relax.sample_stride"),
                                       "relaxation recording period");
    app.add_option_function<double>("--milestones.alpha", on_num("milestones.alpha"),
                                    "escape threshold factor (times eps^{1/6})");
    app.add_option_function<double>("--milestones.beta", on_num("milestones.beta"),
                                    "gap-fraction threshold factor");
    app.add_option_function<double>("--milestones.lambda", on_num("milestones.lambda"),
                                    "terminal-interval duration exponent (diagnostic)");
    app.add_option_function<double>("--milestones.c_diag", on_num("milestones.c_diag"),
                                    "terminal window factor (times eps^{2/3})");
    app.add_option_function<double>("--morse.C_r", on_num("morse.C_r"), "repulsion strength");
    app.add_option_function<double>("--morse.l_r", on_num("morse.l_r"), "repulsion range");
    app.add_option_function<double>("--morse.C_a", on_num("morse.C_a"), "attraction strength");
    app.add_option_function<double>("--morse.l_a", on_num("morse.l_a"), "attraction range");
    app.add_option_function<double>("--vision.a", on_num("vision.a"),
                                    "vision sharpness (0 recovers the isotropic model)");
    app.add_option_function<double>("--vision.b", on_num("vision.b"), "vision cone angle");
    app.add_option_function<double>("--synthetic.theta_star", on_num("synthetic.theta_star"),
                                    "fold angle of the synthetic field");
    app.add_option_function<double>("--synthetic.theta_tilde", on_num("synthetic.theta_tilde"),
                                    "jump target angle of the synthetic field");
    app.add_option_function<double>("--synthetic.h", on_num("synthetic.h"),
                                    "cubic coefficient of the synthetic field");
    app.add_option_function<std::vector<double>>(
        "--synthetic.coupling", on_vec2("synthetic.coupling", "--synthetic.coupling"),
        "spatial coupling vector mu (x,y); mu . heading(theta*) <= 0 makes the fold unsupported")
        ->delimiter(',');
    app.add_option_function<std::vector<double>>(
        "--synthetic.x_star", on_vec2("synthetic.x_star", "--synthetic.x_star"),
        "fold position (x,y)")
        ->delimiter(',');

    // roots
    auto* sub_roots = app.add_subcommand(
        "roots", "scan the heading equation H(x, .) and print the root set as JSON");
    sub_roots->fallthrough();
    int roots_particle = 0;
    std::vector<double> roots_x;
    sub_roots->add_option("--particle", roots_particle,
                          "fixture particle whose field is scanned");
    sub_roots->add_option("--x", roots_x, "scan position x,y (default: fixture position / x*)")
        ->delimiter(',');

    // simulate-fo
    auto* sub_fo = app.add_subcommand(
        "simulate-fo", "first-order march with root continuation and breakdown detection");
    sub_fo->fallthrough();
    std::string fo_out;
    std::string fo_event_out;
    double fo_dt = 0.0;
    double fo_tmax = 0.0;
    double fo_start_dist = 0.1;
    auto* o_fo_dt = sub_fo->add_option("--dt", fo_dt, "detector step (default: scenario's own)");
    auto* o_fo_tmax =
        sub_fo->add_option("--t-max", fo_tmax, "give-up horizon (default: scenario's own)");
    sub_fo->add_option("--start-dist", fo_start_dist,
                       "synthetic scenarios: starting distance from the fold position");
    sub_fo->add_option("--out", fo_out, "trajectory CSV path (default <out_dir>/fo_trajectory.csv)");
    sub_fo->add_option("--event-out", fo_event_out, "write the breakdown event JSON here");

    // simulate-relax
    auto* sub_relax = app.add_subcommand(
        "simulate-relax", "relaxation run through the transition layer at one epsilon");
    sub_relax->fallthrough();
    std::string relax_out;
    std::string relax_event_in;
    sub_relax->add_option("--out", relax_out,
                          "trajectory CSV path (default <out_dir>/trajectory.csv)");
    sub_relax->add_option("--event-in", relax_event_in,
                          "start from a recorded breakdown event instead of the scenario setup");

    // scaling-1d / scaling-2d
    auto* sub_s1 = app.add_subcommand(
        "scaling-1d", "scalar bottleneck sweep; fits tau against the predicted epsilon power");
    sub_s1->fallthrough();
    std::string s1_out;
    sub_s1->add_option("--out", s1_out, "report directory (default: out_dir)");
    auto* sub_s2 = app.add_subcommand(
        "scaling-2d", "transition-layer sweep over epsilon; fits the tau scaling law");
    sub_s2->fallthrough();
    std::string s2_out;
    sub_s2->add_option("--out", s2_out, "report directory (default: out_dir)");

    // run1-demo
    auto* sub_demo = app.add_subcommand(
        "run1-demo", "particle fixture end to end: march to breakdown, jump, continue");
    sub_demo->fallthrough();
    std::string demo_out;
    std::string demo_event_out;
    double demo_t_post = 5.0;
    sub_demo->add_option("--t-post", demo_t_post, "time to continue after the jump");
    sub_demo->add_option("--out", demo_out,
                         "trajectory CSV path (default <out_dir>/demo_trajectory.csv)");
    sub_demo->add_option("--event-out", demo_event_out, "write the breakdown event JSON here");

    {
        std::ostringstream ep;
        ep << "Configuration keys and defaults (JSON; flags above mirror the dotted paths):\n"
           << config_echo(default_config()).dump(2) << "\n"
           << "Optional \"synthetic\" block (absent by default; scenario stock values apply):\n"
           << "  theta_star, theta_tilde, h, coupling [x,y], x_star [x,y], profile\n"
           << "  profile.kind = constant {R} | positive-bump {base, amp}\n"
           << "                 | rn-dip {phi_star, phi_tilde, depth, base, width}\n";
        app.footer(ep.str());
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;  // usage errors share the config-error exit code
    }

    try {
        RunConfig cfg = default_config();
        if (!config_path.empty()) cfg = parse_config_file(config_path);
        if (const char* env = std::getenv("SWARM_RELAX_LOG")) {
            apply_config_json(json{{"log_level", std::string(env)}}, cfg);
        }
        apply_config_json(flags, cfg);
        g_log = cfg.log_level == "quiet" ? 0 : (cfg.log_level == "debug" ? 2 : 1);
        if (cfg.model_given) cfg.sweep.model = cfg.model;

        if (*sub_roots) return cmd_roots(cfg, roots_particle, roots_x);
        if (*sub_fo) {
            FoSetup setup = make_fo_setup(cfg, fo_start_dist);
            if (o_fo_dt->count()) {
                if (!(fo_dt > 0.0)) throw ConfigError("must be positive", "dt");
                setup.dt = fo_dt;
            }
            if (o_fo_tmax->count()) {
                if (!(fo_tmax > 0.0)) throw ConfigError("must be positive", "t-max");
                setup.t_max = fo_tmax;
            }
            const std::string out =
                fo_out.empty() ? cfg.out_dir + "/fo_trajectory.csv" : fo_out;
            return cmd_simulate_fo(cfg, setup, setup.dt, setup.t_max, out, fo_event_out);
        }
        if (*sub_relax) {
            const std::string out =
                relax_out.empty() ? cfg.out_dir + "/trajectory.csv" : relax_out;
            return cmd_simulate_relax(cfg, relax_event_in, out);
        }
        if (*sub_s1) {
            if (!s1_out.empty()) cfg.out_dir = s1_out;
            return cmd_scaling(cfg, true);
        }
        if (*sub_s2) {
            if (!s2_out.empty()) cfg.out_dir = s2_out;
            return cmd_scaling(cfg, false);
        }
        if (*sub_demo) {
            const std::string out =
                demo_out.empty() ? cfg.out_dir + "/demo_trajectory.csv" : demo_out;
            return cmd_run1_demo(cfg, demo_t_post, out, demo_event_out);
        }
        std::cerr << app.help() << "\n";
        std::cerr << "error: a subcommand is required\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const UnsupportedRegimeError& e) {
        std::cerr << "unsupported regime: " << e.what() << "\n";
        return 3;
    } catch (const SimError& e) {
        std::cerr << "error [" << e.kind() << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
