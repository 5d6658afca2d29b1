#include "swarmrelax/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>

namespace swarmrelax {

namespace {

using json = nlohmann::json;

std::string join_path(const std::string& base, const char* key) {
    return base.empty() ? std::string(key) : base + "." + key;
}

// Translate a byte offset from the JSON parser into line/column, both 1-based.
std::pair<size_t, size_t> line_col(const std::string& text, size_t byte) {
    size_t line = 1, col = 1;
    const size_t stop = std::min(byte > 0 ? byte - 1 : 0, text.size());
    for (size_t i = 0; i < stop; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

void require_object(const json& v, const std::string& path) {
    if (!v.is_object()) throw ConfigError("expected an object", path);
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* k : allowed) {
            if (item.key() == k) {
                known = true;
                break;
            }
        }
        if (!known) throw ConfigError("unknown key", join_path(path, item.key().c_str()));
    }
}

double get_num(const json& obj, const std::string& path, const char* key, double cur) {
    const auto it = obj.find(key);
    if (it == obj.end()) return cur;
    if (!it->is_number()) throw ConfigError("expected a number", join_path(path, key));
    return it->get<double>();
}

long long get_int(const json& obj, const std::string& path, const char* key, long long cur) {
    const auto it = obj.find(key);
    if (it == obj.end()) return cur;
    if (!it->is_number_integer() && !it->is_number_unsigned()) {
        throw ConfigError("expected an integer", join_path(path, key));
    }
    return it->get<long long>();
}

std::uint64_t get_u64(const json& obj, const std::string& path, const char* key,
                      std::uint64_t cur) {
    const auto it = obj.find(key);
    if (it == obj.end()) return cur;
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0)) {
        throw ConfigError("expected a nonnegative integer", join_path(path, key));
    }
    return it->get<std::uint64_t>();
}

bool get_bool(const json& obj, const std::string& path, const char* key, bool cur) {
    const auto it = obj.find(key);
    if (it == obj.end()) return cur;
    if (!it->is_boolean()) throw ConfigError("expected a boolean", join_path(path, key));
    return it->get<bool>();
}

std::string get_str(const json& obj, const std::string& path, const char* key,
                    const std::string& cur) {
    const auto it = obj.find(key);
    if (it == obj.end()) return cur;
    if (!it->is_string()) throw ConfigError("expected a string", join_path(path, key));
    return it->get<std::string>();
}

Vec2 get_vec2(const json& obj, const std::string& path, const char* key, const Vec2& cur) {
    const auto it = obj.find(key);
    if (it == obj.end()) return cur;
    const std::string p = join_path(path, key);
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
        throw ConfigError("expected an array of two numbers", p);
    }
    return Vec2((*it)[0].get<double>(), (*it)[1].get<double>());
}

void parse_morse(const json& obj, const std::string& path, MorseParams& m) {
    require_object(obj, path);
    check_keys(obj, path, {"C_r", "l_r", "C_a", "l_a"});
    m.C_r = get_num(obj, path, "C_r", m.C_r);
    m.l_r = get_num(obj, path, "l_r", m.l_r);
    m.C_a = get_num(obj, path, "C_a", m.C_a);
    m.l_a = get_num(obj, path, "l_a", m.l_a);
    if (!(m.C_r > 0.0)) throw ConfigError("must be positive", join_path(path, "C_r"));
    if (!(m.l_r > 0.0)) throw ConfigError("must be positive", join_path(path, "l_r"));
    if (!(m.C_a > 0.0)) throw ConfigError("must be positive", join_path(path, "C_a"));
    if (!(m.l_a > 0.0)) throw ConfigError("must be positive", join_path(path, "l_a"));
}

void parse_vision(const json& obj, const std::string& path, VisionParams& v) {
    require_object(obj, path);
    check_keys(obj, path, {"a", "b"});
    v.a = get_num(obj, path, "a", v.a);
    v.b = get_num(obj, path, "b", v.b);
    if (!(v.a >= 0.0)) throw ConfigError("must be nonnegative", join_path(path, "a"));
    if (!(v.b > 0.0 && v.b < 2.0 * std::numbers::pi)) {
        throw ConfigError("must lie in (0, 2*pi)", join_path(path, "b"));
    }
}

RProfile parse_profile(const json& obj, const std::string& path) {
    require_object(obj, path);
    const std::string kind = get_str(obj, path, "kind", "constant");
    if (kind == "constant") {
        check_keys(obj, path, {"kind", "R"});
        return RProfile::constant(get_num(obj, path, "R", 1.0));
    }
    if (kind == "positive-bump") {
        check_keys(obj, path, {"kind", "base", "amp"});
        return RProfile::positive_bump(get_num(obj, path, "base", 1.0),
                                       get_num(obj, path, "amp", 0.5));
    }
    if (kind == "rn-dip") {
        check_keys(obj, path, {"kind", "phi_star", "phi_tilde", "depth", "base", "width"});
        return RProfile::rn_dip(get_num(obj, path, "phi_star", -0.35),
                                get_num(obj, path, "phi_tilde", -0.05),
                                get_num(obj, path, "depth", 0.35),
                                get_num(obj, path, "base", 0.5),
                                get_num(obj, path, "width", 0.0));
    }
    throw ConfigError("unknown profile kind '" + kind +
                          "' (constant, positive-bump, rn-dip)",
                      join_path(path, "kind"));
}

void parse_synthetic(const json& obj, const std::string& path, SyntheticParams& p) {
    require_object(obj, path);
    check_keys(obj, path, {"theta_star", "theta_tilde", "h", "coupling", "x_star", "profile"});
    p.theta_star = get_num(obj, path, "theta_star", p.theta_star);
    p.theta_tilde = get_num(obj, path, "theta_tilde", p.theta_tilde);
    p.h_coeff = get_num(obj, path, "h", p.h_coeff);
    p.coupling = get_vec2(obj, path, "coupling", p.coupling);
    p.x_star = get_vec2(obj, path, "x_star", p.x_star);
    if (obj.contains("profile")) p.r_profile = parse_profile(obj.at("profile"), join_path(path, "profile"));
    try {
        SyntheticField probe(p);  // full structural validation
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what(), path);
    }
}

json profile_echo(const RProfile& pr) {
    json j;
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

}  // namespace

Scenario scenario_from_name(const std::string& name) {
    if (name == "synthetic-rp") return Scenario::SyntheticRP;
    if (name == "synthetic-rn") return Scenario::SyntheticRN;
    if (name == "particle-fixture") return Scenario::ParticleFixture;
    if (name == "one-d") return Scenario::OneD;
    throw ConfigError("unknown scenario '" + name +
                          "' (synthetic-rp, synthetic-rn, particle-fixture, one-d)",
                      "scenario");
}

Mode mode_from_name(const std::string& name) {
    if (name == "single-mover") return Mode::SingleMover;
    if (name == "all-moving") return Mode::AllMoving;
    throw ConfigError("unknown mode '" + name + "' (single-mover, all-moving)", "mode");
}

RunConfig default_config() { return RunConfig{}; }

void apply_config_json(const json& doc, RunConfig& target) {
    // Validation happens as keys land, so work on a copy: a rejected document
    // must leave the caller's config exactly as it was.
    RunConfig c = target;
    require_object(doc, "");
    check_keys(doc, "",
               {"scenario", "mode", "seed", "jobs", "out_dir", "log_level", "epsilon", "sweep",
                "one_d", "relax", "milestones", "morse", "vision", "synthetic"});

    if (doc.contains("scenario")) {
        c.sweep.scenario = scenario_from_name(get_str(doc, "", "scenario", "synthetic-rp"));
    }
    if (doc.contains("mode")) {
        c.sweep.mode = mode_from_name(get_str(doc, "", "mode", "single-mover"));
    }
    c.sweep.seed = get_u64(doc, "", "seed", c.sweep.seed);
    c.sweep.jobs = static_cast<int>(get_int(doc, "", "jobs", c.sweep.jobs));
    if (c.sweep.jobs < 1) throw ConfigError("must be >= 1", "jobs");
    c.out_dir = get_str(doc, "", "out_dir", c.out_dir);
    c.log_level = get_str(doc, "", "log_level", c.log_level);
    if (c.log_level != "quiet" && c.log_level != "info" && c.log_level != "debug") {
        throw ConfigError("must be one of quiet, info, debug", "log_level");
    }
    c.epsilon = get_num(doc, "", "epsilon", c.epsilon);
    if (!(c.epsilon > 0.0)) throw ConfigError("must be positive", "epsilon");

    if (doc.contains("sweep")) {
        const json& s = doc.at("sweep");
        require_object(s, "sweep");
        check_keys(s, "sweep", {"eps_list", "a1", "a2", "a3", "auto_extend_1d"});
        if (s.contains("eps_list")) {
            const json& arr = s.at("eps_list");
            if (!arr.is_array() || arr.empty()) {
                throw ConfigError("expected a non-empty array", "sweep.eps_list");
            }
            std::vector<double> eps;
            for (const auto& v : arr) {
                if (!v.is_number()) throw ConfigError("expected numbers", "sweep.eps_list");
                eps.push_back(v.get<double>());
            }
            for (size_t i = 0; i < eps.size(); ++i) {
                if (!(eps[i] > 0.0)) throw ConfigError("values must be positive", "sweep.eps_list");
                if (i > 0 && !(eps[i] < eps[i - 1])) {
                    throw ConfigError("values must be strictly decreasing", "sweep.eps_list");
                }
            }
            c.sweep.eps_list = std::move(eps);
        }
        c.sweep.a1 = get_num(s, "sweep", "a1", c.sweep.a1);
        c.sweep.a2 = get_num(s, "sweep", "a2", c.sweep.a2);
        c.sweep.a3 = get_num(s, "sweep", "a3", c.sweep.a3);
        if (c.sweep.a1 < 0.0) throw ConfigError("must be nonnegative", "sweep.a1");
        if (c.sweep.a2 < 0.0) throw ConfigError("must be nonnegative", "sweep.a2");
        if (c.sweep.a3 < 0.0) throw ConfigError("must be nonnegative", "sweep.a3");
        c.sweep.auto_extend_1d = get_bool(s, "sweep", "auto_extend_1d", c.sweep.auto_extend_1d);
    }

    if (doc.contains("one_d")) {
        const json& o = doc.at("one_d");
        require_object(o, "one_d");
        check_keys(o, "one_d", {"k", "l", "dt_max", "kappa", "step_budget", "sample_stride"});
        c.sweep.k = static_cast<int>(get_int(o, "one_d", "k", c.sweep.k));
        c.sweep.l = static_cast<int>(get_int(o, "one_d", "l", c.sweep.l));
        if (c.sweep.k < 1) throw ConfigError("must be >= 1", "one_d.k");
        if (c.sweep.l < 1) throw ConfigError("must be >= 1", "one_d.l");
        c.sweep.oned.dt_max = get_num(o, "one_d", "dt_max", c.sweep.oned.dt_max);
        c.sweep.oned.kappa = get_num(o, "one_d", "kappa", c.sweep.oned.kappa);
        c.sweep.oned.step_budget = get_int(o, "one_d", "step_budget", c.sweep.oned.step_budget);
        c.sweep.oned.sample_stride =
            static_cast<int>(get_int(o, "one_d", "sample_stride", c.sweep.oned.sample_stride));
        if (!(c.sweep.oned.dt_max > 0.0)) throw ConfigError("must be positive", "one_d.dt_max");
        if (!(c.sweep.oned.kappa >= 1.0)) throw ConfigError("must be >= 1", "one_d.kappa");
        if (c.sweep.oned.step_budget < 1) throw ConfigError("must be >= 1", "one_d.step_budget");
        if (c.sweep.oned.sample_stride < 1) {
            throw ConfigError("must be >= 1", "one_d.sample_stride");
        }
    }

    if (doc.contains("relax")) {
        const json& r = doc.at("relax");
        require_object(r, "relax");
        check_keys(r, "relax", {"dt_max", "kappa", "r_floor", "step_budget", "sample_stride"});
        c.sweep.relax.dt_max = get_num(r, "relax", "dt_max", c.sweep.relax.dt_max);
        c.sweep.relax.kappa = get_num(r, "relax", "kappa", c.sweep.relax.kappa);
        c.sweep.relax.r_floor = get_num(r, "relax", "r_floor", c.sweep.relax.r_floor);
        c.sweep.relax.step_budget = get_int(r, "relax", "step_budget", c.sweep.relax.step_budget);
        c.sweep.relax.sample_stride =
            static_cast<int>(get_int(r, "relax", "sample_stride", c.sweep.relax.sample_stride));
        if (!(c.sweep.relax.dt_max > 0.0)) throw ConfigError("must be positive", "relax.dt_max");
        if (!(c.sweep.relax.kappa >= 1.0)) throw ConfigError("must be >= 1", "relax.kappa");
        if (!(c.sweep.relax.r_floor > 0.0)) throw ConfigError("must be positive", "relax.r_floor");
        if (c.sweep.relax.step_budget < 1) throw ConfigError("must be >= 1", "relax.step_budget");
        if (c.sweep.relax.sample_stride < 1) {
            throw ConfigError("must be >= 1", "relax.sample_stride");
        }
    }

    if (doc.contains("milestones")) {
        const json& m = doc.at("milestones");
        require_object(m, "milestones");
        check_keys(m, "milestones", {"alpha", "beta", "lambda", "c_diag"});
        c.sweep.milestones.alpha = get_num(m, "milestones", "alpha", c.sweep.milestones.alpha);
        c.sweep.milestones.beta = get_num(m, "milestones", "beta", c.sweep.milestones.beta);
        c.sweep.milestones.lambda = get_num(m, "milestones", "lambda", c.sweep.milestones.lambda);
        c.sweep.milestones.c_diag = get_num(m, "milestones", "c_diag", c.sweep.milestones.c_diag);
        if (!(c.sweep.milestones.alpha > 0.0)) throw ConfigError("must be positive", "milestones.alpha");
        if (!(c.sweep.milestones.beta > 0.0 && c.sweep.milestones.beta < 1.0)) {
            throw ConfigError("must lie in (0, 1)", "milestones.beta");
        }
        if (!(c.sweep.milestones.lambda > 0.0 && c.sweep.milestones.lambda <= 1.0)) {
            throw ConfigError("must lie in (0, 1]", "milestones.lambda");
        }
        if (!(c.sweep.milestones.c_diag > 0.0)) {
            throw ConfigError("must be positive", "milestones.c_diag");
        }
    }

    if (doc.contains("morse")) {
        parse_morse(doc.at("morse"), "morse", c.model.morse);
        c.model_given = true;
    }
    if (doc.contains("vision")) {
        parse_vision(doc.at("vision"), "vision", c.model.vision);
        c.model_given = true;
    }
    if (doc.contains("synthetic")) {
        SyntheticParams p = c.sweep.synthetic ? *c.sweep.synthetic : SyntheticParams{};
        parse_synthetic(doc.at("synthetic"), "synthetic", p);
        c.sweep.synthetic = p;
    }

    target = std::move(c);
}

RunConfig parse_config_text(const std::string& text, const std::string& source_name) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_col(text, e.byte);
        std::ostringstream msg;
        msg << source_name << ":" << line << ":" << col << ": malformed JSON: " << e.what();
        throw ConfigError(msg.str());
    }
    RunConfig c;
    apply_config_json(doc, c);
    return c;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

nlohmann::ordered_json config_echo(const RunConfig& config) {
    nlohmann::ordered_json j;
    j["scenario"] = to_string(config.sweep.scenario);
    j["mode"] = to_string(config.sweep.mode);
    j["seed"] = config.sweep.seed;
    j["jobs"] = config.sweep.jobs;
    j["out_dir"] = config.out_dir;
    j["log_level"] = config.log_level;
    j["epsilon"] = config.epsilon;
    j["sweep"] = {{"eps_list", config.sweep.eps_list},
                  {"a1", config.sweep.a1},
                  {"a2", config.sweep.a2},
                  {"a3", config.sweep.a3},
                  {"auto_extend_1d", config.sweep.auto_extend_1d}};
    j["one_d"] = {{"k", config.sweep.k},
                  {"l", config.sweep.l},
                  {"dt_max", config.sweep.oned.dt_max},
                  {"kappa", config.sweep.oned.kappa},
                  {"step_budget", config.sweep.oned.step_budget},
                  {"sample_stride", config.sweep.oned.sample_stride}};
    j["relax"] = {{"dt_max", config.sweep.relax.dt_max},
                  {"kappa", config.sweep.relax.kappa},
                  {"r_floor", config.sweep.relax.r_floor},
                  {"step_budget", config.sweep.relax.step_budget},
                  {"sample_stride", config.sweep.relax.sample_stride}};
    j["milestones"] = {{"alpha", config.sweep.milestones.alpha},
                       {"beta", config.sweep.milestones.beta},
                       {"lambda", config.sweep.milestones.lambda},
                       {"c_diag", config.sweep.milestones.c_diag}};
    j["morse"] = {{"C_r", config.model.morse.C_r},
                  {"l_r", config.model.morse.l_r},
                  {"C_a", config.model.morse.C_a},
                  {"l_a", config.model.morse.l_a}};
    j["vision"] = {{"a", config.model.vision.a},
                   {"b", config.model.vision.b},
                   {"c_norm", config.model.vision.c_norm()}};
    if (config.sweep.synthetic) {
        const SyntheticParams& p = *config.sweep.synthetic;
        j["synthetic"] = {{"theta_star", p.theta_star},
                          {"theta_tilde", p.theta_tilde},
                          {"h", p.h_coeff},
                          {"coupling", {p.coupling.x(), p.coupling.y()}},
                          {"x_star", {p.x_star.x(), p.x_star.y()}},
                          {"profile", profile_echo(p.r_profile)}};
    }
    return j;
}

}  // namespace swarmrelax
