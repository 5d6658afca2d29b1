#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// The driven binary and the committed help transcript, both handed in by the
// test harness environment.
std::string bin_path() {
    const char* p = std::getenv("SWARMRELAX_BIN");
    REQUIRE_MESSAGE(p != nullptr, "SWARMRELAX_BIN must point at the CLI binary");
    return p;
}

std::string golden_help_path() {
    const char* p = std::getenv("SWARMRELAX_GOLDEN_HELP");
    REQUIRE_MESSAGE(p != nullptr, "SWARMRELAX_GOLDEN_HELP must point at the help transcript");
    return p;
}

fs::path work_root() {
    static const fs::path root = [] {
        const fs::path d =
            fs::temp_directory_path() / ("swarmrelax_cli_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return root;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE_MESSAGE(bool(in), "missing file: " << p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    REQUIRE(bool(out));
    out << content;
}

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

RunResult run_cli(const std::string& args) {
    static int counter = 0;
    const fs::path out = work_root() / ("stdout_" + std::to_string(counter) + ".txt");
    const fs::path err = work_root() / ("stderr_" + std::to_string(counter) + ".txt");
    ++counter;
    const std::string cmd = "'" + bin_path() + "' " + args + " > '" + out.string() + "' 2> '" +
                            err.string() + "'";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

}  // namespace

TEST_CASE("help output matches the committed transcript") {
    const RunResult r = run_cli("--help");
    CHECK(r.code == 0);
    CHECK(r.out == slurp(golden_help_path()));
}

TEST_CASE("usage errors exit with the config-error code") {
    CHECK(run_cli("").code == 2);                      // no subcommand
    CHECK(run_cli("--no-such-flag scaling-1d").code == 2);
    CHECK(run_cli("scaling-2d --scenario one-d").code == 2);
    CHECK(run_cli("scaling-1d --eps-list 1e-4,1e-3").code == 2);  // not decreasing

    const fs::path bad = work_root() / "bad_config.json";
    spit(bad, "{ \"seed\": }");
    const RunResult r = run_cli("scaling-1d --config '" + bad.string() + "'");
    CHECK(r.code == 2);
    CHECK(r.err.find("config error:") != std::string::npos);
    CHECK(r.err.find("malformed JSON") != std::string::npos);

    const RunResult u = run_cli("roots --scenario nowhere");
    CHECK(u.code == 2);
    CHECK(u.err.find("scenario") != std::string::npos);
}

TEST_CASE("root scan prints the synthetic root set as JSON") {
    const RunResult r = run_cli("roots --log-level quiet");
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j.at("scenario") == "synthetic-rp");
    CHECK_FALSE(j.at("degenerate_everywhere").get<bool>());
    REQUIRE(j.at("roots").size() == 2);
    // The stock cubic at x*: the double root at the fold plus the admissible
    // target.
    bool saw_fold = false, saw_target = false;
    for (const auto& root : j.at("roots")) {
        const std::string kind = root.at("kind").get<std::string>();
        const double theta = root.at("theta").get<double>();
        if (kind == "near-degenerate") {
            saw_fold = std::abs(theta + 0.57) < 1e-6;
        } else if (kind == "simple-descending") {
            saw_target = std::abs(theta - 0.22) < 1e-6 && root.at("admissible").get<bool>();
        }
    }
    CHECK(saw_fold);
    CHECK(saw_target);
}

TEST_CASE("scalar scaling run writes a report and exits cleanly") {
    const fs::path dir = work_root() / "s1";
    const fs::path cfgp = work_root() / "s1.json";
    spit(cfgp, R"({"scenario": "one-d", "log_level": "quiet",
                   "sweep": {"eps_list": [1e-3, 3.1622776601683794e-4, 1e-4],
                             "auto_extend_1d": false}})");
    const RunResult r =
        run_cli("scaling-1d --config '" + cfgp.string() + "' --out '" + dir.string() + "'");
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j.at("scenario") == "one-d");
    CHECK(j.at("rows_ok") == 3);
    CHECK(j.at("fit").at("slope").get<double>() > 0.5);
    CHECK(j.at("fit").at("slope").get<double>() < 0.8);
    CHECK(fs::exists(dir / "rows.csv"));
    CHECK(fs::exists(dir / "fit.json"));
    CHECK(fs::exists(dir / "plot.txt"));
    const json fit = json::parse(slurp(dir / "fit.json"));
    CHECK(fit.at("fit_status") == "ok");

    // The same seed reproduces the report bytes; flags repeat the config path.
    const fs::path dir2 = work_root() / "s1_again";
    const RunResult r2 =
        run_cli("scaling-1d --config '" + cfgp.string() + "' --out '" + dir2.string() + "'");
    REQUIRE(r2.code == 0);
    CHECK(slurp(dir2 / "rows.csv") == slurp(dir / "rows.csv"));
    CHECK(slurp(dir2 / "fit.json") == slurp(dir / "fit.json"));
}

TEST_CASE("flags override the config file") {
    const fs::path dir = work_root() / "s1_flags";
    const fs::path cfgp = work_root() / "s1_flags.json";
    spit(cfgp, R"({"scenario": "one-d", "log_level": "quiet", "seed": 12,
                   "sweep": {"auto_extend_1d": false}})");
    const RunResult r = run_cli("scaling-1d --config '" + cfgp.string() +
                                "' --eps-list 1e-3,1e-4 --out '" + dir.string() + "'");
    REQUIRE(r.code == 1);  // two rows cannot be fitted, and that is reported
    const json j = json::parse(r.out);
    CHECK(j.at("rows_total") == 2);  // flag replaced the five-point default
    CHECK(j.at("rows_ok") == 2);
    CHECK(j.at("fit").is_null());
}

TEST_CASE("a sweep too small to fit exits nonzero") {
    const fs::path dir = work_root() / "s2_thin";
    const RunResult r = run_cli("scaling-2d --log-level quiet --eps-list 1e-3 --out '" +
                                dir.string() + "'");
    CHECK(r.code == 1);
    const json j = json::parse(r.out);
    CHECK(j.at("rows_ok") == 1);
    CHECK(j.at("fit").is_null());
    const std::string status = j.at("fit_status").get<std::string>();
    CHECK(status.rfind("fit-unavailable", 0) == 0);
}

TEST_CASE("recorded breakdown events feed the relaxation runner") {
    // Synthetic first-order run to breakdown, event written to disk.
    const fs::path traj = work_root() / "fo.csv";
    const fs::path event = work_root() / "event.json";
    const RunResult fo =
        run_cli("simulate-fo --log-level quiet --scenario synthetic-rp --start-dist 0.1 --out '" +
                traj.string() + "' --event-out '" + event.string() + "'");
    REQUIRE(fo.code == 0);
    const json fj = json::parse(fo.out);
    REQUIRE_FALSE(fj.at("breakdown").is_null());
    CHECK(fj.at("breakdown").at("target_supported").get<bool>());
    CHECK(std::abs(fj.at("breakdown").at("theta_star").get<double>() + 0.57) < 0.05);
    CHECK(fs::exists(event));
    CHECK(slurp(traj).rfind("t,", 0) == 0);

    // The recorded event restarts the relaxation at the bisected origin.
    const fs::path rtraj = work_root() / "relax.csv";
    const RunResult rx = run_cli("simulate-relax --log-level quiet --epsilon 1e-3 --event-in '" +
                                 event.string() + "' --out '" + rtraj.string() + "'");
    REQUIRE(rx.code == 0);
    const json rj = json::parse(rx.out);
    CHECK(rj.at("origin") == "bisected-breakdown");
    CHECK(rj.at("tau").get<double>() > 0.0);
    CHECK(rj.at("classification") == "positive");
    const std::string csv = slurp(rtraj);
    CHECK(csv.rfind("t,x,y,theta,r,eta,H,R", 0) == 0);
}

TEST_CASE("events whose jump target is unsupported are refused with exit 3") {
    // Flipped coupling: the fold profile falls instead of rising, so the jump
    // analysis does not apply. The record still loads; the measurement is the
    // part that must refuse.
    json ev;
    ev["version"] = 1;
    ev["t_star"] = 0.5;
    ev["particle"] = 0;
    ev["theta_star"] = -0.57;
    ev["r_star"] = 1.0;
    ev["A_star"] = -1.0;
    ev["theta_tilde"] = 0.22;
    ev["delta_dbl_used"] = 1e-6;
    ev["tol_time"] = 1e-10;
    ev["target_supported"] = false;
    ev["unsupported_reason"] = "fold profile falls along the drift (A* <= 0)";
    json state;
    state["t"] = 0.5;
    state["x"] = json::array({json::array({0.0, 0.0})});
    json branch = json::object();
    branch["theta"] = -0.57;
    branch["r"] = 1.0;
    state["branch"] = json::array({branch});
    ev["state"] = state;
    json synthetic;
    synthetic["coupling"] = json::array({-std::cos(-0.57), -std::sin(-0.57)});
    ev["system"] = json::object();
    ev["system"]["kind"] = "synthetic";
    ev["system"]["synthetic"] = synthetic;
    const fs::path evp = work_root() / "unsupported_event.json";
    spit(evp, ev.dump(2));

    const RunResult r =
        run_cli("simulate-relax --log-level quiet --event-in '" + evp.string() + "'");
    CHECK(r.code == 3);
    CHECK(r.err.find("unsupported regime:") != std::string::npos);

    // Same record with a mangled system kind is a config error instead.
    json bad = ev;
    bad["system"]["kind"] = "mystery";
    const fs::path badp = work_root() / "bad_kind_event.json";
    spit(badp, bad.dump(2));
    CHECK(run_cli("simulate-relax --log-level quiet --event-in '" + badp.string() + "'").code ==
          2);
}

TEST_CASE("fixture demo runs both phases through the jump") {
    const fs::path traj = work_root() / "demo.csv";
    const fs::path event = work_root() / "demo_event.json";
    const RunResult r = run_cli("run1-demo --log-level quiet --t-post 1.0 --out '" +
                                traj.string() + "' --event-out '" + event.string() + "'");
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j.at("event").at("particle") == 2);
    CHECK(std::abs(j.at("event").at("t_star").get<double>() - 0.826897057052702) < 1e-6);
    CHECK(std::abs(j.at("jump").at("theta_from").get<double>() + 0.57) < 1e-9);
    CHECK(std::abs(j.at("jump").at("theta_to").get<double>() + 0.34449001508573313) < 1e-9);
    CHECK(j.at("jump").at("r_to").get<double>() > 0.01);
    // Both phases present in the trajectory file.
    const std::string csv = slurp(traj);
    CHECK(csv.rfind("phase,t,", 0) == 0);
    CHECK(csv.find("\n1,") != std::string::npos);
    CHECK(csv.find("\n2,") != std::string::npos);

    // The demo's own event file drives a fixture relaxation run.
    const fs::path rtraj = work_root() / "demo_relax.csv";
    const RunResult rx = run_cli("simulate-relax --log-level quiet --epsilon 1e-3 --event-in '" +
                                 event.string() + "' --out '" + rtraj.string() + "'");
    REQUIRE(rx.code == 0);
    const json rj = json::parse(rx.out);
    CHECK(rj.at("origin") == "bisected-breakdown");
    CHECK(rj.at("tau").get<double>() > 0.0);
    CHECK(std::abs(rj.at("theta_tilde").get<double>() + 0.34449001508573313) < 1e-6);
}
