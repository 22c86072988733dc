#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "hill/cli.hpp"
#include "hill/model.hpp"

using namespace hill;
namespace fs = std::filesystem;

namespace {

struct Capture {
    int exit_code;
    std::string out;
};

// run_cli writes through stdio; swap the stdout fd around the call
Capture run(const std::vector<std::string>& args) {
    const fs::path tmp = fs::temp_directory_path() / "hill_cli_capture.txt";
    std::fflush(stdout);
    const int saved = dup(fileno(stdout));
    FILE* sink = std::fopen(tmp.string().c_str(), "w");
    REQUIRE(sink != nullptr);
    dup2(fileno(sink), fileno(stdout));
    const int code = run_cli(args);
    std::fflush(stdout);
    dup2(saved, fileno(stdout));
    close(saved);
    std::fclose(sink);
    std::ifstream is(tmp);
    std::stringstream ss;
    ss << is.rdbuf();
    return {code, ss.str()};
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("ground-state output contains the closed-form threshold energy") {
    const fs::path dir = fresh_dir("hill_cli_ground");
    const Capture cap =
        run({"ground-state", "--alpha", "1", "--out-dir", dir.string()});
    CHECK(cap.exit_code == 0);
    CHECK(cap.out.find("E* = -4.5") != std::string::npos);
    CHECK(cap.out.find("Gamma1") != std::string::npos);
    CHECK(fs::exists(dir / "manifest"));
}

TEST_CASE("classify the equilibrium as trapped") {
    const fs::path dir = fresh_dir("hill_cli_classify");
    const ModelParams p(2.0);
    char state[128];
    std::snprintf(state, sizeof(state), "%.17g,0,0,%.17g", p.q0, p.q0);
    const Capture cap = run({"classify", "--alpha", "2", "--state", state, "--t-max",
                             "2", "--out-dir", dir.string()});
    CHECK(cap.exit_code == 0);
    CHECK(cap.out.find("fate=trapped") != std::string::npos);
}

TEST_CASE("bad arguments exit with status 2") {
    CHECK(run_cli(std::vector<std::string>{"no-such-command"}) == 2);
    CHECK(run_cli(std::vector<std::string>{"classify", "--alpha", "2"}) == 2);  // missing state
    CHECK(run_cli(std::vector<std::string>{"verify", "--suite", "bogus"}) == 2);
}

TEST_CASE("simulate writes trajectory, events and manifest") {
    const fs::path dir = fresh_dir("hill_cli_sim");
    const Capture cap = run({"simulate", "--alpha", "2", "--state", "0.4,0.1,0,0",
                             "--chart", "cart", "--t-max", "20", "--out-dir",
                             dir.string()});
    CHECK(cap.exit_code == 0);
    CHECK(cap.out.find("fate=collision") != std::string::npos);
    REQUIRE(fs::exists(dir / "trajectory.csv"));
    REQUIRE(fs::exists(dir / "events.csv"));
    REQUIRE(fs::exists(dir / "manifest"));
    std::ifstream is(dir / "trajectory.csv");
    std::string line;
    std::getline(is, line);
    CHECK(line.rfind("# hill-trajectory v1", 0) == 0);
    std::getline(is, line);
    CHECK(line == "t,x,y,px,py,E,W,K,I,dq");
}

TEST_CASE("hill-region subcommand writes the polyline file") {
    const fs::path dir = fresh_dir("hill_cli_region");
    const Capture cap = run({"hill-region", "--alpha", "1", "--level", "-4.6",
                             "--resolution", "128", "--out-dir", dir.string()});
    CHECK(cap.exit_code == 0);
    std::ifstream is(dir / "hill-region.csv");
    std::string line;
    std::getline(is, line);
    CHECK(line.rfind("# hill-region v1 alpha=1 level=-4.6", 0) == 0);
    std::getline(is, line);
    CHECK(line == "poly,vertex,x,y");
}

TEST_CASE("verify variational suite exits zero on the strong potential") {
    const fs::path dir = fresh_dir("hill_cli_verify");
    const Capture cap = run({"verify", "--suite", "variational", "--alpha", "2",
                             "--samples", "100000", "--seed", "5", "--out-dir",
                             dir.string()});
    CHECK(cap.exit_code == 0);
    CHECK(cap.out.find("verify variational: PASS") != std::string::npos);
    CHECK(fs::exists(dir / "verify-variational.txt"));
}

TEST_CASE("scan subcommand reads the config file and writes the grid") {
    const fs::path dir = fresh_dir("hill_cli_scan");
    const fs::path cfg = dir / "scan.cfg";
    {
        std::ofstream os(cfg);
        os << "# small slice\n"
              "alpha = 2\n"
              "section = energy_slice\n"
              "energy = -5.86\n"
              "x0 = -2.6\nx1 = 2.6\ny0 = -2.6\ny1 = 2.6\n"
              "nx = 12\nny = 12\n"
              "t_max = 40\n"
              "jobs = 2\n"
              "out = slice\n";
    }
    const Capture cap =
        run({"scan", "--config", cfg.string(), "--out-dir", dir.string()});
    CHECK(cap.exit_code == 0);
    REQUIRE(fs::exists(dir / "slice.csv"));
    REQUIRE(fs::exists(dir / "slice.matrix"));
    std::ifstream is(dir / "slice.csv");
    std::string line;
    std::getline(is, line);
    CHECK(line.rfind("# hill-scan v1 alpha=2 section=energy_slice", 0) == 0);
}
