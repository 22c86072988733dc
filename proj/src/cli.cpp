#include "hill/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "hill/ground_state.hpp"
#include "hill/integrate.hpp"
#include "hill/linear.hpp"
#include "hill/model.hpp"
#include "hill/report.hpp"
#include "hill/rng.hpp"
#include "hill/scan.hpp"

namespace hill {

namespace {

namespace fs = std::filesystem;

struct CommonOpts {
    double alpha = 2.0;
    std::uint64_t seed = 12345;
    std::string out_dir = ".";
    int jobs = 1;
};

void write_file(const fs::path& path, const std::string& header, const Report& doc) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    if (!header.empty()) os << header << "\n";
    doc.write(os);
}

// Every run leaves a manifest echoing the fully resolved configuration.
void write_manifest(const CommonOpts& c, const std::string& command, Report extra) {
    Report m;
    m.set("format", std::string("hill-manifest v1"));
    m.set("command", command);
    m.set("alpha", c.alpha);
    m.set("seed", static_cast<long long>(c.seed));
    m.set("jobs", c.jobs);
    for (const auto& kv : extra.items()) m.set(kv.first, kv.second);
    fs::create_directories(c.out_dir);
    std::ofstream os(fs::path(c.out_dir) / "manifest");
    m.write(os);
}

SymplecticState parse_state(const std::string& text, const std::string& chart,
                            const ModelParams&) {
    double v[4];
    if (std::sscanf(text.c_str(), "%lf,%lf,%lf,%lf", &v[0], &v[1], &v[2], &v[3]) != 4)
        throw CLI::ValidationError("--state", "expected x,y,a,b");
    if (chart == "cart") return to_symplectic(CartesianState{v[0], v[1], v[2], v[3]});
    return SymplecticState{v[0], v[1], v[2], v[3]};
}

std::map<std::string, std::string> read_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read config " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(is, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

struct CalibratedModel {
    ModelParams p;
    SymplecticBasis basis;
    Calibration cal;
};

CalibratedModel calibrate(double alpha, std::uint64_t seed, bool with_ejection,
                          const IntegratorConfig& cfg) {
    CalibratedModel m{ModelParams(alpha), {}, {}};
    m.basis = build_basis(m.p);
    m.cal.delta_e = calibrate_delta_e(m.basis, m.p, 4000, seed + 1);
    m.cal.delta_x = m.cal.delta_e / 4.0;
    if (with_ejection) measure_ejection_constants(m.p, m.basis, m.cal, cfg);
    return m;
}

int cmd_ground_state(const CommonOpts& c) {
    const ModelParams p(c.alpha);
    const auto [l1, l2] = lagrange_points(p);
    std::printf("alpha = %.12g\n", p.alpha);
    std::printf("L1 = (%.12g, %.12g)\n", l1.x, l1.y);
    std::printf("L2 = (%.12g, %.12g)\n", l2.x, l2.y);
    std::printf("E* = %.12g\n", ground_state_energy(p));
    std::printf("%-8s %-12s %-22s %-22s %-22s\n", "point", "multiplier", "radius",
                "energy", "state (x,y,xdot,ydot)");
    for (const auto& cp : critical_point_catalog(p)) {
        std::printf("%-8s %-12.6g %-22.15g %-22.15g (%.12g, %.12g, %.12g, %.12g)\n",
                    to_string(cp.label), cp.multiplier, cp.radius, cp.energy,
                    cp.state.x, cp.state.y, cp.state.vx, cp.state.vy);
    }
    Report extra;
    extra.set("e_star", p.e_star);
    write_manifest(c, "ground-state", extra);
    return 0;
}

int cmd_linearize(const CommonOpts& c, const IntegratorConfig& cfg) {
    const CalibratedModel m = calibrate(c.alpha, c.seed, true, cfg);
    std::printf("alpha = %.12g\n", m.p.alpha);
    std::printf("k = %.15g\n", m.basis.k);
    std::printf("omega = %.15g\n", m.basis.omega);
    const char* names[4] = {"xi_plus", "xi_minus", "eta1", "eta2"};
    const Vec4* vecs[4] = {&m.basis.xi_plus, &m.basis.xi_minus, &m.basis.eta1,
                           &m.basis.eta2};
    for (int v = 0; v < 4; ++v)
        std::printf("%-9s = (%.15g, %.15g, %.15g, %.15g)\n", names[v], (*vecs[v])(0),
                    (*vecs[v])(1), (*vecs[v])(2), (*vecs[v])(3));
    std::printf("delta_E = %.15g\n", m.cal.delta_e);
    std::printf("delta_X = %.15g\n", m.cal.delta_x);
    std::printf("C_star = %.15g\n", m.cal.c_star);
    std::printf("T_star = %.15g\n", m.cal.t_star);

    fs::create_directories(c.out_dir);
    write_file(fs::path(c.out_dir) / "basis.txt", "",
               basis_document(m.p, m.basis, m.cal));
    Report extra;
    extra.set("delta_e", m.cal.delta_e);
    extra.set("delta_x", m.cal.delta_x);
    extra.set("c_star", m.cal.c_star);
    extra.set("t_star", m.cal.t_star);
    extra.set("file.basis", std::string("basis.txt"));
    write_manifest(c, "linearize", extra);
    return 0;
}

int cmd_simulate(const CommonOpts& c, const std::string& state, const std::string& chart,
                 IntegratorConfig cfg) {
    const CalibratedModel m = calibrate(c.alpha, c.seed, false, cfg);
    const SymplecticState s0 = parse_state(state, chart, m.p);
    if (cfg.sample_dt == 0.0) cfg.sample_dt = 0.01;

    const Fate fate = classify_fate(m.p, &m.basis, &m.cal, s0, cfg);
    fs::create_directories(c.out_dir);
    {
        std::ofstream os(fs::path(c.out_dir) / "trajectory.csv");
        os << "# hill-trajectory v1 alpha=" << format_double(c.alpha) << "\n";
        write_trajectory_csv(os, m.p, &m.basis, &m.cal, fate.trajectory);
    }
    {
        std::ofstream os(fs::path(c.out_dir) / "events.csv");
        os << "# hill-events v1 alpha=" << format_double(c.alpha) << "\n";
        write_events_csv(os, fate.trajectory.events);
    }
    std::printf("fate=%s t=%.12g predicted=%s matches=%s\n", to_string(fate.tag),
                fate.t_terminal, to_string(fate.predicted),
                fate.matches_prediction ? "yes" : "no");
    Report extra;
    extra.set("t_max", cfg.t_max);
    extra.set("delta_e", m.cal.delta_e);
    extra.set("fate", std::string(to_string(fate.tag)));
    extra.set("file.trajectory", std::string("trajectory.csv"));
    extra.set("file.events", std::string("events.csv"));
    write_manifest(c, "simulate", extra);
    return 0;
}

int cmd_classify(const CommonOpts& c, const std::string& state, const std::string& chart,
                 const IntegratorConfig& cfg) {
    const CalibratedModel m = calibrate(c.alpha, c.seed, false, cfg);
    const SymplecticState s0 = parse_state(state, chart, m.p);
    const Fate fate = classify_fate(m.p, &m.basis, &m.cal, s0, cfg);
    std::printf("fate=%s t=%.12g E=%.12g W=%.12g K=%.12g predicted=%s matches=%s\n",
                to_string(fate.tag), fate.t_terminal, fate.e0, fate.w0, fate.k0,
                to_string(fate.predicted), fate.matches_prediction ? "yes" : "no");
    Report extra;
    extra.set("fate", std::string(to_string(fate.tag)));
    write_manifest(c, "classify", extra);
    return fate.matches_prediction ? 0 : 1;
}

int cmd_hill_region(const CommonOpts& c, double level, int resolution) {
    const ModelParams p(c.alpha);
    const auto polys = hill_region_boundary(p, level, resolution);
    fs::create_directories(c.out_dir);
    std::ofstream os(fs::path(c.out_dir) / "hill-region.csv");
    os << "# hill-region v1 alpha=" << format_double(c.alpha)
       << " level=" << format_double(level) << " resolution=" << resolution << "\n";
    os << "poly,vertex,x,y\n";
    for (size_t k = 0; k < polys.size(); ++k)
        for (size_t v = 0; v < polys[k].size(); ++v)
            os << k << ',' << v << ',' << format_double(polys[k][v].x) << ','
               << format_double(polys[k][v].y) << "\n";
    std::printf("polylines=%zu\n", polys.size());
    Report extra;
    extra.set("level", level);
    extra.set("resolution", resolution);
    extra.set("polylines", static_cast<long long>(polys.size()));
    extra.set("file.boundary", std::string("hill-region.csv"));
    write_manifest(c, "hill-region", extra);
    return 0;
}

int cmd_scan(const CommonOpts& c, const std::string& config_path) {
    auto kv = read_config(config_path);
    ScanSpec spec;
    auto getd = [&](const char* key, double dflt) {
        auto it = kv.find(key);
        return it == kv.end() ? dflt : std::stod(it->second);
    };
    auto geti = [&](const char* key, int dflt) {
        auto it = kv.find(key);
        return it == kv.end() ? dflt : std::stoi(it->second);
    };
    spec.alpha = getd("alpha", c.alpha);
    if (kv.count("section")) spec.section = scan_section_from(kv["section"]);
    spec.window = {getd("x0", -2.0), getd("x1", 2.0), getd("y0", -2.0), getd("y1", 2.0)};
    spec.nx = geti("nx", 64);
    spec.ny = geti("ny", 64);
    spec.energy = getd("energy", 0.0);
    spec.v_angle = getd("v_angle", 0.0);
    spec.seed = static_cast<std::uint64_t>(geti("seed", static_cast<int>(c.seed)));
    spec.jobs = geti("jobs", c.jobs);
    spec.cfg.t_max = getd("t_max", spec.cfg.t_max);
    spec.cfg.rel_tol = getd("rel_tol", spec.cfg.rel_tol);
    spec.cfg.abs_tol = getd("abs_tol", spec.cfg.abs_tol);

    const FateGrid grid = run_scan(spec);
    fs::create_directories(c.out_dir);
    const std::string prefix = kv.count("out") ? kv["out"] : std::string("scan");
    {
        std::ofstream os(fs::path(c.out_dir) / (prefix + ".csv"));
        write_fate_grid(os, grid);
    }
    {
        std::ofstream os(fs::path(c.out_dir) / (prefix + ".matrix"));
        write_fate_grid_matrix(os, grid);
    }
    const bool sub_ground =
        spec.section == ScanSection::EnergySlice && spec.energy < ModelParams(spec.alpha).e_star;
    const BoundaryCensus census = boundary_census(grid, sub_ground);
    std::printf("feasible=%lld boundary=%lld mismatches=%lld max_dist_w0=%.3g\n",
                census.feasible_cells, census.boundary_cells, census.mismatch_cells,
                census.max_dist_to_w0);
    Report extra;
    extra.set("section", std::string(to_string(spec.section)));
    extra.set("nx", spec.nx);
    extra.set("ny", spec.ny);
    extra.set("energy", spec.energy);
    extra.set("delta_e", grid.cal.delta_e);
    extra.set("file.grid", prefix + ".csv");
    extra.set("file.matrix", prefix + ".matrix");
    write_manifest(c, "scan", extra);
    return 0;
}

int cmd_verify(const CommonOpts& c, const std::string& suite, long long samples,
               int ensemble, const IntegratorConfig& cfg) {
    Report rep;
    const ModelParams p(c.alpha);
    if (suite == "variational") {
        rep = verify_variational_infimum(p, samples, c.seed);
    } else if (suite == "ejection") {
        const CalibratedModel m = calibrate(c.alpha, c.seed, false, cfg);
        rep.set("suite", std::string("ejection"));
        rep.set("delta_e", m.cal.delta_e);
        int run = 0;
        for (double r : {1e-3, 1e-4, 1e-5}) {
            for (int sign : {+1, -1}) {
                const EjectionResult res =
                    ejection_experiment(m.p, m.basis, m.cal, r, sign, cfg);
                rep.check("forward_r" + std::to_string(run), res.report.ok());
                ++run;
            }
        }
        const EjectionResult back =
            ejection_experiment(m.p, m.basis, m.cal, 1e-4, +1, cfg, true);
        rep.check("backward", back.report.ok());
    } else if (suite == "onepass") {
        const CalibratedModel m = calibrate(c.alpha, c.seed, true, cfg);
        const double eps = m.cal.delta_e / 100.0;
        Report r = one_pass_experiment(m.p, m.basis, m.cal, eps, 10.0 * eps, ensemble,
                                       cfg, c.seed);
        rep = std::move(r);
    } else if (suite == "threshold") {
        const CalibratedModel m = calibrate(c.alpha, c.seed, false, cfg);
        rep = threshold_experiment(m.p, m.basis, m.cal, ensemble, cfg, c.seed);
    } else if (suite == "invariance") {
        rep.set("suite", std::string("invariance"));
        rep.set("alpha", c.alpha);
        Rng rng(c.seed, 41);
        int failures = 0;
        int runs = 0;
        for (int side = 0; side < 2; ++side) {
            const bool inner = side == 0;
            for (int i = 0; i < ensemble; ++i) {
                double x, y;
                for (;;) {
                    x = rng.uniform(inner ? -p.q0 : -4.0 * p.q0, inner ? p.q0 : 4.0 * p.q0);
                    y = rng.uniform(-2.0 * p.q0, 2.0 * p.q0);
                    const double r = std::hypot(x, y);
                    if (r < 0.05) continue;
                    const double w = scaling_w(p, x, y);
                    if (inner != (w < 0.0)) continue;
                    if (effective_potential(p, x, y) > p.e_star - 0.05) continue;
                    break;
                }
                const double v = effective_potential(p, x, y);
                const double spd =
                    rng.uniform(0.0, 0.95 * std::sqrt(2.0 * (p.e_star - 0.05 - v)));
                const double th = rng.uniform(0.0, 2.0 * M_PI);
                const SymplecticState s0 = to_symplectic(
                    CartesianState{x, y, spd * std::cos(th), spd * std::sin(th)});
                const Report one = invariance_audit(p, s0, cfg);
                ++runs;
                if (!one.ok()) ++failures;
            }
        }
        rep.set("runs", runs);
        rep.set("failures", failures);
        rep.check("all_orbits_invariant", failures == 0);
    } else {
        throw CLI::ValidationError("--suite", "unknown suite " + suite);
    }

    rep.write(std::cout);
    std::printf("verify %s: %s\n", suite.c_str(), rep.ok() ? "PASS" : "FAIL");
    fs::create_directories(c.out_dir);
    write_file(fs::path(c.out_dir) / ("verify-" + suite + ".txt"),
               "# hill-verify v1 suite=" + suite, rep);
    Report extra;
    extra.set("suite", suite);
    extra.set("result", std::string(rep.ok() ? "pass" : "fail"));
    write_manifest(c, "verify", extra);
    return rep.ok() ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Numerical toolkit for the rotating-frame lunar problem with "
                 "homogeneous potential"};
    app.require_subcommand(1);

    CommonOpts common;
    IntegratorConfig cfg;
    app.add_option("--out-dir", common.out_dir, "output directory");

    auto add_common = [&](CLI::App* sub, bool with_tolerances = true) {
        sub->add_option("--alpha", common.alpha, "potential exponent");
        sub->add_option("--seed", common.seed, "random seed");
        sub->add_option("--out-dir", common.out_dir, "output directory");
        sub->add_option("--jobs", common.jobs, "worker threads");
        if (with_tolerances) {
            sub->add_option("--rel-tol", cfg.rel_tol, "integrator relative tolerance");
            sub->add_option("--abs-tol", cfg.abs_tol, "integrator absolute tolerance");
            sub->add_option("--t-max", cfg.t_max, "integration horizon");
        }
    };

    auto* ground = app.add_subcommand("ground-state", "equilibria and critical points");
    add_common(ground, false);

    auto* lin = app.add_subcommand("linearize", "saddle-center data and calibration");
    add_common(lin);

    std::string state_text, chart = "symp";
    auto* sim = app.add_subcommand("simulate", "integrate one trajectory");
    add_common(sim);
    sim->add_option("--state", state_text, "initial state a,b,c,d")->required();
    sim->add_option("--chart", chart, "cart|symp")
        ->check(CLI::IsMember({"cart", "symp"}));
    sim->add_option("--sample-dt", cfg.sample_dt, "output sampling step");

    auto* cls = app.add_subcommand("classify", "one-line fate classification");
    add_common(cls);
    cls->add_option("--state", state_text, "initial state a,b,c,d")->required();
    cls->add_option("--chart", chart, "cart|symp")
        ->check(CLI::IsMember({"cart", "symp"}));

    double level = 0.0;
    int resolution = 512;
    auto* hr = app.add_subcommand("hill-region", "level set of the effective potential");
    add_common(hr, false);
    hr->add_option("--level", level, "energy level c")->required();
    hr->add_option("--resolution", resolution, "grid cells per axis");

    std::string config_path;
    auto* scan = app.add_subcommand("scan", "fate map over a grid of initial conditions");
    add_common(scan);
    scan->add_option("--config", config_path, "scan config file")->required();

    std::string suite;
    long long samples = 1000000;
    int ensemble = 100;
    auto* verify = app.add_subcommand("verify", "run a verification suite");
    add_common(verify);
    verify->add_option("--suite", suite, "variational|ejection|onepass|threshold|invariance")
        ->required()
        ->check(CLI::IsMember({"variational", "ejection", "onepass", "threshold",
                               "invariance"}));
    verify->add_option("--samples", samples, "sample count");
    verify->add_option("--ensemble", ensemble, "ensemble size");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (ground->parsed()) return cmd_ground_state(common);
        if (lin->parsed()) return cmd_linearize(common, cfg);
        if (sim->parsed()) return cmd_simulate(common, state_text, chart, cfg);
        if (cls->parsed()) return cmd_classify(common, state_text, chart, cfg);
        if (hr->parsed()) return cmd_hill_region(common, level, resolution);
        if (scan->parsed()) return cmd_scan(common, config_path);
        if (verify->parsed())
            return cmd_verify(common, suite, samples, ensemble, cfg);
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args);
}

}  // namespace hill
