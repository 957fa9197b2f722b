#include "polysle/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "polysle/io.hpp"
#include "polysle/scmap.hpp"
#include "polysle/verify.hpp"

namespace polysle {

namespace {

namespace fs = std::filesystem;

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::int64_t seed_override = -1;
    int threads = 0;
    std::string test_name;
    std::vector<double> frames;
    bool verbose = false;
};

DrivingPath make_path(const RunConfigFile& rc, std::uint64_t seed) {
    if (rc.driver.type == DriverSpec::Type::Brownian)
        return simulate_driver(rc.cfg, rc.T, rc.dt, seed, rc.solver);
    const DriverSpec d = rc.driver;
    auto fn = [d](double t) {
        return d.type == DriverSpec::Type::Constant ? d.value : d.slope * t;
    };
    return simulate_with_driver(rc.cfg, rc.T, rc.dt, fn, rc.solver);
}

void write_manifest(const fs::path& dir, const std::string& command, const RunConfigFile& rc,
                    std::uint64_t seed, const std::vector<std::string>& outputs,
                    std::optional<double> sigma = std::nullopt) {
    write_text_file(dir / "manifest.json",
                    make_manifest(command, rc, seed, outputs, sigma).dump(2) + "\n");
}

void require_geometry(const RunConfigFile& rc) {
    if (!rc.has_geometry)
        throw ConfigError("this command needs prevertices and betas (or rhos) in the config");
}

int cmd_simulate(const RunConfigFile& rc, const CommonArgs& common, std::uint64_t seed) {
    require_geometry(rc);
    const fs::path dir(common.out_dir);
    const DrivingPath path = make_path(rc, seed);

    std::ostringstream csv;
    write_path_csv(path, csv);
    write_text_file(dir / "path.csv", csv.str());
    std::ofstream bin(dir / "path.bin", std::ios::binary);
    write_path_binary(path, bin);
    bin.close();
    write_manifest(dir, "simulate", rc, seed, {"path.csv", "path.bin"}, path.sigma);
    if (common.verbose)
        std::cerr << "simulate: " << path.steps() << " steps"
                  << (path.sigma ? " (stopped at sigma)" : "") << "\n";
    return 0;
}

int cmd_trace(const RunConfigFile& rc, const CommonArgs& common, std::uint64_t seed) {
    require_geometry(rc);
    const fs::path dir(common.out_dir);
    RunConfigFile rc2 = rc;
    rc2.solver.accumulate = false; // the trace needs only the driver
    const DrivingPath path = make_path(rc2, seed);
    const int stride = rc.trace_section.is_object() ? rc.trace_section.value("stride", 10) : 10;
    const TraceSample trace = compute_trace(path, stride);

    std::ostringstream csv;
    write_trace_csv(trace, csv);
    write_text_file(dir / "trace.csv", csv.str());
    write_text_file(dir / "trace.svg", trace_svg(trace));
    write_manifest(dir, "trace", rc, seed, {"trace.csv", "trace.svg"}, path.sigma);
    return 0;
}

int cmd_map(const RunConfigFile& rc, const CommonArgs& common, std::uint64_t seed) {
    require_geometry(rc);
    if (!rc.map_section.is_object() || !rc.map_section.contains("time"))
        throw ConfigError("map command needs a map.time entry");
    const double t = rc.map_section["time"].get<double>();
    if (t < 0.0 || t > rc.T) throw ConfigError("map.time outside the simulated range");
    const fs::path dir(common.out_dir);
    const DrivingPath path = make_path(rc, seed);
    const PolygonSnapshot snap = polygon_snapshot(path, t);
    write_text_file(dir / "snapshot.svg", snapshot_svg(snap));
    write_text_file(dir / "snapshot.json", snapshot_json(snap).dump(2) + "\n");
    write_manifest(dir, "map", rc, seed, {"snapshot.svg", "snapshot.json"}, path.sigma);
    return 0;
}

int cmd_evolve(const RunConfigFile& rc, const CommonArgs& common, std::uint64_t seed) {
    require_geometry(rc);
    std::vector<double> frames = common.frames;
    if (frames.empty() && rc.evolve_section.is_object() && rc.evolve_section.contains("frames"))
        frames = rc.evolve_section["frames"].get<std::vector<double>>();
    if (frames.empty()) throw ConfigError("evolve command needs frame times");
    const fs::path dir(common.out_dir);
    const DrivingPath path = make_path(rc, seed);
    std::vector<std::string> outputs;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (path.sigma && frames[i] >= *path.sigma)
            throw ConfigError("frame time " + std::to_string(frames[i]) +
                              " is past the collision time");
        const PolygonSnapshot snap = polygon_snapshot(path, frames[i]);
        char name[64];
        std::snprintf(name, sizeof(name), "frame_%03zu", i);
        write_text_file(dir / (std::string(name) + ".svg"), snapshot_svg(snap));
        write_text_file(dir / (std::string(name) + ".json"),
                        snapshot_json(snap).dump(2) + "\n");
        outputs.push_back(std::string(name) + ".svg");
        outputs.push_back(std::string(name) + ".json");
    }
    write_manifest(dir, "evolve", rc, seed, outputs, path.sigma);
    return 0;
}

TestReport run_verify_test(const std::string& name, const RunConfigFile& rc,
                           std::uint64_t seed, int threads) {
    const auto& v = rc.verify_section;
    auto getd = [&](const char* key, double dflt) {
        return v.is_object() ? v.value(key, dflt) : dflt;
    };
    auto getn = [&](const char* key, std::size_t dflt) {
        return v.is_object() ? v.value(key, dflt) : dflt;
    };

    if (name == "martingale") {
        require_geometry(rc);
        MartingaleParams p;
        p.T = getd("T", 0.05);
        p.dt = getd("dt", 1e-4);
        p.paths = getn("paths", std::size_t{20000});
        p.seed = seed;
        p.threads = threads;
        p.attrition_threshold = getd("attrition_threshold", 0.2);
        return martingale_test(rc.cfg, p);
    }
    if (name == "qv") {
        require_geometry(rc);
        QvParams p;
        p.T = getd("T", 0.1);
        p.dt = getd("dt", 1e-4);
        p.paths = getn("paths", std::size_t{100});
        p.seed = seed;
        p.threads = threads;
        p.gate = getd("gate", 0.05);
        p.tc_intervals = getn("tc_intervals", std::size_t{8});
        return qv_suite(rc.cfg, p);
    }
    if (name == "hitting-formula") {
        const double kappa = rc.cfg.kappa;
        const double x = getd("x", 1.0);
        const double y = getd("y", 1.0);
        const double p1 = hitting_probability_formula(kappa, x, y);
        const double comp = p1 + hitting_probability_formula(kappa, y, x) - 1.0;
        const double scale = p1 - hitting_probability_formula(kappa, 2.0 * x, 2.0 * y);
        TestReport r;
        r.name = "hitting-formula";
        r.estimate = p1;
        r.threshold = 1e-8;
        r.n = 1;
        r.details["kappa"] = kappa;
        r.details["x"] = x;
        r.details["y"] = y;
        r.details["complement_residual"] = comp;
        r.details["scale_residual"] = scale;
        const bool sym_ok = x != y || std::abs(p1 - 0.5) <= 1e-8;
        r.outcome = (std::abs(comp) <= 1e-8 && std::abs(scale) <= 1e-12 && sym_ok)
                        ? TestOutcome::Pass
                        : TestOutcome::Fail;
        return r;
    }
    if (name == "hitting-mc") {
        HitMcParams p;
        p.kappa = rc.cfg.kappa;
        p.x = getd("x", 1.0);
        p.y = getd("y", 1.0);
        p.paths = getn("paths", std::size_t{10000});
        p.t_max = getd("t_max", 40.0);
        p.dt = getd("dt", 2e-4);
        p.seed = seed;
        p.threads = threads;
        p.undecided_threshold = getd("undecided_threshold", 0.05);
        return hitting_probability_mc(p);
    }
    if (name == "theorem-rate") {
        require_geometry(rc);
        const DrivingPath path = simulate_driver(rc.cfg, rc.T, rc.dt, seed, rc.solver);
        const double h = getd("h", rc.dt);
        const double t_mid = 0.5 * path.end_time();
        std::vector<RateCheckSample> samples;
        const cplx ws[] = {{0.0, 20.0}, {12.0, 9.0}, {-10.0, 14.0}, {16.0, 12.0}, {-18.0, 8.0}};
        for (int i = 0; i < 5; ++i) {
            const double t = path.dt * std::llround((t_mid * (0.6 + 0.2 * i)) / path.dt);
            samples.push_back({ws[i], t});
        }
        return theorem_rate_suite(path, samples, h);
    }
    if (name == "metric-equivalence") {
        require_geometry(rc);
        MetricEquivalenceParams p;
        p.S = getd("S", 0.3);
        p.ds = getd("ds", 1e-4);
        p.t_star = getd("t_star", 0.01);
        p.paths = getn("paths", std::size_t{20000});
        p.seed = seed;
        p.threads = threads;
        p.drift_sign = static_cast<int>(getd("drift_sign", 1.0));
        p.attrition_threshold = getd("attrition_threshold", 0.2);
        return metric_equivalence_test(rc.cfg, p);
    }
    if (name == "sc-oracles") {
        require_geometry(rc);
        return sc_oracles_suite(rc.cfg);
    }
    throw ConfigError("unknown verify test: " + name +
                      " (expected martingale, qv, hitting-formula, hitting-mc, theorem-rate, "
                      "metric-equivalence or sc-oracles)");
}

int cmd_verify(const RunConfigFile& rc, const CommonArgs& common, std::uint64_t seed) {
    std::string name = common.test_name;
    if (name.empty() && rc.verify_section.is_object())
        name = rc.verify_section.value("test", "");
    if (name.empty()) throw ConfigError("verify: no test name given (--test or verify.test)");

    const TestReport report = run_verify_test(name, rc, seed, common.threads);
    const fs::path dir(common.out_dir);
    nlohmann::json j = report.to_json();
    j["config_hash"] = config_hash_hex(rc.raw);
    j["seed"] = seed;
    write_text_file(dir / "report.json", j.dump(2) + "\n");
    std::cout << report.human_line() << "\n";
    switch (report.outcome) {
        case TestOutcome::Pass: return 0;
        case TestOutcome::Fail: return 1;
        default: return 2;
    }
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"polysle: SLE(kappa,rho) simulation and Schwarz-Christoffel polygon evolution"};
    app.require_subcommand(1);
    app.fallthrough();

    CommonArgs common;
    app.add_option("--config", common.config_path, "JSON config file")->required();
    app.add_option("--out", common.out_dir, "output directory");
    app.add_option("--seed", common.seed_override, "seed override");
    app.add_option("--threads", common.threads, "worker threads (0 = all, 1 = serial)");
    app.add_option("--frames", common.frames, "frame times for evolve");
    app.add_option("--test", common.test_name, "verification test name");
    app.add_flag("-v,--verbose", common.verbose, "progress notes on stderr");

    auto* sim = app.add_subcommand("simulate", "integrate the driver/force-point system");
    auto* trace = app.add_subcommand("trace", "trace polyline of the Loewner hull");
    auto* map = app.add_subcommand("map", "polygon snapshot at a fixed time");
    auto* evolve = app.add_subcommand("evolve", "polygon snapshots at frame times");
    auto* verify = app.add_subcommand("verify", "statistical/analytic verification suites");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 3;
    }

    try {
        const RunConfigFile rc = load_config(common.config_path);
        const std::uint64_t seed =
            common.seed_override >= 0 ? static_cast<std::uint64_t>(common.seed_override)
                                      : rc.seed;
        std::filesystem::create_directories(common.out_dir);
        if (sim->parsed()) return cmd_simulate(rc, common, seed);
        if (trace->parsed()) return cmd_trace(rc, common, seed);
        if (map->parsed()) return cmd_map(rc, common, seed);
        if (evolve->parsed()) return cmd_evolve(rc, common, seed);
        if (verify->parsed()) return cmd_verify(rc, common, seed);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 3;
}

} // namespace polysle
