// vreg: voltage-regulation studies for radial feeders hosting data-center
// loads. Subcommands: run, compare, verify, gen-trace.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vreg/output.hpp"
#include "vreg/scenario.hpp"
#include "vreg/verify.hpp"
#include "vreg/workload.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::vector<std::string> overrides;
    bool force = false;
    bool verbose = false;
};

/// Refuse to clobber existing outputs unless --force was given.
void ensure_writable(const fs::path& path, bool force) {
    if (fs::exists(path) && !force) {
        throw vreg::ConfigError(path.string() +
                                " already exists (pass --force to overwrite)");
    }
}

void prepare_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw vreg::ConfigError(dir + ": cannot create output directory: " + ec.message());
    }
}

void note(const CommonArgs& args, const std::string& msg) {
    if (args.verbose) std::cerr << "vreg: " << msg << "\n";
}

int cmd_run(const CommonArgs& args) {
    const vreg::ScenarioConfig cfg = vreg::load_scenario(args.config_path, args.overrides);
    const vreg::FeederModel model = cfg.feeder.build();

    prepare_out_dir(args.out_dir);
    const fs::path traj = fs::path(args.out_dir) / "trajectory.csv";
    const fs::path metrics = fs::path(args.out_dir) / "metrics.json";
    ensure_writable(traj, args.force);
    ensure_writable(metrics, args.force);

    note(args, "running " + vreg::to_string(cfg.control.kind) + " scenario");
    const vreg::SimResult result = vreg::run_scenario(cfg, model);

    const vreg::DroopGain gain = vreg::resolve_gain(cfg.control, model);
    const auto cert = vreg::validate_gain(model.X, gain);
    vreg::write_trajectory_csv(traj.string(), result, model);
    vreg::write_text_file(metrics.string(),
                          vreg::metrics_json(result, model, gain, cert));

    std::cout << "max |v-1| = " << result.metrics.max_dev
              << " p.u., effort = " << result.metrics.total_effort
              << " p.u., violations = " << result.metrics.violation_count << "\n"
              << "wrote " << traj.string() << ", " << metrics.string() << "\n";
    return kExitOk;
}

int cmd_compare(const CommonArgs& args) {
    const vreg::ScenarioConfig cfg = vreg::load_scenario(args.config_path, args.overrides);
    const vreg::FeederModel model = cfg.feeder.build();

    prepare_out_dir(args.out_dir);
    const fs::path fixed_traj = fs::path(args.out_dir) / "fixed_trajectory.csv";
    const fs::path sw_traj = fs::path(args.out_dir) / "switching_trajectory.csv";
    const fs::path summary = fs::path(args.out_dir) / "comparison.json";
    for (const auto& p : {fixed_traj, sw_traj, summary}) ensure_writable(p, args.force);

    note(args, "running paired fixed/switching scenarios");
    const vreg::ControllerComparison cmp = vreg::compare_controllers(cfg, model);

    const vreg::DroopGain gain = vreg::resolve_gain(cfg.control, model);
    const auto cert = vreg::validate_gain(model.X, gain);
    vreg::write_trajectory_csv(fixed_traj.string(), cmp.fixed, model);
    vreg::write_trajectory_csv(sw_traj.string(), cmp.switching, model);
    vreg::write_text_file(summary.string(),
                          vreg::comparison_json(cmp, model, gain, cert));

    std::cout << "fixed:     max |v-1| = " << cmp.fixed.metrics.max_dev
              << ", effort = " << cmp.fixed.metrics.total_effort << "\n"
              << "switching: max |v-1| = " << cmp.switching.metrics.max_dev
              << ", effort = " << cmp.switching.metrics.total_effort << "\n"
              << "delta:     max |v-1| = " << cmp.delta_max_dev
              << ", effort = " << cmp.delta_effort << "\n"
              << "wrote " << summary.string() << "\n";
    return kExitOk;
}

int cmd_verify(const std::string& out_dir, std::optional<double> gain_override,
               std::uint64_t seed, bool force) {
    vreg::VerifyOptions opts;
    opts.seed = seed;
    opts.gain_override = gain_override;

    const auto results = vreg::run_verification(opts);
    const std::string report = vreg::verification_report(results);
    std::cout << report;

    prepare_out_dir(out_dir);
    const fs::path path = fs::path(out_dir) / "verify_report.txt";
    ensure_writable(path, force);
    vreg::write_text_file(path.string(), report);

    return vreg::all_passed(results) ? kExitOk : kExitRuntime;
}

int cmd_gen_trace(const CommonArgs& args, int bus, const std::string& out_file) {
    const vreg::ScenarioConfig cfg = vreg::load_scenario(args.config_path, args.overrides);

    const vreg::TraceSpec* chosen = nullptr;
    for (const auto& dc : cfg.dcs) {
        if (bus == 0 || dc.bus_id == bus) {
            chosen = &dc;
            break;
        }
    }
    if (!chosen) {
        throw vreg::ConfigError("no [dc " + std::to_string(bus) + "] section in " +
                                args.config_path);
    }
    if (!chosen->synthetic) {
        throw vreg::ConfigError("dc " + std::to_string(chosen->bus_id) +
                                " uses a file trace; nothing to generate");
    }

    fs::path out = out_file.empty()
        ? fs::path(args.out_dir) / ("trace_dc" + std::to_string(chosen->bus_id) + ".csv")
        : fs::path(out_file);
    if (out.has_parent_path()) prepare_out_dir(out.parent_path().string());
    ensure_writable(out, args.force);

    const double watts_per_pu = cfg.feeder.base_mva * 1e6;
    vreg::write_trace_csv(out.string(), chosen->profile, cfg.duration, cfg.dt_sim,
                          watts_per_pu);
    std::cout << "wrote " << out.string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Voltage regulation on radial feeders with switching data-center loads"};
    app.require_subcommand(1);

    CommonArgs run_args, cmp_args, gen_args;
    std::string verify_out = "out";
    std::optional<double> verify_gain;
    std::uint64_t verify_seed = 12345;
    bool verify_force = false;
    int gen_bus = 0;
    std::string gen_out_file;

    auto add_common = [](CLI::App* sub, CommonArgs& a, bool needs_config) {
        if (needs_config) {
            sub->add_option("-c,--config", a.config_path, "Scenario config file")
                ->required();
        }
        sub->add_option("-o,--out", a.out_dir, "Output directory");
        sub->add_option("-s,--set", a.overrides,
                        "Override a config value (key=value or section.key=value)");
        sub->add_flag("-f,--force", a.force, "Overwrite existing output files");
        sub->add_flag("-v,--verbose", a.verbose, "Verbose progress on stderr");
    };

    CLI::App* run = app.add_subcommand("run", "Run one scenario and write CSV + metrics");
    add_common(run, run_args, true);

    CLI::App* compare = app.add_subcommand(
        "compare", "Run fixed vs switching references on one scenario");
    add_common(compare, cmp_args, true);

    CLI::App* verify = app.add_subcommand(
        "verify", "Run the analysis verification suite and write a report");
    verify->add_option("-o,--out", verify_out, "Output directory");
    verify->add_option("--gain", verify_gain,
                       "Uniform droop gain override for the 33-bus checks");
    verify->add_option("--seed", verify_seed, "Seed for randomized checks");
    verify->add_flag("-f,--force", verify_force, "Overwrite existing output files");

    CLI::App* gen = app.add_subcommand(
        "gen-trace", "Write a synthetic data-center trace as time_s,power_watts CSV");
    add_common(gen, gen_args, true);
    gen->add_option("-b,--bus", gen_bus, "Data-center bus (default: first [dc])");
    gen->add_option("--trace-out", gen_out_file, "Output CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    // Verbosity may also come from the environment.
    if (const char* env = std::getenv("VREG_VERBOSE"); env && env[0] == '1') {
        run_args.verbose = cmp_args.verbose = gen_args.verbose = true;
    }

    try {
        if (run->parsed()) return cmd_run(run_args);
        if (compare->parsed()) return cmd_compare(cmp_args);
        if (verify->parsed()) {
            return cmd_verify(verify_out, verify_gain, verify_seed, verify_force);
        }
        if (gen->parsed()) return cmd_gen_trace(gen_args, gen_bus, gen_out_file);
    } catch (const vreg::ConfigError& e) {
        std::cerr << "vreg: " << e.what() << "\n";
        return kExitUsage;
    } catch (const vreg::ParseError& e) {
        std::cerr << "vreg: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "vreg: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
