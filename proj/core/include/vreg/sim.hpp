#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vreg/analysis.hpp"
#include "vreg/control.hpp"
#include "vreg/feeder.hpp"
#include "vreg/workload.hpp"

namespace vreg {

enum class ControllerKind {
    Fixed,      ///< constant 1 p.u. reference
    Switching,  ///< measurement-adapted switching reference
    Oracle,     ///< mode-matched references from ground-truth modes
};

std::string to_string(ControllerKind kind);

/// Where the network comes from: the built-in 33-bus feeder or a line file.
struct FeederSpec {
    std::string source = "ieee33";
    int slack_bus = 1;
    double base_mva = 10.0;
    double base_kv = 12.66;

    FeederModel build() const;
};

/// One data-center load: a synthetic two-mode profile or a measured CSV.
struct TraceSpec {
    int bus_id = 0;
    bool synthetic = true;
    TwoModeProfile profile;
    std::string csv_path;
    double scale = 0.0;  ///< p.u. per watt for CSV traces (sign included)
};

/// Internal load smoothing at the data centers: droop-type storage dispatch
/// activated at a configured time, sized to carry the peak load for
/// `backup_s` seconds.
struct SmoothingSpec {
    bool enabled = false;
    double start_s = 0.0;
    double k_p = 0.6;
    double horizon_s = 100.0;
    double backup_s = 60.0;
    double soc_init = 0.95;
    double soc_min = 0.93;
    double soc_max = 0.97;
};

struct ControlSpec {
    ControllerKind kind = ControllerKind::Switching;
    bool gain_auto = true;        ///< k = 1 / lambda_max(X)
    double gain = 0.0;            ///< uniform gain when gain_auto is false
    std::vector<int> actuated;    ///< external bus ids; empty = all buses
    ControlLimits limits{0.02, 0.01};
    double amp_window_s = 120.0;
    double bias_window_s = 120.0;
    /// Bias smoothing gain. Kept small: the bias update integrates a windowed
    /// midpoint whose extrema go stale for up to a full window, and through
    /// the droop lag that loop oscillates unstably for gains much above
    /// ~1/window. 0.003 is stable with the default gain and 120 s windows.
    double eta_bias = 0.003;
    /// Bias of the oracle reference levels (empty = all ones). Programmatic
    /// only; not exposed in scenario files.
    Eigen::VectorXd oracle_bias;
};

struct ScenarioConfig {
    FeederSpec feeder;
    std::vector<TraceSpec> dcs;
    double background_p = 0.0;  ///< constant injection at non-DC buses (p.u.)
    ControlSpec control;
    SmoothingSpec smoothing;
    double dt_sim = 0.1;
    double dt_ctrl = 1.0;
    double duration = 2700.0;
    double burn_in_s = 0.0;     ///< metrics exclude this warm-up window
    std::uint64_t seed = 0;

    /// All config problems (empty when the config is runnable).
    std::vector<std::string> problems(const FeederModel& model) const;
};

struct SimMetrics {
    double max_dev = 0.0;        ///< max |v - 1| after burn-in
    long violation_count = 0;    ///< bus-steps with |v - 1| > 0.05
    double total_effort = 0.0;   ///< sum of |dq| over buses and instants
    Eigen::VectorXd per_bus_max_dev;
    Eigen::VectorXd per_bus_effort;
};

/// Full trajectory record of one scenario run. q is piecewise-constant
/// between control instants; every stored v satisfies v = R p + X q + 1
/// against the stored p, q of the same step.
struct SimResult {
    double dt_sim = 0.0;
    double dt_ctrl = 0.0;
    Eigen::Index burn_in_steps = 0;
    ControllerKind controller = ControllerKind::Fixed;

    Eigen::VectorXd time;   ///< sim-step timestamps (s)
    Eigen::MatrixXd v;      ///< n x T voltages
    Eigen::MatrixXd p;      ///< n x T net active injections (post-smoothing)
    Eigen::MatrixXd q;      ///< n x T reactive injections in effect

    std::vector<Eigen::Index> ctrl_steps;  ///< sim-step index per control instant
    Eigen::MatrixXd v_ref;  ///< n x C references emitted at control instants
    Eigen::MatrixXd dq;     ///< n x C applied reactive increments
    Eigen::MatrixXd sign;   ///< n x C (switching controller only, else 0x0)
    Eigen::MatrixXd amp;    ///< n x C
    Eigen::MatrixXd bias;   ///< n x C

    Eigen::MatrixXd z;      ///< dc_count x T storage dispatch (0x0 if unused)
    Eigen::MatrixXd soc;    ///< dc_count x T state of charge

    SimMetrics metrics;
};

/// Recompute metrics from the stored series (pure; reproduces
/// SimResult::metrics when called with the run's own burn-in).
SimMetrics compute_metrics(const SimResult& result, Eigen::Index burn_in_steps);

/// The per-bus droop gain a config resolves to on a given feeder.
DroopGain resolve_gain(const ControlSpec& control, const FeederModel& model);

/// Advance the coupled network-load-controller system over the configured
/// horizon. Deterministic given the config seed. Throws ConfigError listing
/// every config problem found.
SimResult run_scenario(const ScenarioConfig& config, const FeederModel& model);
SimResult run_scenario(const ScenarioConfig& config);

/// Paired run (identical seed, gain, limits) of the fixed- and
/// switching-reference controllers plus metric deltas (fixed - switching).
struct ControllerComparison {
    SimResult fixed;
    SimResult switching;
    double delta_max_dev = 0.0;
    long delta_violations = 0;
    double delta_effort = 0.0;
};

ControllerComparison compare_controllers(const ScenarioConfig& config,
                                         const FeederModel& model);
ControllerComparison compare_controllers(const ScenarioConfig& config);

}  // namespace vreg
