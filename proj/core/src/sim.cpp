#include "vreg/sim.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace vreg {

std::string to_string(ControllerKind kind) {
    switch (kind) {
        case ControllerKind::Fixed: return "fixed";
        case ControllerKind::Switching: return "switching";
        case ControllerKind::Oracle: return "oracle";
    }
    return "?";
}

FeederModel FeederSpec::build() const {
    if (source == "ieee33") {
        return ieee33_feeder(base_mva, base_kv);
    }
    return load_feeder(source, slack_bus, base_mva, base_kv);
}

namespace {

/// Decorrelate per-DC noise streams from the scenario seed.
std::uint64_t mix_seed(std::uint64_t seed, int bus_id) {
    std::uint64_t h = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(bus_id) + 1);
    h ^= h >> 30;
    h *= 0xbf58476d1ce4e5b9ULL;
    h ^= h >> 27;
    return h;
}

Eigen::Index steps_of(double duration, double dt) {
    return static_cast<Eigen::Index>(std::llround(duration / dt));
}

}  // namespace

std::vector<std::string> ScenarioConfig::problems(const FeederModel& model) const {
    std::vector<std::string> out;

    if (!(dt_sim > 0.0)) out.push_back("sim: dt_sim_s must be positive");
    if (!(dt_ctrl > 0.0)) out.push_back("sim: dt_ctrl_s must be positive");
    if (!(duration > 0.0)) out.push_back("sim: duration_s must be positive");
    if (dt_sim > 0.0 && dt_ctrl > 0.0) {
        const double ratio = dt_ctrl / dt_sim;
        if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 1.0 - 1e-9) {
            out.push_back("sim: dt_ctrl_s must be an integer multiple of dt_sim_s");
        }
    }
    if (burn_in_s < 0.0 || burn_in_s >= duration) {
        out.push_back("sim: burn_in_s must lie in [0, duration)");
    }

    std::set<int> seen;
    for (const TraceSpec& dc : dcs) {
        const std::string tag = "dc " + std::to_string(dc.bus_id) + ": ";
        if (!model.index.count(dc.bus_id)) {
            out.push_back(tag + "not a non-slack bus of the feeder");
        }
        if (!seen.insert(dc.bus_id).second) {
            out.push_back(tag + "duplicate data-center bus");
        }
        if (dc.synthetic) {
            try {
                dc.profile.validate();
            } catch (const ValidationError& err) {
                out.push_back(tag + err.what());
            }
        } else {
            if (dc.csv_path.empty()) out.push_back(tag + "trace file path is empty");
            if (dc.scale == 0.0) out.push_back(tag + "scale_pu_per_watt must be nonzero");
        }
    }

    if (!control.gain_auto && !(control.gain > 0.0)) {
        out.push_back("control: gain must be positive (or 'auto')");
    }
    if (control.limits.deadband < 0.0) out.push_back("control: deadband_pu must be nonnegative");
    if (!(control.limits.dq_max > 0.0)) out.push_back("control: dq_max_pu must be positive");
    if (!(control.eta_bias > 0.0) || control.eta_bias > 1.0) {
        out.push_back("control: eta_bias must lie in (0, 1]");
    }
    if (dt_ctrl > 0.0) {
        if (std::llround(control.amp_window_s / dt_ctrl) < 2) {
            out.push_back("control: amp_window_s must cover at least 2 control steps");
        }
        if (std::llround(control.bias_window_s / dt_ctrl) < 1) {
            out.push_back("control: bias_window_s must cover at least 1 control step");
        }
    }
    for (int bus : control.actuated) {
        if (!model.index.count(bus)) {
            out.push_back("control: actuated bus " + std::to_string(bus) +
                          " is not a non-slack bus of the feeder");
        }
    }
    if (control.kind == ControllerKind::Oracle) {
        for (const TraceSpec& dc : dcs) {
            if (!dc.synthetic) {
                out.push_back("control: oracle references need synthetic traces "
                              "(no ground-truth modes for dc " +
                              std::to_string(dc.bus_id) + ")");
            }
        }
        if (control.oracle_bias.size() != 0 && control.oracle_bias.size() != model.n) {
            out.push_back("control: oracle bias length does not match the feeder");
        }
    }

    if (smoothing.enabled) {
        if (smoothing.k_p < 0.0) out.push_back("smoothing: k_p must be nonnegative");
        if (!(smoothing.horizon_s > 0.0)) out.push_back("smoothing: horizon_s must be positive");
        if (!(smoothing.backup_s > 0.0)) out.push_back("smoothing: backup_s must be positive");
        if (smoothing.start_s < 0.0) out.push_back("smoothing: start_s must be nonnegative");
        if (smoothing.soc_min > smoothing.soc_max ||
            smoothing.soc_init < smoothing.soc_min ||
            smoothing.soc_init > smoothing.soc_max ||
            smoothing.soc_min < 0.0 || smoothing.soc_max > 1.0) {
            out.push_back("smoothing: need 0 <= soc_min <= soc_init <= soc_max <= 1");
        }
    }

    return out;
}

DroopGain resolve_gain(const ControlSpec& control, const FeederModel& model) {
    double k = control.gain;
    if (control.gain_auto) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.X, Eigen::EigenvaluesOnly);
        k = 1.0 / es.eigenvalues().maxCoeff();
    }
    std::vector<int> actuated_idx;
    actuated_idx.reserve(control.actuated.size());
    for (int bus : control.actuated) {
        actuated_idx.push_back(model.index_of(bus));
    }
    return DroopGain::uniform(model.n, k, actuated_idx);
}

SimMetrics compute_metrics(const SimResult& result, Eigen::Index burn_in_steps) {
    const auto n = result.v.rows();
    const auto T = result.v.cols();
    SimMetrics m;
    m.per_bus_max_dev = Eigen::VectorXd::Zero(n);
    m.per_bus_effort = Eigen::VectorXd::Zero(n);

    for (Eigen::Index k = burn_in_steps; k < T; ++k) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double dev = std::abs(result.v(i, k) - 1.0);
            m.per_bus_max_dev(i) = std::max(m.per_bus_max_dev(i), dev);
            if (dev > 0.05) ++m.violation_count;
        }
    }
    m.max_dev = n > 0 ? m.per_bus_max_dev.maxCoeff() : 0.0;

    for (std::size_t c = 0; c < result.ctrl_steps.size(); ++c) {
        if (result.ctrl_steps[c] < burn_in_steps) continue;
        m.per_bus_effort += result.dq.col(static_cast<Eigen::Index>(c)).cwiseAbs();
    }
    m.total_effort = m.per_bus_effort.sum();
    return m;
}

SimResult run_scenario(const ScenarioConfig& config, const FeederModel& model) {
    {
        auto problems = config.problems(model);
        if (!problems.empty()) {
            std::string msg = "invalid scenario config:";
            for (const auto& p : problems) msg += "\n  - " + p;
            throw ConfigError(msg);
        }
    }

    const int n = model.n;
    const Eigen::Index T = steps_of(config.duration, config.dt_sim);
    const auto ratio = static_cast<Eigen::Index>(std::llround(config.dt_ctrl / config.dt_sim));
    const Eigen::Index n_ctrl = (T + ratio - 1) / ratio;
    const int dc_count = static_cast<int>(config.dcs.size());

    // Load traces. Background fills every non-DC bus.
    const Eigen::VectorXd background = Eigen::VectorXd::Constant(n, config.background_p);
    std::vector<WorkloadTrace> traces;
    std::vector<int> dc_idx;
    traces.reserve(config.dcs.size());
    for (const TraceSpec& dc : config.dcs) {
        const int idx = model.index_of(dc.bus_id);
        dc_idx.push_back(idx);
        if (dc.synthetic) {
            TwoModeProfile prof = dc.profile;
            if (prof.seed == 0) prof.seed = mix_seed(config.seed, dc.bus_id);
            traces.push_back(generate_trace(prof, config.duration, config.dt_sim,
                                            idx, Eigen::VectorXd::Zero(n)));
        } else {
            traces.push_back(load_trace_csv(dc.csv_path, config.dt_sim, idx,
                                            dc.scale, Eigen::VectorXd::Zero(n)));
        }
    }

    // Storage smoothers, sized per data center from its own peak load.
    std::vector<StorageSmoother> smoothers;
    const auto act_step = config.smoothing.enabled
        ? steps_of(config.smoothing.start_s, config.dt_sim) : T;
    if (config.smoothing.enabled) {
        for (int d = 0; d < dc_count; ++d) {
            const double peak = traces[d].samples.row(dc_idx[d]).cwiseAbs().maxCoeff();
            const double capacity = std::max(peak, 1e-12) * config.smoothing.backup_s;
            smoothers.emplace_back(config.smoothing.k_p, config.smoothing.horizon_s,
                                   capacity, config.smoothing.soc_init,
                                   config.smoothing.soc_min, config.smoothing.soc_max);
        }
    }

    const DroopGain gain = resolve_gain(config.control, model);
    SwitchingController switching(
        n, static_cast<int>(std::llround(config.control.amp_window_s / config.dt_ctrl)),
        static_cast<int>(std::llround(config.control.bias_window_s / config.dt_ctrl)),
        config.control.eta_bias);

    // Oracle reference geometry: per-DC mode-induced voltage shifts.
    std::vector<Eigen::VectorXd> half_shift(config.dcs.size());
    if (config.control.kind == ControllerKind::Oracle) {
        for (int d = 0; d < dc_count; ++d) {
            const TwoModeProfile& prof = config.dcs[d].profile;
            half_shift[d] = 0.5 * model.R.col(dc_idx[d]) * (prof.p_comm - prof.p_comp);
        }
    }

    SimResult res;
    res.dt_sim = config.dt_sim;
    res.dt_ctrl = config.dt_ctrl;
    res.burn_in_steps = steps_of(config.burn_in_s, config.dt_sim);
    res.controller = config.control.kind;
    res.time.resize(T);
    res.v.resize(n, T);
    res.p.resize(n, T);
    res.q.resize(n, T);
    res.ctrl_steps.reserve(n_ctrl);
    res.v_ref.resize(n, n_ctrl);
    res.dq.resize(n, n_ctrl);
    if (config.control.kind == ControllerKind::Switching) {
        res.sign.resize(n, n_ctrl);
        res.amp.resize(n, n_ctrl);
        res.bias.resize(n, n_ctrl);
    }
    if (config.smoothing.enabled && dc_count > 0) {
        res.z.setZero(dc_count, T);
        res.soc.setZero(dc_count, T);
    }

    Eigen::VectorXd p = background;
    Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd v(n);
    Eigen::Index ctrl_count = 0;

    for (Eigen::Index k = 0; k < T; ++k) {
        // Advance loads; smoothing becomes active at its start step.
        p = background;
        for (int d = 0; d < dc_count; ++d) {
            const double raw = traces[d].samples(dc_idx[d], k);
            if (config.smoothing.enabled && k >= act_step) {
                const SmoothStep s = smoothers[d].step(raw, config.dt_sim);
                p(dc_idx[d]) = s.p_net;
                res.z(d, k) = s.z;
                res.soc(d, k) = smoothers[d].soc();
            } else {
                p(dc_idx[d]) = raw;
                if (config.smoothing.enabled) res.soc(d, k) = config.smoothing.soc_init;
            }
        }

        v.noalias() = model.R * p + model.X * q;
        v.array() += 1.0;

        res.time(k) = static_cast<double>(k) * config.dt_sim;
        res.v.col(k) = v;
        res.p.col(k) = p;
        res.q.col(k) = q;

        // Control instants: measurement precedes actuation; the new q takes
        // effect from the next sim step.
        if (k % ratio == 0) {
            Eigen::VectorXd v_ref;
            switch (config.control.kind) {
                case ControllerKind::Fixed:
                    v_ref = fixed_reference(n);
                    break;
                case ControllerKind::Switching:
                    v_ref = switching.step(v);
                    break;
                case ControllerKind::Oracle: {
                    v_ref = config.control.oracle_bias.size() == n
                        ? config.control.oracle_bias
                        : Eigen::VectorXd::Ones(n);
                    for (int d = 0; d < dc_count; ++d) {
                        const int mode = traces[d].modes.empty() ? 0 : traces[d].modes[k];
                        v_ref += (mode == 0 ? 1.0 : -1.0) * half_shift[d];
                    }
                    break;
                }
            }
            const DroopStep step = droop_update(q, v, v_ref, gain, config.control.limits);
            q = step.q_next;

            res.ctrl_steps.push_back(k);
            res.v_ref.col(ctrl_count) = v_ref;
            res.dq.col(ctrl_count) = step.dq;
            if (config.control.kind == ControllerKind::Switching) {
                res.sign.col(ctrl_count) = switching.sign();
                res.amp.col(ctrl_count) = switching.amp();
                res.bias.col(ctrl_count) = switching.bias();
            }
            ++ctrl_count;
        }
    }

    res.v_ref.conservativeResize(n, ctrl_count);
    res.dq.conservativeResize(n, ctrl_count);
    if (config.control.kind == ControllerKind::Switching) {
        res.sign.conservativeResize(n, ctrl_count);
        res.amp.conservativeResize(n, ctrl_count);
        res.bias.conservativeResize(n, ctrl_count);
    }
    res.metrics = compute_metrics(res, res.burn_in_steps);
    return res;
}

SimResult run_scenario(const ScenarioConfig& config) {
    return run_scenario(config, config.feeder.build());
}

ControllerComparison compare_controllers(const ScenarioConfig& config,
                                         const FeederModel& model) {
    ScenarioConfig fixed_cfg = config;
    fixed_cfg.control.kind = ControllerKind::Fixed;
    ScenarioConfig switching_cfg = config;
    switching_cfg.control.kind = ControllerKind::Switching;

    ControllerComparison cmp;
    cmp.fixed = run_scenario(fixed_cfg, model);
    cmp.switching = run_scenario(switching_cfg, model);
    cmp.delta_max_dev = cmp.fixed.metrics.max_dev - cmp.switching.metrics.max_dev;
    cmp.delta_violations =
        cmp.fixed.metrics.violation_count - cmp.switching.metrics.violation_count;
    cmp.delta_effort =
        cmp.fixed.metrics.total_effort - cmp.switching.metrics.total_effort;
    return cmp;
}

ControllerComparison compare_controllers(const ScenarioConfig& config) {
    return compare_controllers(config, config.feeder.build());
}

}  // namespace vreg
