#include "vreg/output.hpp"

#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

namespace vreg {

namespace {

using nlohmann::json;

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

json metrics_block(const SimMetrics& m, const SimResult& r, const FeederModel& model) {
    json per_bus = json::object();
    for (int i = 0; i < model.n; ++i) {
        per_bus[std::to_string(model.bus_ids[i])] = {
            {"max_dev_pu", m.per_bus_max_dev(i)},
            {"effort_pu", m.per_bus_effort(i)},
        };
    }
    return {
        {"controller", to_string(r.controller)},
        {"max_dev_pu", m.max_dev},
        {"violation_bus_steps", m.violation_count},
        {"total_effort_pu", m.total_effort},
        {"burn_in_s", static_cast<double>(r.burn_in_steps) * r.dt_sim},
        {"per_bus", per_bus},
    };
}

json certificate_block(const ContractionCertificate& cert, const DroopGain& gain) {
    return {
        {"valid", cert.valid},
        {"empirical", cert.empirical},
        {"epsilon", cert.epsilon},
        {"margin", cert.margin},
        {"c_inf_norm", cert.C.size() ? cert.C.cwiseAbs().rowwise().sum().maxCoeff() : 0.0},
        {"gain_min", gain.k.size() ? gain.k.minCoeff() : 0.0},
        {"gain_max", gain.k.size() ? gain.k.maxCoeff() : 0.0},
    };
}

}  // namespace

void write_trajectory_csv(const std::string& path, const SimResult& result,
                          const FeederModel& model) {
    std::ofstream out(path);
    if (!out) throw ParseError(path + ": cannot open for writing");

    const int n = model.n;
    const bool smoothing = result.z.rows() > 0;

    out << "time_s,ctrl";
    for (int i = 0; i < n; ++i) out << ",v_" << model.bus_ids[i];
    for (int i = 0; i < n; ++i) out << ",q_" << model.bus_ids[i];
    for (int i = 0; i < n; ++i) out << ",vref_" << model.bus_ids[i];
    for (Eigen::Index d = 0; d < result.z.rows(); ++d) out << ",z_dc" << d << ",soc_dc" << d;
    out << "\n";

    Eigen::VectorXd held_ref = Eigen::VectorXd::Ones(n);
    std::size_t next_ctrl = 0;
    for (Eigen::Index k = 0; k < result.time.size(); ++k) {
        bool is_ctrl = false;
        if (next_ctrl < result.ctrl_steps.size() && result.ctrl_steps[next_ctrl] == k) {
            held_ref = result.v_ref.col(static_cast<Eigen::Index>(next_ctrl));
            ++next_ctrl;
            is_ctrl = true;
        }
        out << fmt(result.time(k)) << ',' << (is_ctrl ? 1 : 0);
        for (int i = 0; i < n; ++i) out << ',' << fmt(result.v(i, k));
        for (int i = 0; i < n; ++i) out << ',' << fmt(result.q(i, k));
        for (int i = 0; i < n; ++i) out << ',' << fmt(held_ref(i));
        if (smoothing) {
            for (Eigen::Index d = 0; d < result.z.rows(); ++d) {
                out << ',' << fmt(result.z(d, k)) << ',' << fmt(result.soc(d, k));
            }
        }
        out << "\n";
    }
}

std::string metrics_json(const SimResult& result, const FeederModel& model,
                         const DroopGain& gain, const ContractionCertificate& cert) {
    json j = {
        {"metrics", metrics_block(result.metrics, result, model)},
        {"certificate", certificate_block(cert, gain)},
        {"steps", result.time.size()},
        {"control_instants", result.ctrl_steps.size()},
        {"dt_sim_s", result.dt_sim},
        {"dt_ctrl_s", result.dt_ctrl},
    };
    return j.dump(2) + "\n";
}

std::string comparison_json(const ControllerComparison& cmp, const FeederModel& model,
                            const DroopGain& gain, const ContractionCertificate& cert) {
    json j = {
        {"fixed", metrics_block(cmp.fixed.metrics, cmp.fixed, model)},
        {"switching", metrics_block(cmp.switching.metrics, cmp.switching, model)},
        {"delta_fixed_minus_switching",
         {
             {"max_dev_pu", cmp.delta_max_dev},
             {"violation_bus_steps", cmp.delta_violations},
             {"total_effort_pu", cmp.delta_effort},
         }},
        {"certificate", certificate_block(cert, gain)},
    };
    return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw ParseError(path + ": cannot open for writing");
    out << content;
}

}  // namespace vreg
