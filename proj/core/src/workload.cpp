#include "vreg/workload.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace vreg {

void TwoModeProfile::validate() const {
    std::vector<std::string> problems;
    if (std::abs(p_comp) < std::abs(p_comm)) {
        problems.push_back("computation-mode level must dominate: |p_comp| >= |p_comm|");
    }
    const double half_gap = 0.5 * std::abs(p_comm - p_comp);
    for (int m : {0, 1}) {
        const double w = bound(m);
        if (w < 0.0) {
            problems.push_back("fluctuation bound for mode " + std::to_string(m) +
                               " must be nonnegative");
        } else if (w >= half_gap) {
            problems.push_back("fluctuation bound for mode " + std::to_string(m) +
                               " must stay below half the level separation");
        }
    }
    if (!(period_comm > 0.0)) problems.push_back("communication phase duration must be positive");
    if (!(period_comp > 0.0)) problems.push_back("computation phase duration must be positive");
    if (!problems.empty()) {
        std::string msg = "invalid two-mode profile:";
        for (const auto& p : problems) msg += "\n  - " + p;
        throw ValidationError(msg);
    }
}

WorkloadTrace generate_trace(const TwoModeProfile& profile, double duration,
                             double dt, int dc_index,
                             const Eigen::VectorXd& background) {
    profile.validate();
    if (!(duration > 0.0) || !(dt > 0.0)) {
        throw ValidationError("duration and dt must be positive");
    }
    const auto n = background.size();
    if (dc_index < 0 || dc_index >= n) {
        throw ValidationError("data-center index out of range");
    }

    const auto steps = static_cast<Eigen::Index>(std::llround(duration / dt));
    const double cycle = profile.period_comm + profile.period_comp;

    WorkloadTrace trace;
    trace.dt = dt;
    trace.dc_index = dc_index;
    trace.samples = background.replicate(1, steps);
    trace.modes.resize(steps);

    std::mt19937_64 rng(profile.seed);
    for (Eigen::Index k = 0; k < steps; ++k) {
        const double phase = std::fmod(static_cast<double>(k) * dt, cycle);
        const int mode = phase < profile.period_comm ? 0 : 1;
        double value = profile.mean(mode);
        const double w = profile.bound(mode);
        if (w > 0.0) {
            value += std::uniform_real_distribution<double>(-w, w)(rng);
        }
        trace.samples(dc_index, k) = value;
        trace.modes[k] = static_cast<std::uint8_t>(mode);
    }
    return trace;
}

WorkloadTrace load_trace_csv(const std::string& path, double dt, int dc_index,
                             double scale, const Eigen::VectorXd& background) {
    if (!(dt > 0.0)) throw ValidationError("dt must be positive");
    const auto n = background.size();
    if (dc_index < 0 || dc_index >= n) {
        throw ValidationError("data-center index out of range");
    }

    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");

    std::string row;
    if (!std::getline(in, row)) {
        throw ParseError(path + ": empty file");
    }
    {
        // The first line must be a header, not data.
        std::istringstream probe(row);
        double num;
        char comma;
        if (probe >> num >> comma) {
            throw ParseError(path + ":1: missing header row (expected time_s,power_watts)");
        }
    }

    std::vector<double> times, watts;
    int lineno = 1;
    while (std::getline(in, row)) {
        ++lineno;
        if (row.empty()) continue;
        std::istringstream fields(row);
        double t, w;
        char comma;
        if (!(fields >> t >> comma >> w) || comma != ',') {
            throw ParseError(path + ":" + std::to_string(lineno) +
                             ": expected 'time_s,power_watts'");
        }
        if (!times.empty() && t <= times.back()) {
            throw ParseError(path + ":" + std::to_string(lineno) +
                             ": non-monotone timestamp");
        }
        times.push_back(t);
        watts.push_back(w);
    }
    if (times.empty()) {
        throw ParseError(path + ": no data rows");
    }

    // Zero-order hold at multiples of dt, time measured from the first row.
    const double span = times.back() - times.front();
    const auto steps = static_cast<Eigen::Index>(std::floor(span / dt + 1e-9)) + 1;

    WorkloadTrace trace;
    trace.dt = dt;
    trace.dc_index = dc_index;
    trace.samples = background.replicate(1, steps);

    std::size_t row_idx = 0;
    for (Eigen::Index k = 0; k < steps; ++k) {
        const double t = times.front() + static_cast<double>(k) * dt;
        while (row_idx + 1 < times.size() && times[row_idx + 1] <= t + 1e-9 * dt) {
            ++row_idx;
        }
        trace.samples(dc_index, k) = watts[row_idx] * scale;
    }
    return trace;
}

void write_trace_csv(const std::string& path, const TwoModeProfile& profile,
                     double duration, double dt, double watts_per_pu) {
    const WorkloadTrace trace =
        generate_trace(profile, duration, dt, 0, Eigen::VectorXd::Zero(1));
    std::ofstream out(path);
    if (!out) throw ParseError(path + ": cannot open for writing");
    out << "time_s,power_watts\n";
    char line[80];
    for (Eigen::Index k = 0; k < trace.steps(); ++k) {
        // Meter convention: consumption positive.
        const double w = -trace.samples(0, k) * watts_per_pu;
        std::snprintf(line, sizeof line, "%.9g,%.9g\n",
                      static_cast<double>(k) * dt, w);
        out << line;
    }
}

StorageSmoother::StorageSmoother(double k_p, double horizon_s,
                                 double energy_capacity, double soc_init,
                                 double soc_min, double soc_max)
    : k_p_(k_p),
      horizon_s_(horizon_s),
      capacity_(energy_capacity),
      soc_(soc_init),
      soc_min_(soc_min),
      soc_max_(soc_max) {
    if (k_p < 0.0) throw ValidationError("smoother gain must be nonnegative");
    if (!(horizon_s > 0.0)) throw ValidationError("averaging horizon must be positive");
    if (!(energy_capacity > 0.0)) throw ValidationError("energy capacity must be positive");
    if (soc_min > soc_max || soc_init < soc_min || soc_init > soc_max ||
        soc_min < 0.0 || soc_max > 1.0) {
        throw ValidationError("state-of-charge band must satisfy 0 <= min <= init <= max <= 1");
    }
}

SmoothStep StorageSmoother::step(double p_now, double dt) {
    if (!(dt > 0.0)) throw ValidationError("dt must be positive");

    const auto max_samples =
        static_cast<std::size_t>(std::floor(horizon_s_ / dt + 1e-9)) + 1;
    window_.push_back(p_now);
    window_sum_ += p_now;
    while (window_.size() > max_samples) {
        window_sum_ -= window_.front();
        window_.pop_front();
    }

    const double mean = window_sum_ / static_cast<double>(window_.size());
    double z = k_p_ * (p_now - mean);

    const bool in_band = soc_ >= soc_min_ && soc_ <= soc_max_;
    const double soc_next = soc_ - z * dt / capacity_;
    if (!in_band || soc_next < soc_min_ || soc_next > soc_max_ ||
        soc_next < 0.0 || soc_next > 1.0) {
        z = 0.0;
    } else {
        soc_ = soc_next;
    }
    return {z, p_now - z};
}

}  // namespace vreg
