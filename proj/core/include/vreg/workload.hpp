#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vreg/errors.hpp"

namespace vreg {

/// Two-level switching load: alternating communication (mode 0) and
/// computation (mode 1) phases with bounded intra-phase fluctuation.
/// Injections are signed; a load injects negative power.
struct TwoModeProfile {
    double p_comm = 0.0;        ///< mean injection in mode 0 (p.u.)
    double p_comp = 0.0;        ///< mean injection in mode 1 (p.u.)
    double w_comm = 0.0;        ///< fluctuation bound in mode 0 (p.u.)
    double w_comp = 0.0;        ///< fluctuation bound in mode 1 (p.u.)
    double period_comm = 0.0;   ///< mode-0 phase duration (s)
    double period_comp = 0.0;   ///< mode-1 phase duration (s)
    std::uint64_t seed = 0;

    /// Throws ValidationError listing every violated invariant.
    void validate() const;

    double mean(int mode) const { return mode == 0 ? p_comm : p_comp; }
    double bound(int mode) const { return mode == 0 ? w_comm : w_comp; }
};

/// Per-bus active-power time series, optionally annotated with the
/// ground-truth mode sequence of one data-center bus.
struct WorkloadTrace {
    double dt = 0.0;                  ///< sample interval (s)
    Eigen::MatrixXd samples;          ///< n x T injections (p.u.)
    std::vector<std::uint8_t> modes;  ///< per-step mode; empty if unknown
    int dc_index = -1;                ///< state index the modes annotate

    Eigen::Index steps() const { return samples.cols(); }
};

/// Synthesize a square-wave two-mode trace at one bus over a constant
/// background. The trace starts in mode 0 at t = 0; noise is uniform in
/// [-w, w] drawn from the profile seed, so traces are reproducible.
WorkloadTrace generate_trace(const TwoModeProfile& profile, double duration,
                             double dt, int dc_index,
                             const Eigen::VectorXd& background);

/// Ingest a measured trace: CSV with a header and rows `time_s,power_watts`,
/// monotone timestamps. Resampled to dt by zero-order hold and scaled to
/// p.u. injections with `scale` (p.u. per watt, sign included). No mode
/// annotations. Throws ParseError on malformed input.
WorkloadTrace load_trace_csv(const std::string& path, double dt, int dc_index,
                             double scale, const Eigen::VectorXd& background);

/// Write a synthetic profile as the same CSV dialect load_trace_csv reads.
/// `watts_per_pu` converts injection magnitude to the meter reading
/// (consumption positive).
void write_trace_csv(const std::string& path, const TwoModeProfile& profile,
                     double duration, double dt, double watts_per_pu);

struct SmoothStep {
    double z = 0.0;      ///< storage dispatch (p.u., injection convention)
    double p_net = 0.0;  ///< p_now - z
};

/// Droop-type storage dispatch that offsets deviations of the instantaneous
/// load from its rolling mean: z = k_p (p - mean over the last T seconds).
/// Dispatch is forced to zero whenever it would push the state of charge
/// outside the configured band (or [0, 1]); soc bookkeeping follows
/// soc' = soc - z dt / capacity. The rolling window starts empty and
/// averages over whatever samples exist.
class StorageSmoother {
public:
    StorageSmoother(double k_p, double horizon_s, double energy_capacity,
                    double soc_init = 0.95, double soc_min = 0.93,
                    double soc_max = 0.97);

    /// Advance one sample: push p_now into the window, dispatch, update soc.
    SmoothStep step(double p_now, double dt);

    double soc() const { return soc_; }
    double k_p() const { return k_p_; }
    double capacity() const { return capacity_; }

private:
    double k_p_;
    double horizon_s_;
    double capacity_;
    double soc_;
    double soc_min_;
    double soc_max_;
    std::deque<double> window_;  // raw samples, newest last
    double window_sum_ = 0.0;
};

}  // namespace vreg
