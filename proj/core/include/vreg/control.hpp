#pragma once

#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "vreg/errors.hpp"

namespace vreg {

/// Per-bus diagonal droop gains; zero entries mark unactuated buses.
struct DroopGain {
    Eigen::VectorXd k;

    /// Uniform gain on a set of actuated state indices (all buses if empty).
    static DroopGain uniform(int n, double gain,
                             const std::vector<int>& actuated = {});
};

/// Deadband on the tracking error and per-update reactive saturation.
struct ControlLimits {
    double deadband = 0.0;
    double dq_max = std::numeric_limits<double>::infinity();

    static ControlLimits none() { return {}; }
};

struct DroopStep {
    Eigen::VectorXd q_next;
    Eigen::VectorXd dq;
};

/// One droop update: e = v - v_ref, dq_i = -k_i e_i outside the deadband,
/// clipped to [-dq_max, dq_max]. Throws ValidationError on size mismatch.
DroopStep droop_update(const Eigen::VectorXd& q, const Eigen::VectorXd& v,
                       const Eigen::VectorXd& v_ref, const DroopGain& gain,
                       const ControlLimits& limits);

/// The conventional fixed reference: 1 p.u. everywhere.
Eigen::VectorXd fixed_reference(int n);

/// Decentralized switching-reference state: per-bus bias, amplitude, sign,
/// and a sliding window of recent voltage samples. The emitted reference is
///   v_ref_i = bias_i + sign_i * amp_i.
/// Amplitude tracks half the largest one-step voltage change in the recent
/// window; bias is nudged so the window's max/min midpoint approaches 1;
/// the sign selects the level matching the side of the bias the measured
/// voltage is on. All state is per-bus; no cross-bus reads.
class SwitchingController {
public:
    /// Window lengths are in control steps; eta_b in (0, 1].
    SwitchingController(int n, int amp_window, int bias_window, double eta_b);

    /// One control instant: push v_now into the windows, update amplitude,
    /// bias, and sign in that order, and return the new reference.
    Eigen::VectorXd step(const Eigen::VectorXd& v_now);

    /// Current reference bias + sign * amp without advancing state.
    Eigen::VectorXd reference() const;

    // The individual adaptation steps, exposed for direct testing.
    void push(const Eigen::VectorXd& v_now);
    void update_amplitude(int bus);
    void update_bias(int bus);
    void select_sign(const Eigen::VectorXd& v_now);

    /// When disabled, step() only returns the frozen reference (startup
    /// values: bias 1, amp 0), which coincides with fixed-reference droop.
    void set_adaptation(bool enabled) { adapt_ = enabled; }

    void set_bias(const Eigen::VectorXd& bias);

    const Eigen::VectorXd& bias() const { return bias_; }
    const Eigen::VectorXd& amp() const { return amp_; }
    const Eigen::VectorXd& sign() const { return sign_; }
    int window_size() const { return filled_; }

private:
    int n_;
    int amp_window_;
    int bias_window_;
    int capacity_;  // max(amp_window_, bias_window_)
    double eta_b_;
    bool adapt_ = true;

    Eigen::VectorXd bias_;
    Eigen::VectorXd amp_;
    Eigen::VectorXd sign_;

    // Shared ring buffer of the last `capacity_` voltage vectors:
    // window_(i, s) is bus i at slot s; head_ is the most recent slot.
    Eigen::MatrixXd window_;
    int head_ = -1;
    int filled_ = 0;

    /// Sample at age steps before the newest one (age 0 = newest).
    double sample(int bus, int age) const;
};

}  // namespace vreg
