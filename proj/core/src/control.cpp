#include "vreg/control.hpp"

#include <algorithm>
#include <cmath>

namespace vreg {

DroopGain DroopGain::uniform(int n, double gain, const std::vector<int>& actuated) {
    if (gain < 0.0) {
        throw ValidationError("droop gain must be nonnegative");
    }
    DroopGain g;
    if (actuated.empty()) {
        g.k = Eigen::VectorXd::Constant(n, gain);
    } else {
        g.k = Eigen::VectorXd::Zero(n);
        for (int i : actuated) {
            if (i < 0 || i >= n) {
                throw ValidationError("actuated index out of range: " + std::to_string(i));
            }
            g.k(i) = gain;
        }
    }
    return g;
}

DroopStep droop_update(const Eigen::VectorXd& q, const Eigen::VectorXd& v,
                       const Eigen::VectorXd& v_ref, const DroopGain& gain,
                       const ControlLimits& limits) {
    const auto n = q.size();
    if (v.size() != n || v_ref.size() != n || gain.k.size() != n) {
        throw ValidationError("droop_update: mismatched vector lengths");
    }
    DroopStep out;
    out.dq = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double e = v(i) - v_ref(i);
        if (std::abs(e) <= limits.deadband) continue;
        out.dq(i) = std::clamp(-gain.k(i) * e, -limits.dq_max, limits.dq_max);
    }
    out.q_next = q + out.dq;
    return out;
}

Eigen::VectorXd fixed_reference(int n) {
    return Eigen::VectorXd::Ones(n);
}

SwitchingController::SwitchingController(int n, int amp_window, int bias_window,
                                         double eta_b)
    : n_(n),
      amp_window_(amp_window),
      bias_window_(bias_window),
      capacity_(std::max(amp_window, bias_window)),
      eta_b_(eta_b) {
    if (n <= 0) throw ValidationError("bus count must be positive");
    if (amp_window < 2) throw ValidationError("amplitude window needs >= 2 steps");
    if (bias_window < 1) throw ValidationError("bias window needs >= 1 step");
    if (!(eta_b > 0.0) || eta_b > 1.0) {
        throw ValidationError("eta_b must lie in (0, 1]");
    }
    bias_ = Eigen::VectorXd::Ones(n);
    amp_ = Eigen::VectorXd::Zero(n);
    sign_ = Eigen::VectorXd::Constant(n, -1.0);
    window_.setZero(n, capacity_);
}

double SwitchingController::sample(int bus, int age) const {
    int slot = head_ - age;
    if (slot < 0) slot += capacity_;
    return window_(bus, slot);
}

void SwitchingController::push(const Eigen::VectorXd& v_now) {
    if (v_now.size() != n_) {
        throw ValidationError("switching controller: voltage vector length mismatch");
    }
    head_ = (head_ + 1) % capacity_;
    window_.col(head_) = v_now;
    filled_ = std::min(filled_ + 1, capacity_);
}

void SwitchingController::update_amplitude(int bus) {
    const int m = std::min(filled_, amp_window_);
    if (m < 2) return;  // startup: keep the current estimate
    double biggest = 0.0;
    for (int age = 0; age + 1 < m; ++age) {
        biggest = std::max(biggest, std::abs(sample(bus, age) - sample(bus, age + 1)));
    }
    amp_(bus) = 0.5 * biggest;
}

void SwitchingController::update_bias(int bus) {
    const int m = std::min(filled_, bias_window_);
    if (m < 1) return;
    double hi = sample(bus, 0);
    double lo = hi;
    for (int age = 1; age < m; ++age) {
        const double s = sample(bus, age);
        hi = std::max(hi, s);
        lo = std::min(lo, s);
    }
    const double delta = 0.5 * (hi + lo) - 1.0;
    bias_(bus) -= eta_b_ * delta;
}

void SwitchingController::select_sign(const Eigen::VectorXd& v_now) {
    for (int i = 0; i < n_; ++i) {
        sign_(i) = v_now(i) > bias_(i) ? 1.0 : -1.0;
    }
}

Eigen::VectorXd SwitchingController::reference() const {
    return bias_ + sign_.cwiseProduct(amp_);
}

Eigen::VectorXd SwitchingController::step(const Eigen::VectorXd& v_now) {
    if (!adapt_) return reference();
    push(v_now);
    for (int i = 0; i < n_; ++i) {
        update_amplitude(i);
        update_bias(i);
    }
    select_sign(v_now);
    return reference();
}

void SwitchingController::set_bias(const Eigen::VectorXd& bias) {
    if (bias.size() != n_) {
        throw ValidationError("switching controller: bias vector length mismatch");
    }
    bias_ = bias;
}

}  // namespace vreg
