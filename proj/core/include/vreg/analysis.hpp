#pragma once

#include <vector>

#include <Eigen/Dense>

#include "vreg/control.hpp"
#include "vreg/errors.hpp"

namespace vreg {

/// Closed-loop tracking-error recursion e' = A e + d with A = I - X diag(k).
struct ErrorSystem {
    Eigen::MatrixXd A;
};

ErrorSystem make_error_system(const Eigen::MatrixXd& X, const DroopGain& gain);

/// One step of the error recursion: A e + d.
Eigen::VectorXd step_error(const ErrorSystem& sys, const Eigen::VectorXd& e,
                           const Eigen::VectorXd& d);

/// Disturbance driving the error recursion: d = R dp - dv_ref.
Eigen::VectorXd disturbance(const Eigen::MatrixXd& R, const Eigen::VectorXd& dp,
                            const Eigen::VectorXd& dv_ref);

/// Certificate of geometric decay |A^k| <= C eps^k (elementwise).
struct ContractionCertificate {
    Eigen::MatrixXd C;      ///< nonnegative; |P||P^-1| on the spectral route
    double epsilon = 1.0;   ///< spectral radius of A
    bool valid = false;     ///< gain lies strictly inside 0 < K < 2 X^-1
    bool empirical = false; ///< C certified by direct powers of A instead
    double margin = 0.0;    ///< min distance of eig(I - X^1/2 K X^1/2) to {-1, 1}
};

/// Check the contraction gain condition and build a certificate.
///
/// The gain is valid iff every eigenvalue of the symmetric matrix
/// I - X^1/2 K X^1/2 lies strictly inside (-1, 1), which is equivalent to
/// 0 < K < 2 X^-1. A = I - X K is similar to that symmetric matrix, so
/// epsilon = rho(A) comes from its eigenvalues and C = |P||P^-1| from the
/// similarity transform P = X^-1/2 Q. If P reconstructs A poorly (badly
/// conditioned X), falls back to certifying C from direct powers of A up to
/// `power_horizon` and flags the certificate as empirical.
/// Throws ValidationError if X is not symmetric positive definite.
ContractionCertificate validate_gain(const Eigen::MatrixXd& X, const DroopGain& gain,
                                     int power_horizon = 1000);

/// The two mode-matched reference levels for mode means p0, p1 and bias b:
/// ref0 = b + dv/2, ref1 = b - dv/2 with dv = R (p0 - p1).
struct ModeReferences {
    Eigen::VectorXd ref0;
    Eigen::VectorXd ref1;
    Eigen::VectorXd dv_mode;
};

ModeReferences ideal_mode_references(const Eigen::MatrixXd& R,
                                     const Eigen::VectorXd& p_bar_0,
                                     const Eigen::VectorXd& p_bar_1,
                                     const Eigen::VectorXd& bias);

/// Componentwise steady-state voltage extrema across the two modes.
struct SteadyStateExtrema {
    Eigen::VectorXd v_plus;
    Eigen::VectorXd v_minus;
};

/// Bias that centers the extrema band on 1: b* = b - ((v+ + v-)/2 - 1).
Eigen::VectorXd optimal_bias(const SteadyStateExtrema& extrema,
                             const Eigen::VectorXd& bias);

/// Per-step right-hand sides of the transient deviation bound
///   bound_t = C eps^t |e0| + sum_{tau<t} C eps^(t-1-tau) |d_tau|
/// for t = 0..d_seq.size(). Throws if the certificate is invalid.
std::vector<Eigen::VectorXd> theorem_bound(const ContractionCertificate& cert,
                                           const Eigen::VectorXd& e0,
                                           const std::vector<Eigen::VectorXd>& d_seq);

/// Long-run bound under |d_t| <= d_bar: (1/(1-eps)) C d_bar.
Eigen::VectorXd asymptotic_bound(const ContractionCertificate& cert,
                                 const Eigen::VectorXd& d_bar);

/// Componentwise max/min of the trailing `window` columns of a voltage
/// series (one column per step). Throws on an empty window.
SteadyStateExtrema measure_extrema(const Eigen::MatrixXd& v_series, int window);

}  // namespace vreg
