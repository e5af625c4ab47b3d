#include "vreg/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vreg {

namespace {

constexpr double kPdTolerance = 1e-10;  // smallest acceptable eigenvalue of X

void require_spd(const Eigen::MatrixXd& X) {
    if (X.rows() != X.cols()) {
        throw ValidationError("X must be square");
    }
    const double scale = std::max(1.0, X.cwiseAbs().maxCoeff());
    if ((X - X.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw ValidationError("X must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(X, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= kPdTolerance) {
        throw ValidationError("X must be positive definite (min eigenvalue " +
                              std::to_string(es.eigenvalues().minCoeff()) + ")");
    }
}

}  // namespace

ErrorSystem make_error_system(const Eigen::MatrixXd& X, const DroopGain& gain) {
    if (gain.k.size() != X.rows()) {
        throw ValidationError("gain length does not match X");
    }
    ErrorSystem sys;
    sys.A = Eigen::MatrixXd::Identity(X.rows(), X.cols()) - X * gain.k.asDiagonal();
    return sys;
}

Eigen::VectorXd step_error(const ErrorSystem& sys, const Eigen::VectorXd& e,
                           const Eigen::VectorXd& d) {
    return sys.A * e + d;
}

Eigen::VectorXd disturbance(const Eigen::MatrixXd& R, const Eigen::VectorXd& dp,
                            const Eigen::VectorXd& dv_ref) {
    return R * dp - dv_ref;
}

ContractionCertificate validate_gain(const Eigen::MatrixXd& X, const DroopGain& gain,
                                     int power_horizon) {
    require_spd(X);
    const int n = static_cast<int>(X.rows());
    if (gain.k.size() != n) {
        throw ValidationError("gain length does not match X");
    }

    // X^(1/2) and X^(-1/2) via the symmetric eigendecomposition of X.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> xs(X);
    const Eigen::VectorXd sqrt_ev = xs.eigenvalues().cwiseSqrt();
    const Eigen::MatrixXd x_half =
        xs.eigenvectors() * sqrt_ev.asDiagonal() * xs.eigenvectors().transpose();
    const Eigen::MatrixXd x_half_inv =
        xs.eigenvectors() * sqrt_ev.cwiseInverse().asDiagonal() *
        xs.eigenvectors().transpose();

    // Symmetric similar form M = I - X^1/2 K X^1/2; force exact symmetry.
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n) -
                        x_half * gain.k.asDiagonal() * x_half;
    M = 0.5 * (M + M.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ms(M);
    const Eigen::VectorXd lam = ms.eigenvalues();

    ContractionCertificate cert;
    cert.epsilon = lam.cwiseAbs().maxCoeff();
    cert.margin = 1.0 - cert.epsilon;
    cert.valid = cert.epsilon < 1.0;

    // A = P Lambda P^-1 with P = X^-1/2 Q from the similarity to M.
    const Eigen::MatrixXd P = x_half_inv * ms.eigenvectors();
    const Eigen::MatrixXd P_inv = ms.eigenvectors().transpose() * x_half;
    cert.C = P.cwiseAbs() * P_inv.cwiseAbs();

    if (!cert.valid) return cert;

    // Sanity of the spectral route: P Lambda P^-1 must reproduce A.
    const Eigen::MatrixXd A =
        Eigen::MatrixXd::Identity(n, n) - X * gain.k.asDiagonal();
    const double recon =
        (P * lam.asDiagonal() * P_inv - A).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    if (recon <= 1e-8 * scale) return cert;

    // Fallback: certify C directly from powers of A up to the horizon.
    cert.empirical = true;
    Eigen::MatrixXd C = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd Ak = Eigen::MatrixXd::Identity(n, n);
    double decay = 1.0;
    for (int k = 1; k <= power_horizon; ++k) {
        Ak = A * Ak;
        decay *= cert.epsilon;
        if (decay < 1e-300) break;
        C = C.cwiseMax(Ak.cwiseAbs() / decay);
    }
    cert.C = C;
    return cert;
}

ModeReferences ideal_mode_references(const Eigen::MatrixXd& R,
                                     const Eigen::VectorXd& p_bar_0,
                                     const Eigen::VectorXd& p_bar_1,
                                     const Eigen::VectorXd& bias) {
    if (p_bar_0.size() != R.rows() || p_bar_1.size() != R.rows() ||
        bias.size() != R.rows()) {
        throw ValidationError("ideal_mode_references: mismatched vector lengths");
    }
    ModeReferences refs;
    refs.dv_mode = R * (p_bar_0 - p_bar_1);
    refs.ref0 = bias + 0.5 * refs.dv_mode;
    refs.ref1 = bias - 0.5 * refs.dv_mode;
    return refs;
}

Eigen::VectorXd optimal_bias(const SteadyStateExtrema& extrema,
                             const Eigen::VectorXd& bias) {
    if (extrema.v_plus.size() != bias.size() ||
        extrema.v_minus.size() != bias.size()) {
        throw ValidationError("optimal_bias: mismatched vector lengths");
    }
    if (((extrema.v_plus - extrema.v_minus).array() < 0.0).any()) {
        throw ValidationError("optimal_bias: v_plus must dominate v_minus");
    }
    const Eigen::VectorXd mid = 0.5 * (extrema.v_plus + extrema.v_minus);
    return bias - (mid - Eigen::VectorXd::Ones(bias.size()));
}

std::vector<Eigen::VectorXd> theorem_bound(const ContractionCertificate& cert,
                                           const Eigen::VectorXd& e0,
                                           const std::vector<Eigen::VectorXd>& d_seq) {
    if (!cert.valid) {
        throw ValidationError("theorem_bound requires a valid certificate");
    }
    std::vector<Eigen::VectorXd> bounds;
    bounds.reserve(d_seq.size() + 1);

    // Running S_t = sum_{tau<t} eps^(t-1-tau) |d_tau| so each step is O(n).
    Eigen::VectorXd abs_e0 = e0.cwiseAbs();
    Eigen::VectorXd s = Eigen::VectorXd::Zero(e0.size());
    double decay = 1.0;
    bounds.push_back(cert.C * abs_e0);
    for (const Eigen::VectorXd& d : d_seq) {
        s = cert.epsilon * s + d.cwiseAbs();
        decay *= cert.epsilon;
        bounds.push_back(cert.C * (decay * abs_e0 + s));
    }
    return bounds;
}

Eigen::VectorXd asymptotic_bound(const ContractionCertificate& cert,
                                 const Eigen::VectorXd& d_bar) {
    if (!cert.valid) {
        throw ValidationError("asymptotic_bound requires a valid certificate");
    }
    return cert.C * d_bar / (1.0 - cert.epsilon);
}

SteadyStateExtrema measure_extrema(const Eigen::MatrixXd& v_series, int window) {
    if (window <= 0 || window > v_series.cols()) {
        throw ValidationError("measure_extrema: window must be in [1, series length]");
    }
    const auto tail = v_series.rightCols(window);
    SteadyStateExtrema ex;
    ex.v_plus = tail.rowwise().maxCoeff();
    ex.v_minus = tail.rowwise().minCoeff();
    return ex;
}

}  // namespace vreg
