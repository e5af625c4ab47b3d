#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vreg/analysis.hpp"

namespace vreg {

/// Outcome of one verification property: pass iff `measured cmp threshold`.
struct CheckResult {
    std::string name;
    bool pass = false;
    double measured = 0.0;
    double threshold = 0.0;
    std::string cmp;     ///< "<=" or ">="
    std::string detail;  ///< extra context for the report
};

struct VerifyOptions {
    std::uint64_t seed = 12345;
    /// Uniform droop gain to use on the 33-bus feeder instead of the
    /// default 1/lambda_max(X) (negative-path testing).
    std::optional<double> gain_override;
};

/// Run every theory check against the built-in 33-bus feeder:
/// the gain/contraction condition and its random-matrix agreement test,
/// the error-dynamics equivalence, the transient and long-run deviation
/// bounds, mode-matched reference cancellation, the half-peak reference
/// shift, and the bias-optimality formula with its translation property.
std::vector<CheckResult> run_verification(const VerifyOptions& opts = {});

/// Render pass/fail lines plus the default-gain certificate summary.
std::string verification_report(const std::vector<CheckResult>& results);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace vreg
