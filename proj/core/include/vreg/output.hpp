#pragma once

#include <string>

#include "vreg/analysis.hpp"
#include "vreg/feeder.hpp"
#include "vreg/sim.hpp"

namespace vreg {

/// Write the full trajectory as one wide CSV: time_s, a ctrl flag marking
/// control instants, then per-bus v_<id>, q_<id>, vref_<id> columns (the
/// reference held piecewise-constant between instants). When storage
/// smoothing ran, per-DC z/soc columns are appended. Deterministic bytes
/// for identical results.
void write_trajectory_csv(const std::string& path, const SimResult& result,
                          const FeederModel& model);

/// Metrics summary for one run (JSON): deviation/effort/violation metrics,
/// resolved gain, and the contraction certificate for audit.
std::string metrics_json(const SimResult& result, const FeederModel& model,
                         const DroopGain& gain, const ContractionCertificate& cert);

/// Paired-run summary with fixed-minus-switching deltas.
std::string comparison_json(const ControllerComparison& cmp, const FeederModel& model,
                            const DroopGain& gain, const ContractionCertificate& cert);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace vreg
