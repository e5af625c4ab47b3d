#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "vreg/errors.hpp"

namespace vreg {

/// One branch of the radial network. Impedances are in the unit the
/// surrounding context declares (ohms in line-table files, p.u. inside
/// a built FeederModel).
struct Line {
    int from = 0;
    int to = 0;
    double r = 0.0;
    double x = 0.0;
};

/// Radial distribution network under the linearized power-flow model
///   v = R p + X q + 1
/// with the slack bus held at 1 p.u. and excluded from all state vectors.
/// Immutable after construction; safe to share across threads.
struct FeederModel {
    int n = 0;                   ///< non-slack bus count
    int slack_bus = 1;           ///< external id of the slack bus
    std::vector<Line> lines;     ///< branches, impedances in p.u.
    Eigen::MatrixXd R;           ///< n x n resistance sensitivity (p.u.)
    Eigen::MatrixXd X;           ///< n x n reactance sensitivity (p.u.)
    double base_mva = 10.0;
    double base_kv = 12.66;

    std::vector<int> bus_ids;              ///< state index -> external bus id
    std::unordered_map<int, int> index;    ///< external bus id -> state index

    /// State index of an external bus id; throws if unknown or the slack.
    int index_of(int bus_id) const;
};

/// Build sensitivity matrices from a branch list (impedances already in
/// p.u.). R[i][j] is twice the summed resistance on the common part of the
/// slack->i and slack->j paths; X is the same with reactances.
/// Throws TopologyError if the branches are not a tree rooted at the slack,
/// ValidationError on non-positive impedances.
FeederModel build_feeder(const std::vector<Line>& lines, int slack_bus,
                         double base_mva = 10.0, double base_kv = 12.66);

/// v = R p + X q + 1. Pure; throws ValidationError on dimension mismatch.
Eigen::VectorXd solve_voltage(const FeederModel& model,
                              const Eigen::VectorXd& p,
                              const Eigen::VectorXd& q);

/// Load a line-table file (columns: from to r_ohm x_ohm, '#' comments),
/// convert impedances to p.u. with z_pu = z_ohm * base_mva / base_kv^2,
/// and build the feeder. Throws ParseError with the line number on
/// malformed rows.
FeederModel load_feeder(const std::string& path, int slack_bus = 1,
                        double base_mva = 10.0, double base_kv = 12.66);

/// Same as load_feeder but reading from an in-memory table.
FeederModel parse_feeder(const std::string& text, const std::string& origin,
                         int slack_bus = 1, double base_mva = 10.0,
                         double base_kv = 12.66);

/// The built-in IEEE 33-bus feeder (32 non-slack buses, slack bus 1),
/// at the default 10 MVA / 12.66 kV base.
FeederModel ieee33_feeder(double base_mva = 10.0, double base_kv = 12.66);

}  // namespace vreg
