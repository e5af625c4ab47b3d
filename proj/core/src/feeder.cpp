#include "vreg/feeder.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include "vreg/ieee33_data.hpp"

namespace vreg {

int FeederModel::index_of(int bus_id) const {
    auto it = index.find(bus_id);
    if (it == index.end()) {
        throw ValidationError("unknown or slack bus id: " + std::to_string(bus_id));
    }
    return it->second;
}

FeederModel build_feeder(const std::vector<Line>& lines, int slack_bus,
                         double base_mva, double base_kv) {
    if (lines.empty()) {
        throw TopologyError("feeder has no lines");
    }
    for (const Line& l : lines) {
        if (!(l.r > 0.0) || !(l.x > 0.0)) {
            throw ValidationError("non-positive impedance on line " +
                                  std::to_string(l.from) + "-" + std::to_string(l.to));
        }
        if (l.from == l.to) {
            throw TopologyError("self-loop at bus " + std::to_string(l.from));
        }
    }

    std::set<int> ids;
    for (const Line& l : lines) {
        ids.insert(l.from);
        ids.insert(l.to);
    }
    if (!ids.count(slack_bus)) {
        throw TopologyError("slack bus " + std::to_string(slack_bus) +
                            " does not appear in the line list");
    }
    const int n = static_cast<int>(ids.size()) - 1;
    if (static_cast<int>(lines.size()) != n) {
        throw TopologyError("expected " + std::to_string(n) + " lines for " +
                            std::to_string(n) + " non-slack buses, got " +
                            std::to_string(lines.size()) + " (cycle or duplicate branch)");
    }

    FeederModel m;
    m.n = n;
    m.slack_bus = slack_bus;
    m.base_mva = base_mva;
    m.base_kv = base_kv;
    m.bus_ids.reserve(n);
    for (int id : ids) {
        if (id == slack_bus) continue;
        m.index[id] = static_cast<int>(m.bus_ids.size());
        m.bus_ids.push_back(id);
    }

    // Adjacency over external ids.
    std::unordered_map<int, std::vector<std::pair<int, const Line*>>> adj;
    for (const Line& l : lines) {
        adj[l.from].push_back({l.to, &l});
        adj[l.to].push_back({l.from, &l});
    }

    // BFS from the slack; a connected graph with n+1 vertices and n edges
    // is a tree, so reaching every bus suffices.
    std::unordered_map<int, int> parent;         // bus -> parent bus
    std::unordered_map<int, const Line*> up;     // bus -> line to parent
    std::deque<int> queue{slack_bus};
    std::set<int> seen{slack_bus};
    while (!queue.empty()) {
        int b = queue.front();
        queue.pop_front();
        for (auto& [nb, line] : adj[b]) {
            if (seen.count(nb)) continue;
            seen.insert(nb);
            parent[nb] = b;
            up[nb] = line;
            queue.push_back(nb);
        }
    }
    if (static_cast<int>(seen.size()) != n + 1) {
        throw TopologyError("feeder is disconnected: " +
                            std::to_string(n + 1 - static_cast<int>(seen.size())) +
                            " bus(es) unreachable from the slack");
    }

    // Cumulative path impedance from the slack plus depth per bus.
    std::unordered_map<int, double> rsum, xsum;
    std::unordered_map<int, int> depth;
    rsum[slack_bus] = 0.0;
    xsum[slack_bus] = 0.0;
    depth[slack_bus] = 0;
    // Parents were discovered in BFS order, so walk ids in that order again.
    std::deque<int> order{slack_bus};
    while (!order.empty()) {
        int b = order.front();
        order.pop_front();
        for (auto& [nb, line] : adj[b]) {
            if (parent.count(nb) && parent[nb] == b) {
                rsum[nb] = rsum[b] + line->r;
                xsum[nb] = xsum[b] + line->x;
                depth[nb] = depth[b] + 1;
                order.push_back(nb);
            }
        }
    }

    // Common path of two root paths ends at the lowest common ancestor:
    // R[i][j] = 2 * rsum(lca(i, j)).
    auto lca = [&](int a, int b) {
        while (depth[a] > depth[b]) a = parent[a];
        while (depth[b] > depth[a]) b = parent[b];
        while (a != b) {
            a = parent[a];
            b = parent[b];
        }
        return a;
    };

    m.R.resize(n, n);
    m.X.resize(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            int anc = lca(m.bus_ids[i], m.bus_ids[j]);
            m.R(i, j) = m.R(j, i) = 2.0 * rsum[anc];
            m.X(i, j) = m.X(j, i) = 2.0 * xsum[anc];
        }
    }

    m.lines = lines;
    return m;
}

Eigen::VectorXd solve_voltage(const FeederModel& model,
                              const Eigen::VectorXd& p,
                              const Eigen::VectorXd& q) {
    if (p.size() != model.n || q.size() != model.n) {
        throw ValidationError("solve_voltage: expected vectors of length " +
                              std::to_string(model.n) + ", got p=" +
                              std::to_string(p.size()) + " q=" + std::to_string(q.size()));
    }
    return model.R * p + model.X * q + Eigen::VectorXd::Ones(model.n);
}

FeederModel parse_feeder(const std::string& text, const std::string& origin,
                         int slack_bus, double base_mva, double base_kv) {
    if (!(base_mva > 0.0) || !(base_kv > 0.0)) {
        throw ValidationError("base power and voltage must be positive");
    }
    const double z_base = base_kv * base_kv / base_mva;  // ohms

    std::vector<Line> lines;
    std::istringstream in(text);
    std::string row;
    int lineno = 0;
    while (std::getline(in, row)) {
        ++lineno;
        auto hash = row.find('#');
        if (hash != std::string::npos) row.erase(hash);
        std::istringstream fields(row);
        Line l;
        if (!(fields >> l.from)) continue;  // blank or comment-only line
        if (!(fields >> l.to >> l.r >> l.x)) {
            throw ParseError(origin + ":" + std::to_string(lineno) +
                             ": expected 'from to r_ohm x_ohm'");
        }
        std::string extra;
        if (fields >> extra) {
            throw ParseError(origin + ":" + std::to_string(lineno) +
                             ": trailing field '" + extra + "'");
        }
        l.r /= z_base;
        l.x /= z_base;
        lines.push_back(l);
    }
    if (lines.empty()) {
        throw ParseError(origin + ": no line records found");
    }
    return build_feeder(lines, slack_bus, base_mva, base_kv);
}

FeederModel load_feeder(const std::string& path, int slack_bus,
                        double base_mva, double base_kv) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError(path + ": cannot open file");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_feeder(buf.str(), path, slack_bus, base_mva, base_kv);
}

FeederModel ieee33_feeder(double base_mva, double base_kv) {
    return parse_feeder(detail::kIeee33LineTable, "<builtin ieee33>", 1,
                        base_mva, base_kv);
}

}  // namespace vreg
