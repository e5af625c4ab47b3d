#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <unordered_map>

#include "vreg/feeder.hpp"

using vreg::build_feeder;
using vreg::FeederModel;
using vreg::Line;
using vreg::solve_voltage;

namespace {

/// Independent route to the sensitivity matrices: with F the bus-by-edge
/// path incidence matrix (F(i,e) = 1 iff edge e lies on the slack->i path),
/// R = 2 F diag(r) F^T. The implementation sums common-path impedances via
/// ancestor walks, so agreement checks both routes.
Eigen::MatrixXd path_matrix_r(const std::vector<Line>& lines, int slack,
                              const FeederModel& m) {
    const int n = m.n;
    const int e_count = static_cast<int>(lines.size());
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(n, e_count);

    std::unordered_map<int, std::pair<int, int>> up;  // bus -> (parent, edge)
    std::vector<int> frontier{slack};
    std::set<int> seen{slack};
    while (!frontier.empty()) {
        std::vector<int> next;
        for (int b : frontier) {
            for (int e = 0; e < e_count; ++e) {
                int other = -1;
                if (lines[e].from == b) other = lines[e].to;
                if (lines[e].to == b) other = lines[e].from;
                if (other < 0 || seen.count(other)) continue;
                seen.insert(other);
                up[other] = {b, e};
                next.push_back(other);
            }
        }
        frontier = std::move(next);
    }
    for (int i = 0; i < n; ++i) {
        int b = m.bus_ids[i];
        while (b != slack) {
            auto [par, e] = up.at(b);
            F(i, e) = 1.0;
            b = par;
        }
    }
    Eigen::VectorXd r(e_count);
    for (int e = 0; e < e_count; ++e) r(e) = lines[e].r;
    return 2.0 * F * r.asDiagonal() * F.transpose();
}

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
    auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << body;
    return path;
}

}  // namespace

TEST_CASE("single line gives R=2r, X=2x") {
    auto m = build_feeder({{1, 2, 0.05, 0.10}}, 1);
    REQUIRE(m.n == 1);
    CHECK(m.R(0, 0) == doctest::Approx(0.10).epsilon(1e-14));
    CHECK(m.X(0, 0) == doctest::Approx(0.20).epsilon(1e-14));
}

TEST_CASE("two-bus chain common-path sums") {
    auto m = build_feeder({{1, 2, 0.05, 0.05}, {2, 3, 0.05, 0.05}}, 1);
    REQUIRE(m.n == 2);
    CHECK(m.R(0, 0) == doctest::Approx(0.10));
    CHECK(m.R(0, 1) == doctest::Approx(0.10));
    CHECK(m.R(1, 0) == doctest::Approx(0.10));
    CHECK(m.R(1, 1) == doctest::Approx(0.20));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.R, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("rooted-tree paths make every R entry positive") {
    auto m = vreg::ieee33_feeder();
    CHECK(m.n == 32);
    CHECK(m.R.minCoeff() > 0.0);
    CHECK(m.X.minCoeff() > 0.0);
}

TEST_CASE("topology and impedance validation") {
    CHECK_THROWS_AS(build_feeder({{1, 2, 0.1, 0.1}, {2, 3, 0.1, 0.1},
                                  {3, 1, 0.1, 0.1}},
                                 1),
                    vreg::TopologyError);  // cycle
    CHECK_THROWS_AS(build_feeder({{1, 2, 0.1, 0.1}, {3, 4, 0.1, 0.1}}, 1),
                    vreg::TopologyError);  // disconnected
    CHECK_THROWS_AS(build_feeder({{1, 2, -0.1, 0.1}}, 1), vreg::ValidationError);
    CHECK_THROWS_AS(build_feeder({{1, 2, 0.1, 0.0}}, 1), vreg::ValidationError);
    CHECK_THROWS_AS(build_feeder({{1, 2, 0.1, 0.1}}, 7), vreg::TopologyError);
}

TEST_CASE("solve_voltage basics") {
    auto m = build_feeder({{1, 2, 0.05, 0.10}}, 1);

    Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
    CHECK(solve_voltage(m, zero, zero)(0) == doctest::Approx(1.0).epsilon(1e-15));

    Eigen::VectorXd p(1), q(1);
    p << -0.2;
    q << 0.0;
    CHECK(solve_voltage(m, p, q)(0) == doctest::Approx(0.98).epsilon(1e-14));
    q << 0.05;
    CHECK(solve_voltage(m, p, q)(0) == doctest::Approx(0.99).epsilon(1e-14));

    Eigen::VectorXd bad(2);
    CHECK_THROWS_AS(solve_voltage(m, bad, bad), vreg::ValidationError);
}

TEST_CASE("line-table parsing and unit conversion") {
    auto path = write_temp("vreg_feeder_ok.txt",
                           "# header comment\n"
                           "1 2 0.0922 0.0470\n"
                           "2 3 0.4930 0.2511  # trailing comment\n");
    auto m = vreg::load_feeder(path.string(), 1, 10.0, 12.66);
    REQUIRE(m.n == 2);
    // z_pu = z_ohm * base_mva / base_kv^2
    const double z_base = 12.66 * 12.66 / 10.0;
    CHECK(m.R(0, 0) == doctest::Approx(2.0 * 0.0922 / z_base).epsilon(1e-12));
    CHECK(m.X(1, 1) ==
          doctest::Approx(2.0 * (0.0470 + 0.2511) / z_base).epsilon(1e-12));
    std::filesystem::remove(path);
}

TEST_CASE("malformed line tables carry line numbers") {
    auto path = write_temp("vreg_feeder_bad.txt", "1 2 0.05 0.05\n2 3 0.05\n");
    CHECK_THROWS_WITH_AS(vreg::load_feeder(path.string()),
                         doctest::Contains(":2:"), vreg::ParseError);
    std::filesystem::remove(path);

    auto empty = write_temp("vreg_feeder_empty.txt", "# nothing\n");
    CHECK_THROWS_AS(vreg::load_feeder(empty.string()), vreg::ParseError);
    std::filesystem::remove(empty);

    CHECK_THROWS_AS(vreg::load_feeder("/nonexistent/path.txt"), vreg::ParseError);
}

TEST_CASE("duplicated to-bus is rejected") {
    auto path = write_temp("vreg_feeder_dup.txt",
                           "1 2 0.05 0.05\n1 3 0.05 0.05\n2 4 0.05 0.05\n"
                           "3 4 0.05 0.05\n");
    CHECK_THROWS_AS(vreg::load_feeder(path.string()), vreg::TopologyError);
    std::filesystem::remove(path);
}

TEST_CASE("built-in 33-bus model is well formed") {
    auto m = vreg::ieee33_feeder();
    REQUIRE(m.n == 32);
    CHECK((m.R - m.R.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> er(m.R, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ex(m.X, Eigen::EigenvaluesOnly);
    CHECK(er.eigenvalues().minCoeff() > 0.0);
    CHECK(ex.eigenvalues().minCoeff() > 0.0);
    CHECK(m.index_of(22) >= 0);
    CHECK_THROWS_AS(m.index_of(1), vreg::ValidationError);   // slack
    CHECK_THROWS_AS(m.index_of(99), vreg::ValidationError);  // unknown
}

TEST_CASE("random trees: SPD sensitivities and the path-matrix oracle") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> imp(0.01, 1.0);
    std::uniform_int_distribution<int> pick(0, 100);

    for (int trial = 0; trial < 30; ++trial) {
        const int n = 2 + pick(rng) % 9;  // up to 10 non-slack buses
        std::vector<Line> lines;
        for (int b = 2; b <= n + 1; ++b) {
            const int parent = 1 + pick(rng) % (b - 1);
            lines.push_back({parent, b, imp(rng), imp(rng)});
        }
        auto m = build_feeder(lines, 1);

        CHECK((m.R - m.R.transpose()).cwiseAbs().maxCoeff() == 0.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.R, Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() > 0.0);

        // inputs already in p.u., so the stored lines equal the inputs
        const Eigen::MatrixXd oracle = path_matrix_r(lines, 1, m);
        CHECK((m.R - oracle).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("solve_voltage is affine and monotone in q") {
    auto m = vreg::ieee33_feeder();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-0.1, 0.1);

    Eigen::VectorXd p1(m.n), p2(m.n), q1(m.n), q2(m.n);
    for (int i = 0; i < m.n; ++i) {
        p1(i) = u(rng);
        p2(i) = u(rng);
        q1(i) = u(rng);
        q2(i) = u(rng);
    }
    const Eigen::VectorXd lhs = solve_voltage(m, p1 + p2, q1 + q2).array() - 1.0;
    const Eigen::VectorXd rhs = (solve_voltage(m, p1, q1).array() - 1.0) +
                                (solve_voltage(m, p2, q2).array() - 1.0);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);

    // X >= 0 entrywise, so raising any single q_i lowers no voltage.
    const Eigen::VectorXd before = solve_voltage(m, p1, q1);
    for (int i : {0, 10, 31}) {
        Eigen::VectorXd q_up = q1;
        q_up(i) += 0.05;
        const Eigen::VectorXd after = solve_voltage(m, p1, q_up);
        CHECK((after - before).minCoeff() >= 0.0);
    }
}
