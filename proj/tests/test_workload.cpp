#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "vreg/workload.hpp"

using vreg::generate_trace;
using vreg::load_trace_csv;
using vreg::StorageSmoother;
using vreg::TwoModeProfile;
using vreg::WorkloadTrace;

namespace {

TwoModeProfile square_profile() {
    TwoModeProfile p;
    p.p_comm = -0.1;
    p.p_comp = -0.5;
    p.period_comm = 60.0;
    p.period_comp = 60.0;
    return p;
}

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
    auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << body;
    return path;
}

}  // namespace

TEST_CASE("zero-noise profile yields an exact square wave") {
    auto trace = generate_trace(square_profile(), 240.0, 1.0, 0,
                                Eigen::VectorXd::Zero(2));
    REQUIRE(trace.steps() == 240);
    for (Eigen::Index k = 0; k < trace.steps(); ++k) {
        const double expect = trace.modes[k] == 0 ? -0.1 : -0.5;
        CHECK(trace.samples(0, k) == expect);
        CHECK(trace.samples(1, k) == 0.0);  // background bus untouched
    }
    CHECK(trace.samples(0, 0) == -0.1);    // starts in communication mode
    CHECK(trace.samples(0, 60) == -0.5);   // computation phase
    CHECK(trace.samples(0, 120) == -0.1);  // wraps around
}

TEST_CASE("noisy samples stay within the mode bound") {
    TwoModeProfile p = square_profile();
    p.w_comm = 0.02;
    p.w_comp = 0.02;
    p.seed = 99;
    auto trace = generate_trace(p, 600.0, 0.5, 0, Eigen::VectorXd::Zero(1));
    for (Eigen::Index k = 0; k < trace.steps(); ++k) {
        const double mean = p.mean(trace.modes[k]);
        CHECK(std::abs(trace.samples(0, k) - mean) <= p.bound(trace.modes[k]));
    }
}

TEST_CASE("fixed seed reproduces traces bit for bit") {
    TwoModeProfile p = square_profile();
    p.w_comm = 0.01;
    p.w_comp = 0.02;
    p.seed = 1234;
    auto a = generate_trace(p, 120.0, 0.1, 0, Eigen::VectorXd::Zero(1));
    auto b = generate_trace(p, 120.0, 0.1, 0, Eigen::VectorXd::Zero(1));
    CHECK((a.samples - b.samples).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.modes == b.modes);
}

TEST_CASE("profile invariants are enumerated") {
    TwoModeProfile p;
    p.p_comm = -0.5;   // communication drawing more than computation
    p.p_comp = -0.1;
    p.w_comm = 0.3;    // bound exceeds half the separation
    p.period_comm = 0.0;
    p.period_comp = 10.0;
    try {
        p.validate();
        FAIL("expected ValidationError");
    } catch (const vreg::ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("dominate") != std::string::npos);
        CHECK(msg.find("half the level separation") != std::string::npos);
        CHECK(msg.find("communication phase duration") != std::string::npos);
    }
}

TEST_CASE("csv ingest: identity resample") {
    auto path = write_temp("vreg_trace_id.csv",
                           "time_s,power_watts\n0.0,100\n0.1,200\n0.2,300\n");
    auto trace = load_trace_csv(path.string(), 0.1, 0, -1e-6,
                                Eigen::VectorXd::Zero(1));
    REQUIRE(trace.steps() == 3);
    CHECK(trace.samples(0, 0) == doctest::Approx(-1e-4));
    CHECK(trace.samples(0, 1) == doctest::Approx(-2e-4));
    CHECK(trace.samples(0, 2) == doctest::Approx(-3e-4));
    CHECK(trace.modes.empty());
    std::filesystem::remove(path);
}

TEST_CASE("csv ingest: zero-order hold takes every second row") {
    auto path = write_temp("vreg_trace_zoh.csv",
                           "time_s,power_watts\n"
                           "0.00,10\n0.05,20\n0.10,30\n0.15,40\n0.20,50\n");
    auto trace = load_trace_csv(path.string(), 0.1, 0, 1.0,
                                Eigen::VectorXd::Zero(1));
    REQUIRE(trace.steps() == 3);
    CHECK(trace.samples(0, 0) == 10.0);
    CHECK(trace.samples(0, 1) == 30.0);
    CHECK(trace.samples(0, 2) == 50.0);
    std::filesystem::remove(path);
}

TEST_CASE("csv ingest rejects bad input") {
    auto empty = write_temp("vreg_trace_empty.csv", "");
    CHECK_THROWS_AS(load_trace_csv(empty.string(), 0.1, 0, 1.0,
                                   Eigen::VectorXd::Zero(1)),
                    vreg::ParseError);
    std::filesystem::remove(empty);

    auto headless = write_temp("vreg_trace_headless.csv", "0.0,100\n0.1,200\n");
    CHECK_THROWS_AS(load_trace_csv(headless.string(), 0.1, 0, 1.0,
                                   Eigen::VectorXd::Zero(1)),
                    vreg::ParseError);
    std::filesystem::remove(headless);

    auto backwards = write_temp("vreg_trace_mono.csv",
                                "time_s,power_watts\n0.0,1\n0.2,2\n0.1,3\n");
    CHECK_THROWS_WITH_AS(load_trace_csv(backwards.string(), 0.1, 0, 1.0,
                                        Eigen::VectorXd::Zero(1)),
                         doctest::Contains("non-monotone"), vreg::ParseError);
    std::filesystem::remove(backwards);

    auto no_rows = write_temp("vreg_trace_norows.csv", "time_s,power_watts\n");
    CHECK_THROWS_AS(load_trace_csv(no_rows.string(), 0.1, 0, 1.0,
                                   Eigen::VectorXd::Zero(1)),
                    vreg::ParseError);
    std::filesystem::remove(no_rows);
}

TEST_CASE("trace csv round-trips through write and load") {
    TwoModeProfile p = square_profile();
    p.w_comm = 0.01;
    p.w_comp = 0.03;
    p.seed = 42;
    const double watts_per_pu = 10e6;

    auto path = write_temp("vreg_trace_rt.csv", "");
    vreg::write_trace_csv(path.string(), p, 120.0, 0.5, watts_per_pu);
    auto loaded = load_trace_csv(path.string(), 0.5, 0, -1.0 / watts_per_pu,
                                 Eigen::VectorXd::Zero(1));
    auto direct = generate_trace(p, 120.0, 0.5, 0, Eigen::VectorXd::Zero(1));
    REQUIRE(loaded.steps() == direct.steps());
    CHECK((loaded.samples - direct.samples).cwiseAbs().maxCoeff() < 1e-8);
    std::filesystem::remove(path);
}

TEST_CASE("dispatch follows the droop rule on the rolling mean") {
    // Window ends up holding {0.25, -0.05, 0.5, 0.5}: mean 0.3 with p_now 0.5.
    StorageSmoother s(0.6, 10.0, 100.0, 0.95, 0.0, 1.0);
    s.step(0.25, 1.0);
    s.step(-0.05, 1.0);
    s.step(0.5, 1.0);
    auto out = s.step(0.5, 1.0);
    CHECK(out.z == doctest::Approx(0.6 * (0.5 - 0.3)).epsilon(1e-12));
    CHECK(out.p_net == doctest::Approx(0.5 - 0.12).epsilon(1e-12));
}

TEST_CASE("dispatch is zero when the load sits at its mean") {
    StorageSmoother s(0.6, 10.0, 100.0);
    for (int i = 0; i < 5; ++i) {
        auto out = s.step(0.2, 1.0);
        CHECK(out.z == doctest::Approx(0.0));
        CHECK(out.p_net == doctest::Approx(0.2));
    }
}

TEST_CASE("dispatch freezes at the state-of-charge band edge") {
    // Tiny capacity, soc at the top of the band: a charging step (z < 0)
    // would leave the band, so the dispatch is forced to zero.
    StorageSmoother s(0.6, 10.0, 0.1, 0.97, 0.93, 0.97);
    s.step(0.5, 1.0);
    auto out = s.step(-1.5, 1.0);  // far below the mean: z < 0
    CHECK(out.z == 0.0);
    CHECK(out.p_net == -1.5);
    CHECK(s.soc() == 0.97);
}

TEST_CASE("energy bookkeeping is conservative") {
    StorageSmoother s(0.6, 100.0, 50.0, 0.95, 0.93, 0.97);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-0.3, 0.1);
    const double soc0 = s.soc();
    double dispatched = 0.0;
    const double dt = 0.1;
    for (int k = 0; k < 5000; ++k) {
        dispatched += s.step(u(rng), dt).z * dt;
    }
    CHECK(dispatched == doctest::Approx(50.0 * (soc0 - s.soc())).epsilon(1e-9));
}

TEST_CASE("smoothing damps square-wave steps by roughly 1 - k_p") {
    // Ample capacity so saturation never bites; window W samples.
    const double k_p = 0.6, horizon = 100.0, dt = 0.1;
    const double W = std::floor(horizon / dt) + 1;
    StorageSmoother s(k_p, horizon, 1e9, 0.95, 0.0, 1.0);

    TwoModeProfile p = square_profile();
    auto trace = generate_trace(p, 480.0, dt, 0, Eigen::VectorXd::Zero(1));

    double prev_raw = trace.samples(0, 0);
    double prev_net = s.step(prev_raw, dt).p_net;
    for (Eigen::Index k = 1; k < trace.steps(); ++k) {
        const double raw = trace.samples(0, k);
        const double net = s.step(raw, dt).p_net;
        if (trace.modes[k] != trace.modes[k - 1]) {
            // The rolling mean moves by at most |levels gap| / window size
            // across one step (smaller denominator while the window fills).
            const double size = std::min(static_cast<double>(k) + 1.0, W);
            const double tol = k_p * 0.4 / size + 1e-12;
            CHECK(std::abs(net - prev_net) <=
                  (1.0 - k_p) * std::abs(raw - prev_raw) + tol);
        }
        prev_raw = raw;
        prev_net = net;
    }
}

TEST_CASE("smoother rejects bad parameters") {
    CHECK_THROWS_AS(StorageSmoother(-0.1, 10, 1), vreg::ValidationError);
    CHECK_THROWS_AS(StorageSmoother(0.5, 0.0, 1), vreg::ValidationError);
    CHECK_THROWS_AS(StorageSmoother(0.5, 10, 0.0), vreg::ValidationError);
    CHECK_THROWS_AS(StorageSmoother(0.5, 10, 1, 0.5, 0.93, 0.97),
                    vreg::ValidationError);
}
