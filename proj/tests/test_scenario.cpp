#include <doctest.h>

#include <string>

#include "vreg/scenario.hpp"

using vreg::ControllerKind;
using vreg::parse_scenario;
using vreg::ScenarioConfig;

namespace {

const char* kMinimal = R"(
[feeder]
source = ieee33

[sim]
dt_sim_s = 0.1
dt_ctrl_s = 1.0
duration_s = 60
seed = 5

[control]
controller = switching
gain = auto
deadband_pu = 0.02
dq_max_pu = 0.01

[dc 22]
trace = synthetic
p_comm_pu = -0.05
p_comp_pu = -0.15
period_comm_s = 10
period_comp_s = 10
)";

}  // namespace

TEST_CASE("minimal config parses with defaults filled in") {
    const ScenarioConfig cfg = parse_scenario(kMinimal, "test.cfg");
    CHECK(cfg.feeder.source == "ieee33");
    CHECK(cfg.dt_sim == 0.1);
    CHECK(cfg.duration == 60.0);
    CHECK(cfg.seed == 5);
    CHECK(cfg.control.kind == ControllerKind::Switching);
    CHECK(cfg.control.gain_auto);
    CHECK(cfg.control.limits.deadband == 0.02);
    CHECK(cfg.control.eta_bias == 0.1);  // default
    REQUIRE(cfg.dcs.size() == 1);
    CHECK(cfg.dcs[0].bus_id == 22);
    CHECK(cfg.dcs[0].profile.p_comp == -0.15);
    CHECK_FALSE(cfg.smoothing.enabled);
}

TEST_CASE("bare-key override reaches the unique matching section") {
    const ScenarioConfig cfg =
        parse_scenario(kMinimal, "test.cfg", ".", {"controller=fixed"});
    CHECK(cfg.control.kind == ControllerKind::Fixed);
}

TEST_CASE("qualified and dc-section overrides") {
    const ScenarioConfig cfg = parse_scenario(
        kMinimal, "test.cfg", ".",
        {"sim.duration_s=120", "dc22.p_comp_pu=-0.2", "control.gain=0.5"});
    CHECK(cfg.duration == 120.0);
    CHECK(cfg.dcs[0].profile.p_comp == -0.2);
    CHECK_FALSE(cfg.control.gain_auto);
    CHECK(cfg.control.gain == 0.5);
}

TEST_CASE("ambiguous bare keys are rejected with candidates") {
    const std::string two_dc = std::string(kMinimal) +
                               "\n[dc 25]\ntrace = synthetic\np_comm_pu = -0.01\n"
                               "p_comp_pu = -0.05\nperiod_comm_s = 5\nperiod_comp_s = 5\n";
    CHECK_THROWS_WITH_AS(
        parse_scenario(two_dc, "test.cfg", ".", {"p_comp_pu=-0.3"}),
        doctest::Contains("ambiguous"), vreg::ConfigError);
}

TEST_CASE("all config problems are reported together") {
    const char* broken = R"(
[feeder]
source = ieee33
base_mva = not_a_number

[sim]
dt_sim_s = 0.1
dt_ctrl_s = 0.35
duration_s = 60

[mystery]
knob = 3

[control]
controller = sometimes
eta_bias = 4

[dc 22]
trace = synthetic
p_comm_pu = -0.05
period_comm_s = 10
period_comp_s = 10
)";
    try {
        parse_scenario(broken, "broken.cfg");
        FAIL("expected ConfigError");
    } catch (const vreg::ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("not a number") != std::string::npos);
        CHECK(msg.find("unknown section [mystery]") != std::string::npos);
        CHECK(msg.find("fixed|switching|oracle") != std::string::npos);
        CHECK(msg.find("p_comp_pu: required") != std::string::npos);
        CHECK(msg.find("broken.cfg:4") != std::string::npos);  // line numbers
    }
}

TEST_CASE("unknown keys inside known sections are flagged") {
    const std::string typo = std::string(kMinimal) + "\n[sim]\ndt_sm_s = 0.1\n";
    CHECK_THROWS_WITH_AS(parse_scenario(typo, "test.cfg"),
                         doctest::Contains("unknown key 'dt_sm_s'"),
                         vreg::ConfigError);
}

TEST_CASE("csv trace paths resolve against the config directory") {
    const char* file_trace = R"(
[sim]
duration_s = 10

[dc 22]
trace = traces/load.csv
scale_pu_per_watt = -1e-7
)";
    const ScenarioConfig cfg = parse_scenario(file_trace, "x.cfg", "/srv/cfgs");
    REQUIRE(cfg.dcs.size() == 1);
    CHECK_FALSE(cfg.dcs[0].synthetic);
    CHECK(cfg.dcs[0].csv_path == "/srv/cfgs/traces/load.csv");
    CHECK(cfg.dcs[0].scale == -1e-7);
}

TEST_CASE("actuated bus lists parse") {
    const std::string subset =
        std::string(kMinimal) + "\n[control]\nactuated = 22, 25, 18\n";
    const ScenarioConfig cfg = parse_scenario(subset, "test.cfg");
    REQUIRE(cfg.control.actuated.size() == 3);
    CHECK(cfg.control.actuated[0] == 22);
    CHECK(cfg.control.actuated[2] == 18);
}

TEST_CASE("missing config file raises ConfigError") {
    CHECK_THROWS_AS(vreg::load_scenario("/nonexistent/scenario.cfg"),
                    vreg::ConfigError);
}

TEST_CASE("the shipped canonical configs parse and validate") {
    for (const char* name : {"single_dc.cfg", "two_dc.cfg", "smoothing.cfg"}) {
        const std::string path =
            std::string(VREG_SOURCE_DIR) + "/tools/configs/" + name;
        const ScenarioConfig cfg = vreg::load_scenario(path);
        const vreg::FeederModel model = cfg.feeder.build();
        CHECK(cfg.problems(model).empty());
        CHECK(cfg.duration == 2700.0);
        CHECK(cfg.control.limits.deadband == 0.02);
        CHECK(cfg.control.limits.dq_max == 0.01);
        CHECK(cfg.control.amp_window_s == 120.0);
    }
}
