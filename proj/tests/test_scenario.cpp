#include "doctest.h"

#include "pathkeep/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

using namespace pathkeep;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"({
  "name": "minimal",
  "body": {"mass": 7.329e10, "spin_rate": "4.0684e-4 rad/s"},
  "target": {"a": "450 m", "e": 0, "i": "45 deg", "raan": "320 deg"},
  "sim": {"duration": "1 h"}
})";

std::string error_path(const std::string& text) {
    try {
        scenario_from_json(text);
    } catch (const ScenarioError& e) {
        return e.path();
    }
    return "<no error>";
}

Scenario shortened(const std::string& name, double hours) {
    Scenario s = preset(name);
    s.sim.duration = hours * 3600.0;
    return s;
}

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("pathkeep_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(PATHKEEP_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("quantities with unit suffixes") {
    CHECK(parse_quantity("90 deg", Dimension::Angle) == doctest::Approx(kPi / 2));
    CHECK(parse_quantity("1.5 rad", Dimension::Angle) == 1.5);
    CHECK(parse_quantity("2 km", Dimension::Length) == 2000.0);
    CHECK(parse_quantity("1 AU", Dimension::Length) == kAstronomicalUnit);
    CHECK(parse_quantity("2 h", Dimension::Time) == 7200.0);
    CHECK(parse_quantity("3 d", Dimension::Time) == 3.0 * 86400.0);
    CHECK(parse_quantity("1 mm/s2", Dimension::Accel) == doctest::Approx(1e-3));
    CHECK(parse_quantity("2 cm/s", Dimension::Speed) == doctest::Approx(0.02));
    CHECK(parse_quantity("3600 deg/h", Dimension::Rate) == doctest::Approx(kPi / 180.0));
    CHECK(parse_quantity("42", Dimension::Length) == 42.0);
    CHECK_THROWS_AS(parse_quantity("3 furlongs", Dimension::Length), Error);
    CHECK_THROWS_AS(parse_quantity("3 deg", Dimension::Length), Error);
    CHECK_THROWS_AS(parse_quantity("deg", Dimension::Angle), Error);
}

TEST_CASE("minimal scenario file") {
    const Scenario s = scenario_from_json(kMinimal);
    CHECK(s.name == "minimal");
    CHECK(s.target.a == 450.0);
    CHECK(s.target.i == doctest::Approx(kPi / 4));
    CHECK(s.target.raan == doctest::Approx(deg2rad(320.0)));
    CHECK(s.sim.duration == 3600.0);
    CHECK(s.body.gravity == GravityModel::PointMass);
    CHECK(s.frame == Frame::Inertial);
    CHECK(s.mu() == doctest::Approx(kDefaultG * 7.329e10));
}

TEST_CASE("malformed scenarios name the offending field") {
    CHECK(error_path(R"({"body": {"mass": 1e10}, "target": {"a": 400, "ee": 0.1}})") == "target.ee");
    CHECK(error_path(R"({"body": {"mass": 1e10}, "target": {"a": 400, "e": -0.1}})") == "target");
    CHECK(error_path(R"({"body": {}, "target": {"a": 400}})") == "body.mass");
    CHECK(error_path(R"({"body": {"mass": 1e10}})") == "target");
    CHECK(error_path(R"({"body": {"mass": 1e10}, "target": {"a": 400, "i": "3 furlongs"}})") == "target.i");
    CHECK(error_path(R"({"body": {"mass": 1e10}, "target": {"a": 400}, "controller": {"n_phi": -1}})") ==
          "controller");
    CHECK(error_path(R"({"body": {"mass": 1e10}, "target": {"a": 400}, "controller": {"disturbance": [1, 2]}})") ==
          "controller.disturbance");
    CHECK(error_path(R"({"body": {"mass": 1e10}, "target": {"a": 400}, "sim": {"telemetry_stride": 0}})") ==
          "sim.telemetry_stride");
    CHECK(error_path(R"({"body": {"mass": 1e10}, "target": {"a": 400},
                        "events": [{"trigger": "sign-of-z", "target": {"a": 400}}]})") == "events[0].target_negative");
    CHECK(error_path(R"({"body": {"mass": 1e10}, "target": {"a": 400}, "frame": "sideways"})") == "frame");
    CHECK(error_path(R"({"body": {"mass": 1e10}, "target": {"a": 400}, "initial": {"r": [500, 0, 0]}})") ==
          "initial");
    CHECK(error_path("{not json") == "");
}

TEST_CASE("preset round-trip") {
    std::vector<std::string> names = preset_names();
    for (const auto& n : extra_preset_names()) names.push_back(n);
    for (const auto& name : names) {
        CAPTURE(name);
        const Scenario s = preset(name);
        const Scenario back = scenario_from_json(scenario_to_json(s));
        CHECK(back == s);
    }
    CHECK_THROWS_AS(preset("Vesta"), ScenarioError);
}

TEST_CASE("tabulated example parameters") {
    CHECK(preset_names().size() == 9);

    const Scenario ito = preset("Itokawa");
    CHECK(ito.controller.disturbance_bound == Vec3::Constant(1e-4));
    CHECK(ito.controller.n_phi == 5.0);
    CHECK(ito.controller.lambda_r == 2.0);
    CHECK(ito.controller.lambda_n == 2.0);
    CHECK(ito.target.a == 350.0);
    CHECK(ito.target.e == 0.1);
    CHECK(ito.target.i == doctest::Approx(kPi / 2));
    CHECK(ito.target.raan == doctest::Approx(kPi / 2));
    CHECK(ito.target.arg_periapsis == doctest::Approx(kPi / 2));
    CHECK(ito.srp.sun_distance == doctest::Approx(1.695 * kAstronomicalUnit));
    CHECK_FALSE(ito.controller.hysteresis.enabled);

    const Scenario comet = preset("67P");
    CHECK(comet.frame == Frame::BodyFixed);
    CHECK(comet.target.a == 2100.0);
    CHECK(comet.target.e == 0.15);
    CHECK(rad2deg(comet.target.i) == doctest::Approx(110.0));
    CHECK(rad2deg(comet.target.raan) == doctest::Approx(50.0));
    CHECK(comet.target.arg_periapsis == 0.0);
    CHECK(comet.srp.sun_distance == doctest::Approx(1.243 * kAstronomicalUnit));

    CHECK(preset("Bennu-tight").controller.hysteresis.s_plus == Vec3(0.02, 0.7, 0.05));
    CHECK(preset("Bennu-loose").controller.hysteresis.s_plus == Vec3(0.1, 2.0, 0.15));

    for (const auto& name : preset_names()) {
        if (name.rfind("Bennu", 0) != 0) continue;
        CAPTURE(name);
        const Scenario b = preset(name);
        CHECK(b.srp.sun_distance == doctest::Approx(0.8969 * kAstronomicalUnit));
        CHECK(b.noise.sigma_r == 0.8);
        CHECK(b.noise.sigma_v == 1e-4);
        CHECK(b.noise.thruster_fraction == 0.03);
        REQUIRE(b.controller.u_max.has_value());
        CHECK(*b.controller.u_max == 1e-3);
    }

    const Scenario two = preset("Bennu-2h");
    REQUIRE(two.noise.measurement_period.has_value());
    CHECK(*two.noise.measurement_period == 7200.0);
    CHECK(two.target.a == 500.0);
    CHECK(two.target.e == 0.0);
    CHECK(two.sim.duration == 30.0 * 86400.0);

    const Scenario mc = preset("Bennu-Monte Carlo");
    REQUIRE(mc.monte_carlo.has_value());
    CHECK(mc.target.a == 450.0);
    CHECK(rad2deg(mc.target.i) == doctest::Approx(45.0));
    CHECK(rad2deg(mc.target.raan) == doctest::Approx(320.0));
    CHECK(mc.monte_carlo->position_sigma == 35.0);
    CHECK(mc.monte_carlo->velocity_sigma == 0.02);

    CHECK(preset("Bennu-PWPF").controller.pwpf.has_value());
    CHECK(preset("Bennu-hyperbolic").events.rules.size() == 1);
    CHECK(preset("Bennu-Hohmann").events.rules.size() == 2);
}

TEST_CASE("overrides") {
    const Scenario base = preset("Itokawa");
    const Scenario s = apply_overrides(base, {"controller.n_phi=10", "sim.duration=\"2 h\"", "name=renamed"});
    CHECK(s.controller.n_phi == 10.0);
    CHECK(s.sim.duration == 7200.0);
    CHECK(s.name == "renamed");
    CHECK(s.target == base.target);
    CHECK_NOTHROW(s.validate());

    try {
        apply_overrides(base, {"controller.n_phi=-3"});
        FAIL("expected a validation error");
    } catch (const ScenarioError& e) {
        CHECK(e.path() == "controller");
    }
    CHECK_THROWS_AS(apply_overrides(base, {"controller.gain=3"}), ScenarioError);
    CHECK_THROWS_AS(apply_overrides(base, {"n_phi"}), ScenarioError);
    CHECK_THROWS_AS(apply_overrides(base, {"nowhere.deep.key=1"}), ScenarioError);
}

TEST_CASE("scenario files and referenced shapes") {
    const fs::path dir = scratch_dir("files");
    {
        std::ofstream out(dir / "cube.json");
        out << R"({"body": {"mass": 1e9, "gravity": "polyhedron",
                   "shape": {"file": ")" << PATHKEEP_DATA_DIR << R"(/shapes/cube.obj", "scale": 100}},
                   "target": {"a": 500}, "sim": {"duration": 60}})";
    }
    const Scenario s = load_scenario((dir / "cube.json").string());
    const BuiltScenario built = build_scenario(s);
    REQUIRE(built.shape);
    CHECK(built.config.env.field.mu() == doctest::Approx(kDefaultG * 1e9).epsilon(1e-12));

    {
        std::ofstream out(dir / "missing.json");
        out << R"({"body": {"mass": 1e9, "gravity": "polyhedron", "shape": {"file": "nope.obj"}},
                   "target": {"a": 500}})";
    }
    const Scenario m = load_scenario((dir / "missing.json").string());
    CHECK(m.body.shape_file == (dir / "nope.obj").lexically_normal().string());
    try {
        build_scenario(m);
        FAIL("expected a missing-file error");
    } catch (const ScenarioError& e) {
        CHECK(e.path() == "body.shape.file");
    }
    CHECK_THROWS_AS(load_scenario((dir / "absent.json").string()), ScenarioError);
    CHECK_THROWS_AS(resolve_scenario("no-such-thing"), ScenarioError);
}

TEST_CASE("Monte Carlo plumbing") {
    SUBCASE("perpendicular-plane basis") {
        const Vec3 r(300, -120, 250), v(0.02, 0.07, -0.01);
        const auto [p1, p2] = perpendicular_plane_basis(r, v);
        CHECK(std::abs(p1.norm() - 1.0) < 1e-15);
        CHECK(std::abs(p2.norm() - 1.0) < 1e-15);
        CHECK(std::abs(p1.dot(v)) < 1e-15);
        CHECK(std::abs(p2.dot(v)) < 1e-15);
        CHECK(std::abs(p1.dot(p2)) < 1e-15);
        CHECK(p1.dot(r) > 0.0);
        CHECK_THROWS_AS(perpendicular_plane_basis(r, Vec3::Zero()), DegenerateStateError);
        const auto [q1, q2] = perpendicular_plane_basis(Vec3(0, 0, 5), Vec3(0, 0, 1));
        CHECK(std::abs(q1.dot(Vec3(0, 0, 1))) < 1e-15);
        CHECK(std::abs(q2.dot(q1)) < 1e-15);
    }

    SUBCASE("dispersion statistics") {
        const StateVector nominal = state_from_geometry({450, 0, 0.8, 5.6, 0}, 0.0, kDefaultG * 7.329e10);
        const MonteCarloSpec spec;
        const auto [p1, p2] = perpendicular_plane_basis(nominal.r, nominal.v);
        const Vec3 v_hat = nominal.v.normalized();
        double s1 = 0, s2 = 0, sv = 0, along = 0;
        const int n = 20000;
        for (int k = 0; k < n; ++k) {
            const StateVector d = dispersed_initial_state(nominal, spec, 1000 + k);
            const Vec3 dr = d.r - nominal.r;
            s1 += std::pow(dr.dot(p1), 2);
            s2 += std::pow(dr.dot(p2), 2);
            along = std::max(along, std::abs(dr.dot(v_hat)));
            sv += (d.v - nominal.v).squaredNorm();
        }
        CHECK(std::sqrt(s1 / n) == doctest::Approx(35.0).epsilon(0.03));
        CHECK(std::sqrt(s2 / n) == doctest::Approx(35.0).epsilon(0.03));
        CHECK(along < 1e-9);
        CHECK(std::sqrt(sv / (3.0 * n)) == doctest::Approx(0.02).epsilon(0.03));
        const StateVector a = dispersed_initial_state(nominal, spec, 77);
        const StateVector b = dispersed_initial_state(nominal, spec, 77);
        CHECK(a.r == b.r);
        CHECK(a.v == b.v);
    }

    SUBCASE("aggregate matches the emitted CSV") {
        const BuiltScenario built = build_scenario(shortened("Bennu-Monte Carlo", 0.5));
        MonteCarloSpec spec;
        spec.samples = 6;
        spec.base_seed = 40;
        spec.threads = 3;
        const MonteCarloResult result = run_monte_carlo(built, spec);
        REQUIRE(result.samples.size() == 6);
        for (std::size_t k = 0; k < result.samples.size(); ++k) {
            CHECK(result.samples[k].index == static_cast<int>(k));
            CHECK(result.samples[k].seed == 40 + k);
        }
        std::stringstream csv;
        write_monte_carlo_csv(csv, result);
        const std::vector<double> dv = read_monte_carlo_dv(csv);
        REQUIRE(dv.size() == 6);
        double mean = 0.0;
        for (double x : dv) mean += x;
        mean /= static_cast<double>(dv.size());
        double sq = 0.0;
        for (double x : dv) sq += (x - mean) * (x - mean);
        const double three_sigma = 3.0 * std::sqrt(sq / static_cast<double>(dv.size() - 1));
        CHECK(std::abs(mean - result.mean_dv) <= 1e-12 * mean);
        CHECK(std::abs(three_sigma - result.three_sigma_dv) <= 1e-12 * three_sigma);
        CHECK(result.three_sigma_dv > 0.0);

        // Thread count does not change any sample.
        spec.threads = 1;
        const MonteCarloResult serial = run_monte_carlo(built, spec);
        for (std::size_t k = 0; k < serial.samples.size(); ++k) {
            CHECK(serial.samples[k].summary.delta_v == result.samples[k].summary.delta_v);
        }
    }

    SUBCASE("zero dispersion reproduces the nominal run") {
        Scenario s = shortened("Bennu-Monte Carlo", 0.5);
        s.noise.sigma_r = s.noise.sigma_v = s.noise.thruster_fraction = 0.0;
        const BuiltScenario built = build_scenario(s);
        MonteCarloSpec spec;
        spec.samples = 4;
        spec.position_sigma = 0.0;
        spec.velocity_sigma = 0.0;
        const MonteCarloResult result = run_monte_carlo(built, spec);
        const SimulationSummary nominal = run_scenario(built).summary;
        for (const auto& sample : result.samples) {
            CHECK(sample.initial.r == built.config.initial.r);
            CHECK(sample.summary.delta_v == nominal.delta_v);
            CHECK(sample.summary.final_truth.r == nominal.final_truth.r);
        }
        CHECK(result.three_sigma_dv == 0.0);
    }

    MonteCarloSpec bad;
    bad.samples = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = MonteCarloSpec{};
    bad.position_sigma = -1.0;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("sweep results do not depend on value order") {
    Scenario base = preset("Itokawa-parametric");
    base.sim.duration = 1800.0;
    const std::vector<double> forward{2.0, 0.2, 0.02};
    const std::vector<double> reverse{0.02, 2.0, 0.2};
    const auto a = run_sweep(base, SweepAxis::Lambda, forward, 3);
    const auto b = run_sweep(base, SweepAxis::Lambda, reverse, 1);
    REQUIRE(a.size() == 3);
    for (const auto& p : a) {
        const auto match = std::find_if(b.begin(), b.end(), [&](const SweepPoint& q) { return q.value == p.value; });
        REQUIRE(match != b.end());
        CHECK(match->summary.delta_v == p.summary.delta_v);
        CHECK(match->radial_error == p.radial_error);
    }
    CHECK(a[0].time.size() == 450);

    CHECK(parse_sweep_axis("D") == SweepAxis::Disturbance);
    CHECK(parse_sweep_axis("dt") == SweepAxis::ControlPeriod);
    CHECK_THROWS_AS(parse_sweep_axis("mass"), Error);
    CHECK(with_sweep_value(base, SweepAxis::Disturbance, 3e-4).controller.disturbance_bound == Vec3::Constant(3e-4));
    CHECK(with_sweep_value(base, SweepAxis::ControlPeriod, 10.0).sim.control_period == 10.0);
    CHECK_THROWS_AS(with_sweep_value(base, SweepAxis::NPhi, -1.0), ScenarioError);
}

TEST_CASE("event scripts") {
    SUBCASE("inline and preset scripts agree") {
        const Scenario p = shortened("Bennu-Hohmann", 16.0);
        // The same script written by hand with units.
        const std::string events = R"([
          {"trigger": "time", "time": "15 h", "align_apoapsis": true,
           "target": {"a": "475 m", "e": 0.2632, "i": "90 deg", "raan": "90 deg"}},
          {"trigger": "periapsis", "threshold": "5 m",
           "target": {"a": "350 m", "e": 0, "i": "90 deg", "raan": "90 deg"}}])";
        const Scenario inline_s = apply_overrides(p, {"events=" + events});
        CHECK(inline_s.events == p.events);
        const auto a = run_scenario(build_scenario(p)).summary;
        const auto b = run_scenario(build_scenario(inline_s)).summary;
        CHECK(a.delta_v == b.delta_v);
        CHECK(a.thrust_on_time == b.thrust_on_time);
        REQUIRE(a.events.size() == 1);
        CHECK(a.events[0].t == doctest::Approx(15.0 * 3600.0).epsilon(1e-9));
    }

    SUBCASE("a transfer to the same circle changes nothing") {
        Scenario plain = shortened("Bennu-loose", 3.0);
        Scenario noop = plain;
        EventRule rule;
        rule.kind = TriggerKind::TimeAtLeast;
        rule.time = 3600.0;
        rule.target = plain.target;
        noop.events.rules = {rule};
        const auto a = run_scenario(build_scenario(plain)).summary;
        const auto b = run_scenario(build_scenario(noop)).summary;
        CHECK(b.events.size() == 1);
        CHECK(a.delta_v == b.delta_v);
    }

    SUBCASE("hyperbolic patch stays on the circle while Z is positive") {
        Scenario s = shortened("Bennu-hyperbolic", 2.0);
        s.initial.true_anomaly = deg2rad(60.0);
        Scenario plain = s;
        plain.events.rules.clear();
        const auto a = run_scenario(build_scenario(s)).summary;
        const auto b = run_scenario(build_scenario(plain)).summary;
        CHECK(a.events.empty());
        CHECK(a.delta_v == b.delta_v);
        CHECK(preset("Bennu-hyperbolic").events.rules[0].target_negative->e > 1.0);
    }

    SUBCASE("Hohmann-like transfer completes all stages") {
        const auto sum = run_scenario(build_scenario(preset("Bennu-Hohmann"))).summary;
        CHECK(sum.terminal == TerminalEvent::None);
        REQUIRE(sum.events.size() == 2);
        CHECK(sum.events[0].t == doctest::Approx(15.0 * 3600.0).epsilon(1e-9));
        CHECK(sum.events[1].t > sum.events[0].t);
        CHECK(sum.final_target.a == 350.0);
        CHECK(sum.warnings.empty());
        MESSAGE("Bennu-Hohmann delta-v " << sum.delta_v << " m/s (reference 0.1623)");
        CHECK(sum.delta_v >= 0.08);
        CHECK(sum.delta_v <= 0.33);
    }

    SUBCASE("hyperbolic patching over 30 h") {
        const auto sum = run_scenario(build_scenario(preset("Bennu-hyperbolic"))).summary;
        CHECK(sum.terminal == TerminalEvent::None);
        CHECK(sum.events.size() >= 1);
        MESSAGE("Bennu-hyperbolic delta-v " << sum.delta_v << " m/s (reference 0.5783)");
        CHECK(sum.delta_v >= 0.29);
        CHECK(sum.delta_v <= 1.16);
    }
}

TEST_CASE("uncontrolled Itokawa orbit departs from the target") {
    Scenario s = preset("Itokawa");
    const auto controlled = run_scenario(build_scenario(s)).summary;
    s.sim.control_enabled = false;
    const auto free = run_scenario(build_scenario(s)).summary;
    CHECK(free.delta_v == 0.0);
    const bool diverged = free.terminal != TerminalEvent::None || free.a.max_abs > 100.0 * controlled.a.max_abs;
    CHECK(diverged);
}

TEST_CASE("command-line exit codes") {
    const fs::path dir = scratch_dir("cli");
    CHECK(run_cli("list-presets") == 0);
    CHECK(run_cli("--no-such-flag") == 2);
    CHECK(run_cli("simulate") == 2);
    CHECK(run_cli("simulate -s Vesta") == 3);
    CHECK(run_cli("simulate -s Itokawa -O controller.n_phi=-1") == 3);
    CHECK(run_cli("show 67P") == 0);
    CHECK(run_cli("sweep -s Itokawa-parametric --axis mass --values 1") == 4);
    CHECK(run_cli("sweep -s Itokawa-parametric --axis lambda --values 1,x") == 2);

    CHECK(run_cli("simulate -q -s Bennu-2h --duration-hours 0.25 -o " + dir.string()) == 0);
    CHECK(fs::exists(dir / "Bennu_2h_telemetry.csv"));
    CHECK(fs::exists(dir / "Bennu_2h_summary.json"));

    const std::string crash = "simulate -q -s Itokawa -O sim.control_enabled=false -O initial.r=[0,0,120] "
                              "-O initial.v=[0.01,0,-0.05] --duration-hours 1 -o " + dir.string();
    CHECK(run_cli(crash) == 0);
    CHECK(run_cli(crash + " --fail-on-event") == 4);

    CHECK(run_cli("gravity-check --shape " + std::string(PATHKEEP_DATA_DIR) + "/shapes/cube.obj --scale 100") == 0);
}
