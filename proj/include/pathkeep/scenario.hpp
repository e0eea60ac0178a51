#pragma once

#include "pathkeep/dynamics.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pathkeep {

/// Validation failure carrying the offending field path, e.g. "target.e".
class ScenarioError : public Error {
public:
    ScenarioError(std::string path, const std::string& message)
        : Error(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

enum class GravityModel { PointMass, Polyhedron, Harmonics };
std::string to_string(GravityModel m);
GravityModel parse_gravity_model(std::string_view tag);

struct BodyConfig {
    std::string name;
    double mass = 0.0;       // kg
    double spin_rate = 0.0;  // rad/s
    double G = kDefaultG;
    GravityModel gravity = GravityModel::PointMass;

    // Shape source: a file, or an ellipsoid stand-in given by its semi-axes.
    std::string shape_file;
    ShapeFormat shape_format = ShapeFormat::Obj;
    double shape_scale = 1.0;
    Vec3 ellipsoid = Vec3::Zero();  // m
    int ellipsoid_subdivisions = 3;

    // Harmonics: read from a file, otherwise derived from the shape.
    std::string harmonics_file;
    bool harmonics_normalized = false;
    int harmonics_degree = 5;
    double ref_radius = 0.0;  // m; 0 means the circumscribing radius

    bool has_shape() const { return !shape_file.empty() || ellipsoid.minCoeff() > 0.0; }
    bool operator==(const BodyConfig&) const = default;
};

struct InitialCondition {
    double true_anomaly = 0.0;  // on the target, used when no explicit state is given
    std::optional<Vec3> r;
    std::optional<Vec3> v;
    bool operator==(const InitialCondition&) const = default;
};

struct SimSettings {
    double duration = 86400.0;
    double control_period = 4.0;
    double integrator_step = 0.0;
    bool control_enabled = true;
    bool force_switch_on = false;
    double escape_radius = 0.0;
    int telemetry_stride = 1;
    bool operator==(const SimSettings&) const = default;
};

struct MonteCarloSpec {
    int samples = 100;
    double position_sigma = 35.0;  // m, per axis of the plane normal to the nominal velocity
    double velocity_sigma = 0.02;  // m/s, per Cartesian component
    std::uint64_t base_seed = 1;
    int threads = 0;               // 0 means hardware concurrency

    void validate() const;
    bool operator==(const MonteCarloSpec&) const = default;
};

struct OutputConfig {
    std::string directory = "out";
    bool telemetry = true;
    bool operator==(const OutputConfig&) const = default;
};

struct Scenario {
    std::string name;
    std::string description;
    BodyConfig body;
    SrpConfig srp;
    Frame frame = Frame::Inertial;
    OrbitGeometry target;
    EventScript events;
    ControllerConfig controller;  // controller.mu is filled from the body
    NoiseConfig noise;
    InitialCondition initial;
    SimSettings sim;
    std::optional<MonteCarloSpec> monte_carlo;
    OutputConfig output;

    /// Structural checks; file existence is checked when the scenario is built.
    void validate() const;
    double mu() const { return body.G * body.mass; }
    bool operator==(const Scenario&) const = default;
};

/// Quantity parsing. Bare numbers are SI; strings carry a unit suffix
/// ("90 deg", "1.695 AU", "2 h", "1 mm/s2").
enum class Dimension { None, Length, Angle, Time, Speed, Accel, Mass, Rate };
double parse_quantity(std::string_view text, Dimension dim);

/// JSON text <-> Scenario. Relative file paths are resolved against `base_dir`.
Scenario scenario_from_json(std::string_view text, const std::string& base_dir = "");
std::string scenario_to_json(const Scenario& s, int indent = 2);
Scenario load_scenario(const std::string& path);

/// Applies "dotted.path=value" overrides. Values are read as JSON when they
/// parse as JSON and as strings otherwise.
Scenario apply_overrides(const Scenario& s, const std::vector<std::string>& overrides);

/// The nine tabulated examples.
std::vector<std::string> preset_names();
/// Study scenarios that are not tabulated examples (parametric sweeps).
std::vector<std::string> extra_preset_names();
Scenario preset(std::string_view name);
bool is_preset(std::string_view name);

/// Preset name or scenario file.
Scenario resolve_scenario(const std::string& name_or_path);

/// Everything needed to run a scenario, with shapes and fields loaded.
struct BuiltScenario {
    Scenario scenario;
    SimulationConfig config;
    std::shared_ptr<const PolyhedronShape> shape;
};

BuiltScenario build_scenario(const Scenario& s);

/// Nominal initial state for a scenario (explicit state or a point on the target).
StateVector initial_state(const Scenario& s);

struct RunResult {
    SimulationSummary summary;
    std::vector<TelemetryRecord> telemetry;
};

/// Runs a built scenario, optionally keeping the telemetry in memory.
RunResult run_scenario(const BuiltScenario& built, bool keep_telemetry = false);

struct MonteCarloSample {
    int index = 0;
    std::uint64_t seed = 0;
    StateVector initial;
    SimulationSummary summary;
    bool success = false;
};

struct MonteCarloResult {
    std::vector<MonteCarloSample> samples;
    double mean_dv = 0.0;
    double three_sigma_dv = 0.0;  // 3 x sample standard deviation
    int successes = 0;
};

/// Orthonormal pair spanning the plane normal to `v`, Gram-Schmidt against `r` first.
std::pair<Vec3, Vec3> perpendicular_plane_basis(const Vec3& r, const Vec3& v);

/// Dispersed initial state of sample i.
StateVector dispersed_initial_state(const StateVector& nominal, const MonteCarloSpec& spec, std::uint64_t seed);

/// Success: no terminal event and every |s_i| within the switch band at the end.
bool sample_succeeded(const SimulationSummary& summary, const ControllerConfig& ctrl);

MonteCarloResult run_monte_carlo(const BuiltScenario& built, const MonteCarloSpec& spec);
void aggregate_monte_carlo(MonteCarloResult& result);

void write_monte_carlo_csv(std::ostream& out, const MonteCarloResult& result);
/// Reads the per-sample ΔV column back from a CSV written above.
std::vector<double> read_monte_carlo_dv(std::istream& in);

enum class SweepAxis { Disturbance, Lambda, NPhi, ControlPeriod };
std::string to_string(SweepAxis a);
SweepAxis parse_sweep_axis(std::string_view tag);

/// Copy of `s` with the sweep axis set to `value` (all three components for D).
Scenario with_sweep_value(const Scenario& s, SweepAxis axis, double value);

struct SweepPoint {
    double value = 0.0;
    SimulationSummary summary;
    std::vector<double> time;          // s, one entry per control step
    std::vector<double> radial_error;  // m
};

std::vector<SweepPoint> run_sweep(const Scenario& base, SweepAxis axis, const std::vector<double>& values,
                                  int threads = 0);

}  // namespace pathkeep
