#pragma once

#include "pathkeep/controller.hpp"
#include "pathkeep/frames.hpp"
#include "pathkeep/gravity.hpp"
#include "pathkeep/shape.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace pathkeep {

/// Cannonball solar radiation pressure. The sun sits along inertial -X, so
/// the push is along +X.
struct SrpConfig {
    bool enabled = true;
    double reflectivity = 1.0;     // 0 (absorbing) .. 2
    double mass_to_area = 20.0;    // kg/m^2
    double sun_distance = kAstronomicalUnit;  // m
    double p0 = 1e8;               // kg km^3 / (s^2 m^2)

    void validate() const;
    bool operator==(const SrpConfig&) const = default;
};

/// True plant: gravity, spin, SRP and the frame the state is integrated in.
struct Environment {
    double spin_rate = 0.0;  // rad/s about +Z
    GravityField field = GravityField::point_mass(1.0);
    SrpConfig srp;
    Frame frame = Frame::Inertial;
    /// Body used for impact detection; when absent, `impact_radius` is used.
    std::shared_ptr<const PolyhedronShape> impact_shape;
    double impact_radius = 0.0;

    double mu() const { return field.mu(); }
};

/// SRP acceleration in the environment's frame at time t.
Vec3 srp_accel(const Environment& env, double t);

/// Magnitude (1 + rho) P0 / (B S^2), m/s^2.
double srp_magnitude(const SrpConfig& srp);

/// Apparent accelerations of the frame spinning at `spin_rate`:
/// (2 nu ydot + nu^2 x, -2 nu xdot + nu^2 y, 0). The state must be body-fixed.
Vec3 rotating_frame_terms(const StateVector& state, double spin_rate);

struct DisturbanceSample {
    Vec3 accel = Vec3::Zero();
    bool interior = false;
};

/// Full-field gravity minus the central term, in the environment's frame.
/// Exactly zero for a point-mass field.
DisturbanceSample higher_order_disturbance(const Environment& env, const Vec3& r, double t);

/// Full gravitational acceleration in the environment's frame.
Vec3 gravity_accel(const Environment& env, const Vec3& r, double t);

/// True when the position lies inside the body (or below the impact radius).
bool is_interior(const Environment& env, const Vec3& r, double t);

struct StateDerivative {
    Vec3 r_dot = Vec3::Zero();
    Vec3 v_dot = Vec3::Zero();
};

/// Equations of motion with every disturbance of the chosen frame plus the
/// applied control (expressed in the same frame).
StateDerivative eom_rhs(const Environment& env, const StateVector& state, const Vec3& u_applied);

/// Classical RK4 step with the control held over dt.
StateVector integrate_step(const Environment& env, const StateVector& state, const Vec3& u_applied, double dt);

/// Onboard propagation: RK4 on the central term plus the commanded control.
StateVector onboard_propagate(const StateVector& estimate, double mu, const Vec3& u_cmd, double dt);

struct NoiseConfig {
    double sigma_r = 0.0;           // m, per Cartesian component
    double sigma_v = 0.0;           // m/s, per Cartesian component
    double thruster_fraction = 0.0; // 1-sigma relative error per component
    std::uint64_t seed = 1;
    /// Measurement period; unset means a fresh measurement every control step.
    std::optional<double> measurement_period;

    void validate() const;
    bool operator==(const NoiseConfig&) const = default;
};

/// Independent generator per noise source, all derived from one seed.
struct RngStreams {
    enum Stream : std::uint32_t { Measurement = 1, Thruster = 2, Dispersion = 3 };

    explicit RngStreams(std::uint64_t seed);
    static std::mt19937_64 make(std::uint64_t seed, Stream stream);

    std::mt19937_64 measurement;
    std::mt19937_64 thruster;
    std::mt19937_64 dispersion;
};

StateVector measure(const StateVector& truth, const NoiseConfig& noise, std::mt19937_64& rng);
Vec3 apply_thruster_error(const Vec3& u_cmd, double fraction, std::mt19937_64& rng);

/// Target switching rules run during a simulation.
enum class TriggerKind {
    TimeAtLeast,         // fires once when t >= time
    PeriapsisProximity,  // fires once near periapsis of the active target
    SignOfZ,             // re-evaluated every step; toggles with the sign of Z
};

std::string to_string(TriggerKind kind);
TriggerKind parse_trigger_kind(std::string_view tag);

struct EventRule {
    TriggerKind kind = TriggerKind::TimeAtLeast;
    double time = 0.0;         // TimeAtLeast
    double threshold = 5.0;    // PeriapsisProximity, m
    OrbitGeometry target;      // target after firing (SignOfZ: used for Z >= 0)
    std::optional<OrbitGeometry> target_negative;  // SignOfZ: used for Z < 0
    /// On firing, rotate the new target's periapsis so that its apoapsis lies
    /// along the current position (tangential departure from a circle).
    bool align_apoapsis = false;

    bool operator==(const EventRule&) const = default;
};

/// One-shot rules are armed one at a time in list order; SignOfZ rules are
/// evaluated every control step.
struct EventScript {
    std::vector<EventRule> rules;
    bool operator==(const EventScript&) const = default;
};

struct SimulationConfig {
    Environment env;
    ControllerConfig controller;
    OrbitGeometry target;
    EventScript events;
    NoiseConfig noise;
    StateVector initial;
    double duration = 86400.0;      // s
    double control_period = 4.0;    // s
    double integrator_step = 0.0;   // s; 0 means control_period / 8
    bool control_enabled = true;
    bool force_switch_on = false;   // ignore the hysteresis switch
    double escape_radius = 0.0;     // m; 0 means 100 x the largest |a| of any target
    int telemetry_stride = 1;

    void validate() const;
};

struct TelemetryRecord {
    double t = 0.0;
    StateVector truth;
    StateVector estimate;
    OrbitGeometry target;
    Vec3 s = Vec3::Zero();
    bool switch_on = false;
    Vec3 u_cmd = Vec3::Zero();  // simulation frame, m/s^2
    Vec3 u_app = Vec3::Zero();  // mean applied over the control period
    double dv = 0.0;            // cumulative, m/s
    ElementErrors errors;
    double radial_error = 0.0;  // r - p / (1 + e_d . r_hat)
};

using TelemetrySink = std::function<void(const TelemetryRecord&)>;

enum class TerminalEvent { None, Impact, Escape, NonFinite };
std::string to_string(TerminalEvent e);

struct ErrorStats {
    double max_abs = 0.0;
    double rms = 0.0;
};

struct FiredEvent {
    double t = 0.0;
    std::size_t rule = 0;
    std::string description;
};

struct SimulationSummary {
    double delta_v = 0.0;
    TerminalEvent terminal = TerminalEvent::None;
    double end_time = 0.0;
    StateVector final_truth;
    StateVector final_estimate;
    Vec3 final_s = Vec3::Zero();
    OrbitGeometry final_target;
    long control_steps = 0;
    double thrust_on_time = 0.0;
    double longest_idle = 0.0;
    long idle_periods_over_hour = 0;
    long guard_substitutions = 0;
    /// Over the final half of the planned duration.
    ErrorStats a, e, i, raan, arg_periapsis, radial;
    /// Last time |radial error| was at least 1 m (0 if never).
    double settling_time = 0.0;
    std::vector<FiredEvent> events;
    std::vector<std::string> warnings;
};

/// Runs the closed loop. Telemetry rows go to `sink` (every
/// `telemetry_stride` control steps plus the last one).
SimulationSummary run_closed_loop(const SimulationConfig& cfg, const TelemetrySink& sink = {});

/// Radial distance error of `r` against the conic of `target`.
double radial_error(const Vec3& r, const TargetOrbit& target);

/// Copy of `g` with omega chosen so the apoapsis points along `r`.
OrbitGeometry align_apoapsis_with(const OrbitGeometry& g, const Vec3& r);

/// Telemetry CSV in the documented column order.
void write_telemetry_header(std::ostream& out);
void write_telemetry_row(std::ostream& out, const TelemetryRecord& rec);

/// Summary as a JSON document.
std::string summary_to_json(const SimulationSummary& s, int indent = 2);

}  // namespace pathkeep
