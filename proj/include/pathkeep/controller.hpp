#pragma once

#include "pathkeep/frames.hpp"
#include "pathkeep/types.hpp"

#include <array>
#include <optional>
#include <vector>

namespace pathkeep {

/// Desired conic and the quantities the sliding surface needs from it.
struct TargetOrbit {
    OrbitGeometry geometry;
    Vec3 h_hat = Vec3::UnitZ();  // desired angular-momentum direction
    double h = 0.0;               // desired angular-momentum magnitude, m^2/s
    Vec3 e_vec = Vec3::Zero();    // desired eccentricity vector

    static TargetOrbit from_geometry(const OrbitGeometry& geometry, double mu);
};

/// Switching function used by the reaching law.
enum class SwitchingLaw {
    Saturation,  // boundary-layer form; the operational law
    Sign,        // discontinuous form, kept for chattering demonstrations
};

struct HysteresisConfig {
    bool enabled = false;
    Vec3 s_plus = Vec3::Zero();
    /// Off thresholds. Unset means a fraction of the current boundary layer.
    std::optional<Vec3> s_minus;
    double s_minus_phi_fraction = 1.0 / 3.0;

    bool operator==(const HysteresisConfig&) const = default;
};

struct PwpfParams {
    double k_lpf = 1.0;
    double omega_c = 1.0;     // 1/s
    double delta_on = 2.9e-3;
    double delta_off = 2.5e-3;
    double u_m = 1e-3;        // m/s^2, delivered thrust acceleration when on

    void validate() const;
    bool operator==(const PwpfParams&) const = default;
};

struct ControllerConfig {
    double lambda_r = 2.0;
    double lambda_n = 2.0;
    Vec3 disturbance_bound = Vec3::Constant(1e-4);  // D_R, D_T, D_N in m/s^2
    double n_phi = 5.0;                              // Phi = n_phi * diag(K)
    double mu = 0.0;                                 // central term known to the controller
    SwitchingLaw law = SwitchingLaw::Saturation;
    HysteresisConfig hysteresis;
    std::optional<double> u_max;                     // componentwise cap, m/s^2
    std::optional<PwpfParams> pwpf;

    void validate() const;
    bool operator==(const ControllerConfig&) const = default;
};

/// s = [e~ . (lambda_R r_hat + theta_hat), h - h_d, h_hat_d . (lambda_N r_hat + theta_hat)].
Vec3 sliding_surface(const Vec3& r, const Vec3& v, const TargetOrbit& target, double mu, double lambda_r,
                     double lambda_n);

/// Upper-triangular input matrix of the sliding dynamics, stored by its
/// five nonzero entries.
struct InputMatrix {
    double f11 = 0.0, f12 = 0.0, f13 = 0.0;
    double f22 = 0.0;
    double f33 = 0.0;

    Mat3 dense() const;
    double determinant() const { return f11 * f22 * f33; }
    /// Closed-form inverse of the triangular structure.
    Mat3 inverse() const;
    Vec3 solve(const Vec3& rhs) const;
};

InputMatrix input_matrix(const Vec3& r, const Vec3& v, const TargetOrbit& target, double mu, double lambda_r);
Vec3 drift_vector(const Vec3& r, const Vec3& v, const TargetOrbit& target, double mu, double lambda_r,
                  double lambda_n);

/// Diagonal of the gain matrix K at equality with the robustness bound.
Vec3 gain_matrix(const Vec3& r, const Vec3& v, const TargetOrbit& target, const ControllerConfig& cfg);

double saturation(double x, double x_star);
Vec3 saturation(const Vec3& x, const Vec3& x_star);

/// Raised when the plane error reaches 90 degrees; carries the intermediate
/// plane normal a caller can substitute.
class PlaneAngleError : public Error {
public:
    PlaneAngleError(const std::string& what, const Vec3& suggestion) : Error(what), suggestion_(suggestion) {}
    const Vec3& suggested_h_hat() const noexcept { return suggestion_; }

private:
    Vec3 suggestion_;
};

/// Unit vector halfway along the great circle from `from` to `to`.
Vec3 intermediate_normal(const Vec3& from, const Vec3& to);

struct ControlOutput {
    Vec3 u_rtn = Vec3::Zero();
    Vec3 s = Vec3::Zero();
    Vec3 gains = Vec3::Zero();
    Vec3 boundary_layer = Vec3::Zero();
    RtnBasis basis;
};

/// u_RTN = -F^-1 (G + K sat(s; Phi)) - f_RTN with f_RTN = [-mu/r^2, 0, 0].
/// Throws PlaneAngleError when h_hat . h_hat_d <= 0.
ControlOutput control_accel_rtn(const Vec3& r, const Vec3& v, const TargetOrbit& target, const ControllerConfig& cfg);

/// Same as control_accel_rtn but substitutes an intermediate plane when the
/// plane error reaches 90 degrees. `substituted` reports whether it did.
ControlOutput control_accel_rtn_guarded(const Vec3& r, const Vec3& v, const TargetOrbit& target,
                                        const ControllerConfig& cfg, bool* substituted = nullptr);

/// Schmitt-trigger memory for the idle-thruster switch.
struct SwitchState {
    std::array<bool, 3> latch{false, false, false};
    bool thrusting = false;

    bool operator==(const SwitchState&) const = default;
};

/// One switch update. An off threshold above the on threshold is clamped to
/// it, which reproduces evaluating the on-branch first.
SwitchState hysteresis_step(const Vec3& s, const SwitchState& previous, const Vec3& s_plus, const Vec3& s_minus);

Vec3 clamp_thrust(const Vec3& u, double u_max);

/// One pulse-width pulse-frequency modulator channel, in units normalized
/// by u_m.
struct PwpfState {
    double filter = 0.0;
    int output = 0;  // -1, 0, +1

    bool operator==(const PwpfState&) const = default;
};

struct PwpfStep {
    double thrust = 0.0;  // -u_m, 0 or +u_m, held over the step
    PwpfState next;
};

/// Trigger from the current filter value, then advance the first-order
/// filter over dt with the exact exponential solution (input held).
PwpfStep pwpf_step(double u_cmd, const PwpfState& state, const PwpfParams& params, double dt);

/// Schmitt trigger of the modulator: switch on beyond +-delta_on, off
/// inside +-delta_off, otherwise keep the previous output.
int pwpf_trigger(double filter, int previous, const PwpfParams& params);

struct PwpfInterval {
    double mean_level = 0.0;  // time-average of the trigger output, in [-1, 1]
    double on_time = 0.0;     // s
    long switches = 0;
    PwpfState next;
};

/// Advance the modulator over `duration` with the command held, switching
/// at the exact threshold-crossing instants of the filter solution. Pulse
/// widths far below any practical step size are resolved exactly.
PwpfInterval pwpf_advance(double u_cmd, const PwpfState& state, const PwpfParams& params, double duration);

/// Sliding-surface values over a grid of element perturbations around a
/// target, for choosing hysteresis thresholds from element tolerances.
struct SurfaceSample {
    OrbitGeometry geometry;
    double true_anomaly = 0.0;
    Vec3 s = Vec3::Zero();
};

struct ElementBox {
    double da = 0.0, de = 0.0, di = 0.0, draan = 0.0, daop = 0.0;
    int steps = 3;          // samples per element axis (odd keeps the nominal)
    int anomaly_steps = 8;  // samples around the orbit
};

std::vector<SurfaceSample> sample_surface(const TargetOrbit& target, const ElementBox& box, double mu,
                                          double lambda_r, double lambda_n);

}  // namespace pathkeep
