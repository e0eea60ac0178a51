#include "pathkeep/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pathkeep {

TargetOrbit TargetOrbit::from_geometry(const OrbitGeometry& geometry, double mu) {
    geometry.validate();
    if (!(mu > 0.0)) throw Error("target orbit needs mu > 0");
    TargetOrbit t;
    t.geometry = geometry;
    t.h_hat = hd_from_angles(geometry.i, geometry.raan);
    t.h = h_from_elements(mu, geometry.a, geometry.e);
    t.e_vec = eccentricity_vector(geometry.e, geometry.i, geometry.raan, geometry.arg_periapsis);
    return t;
}

void PwpfParams::validate() const {
    if (!(k_lpf > 0.0)) throw Error("pwpf.k_lpf must be positive");
    if (!(omega_c > 0.0)) throw Error("pwpf.omega_c must be positive");
    if (!(delta_off >= 0.0)) throw Error("pwpf.delta_off must be non-negative");
    if (!(delta_off < delta_on)) throw Error("pwpf.delta_off must be below pwpf.delta_on");
    if (!(u_m > 0.0)) throw Error("pwpf.u_m must be positive");
}

void ControllerConfig::validate() const {
    if (!(lambda_r > 0.0)) throw Error("controller.lambda_r must be positive");
    if (!(lambda_n > 0.0)) throw Error("controller.lambda_n must be positive");
    if (!(disturbance_bound.array() > 0.0).all()) throw Error("controller.disturbance_bound must be positive");
    if (!(n_phi > 0.0)) throw Error("controller.n_phi must be positive");
    if (!(mu > 0.0)) throw Error("controller.mu must be positive");
    if (u_max && !(*u_max > 0.0)) throw Error("controller.u_max must be positive");
    if (hysteresis.enabled) {
        if (!(hysteresis.s_plus.array() > 0.0).all()) throw Error("controller.hysteresis.s_plus must be positive");
        if (hysteresis.s_minus) {
            if (!(hysteresis.s_minus->array() >= 0.0).all()) {
                throw Error("controller.hysteresis.s_minus must be non-negative");
            }
            if (!(hysteresis.s_minus->array() <= hysteresis.s_plus.array()).all()) {
                throw Error("controller.hysteresis.s_minus must not exceed s_plus");
            }
        } else if (!(hysteresis.s_minus_phi_fraction >= 0.0)) {
            throw Error("controller.hysteresis.s_minus_phi_fraction must be non-negative");
        }
    }
    if (pwpf) pwpf->validate();
}

Vec3 sliding_surface(const Vec3& r, const Vec3& v, const TargetOrbit& target, double mu, double lambda_r,
                     double lambda_n) {
    const RtnBasis b = rtn_basis(r, v);
    const Vec3 e_err = eccentricity_vector(r, v, mu) - target.e_vec;
    const double h = r.cross(v).norm();
    return {e_err.dot(lambda_r * b.r_hat + b.theta_hat), h - target.h,
            target.h_hat.dot(lambda_n * b.r_hat + b.theta_hat)};
}

Mat3 InputMatrix::dense() const {
    Mat3 m;
    m << f11, f12, f13, 0.0, f22, 0.0, 0.0, 0.0, f33;
    return m;
}

Mat3 InputMatrix::inverse() const {
    Mat3 m;
    m << 1.0 / f11, -f12 / (f11 * f22), -f13 / (f11 * f33), 0.0, 1.0 / f22, 0.0, 0.0, 0.0, 1.0 / f33;
    return m;
}

Vec3 InputMatrix::solve(const Vec3& rhs) const {
    const double x2 = rhs.y() / f22;
    const double x3 = rhs.z() / f33;
    return {(rhs.x() - f12 * x2 - f13 * x3) / f11, x2, x3};
}

InputMatrix input_matrix(const Vec3& r, const Vec3& v, const TargetOrbit& target, double mu, double lambda_r) {
    const RtnBasis b = rtn_basis(r, v);
    const double rn = r.norm();
    const double h = r.cross(v).norm();
    InputMatrix f;
    f.f11 = -h / mu;
    f.f12 = (2.0 * lambda_r * h - v.dot(b.r_hat) * rn) / mu;
    f.f13 = -rn * target.e_vec.dot(b.h_hat) / h;
    f.f22 = rn;
    f.f33 = rn * target.h_hat.dot(b.h_hat) / h;
    return f;
}

Vec3 drift_vector(const Vec3& r, const Vec3& v, const TargetOrbit& target, double mu, double lambda_r,
                  double lambda_n) {
    const RtnBasis b = rtn_basis(r, v);
    const double rn = r.norm();
    const double h = r.cross(v).norm();
    const Vec3 e_err = eccentricity_vector(r, v, mu) - target.e_vec;
    const double scale = h / (rn * rn);
    return scale * Vec3(e_err.dot(lambda_r * b.theta_hat - b.r_hat) - 1.0, 0.0,
                        target.h_hat.dot(lambda_n * b.theta_hat - b.r_hat));
}

Vec3 gain_matrix(const Vec3& r, const Vec3& v, const TargetOrbit& target, const ControllerConfig& cfg) {
    const RtnBasis b = rtn_basis(r, v);
    const double rn = r.norm();
    const double h = r.cross(v).norm();
    const double mu = cfg.mu;
    const Vec3& d = cfg.disturbance_bound;
    const double k11 = h / mu * d.x() + std::abs((2.0 * cfg.lambda_r * h - v.dot(b.r_hat) * rn) / mu) * d.y() +
                       rn * std::abs(target.e_vec.dot(b.h_hat)) / h * d.z();
    const double k22 = rn * d.y();
    const double k33 = rn * target.h_hat.dot(b.h_hat) / h * d.z();
    return {k11, k22, k33};
}

double saturation(double x, double x_star) {
    if (x > x_star) return 1.0;
    if (x < -x_star) return -1.0;
    return x / x_star;
}

Vec3 saturation(const Vec3& x, const Vec3& x_star) {
    return {saturation(x.x(), x_star.x()), saturation(x.y(), x_star.y()), saturation(x.z(), x_star.z())};
}

namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

Vec3 intermediate_normal(const Vec3& from, const Vec3& to) {
    const Vec3 a = from.normalized();
    const Vec3 b = to.normalized();
    const Vec3 mid = a + b;
    const double n = mid.norm();
    if (n > 1e-12) return mid / n;
    // Antiparallel: every great circle works; take the one through the
    // coordinate axis least aligned with `from`.
    Eigen::Index k = 0;
    a.cwiseAbs().minCoeff(&k);
    return a.cross(Vec3::Unit(k)).normalized();
}

ControlOutput control_accel_rtn(const Vec3& r, const Vec3& v, const TargetOrbit& target, const ControllerConfig& cfg) {
    ControlOutput out;
    out.basis = rtn_basis(r, v);
    const double cos_beta = target.h_hat.dot(out.basis.h_hat);
    if (!(cos_beta > 0.0)) {
        throw PlaneAngleError("plane error of 90 degrees or more: input matrix is singular",
                              intermediate_normal(out.basis.h_hat, target.h_hat));
    }
    const double mu = cfg.mu;
    const double rn = r.norm();
    out.s = sliding_surface(r, v, target, mu, cfg.lambda_r, cfg.lambda_n);
    out.gains = gain_matrix(r, v, target, cfg);
    out.boundary_layer = cfg.n_phi * out.gains;

    Vec3 switching;
    if (cfg.law == SwitchingLaw::Sign) {
        switching = {sign(out.s.x()), sign(out.s.y()), sign(out.s.z())};
    } else {
        switching = saturation(out.s, out.boundary_layer);
    }
    const InputMatrix f = input_matrix(r, v, target, mu, cfg.lambda_r);
    const Vec3 g = drift_vector(r, v, target, mu, cfg.lambda_r, cfg.lambda_n);
    const Vec3 known(-mu / (rn * rn), 0.0, 0.0);
    out.u_rtn = -f.solve(g + out.gains.cwiseProduct(switching)) - known;
    return out;
}

ControlOutput control_accel_rtn_guarded(const Vec3& r, const Vec3& v, const TargetOrbit& target,
                                        const ControllerConfig& cfg, bool* substituted) {
    if (substituted) *substituted = false;
    try {
        return control_accel_rtn(r, v, target, cfg);
    } catch (const PlaneAngleError& err) {
        TargetOrbit stepped = target;
        stepped.h_hat = err.suggested_h_hat();
        if (substituted) *substituted = true;
        return control_accel_rtn(r, v, stepped, cfg);
    }
}

SwitchState hysteresis_step(const Vec3& s, const SwitchState& previous, const Vec3& s_plus, const Vec3& s_minus) {
    SwitchState next;
    for (int k = 0; k < 3; ++k) {
        const double mag = std::abs(s[k]);
        if (mag > s_plus[k]) {
            next.latch[k] = true;
        } else if (mag < std::min(s_minus[k], s_plus[k])) {
            next.latch[k] = false;
        } else {
            next.latch[k] = previous.latch[k];
        }
    }
    next.thrusting = next.latch[0] || next.latch[1] || next.latch[2];
    return next;
}

Vec3 clamp_thrust(const Vec3& u, double u_max) {
    if (!(u_max > 0.0)) throw Error("thrust cap must be positive");
    return u.cwiseMax(-u_max).cwiseMin(u_max);
}

int pwpf_trigger(double filter, int previous, const PwpfParams& params) {
    auto fresh = [&] { return filter >= params.delta_on ? 1 : (filter <= -params.delta_on ? -1 : 0); };
    if (previous > 0) return filter <= params.delta_off ? fresh() : 1;
    if (previous < 0) return filter >= -params.delta_off ? fresh() : -1;
    return fresh();
}

PwpfStep pwpf_step(double u_cmd, const PwpfState& state, const PwpfParams& params, double dt) {
    if (!(dt > 0.0)) throw Error("pwpf step needs dt > 0");
    PwpfStep step;
    const double f = state.filter;
    const int out = pwpf_trigger(f, state.output, params);
    step.thrust = out * params.u_m;
    const double target = params.k_lpf * (u_cmd / params.u_m - out);
    step.next.filter = target + (f - target) * std::exp(-params.omega_c * dt);
    step.next.output = out;
    return step;
}

PwpfInterval pwpf_advance(double u_cmd, const PwpfState& state, const PwpfParams& params, double duration) {
    if (!(duration > 0.0)) throw Error("pwpf advance needs a positive duration");
    constexpr long kMaxSwitches = 10'000'000;
    const double x = u_cmd / params.u_m;
    PwpfInterval out;
    double f = state.filter;
    int level = pwpf_trigger(f, state.output, params);
    double t = 0.0;
    double integral = 0.0;
    while (true) {
        const double target = params.k_lpf * (x - level);
        double threshold = 0.0;
        bool crossing = false;
        if (level == 0) {
            if (target > params.delta_on && f < params.delta_on) {
                threshold = params.delta_on;
                crossing = true;
            } else if (target < -params.delta_on && f > -params.delta_on) {
                threshold = -params.delta_on;
                crossing = true;
            }
        } else if (level > 0 && target < params.delta_off && f > params.delta_off) {
            threshold = params.delta_off;
            crossing = true;
        } else if (level < 0 && target > -params.delta_off && f < -params.delta_off) {
            threshold = -params.delta_off;
            crossing = true;
        }
        const double remaining = duration - t;
        const double tau = crossing ? std::log((f - target) / (threshold - target)) / params.omega_c
                                    : std::numeric_limits<double>::infinity();
        if (!(tau < remaining)) {
            integral += level * remaining;
            if (level != 0) out.on_time += remaining;
            f = target + (f - target) * std::exp(-params.omega_c * remaining);
            break;
        }
        integral += level * tau;
        if (level != 0) out.on_time += tau;
        t += tau;
        f = threshold;
        level = pwpf_trigger(f, level, params);
        if (++out.switches > kMaxSwitches) throw Error("pwpf modulator exceeded the switch budget");
    }
    out.mean_level = integral / duration;
    out.next.filter = f;
    out.next.output = level;
    return out;
}

std::vector<SurfaceSample> sample_surface(const TargetOrbit& target, const ElementBox& box, double mu,
                                          double lambda_r, double lambda_n) {
    if (box.steps < 1 || box.anomaly_steps < 1) throw Error("element box needs at least one sample per axis");
    auto offsets = [&](double half_width) {
        std::vector<double> out;
        if (box.steps == 1 || half_width == 0.0) return std::vector<double>{0.0};
        for (int k = 0; k < box.steps; ++k) {
            out.push_back(-half_width + 2.0 * half_width * k / (box.steps - 1));
        }
        return out;
    };
    const OrbitGeometry& g0 = target.geometry;
    std::vector<SurfaceSample> samples;
    for (double da : offsets(box.da)) {
        for (double de : offsets(box.de)) {
            for (double di : offsets(box.di)) {
                for (double dO : offsets(box.draan)) {
                    for (double dw : offsets(box.daop)) {
                        OrbitGeometry g{g0.a + da, g0.e + de, std::clamp(g0.i + di, 0.0, kPi),
                                        wrap_two_pi(g0.raan + dO), wrap_two_pi(g0.arg_periapsis + dw)};
                        if (g.e < 0.0) continue;
                        try {
                            g.validate();
                        } catch (const Error&) {
                            continue;
                        }
                        for (int k = 0; k < box.anomaly_steps; ++k) {
                            const double nu = -kPi + kTwoPi * (k + 0.5) / box.anomaly_steps;
                            if (!(1.0 + g.e * std::cos(nu) > 1e-6)) continue;
                            const StateVector st = state_from_geometry(g, nu, mu);
                            samples.push_back({g, nu, sliding_surface(st.r, st.v, target, mu, lambda_r, lambda_n)});
                        }
                    }
                }
            }
        }
    }
    return samples;
}

}  // namespace pathkeep
