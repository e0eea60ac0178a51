#include "pathkeep/dynamics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace pathkeep {

void SrpConfig::validate() const {
    if (!enabled) return;
    if (!(reflectivity >= 0.0 && reflectivity <= 2.0)) throw Error("srp.reflectivity must lie in [0, 2]");
    if (!(mass_to_area > 0.0)) throw Error("srp.mass_to_area must be positive");
    if (!(sun_distance > 0.0)) throw Error("srp.sun_distance must be positive");
    if (!(p0 > 0.0)) throw Error("srp.p0 must be positive");
}

double srp_magnitude(const SrpConfig& srp) {
    const double s_km = srp.sun_distance / 1000.0;
    // P0 / (B S^2) is in km/s^2 with S in km.
    return (1.0 + srp.reflectivity) * srp.p0 / (srp.mass_to_area * s_km * s_km) * 1000.0;
}

Vec3 srp_accel(const Environment& env, double t) {
    if (!env.srp.enabled) return Vec3::Zero();
    const double mag = srp_magnitude(env.srp);
    if (env.frame == Frame::Inertial) return {mag, 0.0, 0.0};
    const double angle = env.spin_rate * t;
    return mag * Vec3(std::cos(angle), -std::sin(angle), 0.0);
}

Vec3 rotating_frame_terms(const StateVector& state, double spin_rate) {
    if (state.frame != Frame::BodyFixed) throw FrameMismatchError("rotating-frame terms need a body-fixed state");
    const double n = spin_rate;
    return {2.0 * n * state.v.y() + n * n * state.r.x(), -2.0 * n * state.v.x() + n * n * state.r.y(), 0.0};
}

namespace {

bool needs_rotation(const Environment& env) { return env.frame == Frame::Inertial && env.spin_rate != 0.0; }

}  // namespace

Vec3 gravity_accel(const Environment& env, const Vec3& r, double t) {
    if (env.field.is_point_mass() || !needs_rotation(env)) return env.field.accel(r);
    const double angle = env.spin_rate * t;
    return rotation_z(angle) * env.field.accel(rotation_z(-angle) * r);
}

DisturbanceSample higher_order_disturbance(const Environment& env, const Vec3& r, double t) {
    DisturbanceSample out;
    if (env.field.is_point_mass()) return out;
    const double angle = needs_rotation(env) ? env.spin_rate * t : 0.0;
    const GravitySample g = env.field.evaluate(angle != 0.0 ? Vec3(rotation_z(-angle) * r) : r);
    const Vec3 full = angle != 0.0 ? Vec3(rotation_z(angle) * g.accel) : g.accel;
    out.accel = full - point_mass_accel(env.mu(), r);
    out.interior = g.interior || is_interior(env, r, t);
    return out;
}

bool is_interior(const Environment& env, const Vec3& r, double t) {
    if (env.impact_shape) {
        const Vec3 rb = env.frame == Frame::Inertial ? Vec3(rotation_z(-env.spin_rate * t) * r) : r;
        if (rb.norm() >= env.impact_shape->circumscribing_radius()) return false;
        try {
            return polyhedron_laplacian(*env.impact_shape, rb) < -kTwoPi;
        } catch (const SingularFieldPointError&) {
            return true;
        }
    }
    return r.norm() < env.impact_radius;
}

StateDerivative eom_rhs(const Environment& env, const StateVector& state, const Vec3& u_applied) {
    StateDerivative d;
    d.r_dot = state.v;
    d.v_dot = gravity_accel(env, state.r, state.t) + srp_accel(env, state.t) + u_applied;
    if (env.frame == Frame::BodyFixed && env.spin_rate != 0.0) d.v_dot += rotating_frame_terms(state, env.spin_rate);
    return d;
}

namespace {

template <class Rhs>
StateVector rk4(const StateVector& s, double dt, Rhs&& rhs) {
    auto shifted = [&](const StateDerivative& k, double f) {
        StateVector x = s;
        x.r += f * dt * k.r_dot;
        x.v += f * dt * k.v_dot;
        x.t += f * dt;
        return x;
    };
    const StateDerivative k1 = rhs(s);
    const StateDerivative k2 = rhs(shifted(k1, 0.5));
    const StateDerivative k3 = rhs(shifted(k2, 0.5));
    const StateDerivative k4 = rhs(shifted(k3, 1.0));
    StateVector out = s;
    out.r += dt / 6.0 * (k1.r_dot + 2.0 * k2.r_dot + 2.0 * k3.r_dot + k4.r_dot);
    out.v += dt / 6.0 * (k1.v_dot + 2.0 * k2.v_dot + 2.0 * k3.v_dot + k4.v_dot);
    out.t += dt;
    return out;
}

}  // namespace

StateVector integrate_step(const Environment& env, const StateVector& state, const Vec3& u_applied, double dt) {
    if (!(dt > 0.0)) throw Error("integration step must be positive");
    if (state.frame != env.frame) throw FrameMismatchError("state frame differs from the environment frame");
    return rk4(state, dt, [&](const StateVector& x) { return eom_rhs(env, x, u_applied); });
}

StateVector onboard_propagate(const StateVector& estimate, double mu, const Vec3& u_cmd, double dt) {
    if (!(dt > 0.0)) throw Error("propagation step must be positive");
    return rk4(estimate, dt, [&](const StateVector& x) {
        return StateDerivative{x.v, point_mass_accel(mu, x.r) + u_cmd};
    });
}

void NoiseConfig::validate() const {
    if (!(sigma_r >= 0.0)) throw Error("noise.sigma_r must be non-negative");
    if (!(sigma_v >= 0.0)) throw Error("noise.sigma_v must be non-negative");
    if (!(thruster_fraction >= 0.0)) throw Error("noise.thruster_fraction must be non-negative");
    if (measurement_period && !(*measurement_period > 0.0)) throw Error("noise.measurement_period must be positive");
}

std::mt19937_64 RngStreams::make(std::uint64_t seed, Stream stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

RngStreams::RngStreams(std::uint64_t seed)
    : measurement(make(seed, Measurement)), thruster(make(seed, Thruster)), dispersion(make(seed, Dispersion)) {}

StateVector measure(const StateVector& truth, const NoiseConfig& noise, std::mt19937_64& rng) {
    StateVector est = truth;
    std::normal_distribution<double> n01(0.0, 1.0);
    if (noise.sigma_r > 0.0) {
        for (int k = 0; k < 3; ++k) est.r[k] += noise.sigma_r * n01(rng);
    }
    if (noise.sigma_v > 0.0) {
        for (int k = 0; k < 3; ++k) est.v[k] += noise.sigma_v * n01(rng);
    }
    return est;
}

Vec3 apply_thruster_error(const Vec3& u_cmd, double fraction, std::mt19937_64& rng) {
    if (!(fraction > 0.0)) return u_cmd;
    std::normal_distribution<double> n01(0.0, 1.0);
    Vec3 out;
    for (int k = 0; k < 3; ++k) out[k] = u_cmd[k] * (1.0 + fraction * n01(rng));
    return out;
}

std::string to_string(TriggerKind kind) {
    switch (kind) {
        case TriggerKind::TimeAtLeast: return "time";
        case TriggerKind::PeriapsisProximity: return "periapsis";
        case TriggerKind::SignOfZ: return "sign-of-z";
    }
    return "?";
}

TriggerKind parse_trigger_kind(std::string_view tag) {
    if (tag == "time") return TriggerKind::TimeAtLeast;
    if (tag == "periapsis") return TriggerKind::PeriapsisProximity;
    if (tag == "sign-of-z") return TriggerKind::SignOfZ;
    throw Error("unknown trigger '" + std::string(tag) + "' (expected time, periapsis or sign-of-z)");
}

std::string to_string(TerminalEvent e) {
    switch (e) {
        case TerminalEvent::None: return "none";
        case TerminalEvent::Impact: return "impact";
        case TerminalEvent::Escape: return "escape";
        case TerminalEvent::NonFinite: return "non-finite";
    }
    return "?";
}

void SimulationConfig::validate() const {
    env.srp.validate();
    if (!(env.mu() > 0.0)) throw Error("environment needs mu > 0");
    controller.validate();
    target.validate();
    noise.validate();
    if (!initial.is_finite()) throw Error("initial state must be finite");
    if (initial.frame != env.frame) throw FrameMismatchError("initial state frame differs from the simulation frame");
    if (!(duration > 0.0)) throw Error("sim.duration must be positive");
    if (!(control_period > 0.0)) throw Error("sim.control_period must be positive");
    if (!(integrator_step >= 0.0)) throw Error("sim.integrator_step must be non-negative");
    if (integrator_step > control_period) throw Error("sim.integrator_step must not exceed the control period");
    if (telemetry_stride < 1) throw Error("sim.telemetry_stride must be at least 1");
    for (std::size_t k = 0; k < events.rules.size(); ++k) {
        const auto& rule = events.rules[k];
        rule.target.validate();
        if (rule.kind == TriggerKind::SignOfZ) {
            if (!rule.target_negative) throw Error("events[" + std::to_string(k) + "]: sign-of-z needs target_negative");
            rule.target_negative->validate();
        }
        if (rule.kind == TriggerKind::PeriapsisProximity && !(rule.threshold > 0.0)) {
            throw Error("events[" + std::to_string(k) + "]: threshold must be positive");
        }
    }
}

double radial_error(const Vec3& r, const TargetOrbit& target) {
    const double rn = r.norm();
    const double denom = 1.0 + target.e_vec.dot(r / rn);
    if (!(denom > 1e-9)) return std::numeric_limits<double>::quiet_NaN();
    return rn - target.geometry.semi_latus_rectum() / denom;
}

OrbitGeometry align_apoapsis_with(const OrbitGeometry& g, const Vec3& r) {
    const Vec3 h_hat = hd_from_angles(g.i, g.raan);
    const Vec3 node(std::cos(g.raan), std::sin(g.raan), 0.0);
    const Vec3 m = h_hat.cross(node);
    OrbitGeometry out = g;
    out.arg_periapsis = wrap_two_pi(std::atan2(r.dot(m), r.dot(node)) - kPi);
    return out;
}

namespace {

class StatsAccumulator {
public:
    void add(double x) {
        if (!std::isfinite(x)) return;
        max_ = std::max(max_, std::abs(x));
        sum_sq_ += x * x;
        ++n_;
    }
    ErrorStats stats() const { return {max_, n_ ? std::sqrt(sum_sq_ / n_) : 0.0}; }

private:
    double max_ = 0.0;
    double sum_sq_ = 0.0;
    long n_ = 0;
};

double default_escape_radius(const SimulationConfig& cfg) {
    double a = std::abs(cfg.target.a);
    for (const auto& rule : cfg.events.rules) {
        a = std::max(a, std::abs(rule.target.a));
        if (rule.target_negative) a = std::max(a, std::abs(rule.target_negative->a));
    }
    return 100.0 * a;
}

std::string describe(const EventRule& rule, const OrbitGeometry& g) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s: target a=%.6g m e=%.6g i=%.6g deg", to_string(rule.kind).c_str(), g.a, g.e,
                  rad2deg(g.i));
    return buf;
}

}  // namespace

SimulationSummary run_closed_loop(const SimulationConfig& cfg, const TelemetrySink& sink) {
    cfg.validate();
    const Environment& env = cfg.env;
    const ControllerConfig& ctrl = cfg.controller;
    const double period = cfg.control_period;
    const double requested_h = cfg.integrator_step > 0.0 ? cfg.integrator_step : period / 8.0;
    const int substeps = std::max(1, static_cast<int>(std::lround(period / requested_h)));
    const double h = period / substeps;
    const long steps = static_cast<long>(std::ceil(cfg.duration / period - 1e-9));
    const double escape = cfg.escape_radius > 0.0 ? cfg.escape_radius : default_escape_radius(cfg);
    const double t0 = cfg.initial.t;
    const double half_time = t0 + 0.5 * cfg.duration;

    RngStreams rng(cfg.noise.seed);
    SimulationSummary sum;
    TargetOrbit target = TargetOrbit::from_geometry(cfg.target, ctrl.mu);

    StateVector truth = cfg.initial;
    StateVector estimate = measure(truth, cfg.noise, rng.measurement);
    StateVector propagated = estimate;
    double next_measurement = t0 + cfg.noise.measurement_period.value_or(0.0);

    std::size_t next_rule = 0;
    auto advance_rule = [&] {
        while (next_rule < cfg.events.rules.size() && cfg.events.rules[next_rule].kind == TriggerKind::SignOfZ) {
            ++next_rule;
        }
    };
    advance_rule();
    double previous_vr = std::numeric_limits<double>::quiet_NaN();

    SwitchState sw;
    std::array<PwpfState, 3> pwpf{};
    StatsAccumulator st_a, st_e, st_i, st_raan, st_aop, st_rad;
    double idle_run = 0.0;
    bool degenerate_warned = false;

    std::vector<Vec3> cmd_sub(substeps), app_sub(substeps);

    for (long k = 0; k < steps; ++k) {
        const double t = t0 + k * period;

        if (cfg.noise.measurement_period) {
            if (t >= next_measurement - 1e-9 * period) {
                estimate = measure(truth, cfg.noise, rng.measurement);
                next_measurement += *cfg.noise.measurement_period;
            } else {
                estimate = propagated;
            }
        } else if (k > 0) {
            estimate = measure(truth, cfg.noise, rng.measurement);
        }

        for (std::size_t idx = 0; idx < cfg.events.rules.size(); ++idx) {
            const auto& rule = cfg.events.rules[idx];
            if (rule.kind != TriggerKind::SignOfZ) continue;
            const OrbitGeometry& wanted = estimate.r.z() >= 0.0 ? rule.target : *rule.target_negative;
            if (!(wanted == target.geometry)) {
                target = TargetOrbit::from_geometry(wanted, ctrl.mu);
                sum.events.push_back({t, idx, describe(rule, wanted)});
            }
        }
        const double vr = estimate.v.dot(estimate.r.normalized());
        if (next_rule < cfg.events.rules.size()) {
            const auto& rule = cfg.events.rules[next_rule];
            bool fire = false;
            if (rule.kind == TriggerKind::TimeAtLeast) {
                fire = t >= rule.time - 1e-9;
            } else if (rule.kind == TriggerKind::PeriapsisProximity) {
                const double rp = target.geometry.periapsis_radius();
                fire = std::abs(estimate.r.norm() - rp) < rule.threshold && previous_vr < 0.0 && vr >= 0.0;
            }
            if (fire) {
                const OrbitGeometry next =
                    rule.align_apoapsis ? align_apoapsis_with(rule.target, estimate.r) : rule.target;
                target = TargetOrbit::from_geometry(next, ctrl.mu);
                sum.events.push_back({t, next_rule, describe(rule, next)});
                ++next_rule;
                advance_rule();
            }
        }
        previous_vr = vr;

        // Control law on the estimate.
        ControlOutput co;
        bool have_control = false;
        bool on = false;
        Vec3 u_rtn = Vec3::Zero();
        if (cfg.control_enabled) {
            try {
                bool substituted = false;
                co = control_accel_rtn_guarded(estimate.r, estimate.v, target, ctrl, &substituted);
                have_control = true;
                if (substituted) ++sum.guard_substitutions;
            } catch (const DegenerateStateError& err) {
                if (!degenerate_warned) {
                    sum.warnings.push_back("control skipped at t=" + std::to_string(t) + " s: " + err.what());
                    degenerate_warned = true;
                }
            }
        }
        if (have_control) {
            if (ctrl.hysteresis.enabled && !cfg.force_switch_on) {
                const Vec3 s_minus =
                    ctrl.hysteresis.s_minus.value_or(ctrl.hysteresis.s_minus_phi_fraction * co.boundary_layer);
                sw = hysteresis_step(co.s, sw, ctrl.hysteresis.s_plus, s_minus);
                on = sw.thrusting;
            } else {
                on = true;
            }
            if (on) {
                u_rtn = co.u_rtn;
                if (ctrl.u_max) u_rtn = clamp_thrust(u_rtn, *ctrl.u_max);
            }
        }

        const Vec3 factors = apply_thruster_error(Vec3::Ones(), cfg.noise.thruster_fraction, rng.thruster);
        for (int j = 0; j < substeps; ++j) {
            Vec3 level = u_rtn;
            if (ctrl.pwpf) {
                if (on) {
                    for (int a = 0; a < 3; ++a) {
                        const PwpfInterval iv = pwpf_advance(u_rtn[a], pwpf[a], *ctrl.pwpf, h);
                        level[a] = iv.mean_level * ctrl.pwpf->u_m;
                        pwpf[a] = iv.next;
                    }
                } else {
                    pwpf = {};
                }
            }
            if (have_control && on) {
                cmd_sub[j] = from_rtn(level, co.basis);
                app_sub[j] = from_rtn(level.cwiseProduct(factors), co.basis);
            } else {
                cmd_sub[j] = Vec3::Zero();
                app_sub[j] = Vec3::Zero();
            }
        }

        TelemetryRecord rec;
        rec.t = t;
        rec.truth = truth;
        rec.estimate = estimate;
        rec.target = target.geometry;
        rec.switch_on = on;
        rec.s = have_control ? co.s : sliding_surface(truth.r, truth.v, target, ctrl.mu, ctrl.lambda_r, ctrl.lambda_n);
        rec.radial_error = radial_error(truth.r, target);
        rec.errors = element_errors(geometry_from_state(truth, env.mu()).geometry, target.geometry);

        // Integrate truth and the onboard solution over the control period.
        propagated = estimate;
        Vec3 applied_sum = Vec3::Zero();
        Vec3 cmd_sum = Vec3::Zero();
        for (int j = 0; j < substeps && sum.terminal == TerminalEvent::None; ++j) {
            truth = integrate_step(env, truth, app_sub[j], h);
            propagated = onboard_propagate(propagated, ctrl.mu, cmd_sub[j], h);
            sum.delta_v += app_sub[j].norm() * h;
            applied_sum += app_sub[j] * h;
            cmd_sum += cmd_sub[j] * h;
            if (!truth.is_finite()) {
                sum.terminal = TerminalEvent::NonFinite;
            } else if (truth.r.norm() > escape) {
                sum.terminal = TerminalEvent::Escape;
            } else if (is_interior(env, truth.r, truth.t)) {
                sum.terminal = TerminalEvent::Impact;
            }
        }
        rec.u_cmd = cmd_sum / period;
        rec.u_app = applied_sum / period;
        rec.dv = sum.delta_v;

        if (on) {
            sum.thrust_on_time += period;
            if (idle_run > 3600.0) ++sum.idle_periods_over_hour;
            sum.longest_idle = std::max(sum.longest_idle, idle_run);
            idle_run = 0.0;
        } else {
            idle_run += period;
        }

        if (t >= half_time) {
            st_a.add(rec.errors.a);
            st_e.add(rec.errors.e);
            st_i.add(rec.errors.i);
            st_raan.add(rec.errors.raan);
            st_aop.add(rec.errors.arg_periapsis);
            st_rad.add(rec.radial_error);
        }
        if (std::isfinite(rec.radial_error) && std::abs(rec.radial_error) >= 1.0) sum.settling_time = t - t0;

        ++sum.control_steps;
        const bool last = k + 1 == steps || sum.terminal != TerminalEvent::None;
        if (sink && (k % cfg.telemetry_stride == 0 || last)) sink(rec);
        sum.final_s = rec.s;
        if (sum.terminal != TerminalEvent::None) break;
    }
    if (idle_run > 3600.0) ++sum.idle_periods_over_hour;
    sum.longest_idle = std::max(sum.longest_idle, idle_run);

    sum.end_time = truth.t;
    sum.final_truth = truth;
    sum.final_estimate = propagated;
    sum.final_target = target.geometry;
    sum.a = st_a.stats();
    sum.e = st_e.stats();
    sum.i = st_i.stats();
    sum.raan = st_raan.stats();
    sum.arg_periapsis = st_aop.stats();
    sum.radial = st_rad.stats();
    for (std::size_t k = next_rule; k < cfg.events.rules.size(); ++k) {
        if (cfg.events.rules[k].kind == TriggerKind::SignOfZ) continue;
        sum.warnings.push_back("event rule " + std::to_string(k) + " (" + to_string(cfg.events.rules[k].kind) +
                               ") never triggered");
    }
    if (sum.terminal != TerminalEvent::None) {
        sum.warnings.push_back("terminated by " + to_string(sum.terminal) + " at t=" + std::to_string(sum.end_time) +
                               " s");
    }
    return sum;
}

void write_telemetry_header(std::ostream& out) {
    out << "t,rx,ry,rz,vx,vy,vz,rx_est,ry_est,rz_est,vx_est,vy_est,vz_est,s1,s2,s3,switch,"
           "ucmd_x,ucmd_y,ucmd_z,uapp_x,uapp_y,uapp_z,dv,err_a,err_e,err_i,err_raan,err_aop,err_r\n";
}

void write_telemetry_row(std::ostream& out, const TelemetryRecord& rec) {
    char buf[1024];
    const auto& tr = rec.truth;
    const auto& es = rec.estimate;
    std::snprintf(buf, sizeof buf,
                  "%.10g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.10g,%.10g,%.10g,%d,"
                  "%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.12g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                  rec.t, tr.r.x(), tr.r.y(), tr.r.z(), tr.v.x(), tr.v.y(), tr.v.z(), es.r.x(), es.r.y(), es.r.z(),
                  es.v.x(), es.v.y(), es.v.z(), rec.s.x(), rec.s.y(), rec.s.z(), rec.switch_on ? 1 : 0, rec.u_cmd.x(),
                  rec.u_cmd.y(), rec.u_cmd.z(), rec.u_app.x(), rec.u_app.y(), rec.u_app.z(), rec.dv, rec.errors.a,
                  rec.errors.e, rec.errors.i, rec.errors.raan, rec.errors.arg_periapsis, rec.radial_error);
    out << buf;
}

namespace {

nlohmann::json stats_json(const ErrorStats& s) { return {{"max_abs", s.max_abs}, {"rms", s.rms}}; }

nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

nlohmann::json geometry_json(const OrbitGeometry& g) {
    return {{"a_m", g.a}, {"e", g.e}, {"i_deg", rad2deg(g.i)}, {"raan_deg", rad2deg(g.raan)},
            {"arg_periapsis_deg", rad2deg(g.arg_periapsis)}};
}

}  // namespace

std::string summary_to_json(const SimulationSummary& s, int indent) {
    nlohmann::json j;
    j["delta_v_m_s"] = s.delta_v;
    j["terminal_event"] = to_string(s.terminal);
    j["end_time_s"] = s.end_time;
    j["control_steps"] = s.control_steps;
    j["thrust_on_time_s"] = s.thrust_on_time;
    j["longest_idle_s"] = s.longest_idle;
    j["idle_periods_over_1h"] = s.idle_periods_over_hour;
    j["plane_guard_substitutions"] = s.guard_substitutions;
    j["settling_time_s"] = s.settling_time;
    j["final_state"] = {{"frame", to_string(s.final_truth.frame)},
                        {"r_m", vec_json(s.final_truth.r)},
                        {"v_m_s", vec_json(s.final_truth.v)}};
    j["final_sliding_surface"] = vec_json(s.final_s);
    j["final_target"] = geometry_json(s.final_target);
    j["element_errors_final_half"] = {{"a_m", stats_json(s.a)},
                                      {"e", stats_json(s.e)},
                                      {"i_rad", stats_json(s.i)},
                                      {"raan_rad", stats_json(s.raan)},
                                      {"arg_periapsis_rad", stats_json(s.arg_periapsis)},
                                      {"radial_m", stats_json(s.radial)}};
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : s.events) events.push_back({{"t_s", e.t}, {"rule", e.rule}, {"description", e.description}});
    j["events"] = events;
    j["warnings"] = s.warnings;
    return j.dump(indent);
}

}  // namespace pathkeep
