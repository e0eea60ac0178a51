#include "pathkeep/scenario.hpp"

#include <json.hpp>

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace pathkeep {

using nlohmann::json;

std::string to_string(GravityModel m) {
    switch (m) {
        case GravityModel::PointMass: return "point-mass";
        case GravityModel::Polyhedron: return "polyhedron";
        case GravityModel::Harmonics: return "harmonics";
    }
    return "?";
}

GravityModel parse_gravity_model(std::string_view tag) {
    if (tag == "point-mass") return GravityModel::PointMass;
    if (tag == "polyhedron") return GravityModel::Polyhedron;
    if (tag == "harmonics") return GravityModel::Harmonics;
    throw Error("unknown gravity model '" + std::string(tag) + "' (expected point-mass, polyhedron or harmonics)");
}

void MonteCarloSpec::validate() const {
    if (samples < 1) throw ScenarioError("monte_carlo.samples", "must be at least 1");
    if (!(position_sigma >= 0.0)) throw ScenarioError("monte_carlo.position_sigma", "must be non-negative");
    if (!(velocity_sigma >= 0.0)) throw ScenarioError("monte_carlo.velocity_sigma", "must be non-negative");
    if (threads < 0) throw ScenarioError("monte_carlo.threads", "must be non-negative");
}

namespace {

struct UnitEntry {
    const char* name;
    double factor;
};

const std::vector<UnitEntry>& units_for(Dimension dim) {
    static const std::vector<UnitEntry> none{};
    static const std::vector<UnitEntry> length{{"m", 1.0}, {"cm", 1e-2}, {"km", 1e3}, {"AU", kAstronomicalUnit}};
    static const std::vector<UnitEntry> angle{{"rad", 1.0}, {"deg", kPi / 180.0}};
    static const std::vector<UnitEntry> time{{"s", 1.0}, {"min", 60.0}, {"h", 3600.0}, {"d", 86400.0},
                                             {"day", 86400.0}, {"days", 86400.0}};
    static const std::vector<UnitEntry> speed{{"m/s", 1.0}, {"cm/s", 1e-2}, {"mm/s", 1e-3}, {"km/s", 1e3}};
    static const std::vector<UnitEntry> accel{{"m/s2", 1.0},   {"m/s^2", 1.0},  {"mm/s2", 1e-3},
                                              {"mm/s^2", 1e-3}, {"km/s2", 1e3}, {"km/s^2", 1e3}};
    static const std::vector<UnitEntry> mass{{"kg", 1.0}};
    static const std::vector<UnitEntry> rate{{"rad/s", 1.0}, {"deg/s", kPi / 180.0}, {"deg/h", kPi / 180.0 / 3600.0}};
    switch (dim) {
        case Dimension::None: return none;
        case Dimension::Length: return length;
        case Dimension::Angle: return angle;
        case Dimension::Time: return time;
        case Dimension::Speed: return speed;
        case Dimension::Accel: return accel;
        case Dimension::Mass: return mass;
        case Dimension::Rate: return rate;
    }
    return none;
}

}  // namespace

double parse_quantity(std::string_view text, Dimension dim) {
    const std::string s(text);
    const char* begin = s.c_str();
    char* end = nullptr;
    errno = 0;
    const double value = std::strtod(begin, &end);
    if (end == begin || errno == ERANGE) throw Error("'" + s + "' is not a number with a unit");
    std::string unit(end);
    unit.erase(0, unit.find_first_not_of(" \t"));
    unit.erase(unit.find_last_not_of(" \t") + 1);
    if (unit.empty()) return value;
    for (const auto& u : units_for(dim)) {
        if (unit == u.name) return value * u.factor;
    }
    std::string allowed;
    for (const auto& u : units_for(dim)) allowed += (allowed.empty() ? "" : ", ") + std::string(u.name);
    throw Error("unit '" + unit + "' not accepted here" + (allowed.empty() ? "" : " (use " + allowed + ")"));
}

namespace {

/// Strict reader: every key must be consumed, errors carry the field path.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ScenarioError(path_, "expected an object");
    }

    ~Reader() = default;

    bool has(const std::string& key) const { return j_.contains(key); }

    std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json& raw(const std::string& key) {
        used_.insert(key);
        return j_.at(key);
    }

    Reader object(const std::string& key) { return Reader(raw(key), child_path(key)); }

    double quantity(const std::string& key, Dimension dim, double fallback) {
        if (!has(key)) return fallback;
        return quantity_value(raw(key), dim, child_path(key));
    }

    static double quantity_value(const json& v, Dimension dim, const std::string& path) {
        if (v.is_number()) return v.get<double>();
        if (v.is_string()) {
            try {
                return parse_quantity(v.get<std::string>(), dim);
            } catch (const Error& e) {
                throw ScenarioError(path, e.what());
            }
        }
        throw ScenarioError(path, "expected a number or a quantity string");
    }

    Vec3 vec3(const std::string& key, Dimension dim, const Vec3& fallback) {
        if (!has(key)) return fallback;
        return vec3_value(raw(key), dim, child_path(key));
    }

    static Vec3 vec3_value(const json& v, Dimension dim, const std::string& path) {
        if (v.is_number() || v.is_string()) {
            const double x = quantity_value(v, dim, path);
            return Vec3::Constant(x);
        }
        if (!v.is_array() || v.size() != 3) throw ScenarioError(path, "expected three components");
        Vec3 out;
        for (int k = 0; k < 3; ++k) out[k] = quantity_value(v[k], dim, path + "[" + std::to_string(k) + "]");
        return out;
    }

    std::string string(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_string()) throw ScenarioError(child_path(key), "expected a string");
        return v.get<std::string>();
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_boolean()) throw ScenarioError(child_path(key), "expected true or false");
        return v.get<bool>();
    }

    long integer(const std::string& key, long fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_number_integer() && !v.is_number_unsigned()) throw ScenarioError(child_path(key), "expected an integer");
        return v.get<long>();
    }

    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_number_unsigned()) throw ScenarioError(child_path(key), "expected a non-negative integer");
        return v.get<std::uint64_t>();
    }

    template <class Parse>
    auto parsed(const std::string& key, Parse&& parse, decltype(parse(std::string_view{})) fallback) {
        if (!has(key)) return fallback;
        const std::string text = string(key, "");
        try {
            return parse(text);
        } catch (const ScenarioError&) {
            throw;
        } catch (const Error& e) {
            throw ScenarioError(child_path(key), e.what());
        }
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!used_.count(it.key())) throw ScenarioError(child_path(it.key()), "unknown field");
        }
    }

    const std::string& path() const { return path_; }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

std::string resolve_path(const std::string& file, const std::string& base_dir) {
    if (file.empty() || base_dir.empty()) return file;
    std::filesystem::path p(file);
    if (p.is_absolute()) return file;
    return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

OrbitGeometry read_geometry(Reader r) {
    OrbitGeometry g;
    if (r.has("periapsis")) {
        if (r.has("a")) throw ScenarioError(r.child_path("a"), "give either a or periapsis, not both");
        const double rp = r.quantity("periapsis", Dimension::Length, 0.0);
        const double e = r.quantity("e", Dimension::None, 0.0);
        const double i = r.quantity("i", Dimension::Angle, 0.0);
        const double raan = r.quantity("raan", Dimension::Angle, 0.0);
        const double aop = r.quantity("arg_periapsis", Dimension::Angle, 0.0);
        try {
            g = OrbitGeometry::from_periapsis(rp, e, i, raan, aop);
        } catch (const Error& err) {
            throw ScenarioError(r.path(), err.what());
        }
    } else {
        if (!r.has("a")) throw ScenarioError(r.child_path("a"), "required");
        g.a = r.quantity("a", Dimension::Length, 0.0);
        g.e = r.quantity("e", Dimension::None, 0.0);
        g.i = r.quantity("i", Dimension::Angle, 0.0);
        g.raan = r.quantity("raan", Dimension::Angle, 0.0);
        g.arg_periapsis = r.quantity("arg_periapsis", Dimension::Angle, 0.0);
    }
    r.finish();
    try {
        g.validate();
    } catch (const Error& err) {
        throw ScenarioError(r.path(), err.what());
    }
    return g;
}

json geometry_to_json(const OrbitGeometry& g) {
    return {{"a", g.a}, {"e", g.e}, {"i", g.i}, {"raan", g.raan}, {"arg_periapsis", g.arg_periapsis}};
}

json vec_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

BodyConfig read_body(Reader r, const std::string& base_dir) {
    BodyConfig b;
    b.name = r.string("name", "");
    if (!r.has("mass")) throw ScenarioError(r.child_path("mass"), "required");
    b.mass = r.quantity("mass", Dimension::Mass, 0.0);
    b.spin_rate = r.quantity("spin_rate", Dimension::Rate, 0.0);
    b.G = r.quantity("G", Dimension::None, kDefaultG);
    b.gravity = r.parsed("gravity", parse_gravity_model, GravityModel::PointMass);
    if (r.has("shape")) {
        Reader s = r.object("shape");
        b.shape_file = resolve_path(s.string("file", ""), base_dir);
        b.shape_format = s.parsed("format", parse_shape_format, ShapeFormat::Obj);
        b.shape_scale = s.quantity("scale", Dimension::None, 1.0);
        b.ellipsoid = s.vec3("ellipsoid", Dimension::Length, Vec3::Zero());
        b.ellipsoid_subdivisions = static_cast<int>(s.integer("subdivisions", 3));
        s.finish();
    }
    if (r.has("harmonics")) {
        Reader h = r.object("harmonics");
        b.harmonics_file = resolve_path(h.string("file", ""), base_dir);
        b.harmonics_normalized = h.boolean("normalized", false);
        b.harmonics_degree = static_cast<int>(h.integer("degree", 5));
        b.ref_radius = h.quantity("ref_radius", Dimension::Length, 0.0);
        h.finish();
    }
    r.finish();
    return b;
}

json body_to_json(const BodyConfig& b) {
    json j{{"name", b.name}, {"mass", b.mass}, {"spin_rate", b.spin_rate}, {"G", b.G},
           {"gravity", to_string(b.gravity)}};
    json shape{{"format", to_string(b.shape_format)}, {"scale", b.shape_scale},
               {"subdivisions", b.ellipsoid_subdivisions}, {"ellipsoid", vec_to_json(b.ellipsoid)}};
    if (!b.shape_file.empty()) shape["file"] = b.shape_file;
    j["shape"] = shape;
    json harm{{"normalized", b.harmonics_normalized}, {"degree", b.harmonics_degree}, {"ref_radius", b.ref_radius}};
    if (!b.harmonics_file.empty()) harm["file"] = b.harmonics_file;
    j["harmonics"] = harm;
    return j;
}

SrpConfig read_srp(Reader r) {
    SrpConfig s;
    s.enabled = r.boolean("enabled", true);
    s.reflectivity = r.quantity("reflectivity", Dimension::None, s.reflectivity);
    s.mass_to_area = r.quantity("mass_to_area", Dimension::None, s.mass_to_area);
    s.sun_distance = r.quantity("sun_distance", Dimension::Length, s.sun_distance);
    s.p0 = r.quantity("p0", Dimension::None, s.p0);
    r.finish();
    return s;
}

PwpfParams read_pwpf(Reader r) {
    PwpfParams p;
    p.k_lpf = r.quantity("k_lpf", Dimension::None, p.k_lpf);
    p.omega_c = r.quantity("omega_c", Dimension::None, p.omega_c);
    p.delta_on = r.quantity("delta_on", Dimension::None, p.delta_on);
    p.delta_off = r.quantity("delta_off", Dimension::None, p.delta_off);
    p.u_m = r.quantity("u_m", Dimension::Accel, p.u_m);
    r.finish();
    return p;
}

ControllerConfig read_controller(Reader r) {
    ControllerConfig c;
    if (r.has("lambda")) {
        c.lambda_r = c.lambda_n = r.quantity("lambda", Dimension::None, 2.0);
    }
    c.lambda_r = r.quantity("lambda_r", Dimension::None, c.lambda_r);
    c.lambda_n = r.quantity("lambda_n", Dimension::None, c.lambda_n);
    c.disturbance_bound = r.vec3("disturbance", Dimension::Accel, c.disturbance_bound);
    c.n_phi = r.quantity("n_phi", Dimension::None, c.n_phi);
    c.law = r.parsed(
        "law",
        [](std::string_view t) {
            if (t == "saturation") return SwitchingLaw::Saturation;
            if (t == "sign") return SwitchingLaw::Sign;
            throw Error("expected saturation or sign");
        },
        SwitchingLaw::Saturation);
    if (r.has("hysteresis")) {
        Reader h = r.object("hysteresis");
        c.hysteresis.enabled = h.boolean("enabled", true);
        c.hysteresis.s_plus = h.vec3("s_plus", Dimension::None, Vec3::Zero());
        if (h.has("s_minus")) c.hysteresis.s_minus = h.vec3("s_minus", Dimension::None, Vec3::Zero());
        c.hysteresis.s_minus_phi_fraction = h.quantity("s_minus_phi_fraction", Dimension::None, 1.0 / 3.0);
        h.finish();
    }
    if (r.has("u_max") && !r.raw("u_max").is_null()) c.u_max = r.quantity("u_max", Dimension::Accel, 0.0);
    if (r.has("pwpf") && !r.raw("pwpf").is_null()) c.pwpf = read_pwpf(r.object("pwpf"));
    r.finish();
    return c;
}

json controller_to_json(const ControllerConfig& c) {
    json j{{"lambda_r", c.lambda_r},
           {"lambda_n", c.lambda_n},
           {"disturbance", vec_to_json(c.disturbance_bound)},
           {"n_phi", c.n_phi},
           {"law", c.law == SwitchingLaw::Saturation ? "saturation" : "sign"}};
    json h{{"enabled", c.hysteresis.enabled},
           {"s_plus", vec_to_json(c.hysteresis.s_plus)},
           {"s_minus_phi_fraction", c.hysteresis.s_minus_phi_fraction}};
    if (c.hysteresis.s_minus) h["s_minus"] = vec_to_json(*c.hysteresis.s_minus);
    j["hysteresis"] = h;
    j["u_max"] = c.u_max ? json(*c.u_max) : json(nullptr);
    if (c.pwpf) {
        j["pwpf"] = {{"k_lpf", c.pwpf->k_lpf},
                     {"omega_c", c.pwpf->omega_c},
                     {"delta_on", c.pwpf->delta_on},
                     {"delta_off", c.pwpf->delta_off},
                     {"u_m", c.pwpf->u_m}};
    } else {
        j["pwpf"] = nullptr;
    }
    return j;
}

EventScript read_events(const json& arr, const std::string& path) {
    if (!arr.is_array()) throw ScenarioError(path, "expected a list of rules");
    EventScript script;
    for (std::size_t k = 0; k < arr.size(); ++k) {
        Reader r(arr[k], path + "[" + std::to_string(k) + "]");
        EventRule rule;
        if (!r.has("trigger")) throw ScenarioError(r.child_path("trigger"), "required");
        rule.kind = r.parsed("trigger", parse_trigger_kind, TriggerKind::TimeAtLeast);
        rule.time = r.quantity("time", Dimension::Time, 0.0);
        rule.threshold = r.quantity("threshold", Dimension::Length, 5.0);
        if (!r.has("target")) throw ScenarioError(r.child_path("target"), "required");
        rule.target = read_geometry(r.object("target"));
        if (r.has("target_negative")) rule.target_negative = read_geometry(r.object("target_negative"));
        rule.align_apoapsis = r.boolean("align_apoapsis", false);
        r.finish();
        if (rule.kind == TriggerKind::SignOfZ && !rule.target_negative) {
            throw ScenarioError(r.child_path("target_negative"), "required for sign-of-z");
        }
        script.rules.push_back(rule);
    }
    return script;
}

json events_to_json(const EventScript& events) {
    json arr = json::array();
    for (const auto& rule : events.rules) {
        json j{{"trigger", to_string(rule.kind)},
               {"time", rule.time},
               {"threshold", rule.threshold},
               {"target", geometry_to_json(rule.target)},
               {"align_apoapsis", rule.align_apoapsis}};
        if (rule.target_negative) j["target_negative"] = geometry_to_json(*rule.target_negative);
        arr.push_back(j);
    }
    return arr;
}

NoiseConfig read_noise(Reader r) {
    NoiseConfig n;
    n.sigma_r = r.quantity("sigma_r", Dimension::Length, 0.0);
    n.sigma_v = r.quantity("sigma_v", Dimension::Speed, 0.0);
    n.thruster_fraction = r.quantity("thruster_fraction", Dimension::None, 0.0);
    n.seed = r.unsigned_integer("seed", 1);
    if (r.has("measurement_period") && !r.raw("measurement_period").is_null()) {
        n.measurement_period = r.quantity("measurement_period", Dimension::Time, 0.0);
    }
    r.finish();
    return n;
}

MonteCarloSpec read_monte_carlo(Reader r) {
    MonteCarloSpec m;
    m.samples = static_cast<int>(r.integer("samples", m.samples));
    m.position_sigma = r.quantity("position_sigma", Dimension::Length, m.position_sigma);
    m.velocity_sigma = r.quantity("velocity_sigma", Dimension::Speed, m.velocity_sigma);
    m.base_seed = r.unsigned_integer("base_seed", m.base_seed);
    m.threads = static_cast<int>(r.integer("threads", m.threads));
    r.finish();
    return m;
}

}  // namespace

void Scenario::validate() const {
    auto wrap = [](const std::string& path, auto&& fn) {
        try {
            fn();
        } catch (const ScenarioError&) {
            throw;
        } catch (const Error& e) {
            throw ScenarioError(path, e.what());
        }
    };
    if (!(body.mass > 0.0)) throw ScenarioError("body.mass", "must be positive");
    if (!(body.G > 0.0)) throw ScenarioError("body.G", "must be positive");
    if (!std::isfinite(body.spin_rate)) throw ScenarioError("body.spin_rate", "must be finite");
    if (body.gravity == GravityModel::Polyhedron && !body.has_shape()) {
        throw ScenarioError("body.shape", "the polyhedron model needs a shape file or ellipsoid axes");
    }
    if (body.gravity == GravityModel::Harmonics && body.harmonics_file.empty() && !body.has_shape()) {
        throw ScenarioError("body.harmonics", "needs a coefficient file or a shape to derive it from");
    }
    if (body.harmonics_degree < 0 || body.harmonics_degree > kMaxHarmonicDegree) {
        throw ScenarioError("body.harmonics.degree", "must lie in [0, " + std::to_string(kMaxHarmonicDegree) + "]");
    }
    if (body.ellipsoid_subdivisions < 0 || body.ellipsoid_subdivisions > 6) {
        throw ScenarioError("body.shape.subdivisions", "must lie in [0, 6]");
    }
    if (!(body.shape_scale > 0.0)) throw ScenarioError("body.shape.scale", "must be positive");
    if (!(body.ref_radius >= 0.0)) throw ScenarioError("body.harmonics.ref_radius", "must be non-negative");
    wrap("srp", [&] { srp.validate(); });
    wrap("target", [&] { target.validate(); });
    wrap("controller", [&] {
        ControllerConfig c = controller;
        c.mu = mu();
        c.validate();
    });
    wrap("noise", [&] { noise.validate(); });
    if (initial.r.has_value() != initial.v.has_value()) {
        throw ScenarioError("initial", "give both r and v, or neither");
    }
    if (!(sim.duration > 0.0)) throw ScenarioError("sim.duration", "must be positive");
    if (!(sim.control_period > 0.0)) throw ScenarioError("sim.control_period", "must be positive");
    if (!(sim.integrator_step >= 0.0) || sim.integrator_step > sim.control_period) {
        throw ScenarioError("sim.integrator_step", "must lie in [0, control_period]");
    }
    if (sim.telemetry_stride < 1) throw ScenarioError("sim.telemetry_stride", "must be at least 1");
    if (!(sim.escape_radius >= 0.0)) throw ScenarioError("sim.escape_radius", "must be non-negative");
    if (monte_carlo) monte_carlo->validate();
}

Scenario scenario_from_json(std::string_view text, const std::string& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ScenarioError("", std::string("malformed JSON: ") + e.what());
    }
    Reader r(j, "");
    Scenario s;
    s.name = r.string("name", "");
    s.description = r.string("description", "");
    if (!r.has("body")) throw ScenarioError("body", "required");
    s.body = read_body(r.object("body"), base_dir);
    if (r.has("srp")) s.srp = read_srp(r.object("srp"));
    s.frame = r.parsed("frame", parse_frame, Frame::Inertial);
    if (!r.has("target")) throw ScenarioError("target", "required");
    s.target = read_geometry(r.object("target"));
    if (r.has("events")) s.events = read_events(r.raw("events"), "events");
    if (r.has("controller")) s.controller = read_controller(r.object("controller"));
    if (r.has("noise")) s.noise = read_noise(r.object("noise"));
    if (r.has("initial")) {
        Reader in = r.object("initial");
        s.initial.true_anomaly = in.quantity("true_anomaly", Dimension::Angle, 0.0);
        if (in.has("r")) s.initial.r = in.vec3("r", Dimension::Length, Vec3::Zero());
        if (in.has("v")) s.initial.v = in.vec3("v", Dimension::Speed, Vec3::Zero());
        in.finish();
    }
    if (r.has("sim")) {
        Reader sim = r.object("sim");
        s.sim.duration = sim.quantity("duration", Dimension::Time, s.sim.duration);
        s.sim.control_period = sim.quantity("control_period", Dimension::Time, s.sim.control_period);
        s.sim.integrator_step = sim.quantity("integrator_step", Dimension::Time, s.sim.integrator_step);
        s.sim.control_enabled = sim.boolean("control_enabled", true);
        s.sim.force_switch_on = sim.boolean("force_switch_on", false);
        s.sim.escape_radius = sim.quantity("escape_radius", Dimension::Length, 0.0);
        s.sim.telemetry_stride = static_cast<int>(sim.integer("telemetry_stride", 1));
        sim.finish();
    }
    if (r.has("monte_carlo") && !r.raw("monte_carlo").is_null()) s.monte_carlo = read_monte_carlo(r.object("monte_carlo"));
    if (r.has("output")) {
        Reader out = r.object("output");
        s.output.directory = out.string("directory", s.output.directory);
        s.output.telemetry = out.boolean("telemetry", true);
        out.finish();
    }
    r.finish();
    s.validate();
    return s;
}

std::string scenario_to_json(const Scenario& s, int indent) {
    json j;
    j["name"] = s.name;
    j["description"] = s.description;
    j["body"] = body_to_json(s.body);
    j["srp"] = {{"enabled", s.srp.enabled},
                {"reflectivity", s.srp.reflectivity},
                {"mass_to_area", s.srp.mass_to_area},
                {"sun_distance", s.srp.sun_distance},
                {"p0", s.srp.p0}};
    j["frame"] = to_string(s.frame);
    j["target"] = geometry_to_json(s.target);
    j["events"] = events_to_json(s.events);
    j["controller"] = controller_to_json(s.controller);
    j["noise"] = {{"sigma_r", s.noise.sigma_r},
                  {"sigma_v", s.noise.sigma_v},
                  {"thruster_fraction", s.noise.thruster_fraction},
                  {"seed", s.noise.seed},
                  {"measurement_period",
                   s.noise.measurement_period ? json(*s.noise.measurement_period) : json(nullptr)}};
    json initial{{"true_anomaly", s.initial.true_anomaly}};
    if (s.initial.r) initial["r"] = vec_to_json(*s.initial.r);
    if (s.initial.v) initial["v"] = vec_to_json(*s.initial.v);
    j["initial"] = initial;
    j["sim"] = {{"duration", s.sim.duration},
                {"control_period", s.sim.control_period},
                {"integrator_step", s.sim.integrator_step},
                {"control_enabled", s.sim.control_enabled},
                {"force_switch_on", s.sim.force_switch_on},
                {"escape_radius", s.sim.escape_radius},
                {"telemetry_stride", s.sim.telemetry_stride}};
    if (s.monte_carlo) {
        j["monte_carlo"] = {{"samples", s.monte_carlo->samples},
                            {"position_sigma", s.monte_carlo->position_sigma},
                            {"velocity_sigma", s.monte_carlo->velocity_sigma},
                            {"base_seed", s.monte_carlo->base_seed},
                            {"threads", s.monte_carlo->threads}};
    } else {
        j["monte_carlo"] = nullptr;
    }
    j["output"] = {{"directory", s.output.directory}, {"telemetry", s.output.telemetry}};
    return j.dump(indent);
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("", "cannot open scenario file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const auto base = std::filesystem::path(path).parent_path().string();
    return scenario_from_json(buf.str(), base);
}

Scenario apply_overrides(const Scenario& s, const std::vector<std::string>& overrides) {
    if (overrides.empty()) return s;
    json j = json::parse(scenario_to_json(s, -1));
    for (const auto& item : overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw ScenarioError("", "override '" + item + "' is not key=value");
        const std::string key = item.substr(0, eq);
        const std::string text = item.substr(eq + 1);
        json value;
        try {
            value = json::parse(text);
        } catch (const json::parse_error&) {
            value = text;
        }
        std::string pointer = "/" + key;
        for (auto& c : pointer) {
            if (c == '.') c = '/';
        }
        json::json_pointer ptr(pointer);
        if (!j.contains(ptr.parent_pointer())) throw ScenarioError(key, "no such section");
        j[ptr] = value;
    }
    return scenario_from_json(j.dump());
}

// ---------------------------------------------------------------------------
// Presets

namespace {

constexpr double kItokawaMass = 3.51e10;
constexpr double kItokawaSpin = 1.4386e-4;
constexpr double k67PMass = 9.982e12;
constexpr double k67PSpin = 1.4070e-4;
constexpr double kBennuMass = 7.329e10;
constexpr double kBennuSpin = 4.0684e-4;

BodyConfig itokawa_body() {
    BodyConfig b;
    b.name = "Itokawa";
    b.mass = kItokawaMass;
    b.spin_rate = kItokawaSpin;
    b.gravity = GravityModel::Harmonics;
    b.ellipsoid = Vec3(267.5, 147.0, 104.5);
    b.harmonics_degree = 5;
    return b;
}

BodyConfig comet_body() {
    BodyConfig b;
    b.name = "67P";
    b.mass = k67PMass;
    b.spin_rate = k67PSpin;
    b.gravity = GravityModel::Polyhedron;
    b.ellipsoid = Vec3(2050.0, 1300.0, 1050.0);
    return b;
}

BodyConfig bennu_body() {
    BodyConfig b;
    b.name = "Bennu";
    b.mass = kBennuMass;
    b.spin_rate = kBennuSpin;
    b.gravity = GravityModel::Harmonics;
    b.ellipsoid = Vec3(282.5, 267.5, 254.0);
    b.harmonics_degree = 5;
    return b;
}

SrpConfig srp_at(double au) {
    SrpConfig s;
    s.reflectivity = 1.0;
    s.mass_to_area = 20.0;
    s.sun_distance = au * kAstronomicalUnit;
    return s;
}

// Angular momentum along the body-sun line.
OrbitGeometry sun_terminator(double a, double e = 0.0, double arg_periapsis = 0.0) {
    return {a, e, deg2rad(90.0), deg2rad(90.0), arg_periapsis};
}

ControllerConfig table_controller(double D, double n_phi, double lambda) {
    ControllerConfig c;
    c.disturbance_bound = Vec3::Constant(D);
    c.n_phi = n_phi;
    c.lambda_r = c.lambda_n = lambda;
    return c;
}

void with_hysteresis(ControllerConfig& c, const Vec3& s_plus) {
    c.hysteresis.enabled = true;
    c.hysteresis.s_plus = s_plus;
    c.hysteresis.s_minus.reset();
    c.hysteresis.s_minus_phi_fraction = 1.0 / 3.0;
}

Scenario bennu_base(const std::string& name) {
    Scenario s;
    s.name = name;
    s.body = bennu_body();
    s.srp = srp_at(0.8969);
    s.target = sun_terminator(500.0);
    s.controller = table_controller(1e-2, 5.0, 2.0);
    with_hysteresis(s.controller, Vec3(0.1, 2.0, 0.15));
    s.controller.u_max = 1e-3;
    s.noise.sigma_r = 0.8;
    s.noise.sigma_v = 1e-4;
    s.noise.thruster_fraction = 0.03;
    s.sim.duration = 86400.0;
    return s;
}

Scenario make_preset(std::string_view name) {
    if (name == "Itokawa") {
        Scenario s;
        s.name = "Itokawa";
        s.description = "24 h orbit keeping of an eccentric sun-terminator orbit, inertial frame";
        s.body = itokawa_body();
        s.srp = srp_at(1.695);
        s.target = {350.0, 0.1, deg2rad(90.0), deg2rad(90.0), deg2rad(90.0)};
        s.controller = table_controller(1e-4, 5.0, 2.0);
        return s;
    }
    if (name == "67P") {
        Scenario s;
        s.name = "67P";
        s.description = "artificial orbit imposed in the body-fixed frame (moving path following)";
        s.body = comet_body();
        s.srp = srp_at(1.243);
        s.frame = Frame::BodyFixed;
        s.target = {2100.0, 0.15, deg2rad(110.0), deg2rad(50.0), 0.0};
        s.controller = table_controller(1e-2, 5.0, 2.0);
        return s;
    }
    if (name == "Bennu-2h") {
        Scenario s = bennu_base("Bennu-2h");
        s.description = "30 days on a 500 m circular sun-terminator orbit, measurements every 2 h";
        s.noise.measurement_period = 7200.0;
        s.sim.duration = 30.0 * 86400.0;
        s.sim.telemetry_stride = 15;
        return s;
    }
    if (name == "Bennu-tight") {
        Scenario s = bennu_base("Bennu-tight");
        s.description = "24 h on a 500 m circular orbit with tight switch thresholds";
        with_hysteresis(s.controller, Vec3(0.02, 0.7, 0.05));
        return s;
    }
    if (name == "Bennu-loose") {
        Scenario s = bennu_base("Bennu-loose");
        s.description = "24 h on a 500 m circular orbit with loose switch thresholds";
        return s;
    }
    if (name == "Bennu-PWPF") {
        Scenario s = bennu_base("Bennu-PWPF");
        s.description = "24 h on a 500 m circular orbit through a pulse modulator";
        s.controller.hysteresis = HysteresisConfig{};
        s.controller.pwpf = PwpfParams{};
        return s;
    }
    if (name == "Bennu-hyperbolic") {
        Scenario s = bennu_base("Bennu-hyperbolic");
        s.description = "circular 1000 m orbit above the equator patched to a hyperbola below it";
        s.target = sun_terminator(1000.0);
        EventRule rule;
        rule.kind = TriggerKind::SignOfZ;
        rule.target = s.target;
        rule.target_negative = OrbitGeometry::from_periapsis(400.0, 1.5, deg2rad(40.0), deg2rad(90.0), deg2rad(270.0));
        s.events.rules.push_back(rule);
        s.sim.duration = 30.0 * 3600.0;
        return s;
    }
    if (name == "Bennu-Hohmann") {
        Scenario s = bennu_base("Bennu-Hohmann");
        s.description = "600 m circle, transfer ellipse after 15 h, 350 m circle from its periapsis";
        s.target = sun_terminator(600.0);
        EventRule depart;
        depart.kind = TriggerKind::TimeAtLeast;
        depart.time = 15.0 * 3600.0;
        depart.target = sun_terminator(475.0, 0.2632);
        depart.align_apoapsis = true;
        EventRule arrive;
        arrive.kind = TriggerKind::PeriapsisProximity;
        arrive.threshold = 5.0;
        arrive.target = sun_terminator(350.0);
        s.events.rules = {depart, arrive};
        s.sim.duration = 30.0 * 3600.0;
        return s;
    }
    if (name == "Bennu-Monte Carlo") {
        Scenario s = bennu_base("Bennu-Monte Carlo");
        s.description = "insertion dispersion study on a 450 m circular orbit";
        s.target = {450.0, 0.0, deg2rad(45.0), deg2rad(320.0), 0.0};
        s.monte_carlo = MonteCarloSpec{};
        s.sim.telemetry_stride = 15;
        return s;
    }
    if (name == "Itokawa-parametric") {
        Scenario s;
        s.name = "Itokawa-parametric";
        s.description = "500 m circular sun-terminator orbit entered from 600 m over the north pole";
        s.body = itokawa_body();
        s.srp = srp_at(1.695);
        s.target = sun_terminator(500.0);
        s.controller = table_controller(1e-4, 5.0, 2.0);
        const double vc = std::sqrt(kDefaultG * kItokawaMass / 600.0);
        s.initial.r = Vec3(0.0, 0.0, 600.0);
        s.initial.v = Vec3(0.0, -vc, 0.0);
        return s;
    }
    throw ScenarioError("", "unknown preset '" + std::string(name) + "'");
}

}  // namespace

std::vector<std::string> preset_names() {
    return {"Itokawa",     "67P",        "Bennu-2h",         "Bennu-tight",   "Bennu-loose",
            "Bennu-PWPF", "Bennu-hyperbolic", "Bennu-Hohmann", "Bennu-Monte Carlo"};
}

std::vector<std::string> extra_preset_names() { return {"Itokawa-parametric"}; }

bool is_preset(std::string_view name) {
    for (const auto& list : {preset_names(), extra_preset_names()}) {
        for (const auto& n : list) {
            if (n == name) return true;
        }
    }
    return false;
}

Scenario preset(std::string_view name) {
    Scenario s = make_preset(name);
    s.validate();
    return s;
}

Scenario resolve_scenario(const std::string& name_or_path) {
    if (is_preset(name_or_path)) return preset(name_or_path);
    if (std::filesystem::exists(name_or_path)) return load_scenario(name_or_path);
    throw ScenarioError("", "'" + name_or_path + "' is neither a preset nor a scenario file");
}

// ---------------------------------------------------------------------------
// Building and running

StateVector initial_state(const Scenario& s) {
    if (s.initial.r && s.initial.v) return StateVector{*s.initial.r, *s.initial.v, 0.0, s.frame};
    return state_from_geometry(s.target, s.initial.true_anomaly, s.mu(), s.frame, 0.0);
}

BuiltScenario build_scenario(const Scenario& s) {
    s.validate();
    BuiltScenario built;
    built.scenario = s;
    const BodyConfig& b = s.body;
    const double mu = s.mu();

    if (b.has_shape()) {
        PolyhedronShape raw = [&] {
            if (!b.shape_file.empty()) {
                if (!std::filesystem::exists(b.shape_file)) {
                    throw ScenarioError("body.shape.file", "file not found: " + b.shape_file);
                }
                return load_shape_file(b.shape_file, b.shape_format, b.shape_scale);
            }
            return make_ellipsoid(b.ellipsoid.x(), b.ellipsoid.y(), b.ellipsoid.z(), b.ellipsoid_subdivisions);
        }();
        const double density = b.mass / signed_volume(raw);
        built.shape = std::make_shared<const PolyhedronShape>(normalize_to_body_frame(raw, density));
    }
    const double density = built.shape ? b.mass / signed_volume(*built.shape) : 0.0;

    Environment env;
    env.spin_rate = b.spin_rate;
    env.srp = s.srp;
    env.frame = s.frame;
    env.impact_shape = built.shape;
    switch (b.gravity) {
        case GravityModel::PointMass: env.field = GravityField::point_mass(mu); break;
        case GravityModel::Polyhedron: env.field = GravityField::polyhedron(built.shape, density, b.G); break;
        case GravityModel::Harmonics: {
            if (!b.harmonics_file.empty()) {
                if (!std::filesystem::exists(b.harmonics_file)) {
                    throw ScenarioError("body.harmonics.file", "file not found: " + b.harmonics_file);
                }
                const double ref = b.ref_radius > 0.0 ? b.ref_radius
                                                      : (built.shape ? built.shape->circumscribing_radius() : 0.0);
                if (!(ref > 0.0)) throw ScenarioError("body.harmonics.ref_radius", "required without a shape");
                HarmonicsModel m = load_harmonics_file(b.harmonics_file, mu, ref, b.harmonics_normalized);
                if (m.degree > b.harmonics_degree) m = m.truncated(b.harmonics_degree);
                env.field = GravityField::harmonics(std::move(m));
            } else {
                const double ref = b.ref_radius > 0.0 ? b.ref_radius : built.shape->circumscribing_radius();
                env.field = GravityField::harmonics(
                    harmonics_from_polyhedron(*built.shape, density, b.harmonics_degree, ref, b.G));
            }
            break;
        }
    }

    SimulationConfig& cfg = built.config;
    cfg.env = env;
    cfg.controller = s.controller;
    cfg.controller.mu = mu;
    cfg.target = s.target;
    cfg.events = s.events;
    cfg.noise = s.noise;
    cfg.initial = initial_state(s);
    cfg.duration = s.sim.duration;
    cfg.control_period = s.sim.control_period;
    cfg.integrator_step = s.sim.integrator_step;
    cfg.control_enabled = s.sim.control_enabled;
    cfg.force_switch_on = s.sim.force_switch_on;
    cfg.escape_radius = s.sim.escape_radius;
    cfg.telemetry_stride = s.sim.telemetry_stride;
    cfg.validate();
    return built;
}

RunResult run_scenario(const BuiltScenario& built, bool keep_telemetry) {
    RunResult out;
    TelemetrySink sink;
    if (keep_telemetry) sink = [&](const TelemetryRecord& rec) { out.telemetry.push_back(rec); };
    out.summary = run_closed_loop(built.config, sink);
    return out;
}

}  // namespace pathkeep
