#include "pathkeep/frames.hpp"

#include <algorithm>

namespace pathkeep {

std::string to_string(Frame frame) { return frame == Frame::Inertial ? "inertial" : "body-fixed"; }

Frame parse_frame(std::string_view tag) {
    if (tag == "inertial") return Frame::Inertial;
    if (tag == "body-fixed" || tag == "body_fixed" || tag == "body") return Frame::BodyFixed;
    throw Error("unknown frame '" + std::string(tag) + "' (expected inertial or body-fixed)");
}

void require_same_frame(const StateVector& a, const StateVector& b) {
    if (a.frame != b.frame) {
        throw FrameMismatchError("cannot combine " + to_string(a.frame) + " and " + to_string(b.frame) + " states");
    }
}

std::pair<Vec3, Vec3> state_difference(const StateVector& a, const StateVector& b) {
    require_same_frame(a, b);
    return {a.r - b.r, a.v - b.v};
}

Mat3 RtnBasis::to_rtn_matrix() const {
    Mat3 m;
    m.row(0) = r_hat.transpose();
    m.row(1) = theta_hat.transpose();
    m.row(2) = h_hat.transpose();
    return m;
}

RtnBasis rtn_basis(const Vec3& r, const Vec3& v) {
    const double rn = r.norm();
    if (!(rn > 0.0)) throw DegenerateStateError("RTN basis undefined at zero radius");
    const Vec3 h = r.cross(v);
    const double hn = h.norm();
    if (!(hn > 1e-14 * rn * v.norm())) {
        throw DegenerateStateError("RTN basis undefined: velocity parallel to position");
    }
    RtnBasis b;
    b.r_hat = r / rn;
    b.h_hat = h / hn;
    b.theta_hat = b.h_hat.cross(b.r_hat);
    return b;
}

Vec3 to_rtn(const Vec3& a, const RtnBasis& basis) {
    return {a.dot(basis.r_hat), a.dot(basis.theta_hat), a.dot(basis.h_hat)};
}

Vec3 from_rtn(const Vec3& a_rtn, const RtnBasis& basis) {
    return a_rtn.x() * basis.r_hat + a_rtn.y() * basis.theta_hat + a_rtn.z() * basis.h_hat;
}

Vec3 hd_from_angles(double inclination, double raan) {
    const double si = std::sin(inclination);
    return {si * std::sin(raan), -si * std::cos(raan), std::cos(inclination)};
}

Vec3 angular_momentum(const StateVector& s) { return s.r.cross(s.v); }

double h_from_elements(double mu, double a, double e) {
    const double p = a * (1.0 - e * e);
    if (e == 1.0) return 0.0;
    if (!(p > 0.0) || !(mu > 0.0)) {
        throw Error("invalid semi-major axis / eccentricity combination (a(1-e^2) must be positive)");
    }
    return std::sqrt(mu * p);
}

Vec3 eccentricity_vector(const Vec3& r, const Vec3& v, double mu) {
    const double rn = r.norm();
    if (!(rn > 0.0)) throw DegenerateStateError("eccentricity vector undefined at zero radius");
    return v.cross(r.cross(v)) / mu - r / rn;
}

Vec3 eccentricity_vector(double e, double inclination, double raan, double arg_periapsis) {
    const double cO = std::cos(raan), sO = std::sin(raan);
    const double cw = std::cos(arg_periapsis), sw = std::sin(arg_periapsis);
    const double ci = std::cos(inclination), si = std::sin(inclination);
    return e * Vec3(cO * cw - sO * sw * ci, sO * cw + cO * sw * ci, sw * si);
}

void OrbitGeometry::validate() const {
    auto fail = [](const std::string& what) { throw Error("invalid orbit geometry: " + what); };
    if (!std::isfinite(a) || !std::isfinite(e) || !std::isfinite(i) || !std::isfinite(raan) ||
        !std::isfinite(arg_periapsis)) {
        fail("non-finite element");
    }
    if (e < 0.0) fail("negative eccentricity");
    if (e == 1.0) fail("parabolic orbits are not supported");
    if (e < 1.0 && !(a > 0.0)) fail("bound orbit needs a > 0");
    if (e > 1.0 && !(a < 0.0)) fail("hyperbolic orbit needs a < 0");
    if (i < 0.0 || i > kPi) fail("inclination outside [0, pi]");
    if (raan < 0.0 || raan >= kTwoPi) fail("node longitude outside [0, 2pi)");
    if (arg_periapsis < 0.0 || arg_periapsis >= kTwoPi) fail("argument of periapsis outside [0, 2pi)");
    if (!(periapsis_radius() > 0.0)) fail("periapsis radius must be positive");
}

OrbitGeometry OrbitGeometry::from_periapsis(double rp, double e, double i, double raan, double arg_periapsis) {
    if (e == 1.0) throw Error("parabolic orbits are not supported");
    OrbitGeometry g{rp / (1.0 - e), e, i, wrap_two_pi(raan), wrap_two_pi(arg_periapsis)};
    g.validate();
    return g;
}

GeometryWithAnomaly geometry_from_state(const Vec3& r, const Vec3& v, double mu) {
    const double rn = r.norm();
    if (!(rn > 0.0)) throw DegenerateStateError("orbit geometry undefined at zero radius");
    const Vec3 h = r.cross(v);
    const double hn = h.norm();
    if (!(hn > 0.0)) throw DegenerateStateError("orbit geometry undefined for rectilinear motion");
    const Vec3 h_hat = h / hn;
    const Vec3 r_hat = r / rn;
    const Vec3 evec = v.cross(h) / mu - r_hat;
    const double e = evec.norm();

    GeometryWithAnomaly out;
    OrbitGeometry& g = out.geometry;
    g.e = e;
    g.a = hn * hn / mu / (1.0 - e * e);
    g.i = std::acos(std::clamp(h_hat.z(), -1.0, 1.0));
    const double sin_i = std::hypot(h_hat.x(), h_hat.y());
    g.raan = sin_i > kCircularTolerance ? wrap_two_pi(std::atan2(h_hat.x(), -h_hat.y())) : 0.0;

    const Vec3 node(std::cos(g.raan), std::sin(g.raan), 0.0);
    const Vec3 node_perp = h_hat.cross(node);
    if (e > kCircularTolerance) {
        g.arg_periapsis = wrap_two_pi(std::atan2(evec.dot(node_perp), evec.dot(node)));
        const Vec3 e_hat = evec / e;
        out.true_anomaly = std::atan2(h_hat.dot(e_hat.cross(r_hat)), e_hat.dot(r_hat));
    } else {
        g.arg_periapsis = 0.0;
        out.true_anomaly = std::atan2(r_hat.dot(node_perp), r_hat.dot(node));
    }
    return out;
}

StateVector state_from_geometry(const OrbitGeometry& g, double true_anomaly, double mu, Frame frame, double t) {
    g.validate();
    const double p = g.semi_latus_rectum();
    const double denom = 1.0 + g.e * std::cos(true_anomaly);
    if (!(denom > 0.0)) throw Error("true anomaly lies beyond the hyperbolic asymptote");
    const Vec3 P = eccentricity_vector(1.0, g.i, g.raan, g.arg_periapsis);
    const Vec3 Q = hd_from_angles(g.i, g.raan).cross(P);
    const double ca = std::cos(true_anomaly), sa = std::sin(true_anomaly);
    StateVector s;
    s.r = p / denom * (ca * P + sa * Q);
    s.v = std::sqrt(mu / p) * (-sa * P + (g.e + ca) * Q);
    s.t = t;
    s.frame = frame;
    return s;
}

ElementErrors element_errors(const OrbitGeometry& actual, const OrbitGeometry& target) {
    ElementErrors err;
    err.a = actual.a - target.a;
    err.e = actual.e - target.e;
    err.i = actual.i - target.i;
    const bool node_defined = std::sin(target.i) > kCircularTolerance;
    const bool periapsis_defined = target.e > kCircularTolerance;
    err.raan = node_defined ? wrap_pi(actual.raan - target.raan) : 0.0;
    err.arg_periapsis = periapsis_defined ? wrap_pi(actual.arg_periapsis - target.arg_periapsis) : 0.0;
    return err;
}

StateVector rotate_frame(const StateVector& s, double spin_rate, RotationDirection direction) {
    const double angle = spin_rate * s.t;
    const Vec3 omega(0.0, 0.0, spin_rate);
    StateVector out = s;
    if (direction == RotationDirection::InertialToBody) {
        if (s.frame != Frame::Inertial) throw FrameMismatchError("expected an inertial state");
        const Mat3 rot = rotation_z(-angle);
        out.r = rot * s.r;
        out.v = rot * (s.v - omega.cross(s.r));
        out.frame = Frame::BodyFixed;
    } else {
        if (s.frame != Frame::BodyFixed) throw FrameMismatchError("expected a body-fixed state");
        const Mat3 rot = rotation_z(angle);
        out.r = rot * s.r;
        out.v = rot * (s.v + omega.cross(s.r));
        out.frame = Frame::Inertial;
    }
    return out;
}

}  // namespace pathkeep
