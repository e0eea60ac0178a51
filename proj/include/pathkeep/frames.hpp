#pragma once

#include "pathkeep/types.hpp"

#include <cmath>
#include <string>
#include <string_view>
#include <utility>

namespace pathkeep {

enum class Frame { Inertial, BodyFixed };

std::string to_string(Frame frame);
Frame parse_frame(std::string_view tag);

/// Raised when quantities tagged with different frames are combined.
class FrameMismatchError : public Error {
public:
    using Error::Error;
};

/// Cartesian position/velocity at time t, tagged with its frame.
struct StateVector {
    Vec3 r = Vec3::Zero();  // m
    Vec3 v = Vec3::Zero();  // m/s
    double t = 0.0;         // s
    Frame frame = Frame::Inertial;

    bool is_finite() const { return r.allFinite() && v.allFinite() && std::isfinite(t); }
};

/// Throws FrameMismatchError unless both states share a frame.
void require_same_frame(const StateVector& a, const StateVector& b);

/// Position and velocity differences a - b. Frames must match.
std::pair<Vec3, Vec3> state_difference(const StateVector& a, const StateVector& b);

/// Radial / transverse / normal unit vectors of a state.
struct RtnBasis {
    Vec3 r_hat = Vec3::UnitX();
    Vec3 theta_hat = Vec3::UnitY();
    Vec3 h_hat = Vec3::UnitZ();

    /// Rows are r_hat, theta_hat, h_hat: maps frame vectors to RTN.
    Mat3 to_rtn_matrix() const;
};

RtnBasis rtn_basis(const Vec3& r, const Vec3& v);
inline RtnBasis rtn_basis(const StateVector& s) { return rtn_basis(s.r, s.v); }

Vec3 to_rtn(const Vec3& a, const RtnBasis& basis);
Vec3 from_rtn(const Vec3& a_rtn, const RtnBasis& basis);

/// Unit normal of the orbital plane with inclination i and node Omega.
Vec3 hd_from_angles(double inclination, double raan);

/// Specific angular momentum r x v.
Vec3 angular_momentum(const StateVector& s);
/// sqrt(mu a (1 - e^2)); requires a (1 - e^2) > 0.
double h_from_elements(double mu, double a, double e);

/// (v x h) / mu - r_hat.
Vec3 eccentricity_vector(const Vec3& r, const Vec3& v, double mu);
inline Vec3 eccentricity_vector(const StateVector& s, double mu) { return eccentricity_vector(s.r, s.v, mu); }

/// Eccentricity vector of the conic described by geometric elements.
Vec3 eccentricity_vector(double e, double inclination, double raan, double arg_periapsis);

/// The five geometric elements of a conic. a < 0 for hyperbolas.
struct OrbitGeometry {
    double a = 0.0;
    double e = 0.0;
    double i = 0.0;
    double raan = 0.0;
    double arg_periapsis = 0.0;

    double semi_latus_rectum() const { return a * (1.0 - e * e); }
    double periapsis_radius() const { return a * (1.0 - e); }

    /// Throws Error when the invariants do not hold.
    void validate() const;

    /// Geometry for a periapsis radius and eccentricity (any conic but the parabola).
    static OrbitGeometry from_periapsis(double rp, double e, double i, double raan, double arg_periapsis);

    bool operator==(const OrbitGeometry&) const = default;
};

struct GeometryWithAnomaly {
    OrbitGeometry geometry;
    double true_anomaly = 0.0;
};

/// Eccentricities below this are treated as circular (omega := 0, anomaly
/// measured from the node); inclinations below it as equatorial (Omega := 0).
inline constexpr double kCircularTolerance = 1e-8;

GeometryWithAnomaly geometry_from_state(const Vec3& r, const Vec3& v, double mu);
inline GeometryWithAnomaly geometry_from_state(const StateVector& s, double mu) {
    return geometry_from_state(s.r, s.v, mu);
}

StateVector state_from_geometry(const OrbitGeometry& g, double true_anomaly, double mu,
                                Frame frame = Frame::Inertial, double t = 0.0);

/// Element errors (actual - target) with angles wrapped to (-pi, pi].
/// Angles undefined for the target (omega of a circle, Omega of an
/// equatorial orbit) report zero.
struct ElementErrors {
    double a = 0.0;
    double e = 0.0;
    double i = 0.0;
    double raan = 0.0;
    double arg_periapsis = 0.0;
};

ElementErrors element_errors(const OrbitGeometry& actual, const OrbitGeometry& target);

enum class RotationDirection { InertialToBody, BodyToInertial };

/// Transform a state between the inertial frame and the frame spinning at
/// `spin_rate` about +Z (frames coincide at t = 0). The output is tagged
/// with the destination frame; the input must carry the source frame tag.
StateVector rotate_frame(const StateVector& s, double spin_rate, RotationDirection direction);

}  // namespace pathkeep
