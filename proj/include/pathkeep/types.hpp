#pragma once

#include <Eigen/Dense>

#include <numbers>
#include <stdexcept>
#include <string>

namespace pathkeep {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Physical constants. G is only a default; scenarios may override it.
inline constexpr double kDefaultG = 6.6743e-11;      // m^3 / (kg s^2)
inline constexpr double kAstronomicalUnit = 1.495978707e11;  // m

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wrap an angle into [0, 2pi).
double wrap_two_pi(double angle);
/// Wrap an angle into (-pi, pi].
double wrap_pi(double angle);

/// Rotation about +Z by `angle` (active, right-handed).
Mat3 rotation_z(double angle);

/// Base class for all library errors so callers can catch one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A geometric precondition failed (zero radius, zero angular momentum, ...).
class DegenerateStateError : public Error {
public:
    using Error::Error;
};

}  // namespace pathkeep
