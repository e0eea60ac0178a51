#include "pathkeep/types.hpp"

#include <cmath>

namespace pathkeep {

double wrap_two_pi(double angle) {
    double w = std::fmod(angle, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    if (w >= kTwoPi) w -= kTwoPi;
    return w;
}

double wrap_pi(double angle) {
    double w = wrap_two_pi(angle);
    if (w > kPi) w -= kTwoPi;
    return w;
}

Mat3 rotation_z(double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    Mat3 m;
    m << c, -s, 0.0,
         s, c, 0.0,
         0.0, 0.0, 1.0;
    return m;
}

}  // namespace pathkeep
