#include "doctest.h"

#include "pathkeep/frames.hpp"

#include <cmath>
#include <random>

using namespace pathkeep;

namespace {

struct RandomOrbit {
    OrbitGeometry g;
    double anomaly;
};

RandomOrbit random_orbit(std::mt19937_64& rng, double e_min, double e_max) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    RandomOrbit o;
    o.g.e = e_min + (e_max - e_min) * uni(rng);
    const double rp = 200.0 + 2000.0 * uni(rng);
    o.g.a = rp / (1.0 - o.g.e);
    o.g.i = 1e-3 + (kPi - 2e-3) * uni(rng);
    o.g.raan = kTwoPi * uni(rng);
    o.g.arg_periapsis = kTwoPi * uni(rng);
    if (o.g.e > 1.0) {
        // Stay inside the asymptotes with some margin.
        const double limit = std::acos(-1.0 / o.g.e);
        o.anomaly = (2.0 * uni(rng) - 1.0) * 0.95 * limit;
    } else {
        o.anomaly = -kPi + kTwoPi * uni(rng);
    }
    return o;
}

}  // namespace

TEST_CASE("rtn basis examples") {
    auto b = rtn_basis(Vec3(1, 0, 0), Vec3(0, 1, 0));
    CHECK((b.r_hat - Vec3(1, 0, 0)).norm() < 1e-15);
    CHECK((b.theta_hat - Vec3(0, 1, 0)).norm() < 1e-15);
    CHECK((b.h_hat - Vec3(0, 0, 1)).norm() < 1e-15);

    b = rtn_basis(Vec3(0, 2, 0), Vec3(0, 0, 3));
    CHECK((b.h_hat - Vec3(1, 0, 0)).norm() < 1e-15);
    CHECK((b.theta_hat - Vec3(0, 0, 1)).norm() < 1e-15);

    CHECK_THROWS_AS(rtn_basis(Vec3(1, 2, 3), Vec3(2, 4, 6)), DegenerateStateError);
    CHECK_THROWS_AS(rtn_basis(Vec3::Zero(), Vec3(0, 1, 0)), DegenerateStateError);
}

TEST_CASE("rtn basis is a right-handed orthonormal triad") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 100.0);
    for (int k = 0; k < 1000; ++k) {
        const Vec3 r(g(rng), g(rng), g(rng));
        const Vec3 v(g(rng), g(rng), g(rng));
        const auto b = rtn_basis(r, v);
        CHECK(std::abs(b.r_hat.norm() - 1.0) < 1e-12);
        CHECK(std::abs(b.theta_hat.norm() - 1.0) < 1e-12);
        CHECK(std::abs(b.h_hat.norm() - 1.0) < 1e-12);
        CHECK(std::abs(b.r_hat.dot(b.theta_hat)) < 1e-12);
        CHECK(std::abs(b.r_hat.dot(b.h_hat)) < 1e-12);
        CHECK((b.h_hat.cross(b.r_hat) - b.theta_hat).norm() < 1e-12);
        CHECK((b.r_hat.cross(b.theta_hat) - b.h_hat).norm() < 1e-12);

        const Vec3 a(g(rng), g(rng), g(rng));
        CHECK((from_rtn(to_rtn(a, b), b) - a).norm() < 1e-14 * a.norm() * 10.0);
        CHECK((b.to_rtn_matrix() * a - to_rtn(a, b)).norm() < 1e-12 * a.norm());
    }
}

TEST_CASE("to_rtn examples") {
    const auto b = rtn_basis(Vec3(3, 4, 0), Vec3(-1, 2, 0.5));
    CHECK((to_rtn(b.r_hat, b) - Vec3(1, 0, 0)).norm() < 1e-15);
    const RtnBasis identity;
    CHECK((to_rtn(Vec3(1, 1, 1), identity) - Vec3(1, 1, 1)).norm() == 0.0);
}

TEST_CASE("desired angular momentum direction") {
    CHECK((hd_from_angles(deg2rad(90), deg2rad(90)) - Vec3(1, 0, 0)).norm() < 1e-15);
    CHECK((hd_from_angles(0.0, 1.234) - Vec3(0, 0, 1)).norm() < 1e-15);
    CHECK((hd_from_angles(deg2rad(45), deg2rad(45)) - Vec3(0.5, -0.5, std::sqrt(0.5))).norm() < 1e-15);
}

TEST_CASE("angular momentum magnitude") {
    const double mu_bennu = kDefaultG * 7.329e10;
    const double h = h_from_elements(mu_bennu, 450.0, 0.0);
    CHECK(h / 450.0 == doctest::Approx(0.1042).epsilon(2e-3));
    CHECK(h_from_elements(1.0, 1.0, 0.0) == 1.0);
    CHECK(h_from_elements(1.0, 123.0, 1.0) == 0.0);
    CHECK_THROWS_AS(h_from_elements(1.0, 100.0, 2.0), Error);
    CHECK_THROWS_AS(h_from_elements(1.0, -100.0, 0.5), Error);

    StateVector s;
    s.r = Vec3(2, 0, 0);
    s.v = Vec3(0, 3, 0);
    CHECK((angular_momentum(s) - Vec3(0, 0, 6)).norm() == 0.0);
}

TEST_CASE("eccentricity vector") {
    const double mu = 4.8916;
    const double radius = 500.0;
    CHECK(eccentricity_vector(Vec3(radius, 0, 0), Vec3(0, std::sqrt(mu / radius), 0), mu).norm() < 1e-12);
    CHECK_THROWS_AS(eccentricity_vector(Vec3::Zero(), Vec3(1, 0, 0), mu), DegenerateStateError);

    const OrbitGeometry g{600.0, 0.1, deg2rad(90), deg2rad(90), deg2rad(90)};
    const Vec3 closed = eccentricity_vector(g.e, g.i, g.raan, g.arg_periapsis);
    for (double nu : {0.0, 0.7, 2.0, -2.5}) {
        const auto s = state_from_geometry(g, nu, mu);
        CHECK((eccentricity_vector(s, mu) - closed).norm() < 1e-10);
    }
}

TEST_CASE("eccentricity vector magnitude and orthogonality over random orbits") {
    std::mt19937_64 rng(2);
    const double mu = 4.8916;
    for (int k = 0; k < 1000; ++k) {
        const auto o = random_orbit(rng, 0.0, 0.95);
        const auto s = state_from_geometry(o.g, o.anomaly, mu);
        const Vec3 ev = eccentricity_vector(s, mu);
        const Vec3 h = angular_momentum(s);
        CHECK(std::abs(ev.norm() - geometry_from_state(s, mu).geometry.e) < 1e-10);
        CHECK(std::abs(ev.dot(h)) <= 1e-10 * std::max(1.0, ev.norm()) * h.norm());
    }
}

TEST_CASE("geometry round trip over random conics") {
    std::mt19937_64 rng(3);
    const double mu = 666.23;
    for (int k = 0; k < 1000; ++k) {
        const auto o = random_orbit(rng, 1e-4, 5.0);
        if (std::abs(o.g.e - 1.0) < 1e-3) continue;
        const auto s = state_from_geometry(o.g, o.anomaly, mu);
        const auto back = geometry_from_state(s, mu);
        const auto err = element_errors(back.geometry, o.g);
        CHECK(std::abs(err.a) <= 1e-9 * std::abs(o.g.a));
        CHECK(std::abs(err.e) <= 1e-9);
        CHECK(std::abs(err.i) <= 1e-9);
        CHECK(std::abs(err.raan) <= 1e-9);
        CHECK(std::abs(err.arg_periapsis) <= 1e-9);
        CHECK(std::abs(wrap_pi(back.true_anomaly - o.anomaly)) <= 1e-9);

        // Energy consistency.
        const double energy = 0.5 * s.v.squaredNorm() - mu / s.r.norm();
        CHECK(energy == doctest::Approx(-mu / (2.0 * o.g.a)).epsilon(1e-10));
    }
}

TEST_CASE("degenerate element conventions") {
    const double mu = 1.0;
    const auto eq = geometry_from_state(Vec3(1, 0, 0), Vec3(0, 1, 0), mu);
    CHECK(eq.geometry.e < 1e-12);
    CHECK(eq.geometry.i == 0.0);
    CHECK(eq.geometry.raan == 0.0);
    CHECK(eq.geometry.arg_periapsis == 0.0);
    CHECK(eq.geometry.a == doctest::Approx(1.0));
    CHECK(eq.true_anomaly == doctest::Approx(0.0));

    // Circular inclined orbit: anomaly measured from the ascending node.
    const OrbitGeometry g{500.0, 0.0, deg2rad(90), deg2rad(90), 0.0};
    const auto s = state_from_geometry(g, 0.4, mu);
    const auto back = geometry_from_state(s, mu);
    CHECK(back.geometry.arg_periapsis == 0.0);
    CHECK(back.true_anomaly == doctest::Approx(0.4));
}

TEST_CASE("hyperbolic states") {
    const double mu = 4.8916;
    const Vec3 r(800.0, 0.0, 0.0);
    const double v_esc = std::sqrt(2.0 * mu / r.norm());
    const auto out = geometry_from_state(r, Vec3(0.0, 1.3 * v_esc, 0.0), mu);
    CHECK(out.geometry.e > 1.0);
    CHECK(out.geometry.a < 0.0);
    CHECK_NOTHROW(out.geometry.validate());

    const OrbitGeometry hyp = OrbitGeometry::from_periapsis(400.0, 1.5, deg2rad(40), 0.0, deg2rad(270));
    CHECK(hyp.a == doctest::Approx(-800.0));
    CHECK_THROWS_AS(state_from_geometry(hyp, 2.5, mu), Error);
}

TEST_CASE("periapsis and apoapsis placement") {
    const double mu = 3.0;
    const OrbitGeometry g{1000.0, 0.3, 0.5, 1.0, 2.0};
    const Vec3 e_hat = eccentricity_vector(1.0, g.i, g.raan, g.arg_periapsis);
    const auto peri = state_from_geometry(g, 0.0, mu);
    CHECK((peri.r - g.a * (1.0 - g.e) * e_hat).norm() < 1e-10);
    const auto apo = state_from_geometry(g, kPi, mu);
    CHECK(apo.r.norm() == doctest::Approx(g.a * (1.0 + g.e)).epsilon(1e-14));
}

TEST_CASE("orbit geometry invariants") {
    CHECK_THROWS_AS((OrbitGeometry{100.0, -0.1, 0.0, 0.0, 0.0}.validate()), Error);
    CHECK_THROWS_AS((OrbitGeometry{-100.0, 0.5, 0.0, 0.0, 0.0}.validate()), Error);
    CHECK_THROWS_AS((OrbitGeometry{100.0, 1.5, 0.0, 0.0, 0.0}.validate()), Error);
    CHECK_THROWS_AS((OrbitGeometry{100.0, 1.0, 0.0, 0.0, 0.0}.validate()), Error);
    CHECK_THROWS_AS((OrbitGeometry{100.0, 0.1, 4.0, 0.0, 0.0}.validate()), Error);
    CHECK_THROWS_AS((OrbitGeometry{100.0, 0.1, 1.0, 7.0, 0.0}.validate()), Error);
    CHECK_NOTHROW((OrbitGeometry{100.0, 0.1, 1.0, 6.0, 0.0}.validate()));
}

TEST_CASE("element errors wrap angles") {
    const OrbitGeometry target{500.0, 0.1, 1.0, 0.05, 6.2};
    const OrbitGeometry actual{500.5, 0.11, 1.01, 6.25, 0.01};
    const auto err = element_errors(actual, target);
    CHECK(err.a == doctest::Approx(0.5));
    CHECK(err.raan == doctest::Approx(6.25 - 0.05 - kTwoPi));
    CHECK(err.arg_periapsis == doctest::Approx(0.01 - 6.2 + kTwoPi));

    const OrbitGeometry circ{500.0, 0.0, 0.0, 0.0, 0.0};
    const auto e2 = element_errors(actual, circ);
    CHECK(e2.raan == 0.0);
    CHECK(e2.arg_periapsis == 0.0);
}

TEST_CASE("frame tags") {
    StateVector a, b;
    b.frame = Frame::BodyFixed;
    CHECK_THROWS_AS(state_difference(a, b), FrameMismatchError);
    b.frame = Frame::Inertial;
    b.r = Vec3(1, 2, 3);
    CHECK((state_difference(a, b).first + Vec3(1, 2, 3)).norm() == 0.0);
    CHECK(parse_frame("body-fixed") == Frame::BodyFixed);
    CHECK(parse_frame(to_string(Frame::Inertial)) == Frame::Inertial);
    CHECK_THROWS_AS(parse_frame("galactic"), Error);
    StateVector bad;
    bad.r.x() = std::nan("");
    CHECK_FALSE(bad.is_finite());
}

TEST_CASE("rotating frame transforms") {
    const double nu = 4.0684e-4;
    StateVector s;
    s.r = Vec3(300.0, -200.0, 100.0);
    s.v = Vec3(0.01, 0.05, -0.02);

    SUBCASE("identity at t = 0 apart from the transport term") {
        const auto b = rotate_frame(s, 0.0, RotationDirection::InertialToBody);
        CHECK((b.r - s.r).norm() == 0.0);
        CHECK((b.v - s.v).norm() == 0.0);
        s.t = 0.0;
        const auto b2 = rotate_frame(s, nu, RotationDirection::InertialToBody);
        CHECK((b2.r - s.r).norm() < 1e-12);
        CHECK(b2.frame == Frame::BodyFixed);
    }

    SUBCASE("inertially fixed point moves at nu R in the body frame") {
        StateVector fixed;
        fixed.r = Vec3(500.0, 0.0, 0.0);
        fixed.t = 1234.0;
        const auto b = rotate_frame(fixed, nu, RotationDirection::InertialToBody);
        CHECK(b.v.norm() == doctest::Approx(nu * 500.0).epsilon(1e-14));
        CHECK(b.r.norm() == doctest::Approx(500.0).epsilon(1e-14));
    }

    SUBCASE("round trip") {
        s.t = 5000.0;
        const auto there = rotate_frame(s, nu, RotationDirection::InertialToBody);
        const auto back = rotate_frame(there, nu, RotationDirection::BodyToInertial);
        CHECK((back.r - s.r).norm() < 1e-12);
        CHECK((back.v - s.v).norm() < 1e-12);
        CHECK(back.frame == Frame::Inertial);
        CHECK_THROWS_AS(rotate_frame(there, nu, RotationDirection::InertialToBody), FrameMismatchError);
    }
}
