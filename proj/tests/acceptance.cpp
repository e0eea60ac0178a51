// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fail.
//
//   acceptance [--full] [--threads N] [--only 1,4,9]
//
// --full runs the Monte Carlo at 1000 samples and Bennu-2h over 30 days.

#include "pathkeep/scenario.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace pathkeep;

namespace {

// Tolerances and reference values.
constexpr double kBennuMass = 7.329e10;
constexpr double k67PMass = 9.982e12;

constexpr double kCircularSpeedRef = 0.1042;  // m/s
constexpr double kCircularSpeedTol = 0.002;   // relative
constexpr double kHoverDvRef = 9.8633;        // m/s over 24 h at 2415 m
constexpr double kHoverDvTol = 0.005;         // relative
constexpr double kSrpLow = 1.0e-7, kSrpHigh = 2.0e-7;

constexpr double kItokawaDvLow = 0.16, kItokawaDvHigh = 0.65;  // reference 0.3236 m/s
constexpr double kItokawaAErr = 1.0;                           // m
constexpr double kItokawaAngleErrDeg = 1.0;

constexpr double kFastSettleH = 5.0;   // lambda = 2
constexpr double kSlowSettleH = 12.0;  // lambda = 0.2
constexpr double kChatterRatio = 5.0;

constexpr double kTightLow = 0.25, kTightHigh = 1.0;   // reference 0.5045 m/s
constexpr double kLooseLow = 0.09, kLooseHigh = 0.36;  // reference 0.1775 m/s
constexpr double kIdleHours = 1.0;

constexpr double kMcMeanLow = 0.073, kMcMeanHigh = 0.135;  // reference mean 0.1040 m/s
constexpr double kMc3SigmaLow = 0.043, kMc3SigmaHigh = 0.129;  // reference 0.0860 m/s, full run only

constexpr double kEquilibriumU = 1e-10;
constexpr double kMatrixTol = 1e-12;
constexpr double kLaplacianTol = 1e-9;
constexpr double kFarFieldTol = 1e-4;
constexpr double kDegreeZeroTol = 1e-14;
constexpr double kGradientTol = 1e-5;
constexpr double kRoundTripTol = 1e-9;

constexpr double kDailyDvLimit = 0.012;     // m/s per day, 3-day run
constexpr double k30DayDvRef = 0.0495;      // m/s
constexpr double k30DayDvTol = 0.6;         // relative

struct Options {
    bool full = false;
    int threads = 0;
    std::set<int> only;
};

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

bool within(double x, double lo, double hi) { return x >= lo && x <= hi; }

RunResult run(const Scenario& s) { return run_scenario(build_scenario(s)); }

Outcome circular_speed(const Options&) {
    const double mu = kDefaultG * kBennuMass;
    const OrbitGeometry g{450.0, 0.0, deg2rad(45.0), deg2rad(320.0), 0.0};
    const double speed = state_from_geometry(g, 0.7, mu).v.norm();
    const double oracle = std::sqrt(mu / 450.0);
    const bool ok = std::abs(speed / kCircularSpeedRef - 1.0) <= kCircularSpeedTol &&
                    std::abs(speed - oracle) <= 1e-12 * oracle;
    return {ok, fmt("circular speed at 450 m: %.6f m/s (ref %.4f +/- %.1f%%, sqrt(mu/a) %.6f)", speed,
                    kCircularSpeedRef, 100 * kCircularSpeedTol, oracle)};
}

Outcome hover_dv(const Options&) {
    const double mu = kDefaultG * k67PMass;
    const double dv = point_mass_accel(mu, Vec3(0.0, 0.0, 2415.0)).norm() * 86400.0;
    const bool ok = std::abs(dv / kHoverDvRef - 1.0) <= kHoverDvTol;
    return {ok, fmt("67P hovering at 2415 m for 24 h: %.4f m/s (ref %.4f +/- %.1f%%)", dv, kHoverDvRef,
                    100 * kHoverDvTol)};
}

Outcome srp_level(const Options&) {
    const double a = srp_magnitude(preset("Itokawa").srp);
    return {within(a, kSrpLow, kSrpHigh), fmt("SRP at Itokawa: %.4e m/s^2 (accept [%.1e, %.1e])", a, kSrpLow, kSrpHigh)};
}

Outcome itokawa_loop(const Options&) {
    const auto sum = run(preset("Itokawa")).summary;
    const double ang = rad2deg(std::max({sum.i.max_abs, sum.raan.max_abs, sum.arg_periapsis.max_abs}));
    const bool ok = sum.terminal == TerminalEvent::None && within(sum.delta_v, kItokawaDvLow, kItokawaDvHigh) &&
                    sum.a.max_abs < kItokawaAErr && ang < kItokawaAngleErrDeg;
    return {ok, fmt("Itokawa 24 h: dv %.4f m/s (accept [%.2f, %.2f], ref 0.3236), max |a err| %.3f m (< %.0f), "
                    "max angle err %.3f deg (< %.0f), terminal %s",
                    sum.delta_v, kItokawaDvLow, kItokawaDvHigh, sum.a.max_abs, kItokawaAErr, ang,
                    kItokawaAngleErrDeg, to_string(sum.terminal).c_str())};
}

Outcome lambda_ordering(const Options& o) {
    const auto points = run_sweep(preset("Itokawa-parametric"), SweepAxis::Lambda, {2.0, 0.2}, o.threads);
    const double fast = points[0].summary.settling_time / 3600.0;
    const double slow = points[1].summary.settling_time / 3600.0;
    return {fast < kFastSettleH && slow > kSlowSettleH,
            fmt("time to |r err| < 1 m: lambda=2 %.2f h (< %.0f), lambda=0.2 %.2f h (> %.0f)", fast, kFastSettleH,
                slow, kSlowSettleH)};
}

Outcome chattering(const Options& o) {
    Scenario base = preset("Itokawa-parametric");
    base.sim.control_period = 10.0;
    base.sim.integrator_step = 0.0;
    base.sim.duration = 2.0 * 86400.0;
    const auto points = run_sweep(base, SweepAxis::NPhi, {10.0, 0.1}, o.threads);
    const double wide = points[0].summary.radial.rms;
    const double narrow = points[1].summary.radial.rms;
    const double ratio = narrow / wide;
    return {ratio >= kChatterRatio,
            fmt("final-day rms r err at 10 s: n_phi=10 %.4g m, n_phi=0.1 %.4g m, ratio %.1f (>= %.0f)", wide, narrow,
                ratio, kChatterRatio)};
}

Outcome hysteresis_pair(const Options&) {
    const auto tight = run(preset("Bennu-tight")).summary;
    const auto loose = run(preset("Bennu-loose")).summary;
    const bool ok = tight.terminal == TerminalEvent::None && loose.terminal == TerminalEvent::None &&
                    loose.delta_v < tight.delta_v && within(tight.delta_v, kTightLow, kTightHigh) &&
                    within(loose.delta_v, kLooseLow, kLooseHigh) && loose.longest_idle > kIdleHours * 3600.0;
    return {ok, fmt("Bennu tight dv %.4f m/s (accept [%.2f, %.2f], ref 0.5045), loose dv %.4f m/s (accept [%.2f, "
                    "%.2f], ref 0.1775), loose longest idle %.2f h (> %.0f)",
                    tight.delta_v, kTightLow, kTightHigh, loose.delta_v, kLooseLow, kLooseHigh,
                    loose.longest_idle / 3600.0, kIdleHours)};
}

Outcome monte_carlo(const Options& o) {
    const Scenario s = preset("Bennu-Monte Carlo");
    MonteCarloSpec spec = *s.monte_carlo;
    spec.samples = o.full ? 1000 : 100;
    spec.threads = o.threads;
    const auto result = run_monte_carlo(build_scenario(s), spec);
    int survived = 0;
    for (const auto& sample : result.samples) survived += sample.summary.terminal == TerminalEvent::None;
    const int n = static_cast<int>(result.samples.size());
    bool ok = survived == n && within(result.mean_dv, kMcMeanLow, kMcMeanHigh);
    std::string detail = fmt("Monte Carlo %d samples: %d/%d without impact or escape, %d in switch band, mean dv "
                             "%.4f m/s (accept [%.3f, %.3f], ref 0.1040), 3-sigma %.4f m/s",
                             n, survived, n, result.successes, result.mean_dv, kMcMeanLow, kMcMeanHigh,
                             result.three_sigma_dv);
    if (o.full) {
        ok = ok && within(result.three_sigma_dv, kMc3SigmaLow, kMc3SigmaHigh);
        detail += fmt(" (accept [%.3f, %.3f], ref 0.0860)", kMc3SigmaLow, kMc3SigmaHigh);
    }
    return {ok, detail};
}

Outcome property_suites(const Options&) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> n01;
    auto direction = [&] { return Vec3(Vec3(n01(rng), n01(rng), n01(rng)).normalized()); };
    const double mu = kDefaultG * kBennuMass;
    auto random_geometry = [&](double e_max) {
        OrbitGeometry g;
        g.e = 1e-4 + (e_max - 1e-4) * uni(rng);
        g.a = (200.0 + 800.0 * uni(rng)) / (1.0 - g.e);
        g.i = 1e-3 + (kPi - 2e-3) * uni(rng);
        g.raan = kTwoPi * uni(rng);
        g.arg_periapsis = kTwoPi * uni(rng);
        return g;
    };
    std::vector<std::string> failed;
    auto check = [&](const char* name, bool ok) {
        if (!ok) failed.emplace_back(name);
    };

    ControllerConfig cfg;
    cfg.mu = mu;
    cfg.disturbance_bound = Vec3::Constant(1e-2);
    double worst_u = 0.0, worst_det = 0.0, worst_inv = 0.0;
    for (int k = 0; k < 300; ++k) {
        const OrbitGeometry g = random_geometry(0.9);
        const TargetOrbit target = TargetOrbit::from_geometry(g, mu);
        const StateVector s = state_from_geometry(g, kTwoPi * uni(rng), mu);
        worst_u = std::max(worst_u, control_accel_rtn(s.r, s.v, target, cfg).u_rtn.norm());

        const StateVector off = state_from_geometry(random_geometry(0.9), kTwoPi * uni(rng), mu);
        const double cos_beta = target.h_hat.dot(rtn_basis(off.r, off.v).h_hat);
        if (cos_beta <= 0.05) continue;
        const InputMatrix f = input_matrix(off.r, off.v, target, mu, 2.0);
        const double expected = -off.r.squaredNorm() * cos_beta / mu;
        worst_det = std::max(worst_det, std::abs(f.dense().determinant() / expected - 1.0));
        worst_inv = std::max(worst_inv, (f.dense() * f.inverse() - Mat3::Identity()).cwiseAbs().maxCoeff());
    }
    check("equilibrium", worst_u <= kEquilibriumU);
    check("det F", worst_det <= kMatrixTol);
    check("F inverse", worst_inv <= kMatrixTol);

    const PolyhedronShape cube = make_box(100.0, 100.0, 100.0);
    const double density = 2000.0;
    const auto ellipsoid = std::make_shared<const PolyhedronShape>(
        normalize_to_body_frame(make_ellipsoid(282.5, 267.5, 254.0, 3), density));
    const double R = ellipsoid->circumscribing_radius();
    double lap = std::abs(polyhedron_laplacian(cube, Vec3::Zero()) + 2.0 * kTwoPi);
    for (int k = 0; k < 20; ++k) lap = std::max(lap, std::abs(polyhedron_laplacian(*ellipsoid, 3.0 * R * direction())));
    check("solid angle", lap <= kLaplacianTol);

    double far = 0.0;
    const std::string data = PATHKEEP_DATA_DIR;
    for (const auto& shipped : {load_shape_file(data + "/shapes/cube.obj", ShapeFormat::Obj),
                                load_shape_file(data + "/shapes/octahedron_km.tab", ShapeFormat::Pds, 1000.0)}) {
        const auto shape = std::make_shared<const PolyhedronShape>(shipped);
        const GravityField field = GravityField::polyhedron(shape, density);
        for (int k = 0; k < 20; ++k) {
            const Vec3 r = 50.0 * shape->circumscribing_radius() * direction();
            far = std::max(far, (field.accel(r) - point_mass_accel(field.mu(), r)).norm() /
                                    point_mass_accel(field.mu(), r).norm());
        }
    }
    check("far field", far < kFarFieldTol);

    const GravityField poly = GravityField::polyhedron(ellipsoid, density);
    const HarmonicsModel h0 = harmonics_from_polyhedron(*ellipsoid, density, 0, R);
    const HarmonicsModel h5 = harmonics_from_polyhedron(*ellipsoid, density, 5, R);
    double deg0 = 0.0;
    for (int k = 0; k < 20; ++k) {
        const Vec3 r = (1.0 + 4.0 * uni(rng)) * R * direction();
        deg0 = std::max(deg0, (harmonics_accel(h0, r) - point_mass_accel(h0.mu, r)).norm() /
                                  point_mass_accel(h0.mu, r).norm());
    }
    check("degree 0", deg0 <= kDegreeZeroTol);

    double grad = 0.0;
    const GravityField fields[] = {GravityField::point_mass(mu), poly, GravityField::harmonics(h5)};
    for (const auto& field : fields) {
        for (int k = 0; k < 10; ++k) {
            const Vec3 r = (1.2 + uni(rng)) * R * direction();
            const double h = 1e-3;
            Vec3 fd;
            for (int c = 0; c < 3; ++c) {
                Vec3 dr = Vec3::Zero();
                dr[c] = h;
                fd[c] = (field.potential(r + dr) - field.potential(r - dr)) / (2.0 * h);
            }
            grad = std::max(grad, (fd - field.accel(r)).norm() / field.accel(r).norm());
        }
    }
    check("gradient", grad <= kGradientTol);

    double trip = 0.0;
    for (int k = 0; k < 500; ++k) {
        const OrbitGeometry g = random_geometry(k % 2 ? 0.95 : 5.0);
        const double limit = g.e > 1.0 ? 0.95 * std::acos(-1.0 / g.e) : kPi;
        const double nu = (2.0 * uni(rng) - 1.0) * limit;
        const auto back = geometry_from_state(state_from_geometry(g, nu, mu), mu);
        const ElementErrors d = element_errors(back.geometry, g);
        trip = std::max({trip, std::abs(d.a / g.a), std::abs(d.e), std::abs(d.i), std::abs(d.raan),
                         std::abs(d.arg_periapsis), std::abs(wrap_pi(back.true_anomaly - nu))});
    }
    check("element round trip", trip <= kRoundTripTol);

    Scenario noisy = preset("Bennu-loose");
    noisy.sim.duration = 1800.0;
    auto record = [&] {
        std::ostringstream out;
        run_closed_loop(build_scenario(noisy).config, [&](const TelemetryRecord& r) { write_telemetry_row(out, r); });
        return out.str();
    };
    check("rng determinism", record() == record());

    std::string detail =
        fmt("properties: |u| eq %.1e, det F %.1e, F*Finv %.1e, solid angle %.1e, far field %.1e, degree 0 %.1e, "
            "gradient %.1e, round trip %.1e",
            worst_u, worst_det, worst_inv, lap, far, deg0, grad, trip);
    for (const auto& f : failed) detail += "; failed: " + f;
    return {failed.empty(), detail};
}

Outcome long_keeping(const Options& o) {
    Scenario s = preset("Bennu-2h");
    const double days = o.full ? 30.0 : 3.0;
    s.sim.duration = days * 86400.0;
    s.sim.telemetry_stride = 1000;
    const auto sum = run(s).summary;
    const double per_day = sum.delta_v / days;
    bool ok = sum.terminal == TerminalEvent::None;
    std::string detail;
    if (o.full) {
        ok = ok && std::abs(sum.delta_v / k30DayDvRef - 1.0) <= k30DayDvTol;
        detail = fmt("Bennu-2h 30 days: dv %.4f m/s (ref %.4f +/- %.0f%%), terminal %s", sum.delta_v, k30DayDvRef,
                     100 * k30DayDvTol, to_string(sum.terminal).c_str());
    } else {
        ok = ok && per_day <= kDailyDvLimit;
        detail = fmt("Bennu-2h 3 days: dv %.4f m/s, %.3f cm/s/day (<= %.1f), terminal %s", sum.delta_v, 100 * per_day,
                     100 * kDailyDvLimit, to_string(sum.terminal).c_str());
    }
    return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
    Options opt;
    std::vector<int> only;
    CLI::App app{"acceptance checks"};
    app.add_flag("--full", opt.full, "1000 Monte Carlo samples and the 30-day Bennu-2h run");
    app.add_option("--threads,-j", opt.threads, "worker threads (0 = all cores)");
    app.add_option("--only", only, "criterion numbers to run")->delimiter(',');
    CLI11_PARSE(app, argc, argv);
    opt.only.insert(only.begin(), only.end());

    const std::vector<std::pair<const char*, std::function<Outcome(const Options&)>>> criteria = {
        {"circular-speed anchor", circular_speed},
        {"hovering delta-v anchor", hover_dv},
        {"SRP magnitude", srp_level},
        {"Itokawa 24 h closed loop", itokawa_loop},
        {"lambda convergence ordering", lambda_ordering},
        {"boundary layer at 10 s control period", chattering},
        {"Bennu tight vs loose thresholds", hysteresis_pair},
        {"Monte Carlo insertion dispersion", monte_carlo},
        {"property suites", property_suites},
        {"Bennu-2h long-duration keeping", long_keeping},
    };

    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        if (!opt.only.empty() && !opt.only.count(id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = criteria[k].second(opt);
        } catch (const std::exception& e) {
            out = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s [%2d] %s: %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", id, criteria[k].first,
                    out.detail.c_str(), secs);
        std::fflush(stdout);
        failures += !out.pass;
    }
    return failures == 0 ? 0 : 1;
}
