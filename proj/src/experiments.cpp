#include "pathkeep/scenario.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

namespace pathkeep {

namespace {

int worker_count(int requested, std::size_t jobs) {
    int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    n = std::max(1, n);
    return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(n), std::max<std::size_t>(jobs, 1)));
}

template <class Job>
void parallel_for(std::size_t jobs, int threads, Job&& job) {
    const int workers = worker_count(threads, jobs);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto loop = [&] {
        for (std::size_t k = next++; k < jobs && !failed; k = next++) {
            try {
                job(k);
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        loop();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(loop);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace

std::pair<Vec3, Vec3> perpendicular_plane_basis(const Vec3& r, const Vec3& v) {
    const double vn = v.norm();
    if (!(vn > 0.0)) throw DegenerateStateError("nominal velocity is zero");
    const Vec3 v_hat = v / vn;
    Vec3 p1 = r - r.dot(v_hat) * v_hat;
    if (!(p1.norm() > 1e-12 * std::max(1.0, r.norm()))) {
        // Position parallel to velocity: fall back to the least aligned axis.
        Vec3 axis = Vec3::Zero();
        int k = 0;
        v_hat.cwiseAbs().minCoeff(&k);
        axis[k] = 1.0;
        p1 = axis - axis.dot(v_hat) * v_hat;
    }
    p1.normalize();
    return {p1, v_hat.cross(p1)};
}

StateVector dispersed_initial_state(const StateVector& nominal, const MonteCarloSpec& spec, std::uint64_t seed) {
    auto rng = RngStreams::make(seed, RngStreams::Dispersion);
    std::normal_distribution<double> n01(0.0, 1.0);
    const auto [p1, p2] = perpendicular_plane_basis(nominal.r, nominal.v);
    StateVector out = nominal;
    const double a = n01(rng), b = n01(rng);
    out.r += spec.position_sigma * (a * p1 + b * p2);
    for (int k = 0; k < 3; ++k) out.v[k] += spec.velocity_sigma * n01(rng);
    return out;
}

bool sample_succeeded(const SimulationSummary& summary, const ControllerConfig& ctrl) {
    if (summary.terminal != TerminalEvent::None) return false;
    Vec3 band;
    if (ctrl.hysteresis.enabled) {
        band = ctrl.hysteresis.s_plus;
    } else {
        const TargetOrbit target = TargetOrbit::from_geometry(summary.final_target, ctrl.mu);
        band = ctrl.n_phi * gain_matrix(summary.final_truth.r, summary.final_truth.v, target, ctrl);
    }
    return (summary.final_s.cwiseAbs().array() <= band.array()).all();
}

void aggregate_monte_carlo(MonteCarloResult& result) {
    const auto n = result.samples.size();
    result.successes = 0;
    double sum = 0.0;
    for (const auto& s : result.samples) {
        sum += s.summary.delta_v;
        if (s.success) ++result.successes;
    }
    result.mean_dv = n ? sum / static_cast<double>(n) : 0.0;
    double sq = 0.0;
    for (const auto& s : result.samples) sq += (s.summary.delta_v - result.mean_dv) * (s.summary.delta_v - result.mean_dv);
    result.three_sigma_dv = n > 1 ? 3.0 * std::sqrt(sq / static_cast<double>(n - 1)) : 0.0;
}

MonteCarloResult run_monte_carlo(const BuiltScenario& built, const MonteCarloSpec& spec) {
    spec.validate();
    MonteCarloResult result;
    result.samples.resize(static_cast<std::size_t>(spec.samples));
    const StateVector nominal = built.config.initial;
    parallel_for(result.samples.size(), spec.threads, [&](std::size_t i) {
        MonteCarloSample& sample = result.samples[i];
        sample.index = static_cast<int>(i);
        sample.seed = spec.base_seed + i;
        SimulationConfig cfg = built.config;
        cfg.noise.seed = sample.seed;
        cfg.initial = dispersed_initial_state(nominal, spec, sample.seed);
        sample.initial = cfg.initial;
        sample.summary = run_closed_loop(cfg);
        sample.success = sample_succeeded(sample.summary, cfg.controller);
    });
    aggregate_monte_carlo(result);
    return result;
}

void write_monte_carlo_csv(std::ostream& out, const MonteCarloResult& result) {
    out << "index,seed,rx0,ry0,rz0,vx0,vy0,vz0,delta_v,terminal,success,end_time\n";
    char buf[512];
    for (const auto& s : result.samples) {
        std::snprintf(buf, sizeof buf, "%d,%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%s,%d,%.17g\n", s.index,
                      static_cast<unsigned long long>(s.seed), s.initial.r.x(), s.initial.r.y(), s.initial.r.z(),
                      s.initial.v.x(), s.initial.v.y(), s.initial.v.z(), s.summary.delta_v,
                      to_string(s.summary.terminal).c_str(), s.success ? 1 : 0, s.summary.end_time);
        out << buf;
    }
}

std::vector<double> read_monte_carlo_dv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error("empty Monte Carlo CSV");
    int column = -1;
    {
        std::stringstream header(line);
        std::string cell;
        for (int k = 0; std::getline(header, cell, ','); ++k) {
            if (cell == "delta_v") column = k;
        }
    }
    if (column < 0) throw Error("Monte Carlo CSV has no delta_v column");
    std::vector<double> dv;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        for (int k = 0; k <= column; ++k) std::getline(row, cell, ',');
        dv.push_back(std::stod(cell));
    }
    return dv;
}

std::string to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::Disturbance: return "D";
        case SweepAxis::Lambda: return "lambda";
        case SweepAxis::NPhi: return "n_phi";
        case SweepAxis::ControlPeriod: return "control_period";
    }
    return "?";
}

SweepAxis parse_sweep_axis(std::string_view tag) {
    if (tag == "D" || tag == "disturbance") return SweepAxis::Disturbance;
    if (tag == "lambda") return SweepAxis::Lambda;
    if (tag == "n_phi") return SweepAxis::NPhi;
    if (tag == "control_period" || tag == "dt") return SweepAxis::ControlPeriod;
    throw Error("unknown sweep axis '" + std::string(tag) + "' (expected D, lambda, n_phi or control_period)");
}

Scenario with_sweep_value(const Scenario& s, SweepAxis axis, double value) {
    Scenario out = s;
    switch (axis) {
        case SweepAxis::Disturbance: out.controller.disturbance_bound = Vec3::Constant(value); break;
        case SweepAxis::Lambda: out.controller.lambda_r = out.controller.lambda_n = value; break;
        case SweepAxis::NPhi: out.controller.n_phi = value; break;
        case SweepAxis::ControlPeriod:
            out.sim.control_period = value;
            out.sim.integrator_step = 0.0;
            break;
    }
    out.validate();
    return out;
}

std::vector<SweepPoint> run_sweep(const Scenario& base, SweepAxis axis, const std::vector<double>& values,
                                  int threads) {
    std::vector<SweepPoint> points(values.size());
    parallel_for(values.size(), threads, [&](std::size_t k) {
        const BuiltScenario built = build_scenario(with_sweep_value(base, axis, values[k]));
        SweepPoint& p = points[k];
        p.value = values[k];
        p.summary = run_closed_loop(built.config, [&](const TelemetryRecord& rec) {
            p.time.push_back(rec.t);
            p.radial_error.push_back(rec.radial_error);
        });
    });
    return points;
}

}  // namespace pathkeep
