// Command-line front end: simulate, montecarlo, sweep, gravity-check, list-presets.

#include "pathkeep/scenario.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace fs = std::filesystem;
using namespace pathkeep;

namespace {

enum Exit { kOk = 0, kUsage = 2, kValidation = 3, kRuntime = 4 };

struct ScenarioArgs {
    std::string scenario;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<double> duration_h;
    std::string out;
};

void add_scenario_options(CLI::App* cmd, ScenarioArgs& a) {
    cmd->add_option("--scenario,-s", a.scenario, "preset name or scenario JSON file")->required();
    cmd->add_option("--override,-O", a.overrides, "dotted.key=value (repeatable)");
    cmd->add_option("--seed", a.seed, "noise seed");
    cmd->add_option("--duration-hours", a.duration_h, "override the simulated duration");
    cmd->add_option("--out,-o", a.out, "output directory (default from the scenario)");
}

Scenario load(const ScenarioArgs& a) {
    Scenario s = apply_overrides(resolve_scenario(a.scenario), a.overrides);
    if (a.seed) s.noise.seed = *a.seed;
    if (a.duration_h) s.sim.duration = *a.duration_h * 3600.0;
    if (!a.out.empty()) s.output.directory = a.out;
    s.validate();
    return s;
}

fs::path prepare_dir(const std::string& dir) {
    fs::path p(dir);
    fs::create_directories(p);
    return p;
}

std::string slug(const std::string& name) {
    std::string out;
    for (char c : name) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
    return out.empty() ? "run" : out;
}

int cmd_simulate(const ScenarioArgs& a, bool fail_on_event, bool quiet) {
    const Scenario s = load(a);
    const BuiltScenario built = build_scenario(s);
    const fs::path dir = prepare_dir(s.output.directory);
    const std::string stem = slug(s.name);

    std::ofstream csv;
    TelemetrySink sink;
    if (s.output.telemetry) {
        csv.open(dir / (stem + "_telemetry.csv"));
        write_telemetry_header(csv);
        sink = [&](const TelemetryRecord& rec) { write_telemetry_row(csv, rec); };
    }
    const SimulationSummary summary = run_closed_loop(built.config, sink);
    const std::string json = summary_to_json(summary);
    std::ofstream(dir / (stem + "_summary.json")) << json << "\n";
    if (!quiet) std::cout << json << "\n";
    for (const auto& w : summary.warnings) std::cerr << "warning: " << w << "\n";
    if (fail_on_event && summary.terminal != TerminalEvent::None) return kRuntime;
    return kOk;
}

int cmd_montecarlo(const ScenarioArgs& a, std::optional<int> samples, std::optional<std::uint64_t> base_seed,
                   int threads, bool fail_on_event) {
    const Scenario s = load(a);
    MonteCarloSpec spec = s.monte_carlo.value_or(MonteCarloSpec{});
    if (samples) spec.samples = *samples;
    if (base_seed) spec.base_seed = *base_seed;
    if (threads > 0) spec.threads = threads;
    const BuiltScenario built = build_scenario(s);
    const MonteCarloResult result = run_monte_carlo(built, spec);

    const fs::path dir = prepare_dir(s.output.directory);
    const std::string stem = slug(s.name);
    std::ofstream csv(dir / (stem + "_montecarlo.csv"));
    write_monte_carlo_csv(csv, result);
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "{\n  \"samples\": %zu,\n  \"successes\": %d,\n  \"mean_delta_v_m_s\": %.17g,\n"
                  "  \"three_sigma_delta_v_m_s\": %.17g\n}\n",
                  result.samples.size(), result.successes, result.mean_dv, result.three_sigma_dv);
    std::ofstream(dir / (stem + "_montecarlo_summary.json")) << buf;
    std::cout << buf;
    if (fail_on_event) {
        for (const auto& sample : result.samples) {
            if (sample.summary.terminal != TerminalEvent::None) return kRuntime;
        }
    }
    return kOk;
}

std::vector<double> parse_values(const std::string& text) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        double v = 0.0;
        const auto [end, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc{} || end != item.data() + item.size()) {
            throw CLI::ValidationError("--values", "'" + item + "' is not a number");
        }
        values.push_back(v);
    }
    if (values.empty()) throw CLI::ValidationError("--values", "no values given");
    return values;
}

int cmd_sweep(const ScenarioArgs& a, const std::string& axis_tag, const std::string& values_text, int threads) {
    const Scenario s = load(a);
    const SweepAxis axis = parse_sweep_axis(axis_tag);
    const std::vector<double> values = parse_values(values_text);
    const auto points = run_sweep(s, axis, values, threads);

    const fs::path dir = prepare_dir(s.output.directory);
    const std::string stem = slug(s.name) + "_sweep_" + to_string(axis);
    std::ofstream csv(dir / (stem + ".csv"));
    csv << "value,t,radial_error\n";
    for (const auto& p : points) {
        for (std::size_t k = 0; k < p.time.size(); ++k) csv << p.value << ',' << p.time[k] << ',' << p.radial_error[k] << '\n';
    }
    std::printf("%-14s %12s %14s %14s %10s\n", to_string(axis).c_str(), "dv [m/s]", "settle [h]", "rms r [m]",
                "terminal");
    for (const auto& p : points) {
        std::printf("%-14.6g %12.6g %14.4f %14.6g %10s\n", p.value, p.summary.delta_v, p.summary.settling_time / 3600.0,
                    p.summary.radial.rms, to_string(p.summary.terminal).c_str());
    }
    return kOk;
}

int cmd_gravity_check(const std::string& file, const std::string& format, double scale, double density) {
    const PolyhedronShape raw = load_shape_file(file, parse_shape_format(format), scale);
    const PolyhedronShape shape = normalize_to_body_frame(raw, density);
    const GravityField poly = GravityField::polyhedron(std::make_shared<const PolyhedronShape>(shape), density);
    const double mu = poly.mu();
    const double R = shape.circumscribing_radius();
    bool all = true;
    auto report = [&](const std::string& name, bool ok, double value) {
        std::printf("%s  %-40s %.3e\n", ok ? "PASS" : "FAIL", name.c_str(), value);
        all = all && ok;
    };

    std::printf("shape %s: %zu vertices, %zu faces, volume %.6g m^3, mu %.6g m^3/s^2, R %.6g m\n", file.c_str(),
                shape.vertex_count(), shape.face_count(), signed_volume(shape), mu, R);

    std::mt19937_64 rng(7);
    std::normal_distribution<double> n01;
    auto random_dir = [&] {
        Vec3 d(n01(rng), n01(rng), n01(rng));
        return Vec3(d.normalized());
    };

    double far = 0.0;
    for (int k = 0; k < 20; ++k) {
        const Vec3 r = 50.0 * R * random_dir();
        far = std::max(far, (poly.accel(r) - point_mass_accel(mu, r)).norm() / point_mass_accel(mu, r).norm());
    }
    report("far field at 50 R vs point mass", far < 1e-3, far);

    const double outside = polyhedron_laplacian(shape, 3.0 * R * random_dir());
    report("laplacian factor outside (0)", std::abs(outside) < 1e-9, std::abs(outside));
    const double inside = polyhedron_laplacian(shape, Vec3::Zero());
    report("laplacian factor at the center (-4 pi)", std::abs(inside + 2.0 * kTwoPi) < 1e-9, std::abs(inside + 2.0 * kTwoPi));

    double grad = 0.0;
    for (int k = 0; k < 10; ++k) {
        const Vec3 r = (1.5 + k * 0.2) * R * random_dir();
        const double h = 1e-3 * R;
        Vec3 fd;
        for (int c = 0; c < 3; ++c) {
            Vec3 dr = Vec3::Zero();
            dr[c] = h;
            fd[c] = (poly.potential(r + dr) - poly.potential(r - dr)) / (2.0 * h);
        }
        grad = std::max(grad, (fd - poly.accel(r)).norm() / poly.accel(r).norm());
    }
    report("acceleration vs potential gradient", grad < 1e-5, grad);

    const HarmonicsModel h0 = harmonics_from_polyhedron(shape, density, 0, R);
    double deg0 = 0.0;
    for (int k = 0; k < 10; ++k) {
        const Vec3 r = 2.0 * R * random_dir();
        deg0 = std::max(deg0, (harmonics_accel(h0, r) - point_mass_accel(h0.mu, r)).norm() / point_mass_accel(h0.mu, r).norm());
    }
    report("degree-0 harmonics vs point mass", deg0 < 1e-14, deg0);

    const HarmonicsModel h5 = harmonics_from_polyhedron(shape, density, 5, R);
    double agree = 0.0;
    for (int k = 0; k < 20; ++k) {
        const Vec3 r = 2.0 * R * random_dir();
        agree = std::max(agree, (harmonics_accel(h5, r) - poly.accel(r)).norm() / poly.accel(r).norm());
    }
    report("degree-5 harmonics vs polyhedron at 2 R", agree < 1e-2, agree);
    return all ? kOk : kRuntime;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sliding-mode orbit keeping around small bodies"};
    app.require_subcommand(1);

    ScenarioArgs sim_args, mc_args, sweep_args;
    bool fail_on_event = false;
    bool quiet = false;
    auto* simulate = app.add_subcommand("simulate", "run one closed-loop scenario");
    add_scenario_options(simulate, sim_args);
    simulate->add_flag("--fail-on-event", fail_on_event, "exit 4 on impact or escape");
    simulate->add_flag("--quiet,-q", quiet, "do not print the summary");

    std::optional<int> samples;
    std::optional<std::uint64_t> base_seed;
    int threads = 0;
    auto* mc = app.add_subcommand("montecarlo", "insertion-dispersion Monte Carlo");
    add_scenario_options(mc, mc_args);
    mc->add_option("--samples,-n", samples, "number of samples")->check(CLI::PositiveNumber);
    mc->add_option("--base-seed", base_seed, "seed of sample 0");
    mc->add_option("--threads,-j", threads, "worker threads (0 = all cores)");
    mc->add_flag("--fail-on-event", fail_on_event, "exit 4 if any sample ends in impact or escape");

    std::string axis, values;
    int sweep_threads = 0;
    auto* sweep = app.add_subcommand("sweep", "one run per value of a controller parameter");
    add_scenario_options(sweep, sweep_args);
    sweep->add_option("--axis", axis, "D, lambda, n_phi or control_period")->required();
    sweep->add_option("--values", values, "comma-separated values")->required();
    sweep->add_option("--threads,-j", sweep_threads, "worker threads (0 = all cores)");

    std::string shape_file, shape_format = "obj";
    double scale = 1.0, density = 2000.0;
    auto* gcheck = app.add_subcommand("gravity-check", "run the gravity property checks on a shape file");
    gcheck->add_option("--shape", shape_file, "OBJ or PDS shape file")->required()->check(CLI::ExistingFile);
    gcheck->add_option("--format", shape_format, "obj or pds");
    gcheck->add_option("--scale", scale, "multiplier to metres");
    gcheck->add_option("--density", density, "kg/m^3")->check(CLI::PositiveNumber);

    std::string show_name;
    bool list_all = false;
    auto* list = app.add_subcommand("list-presets", "print the preset names");
    list->add_flag("--all", list_all, "include the parametric-study presets");
    auto* show = app.add_subcommand("show", "print a preset or scenario file as normalized JSON");
    show->add_option("name", show_name, "preset name or file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*simulate) return cmd_simulate(sim_args, fail_on_event, quiet);
        if (*mc) return cmd_montecarlo(mc_args, samples, base_seed, threads, fail_on_event);
        if (*sweep) return cmd_sweep(sweep_args, axis, values, sweep_threads);
        if (*gcheck) return cmd_gravity_check(shape_file, shape_format, scale, density);
        if (*list) {
            for (const auto& n : preset_names()) std::cout << n << "\n";
            if (list_all) {
                for (const auto& n : extra_preset_names()) std::cout << n << "\n";
            }
            return kOk;
        }
        if (*show) {
            std::cout << scenario_to_json(resolve_scenario(show_name)) << "\n";
            return kOk;
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const ScenarioError& e) {
        std::cerr << "invalid scenario: " << e.what() << "\n";
        return kValidation;
    } catch (const ShapeError& e) {
        std::cerr << "invalid shape: " << e.what() << "\n";
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
    return kUsage;
}
