#pragma once

// Command implementations behind the darkstate executable. Each command
// writes its data artifacts plus a `<command>.meta.json` sidecar holding the
// wall time, so the data files are byte-identical across repeated runs.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "darkstate/io.hpp"

namespace darkstate {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitConfig = 2,
    kExitNoConvergence = 3,
    kExitIntegrator = 4,
    kExitSpectrum = 5,
};

inline int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Config:
        case ErrorKind::InvalidTarget:
        case ErrorKind::InvalidArgument:
        case ErrorKind::DegenerateSpan: return kExitConfig;
        case ErrorKind::StepSizeUnderflow:
        case ErrorKind::PositivityViolation: return kExitIntegrator;
        case ErrorKind::UnstableSpectrum:
        case ErrorKind::UnexpectedDimension: return kExitSpectrum;
        default: return kExitFailure;
    }
}

struct RunOptions {
    std::filesystem::path out = ".";
    bool strict = false;
    int threads = 1;
    std::optional<std::filesystem::path> sequence;  ///< defaults to <out>/optimize.json
    std::ostream *log = &std::cerr;
};

/// Pulse length for a given residual. The relaxation rate scales with the
/// envelope, and sin^2 averages to 1/2 but spends long stretches near zero,
/// so shaped pulses get three times the flat-top length.
inline double pulse_duration(const FieldParams &fp, const Rates &rates, double residual) {
    const double flat = recommended_duration(build_liouvillian(fp, rates, 1.0), residual);
    return fp.envelope == Envelope::Square ? flat : 3.0 * flat;
}

inline json distance_stats(const std::vector<StateDistance> &d) {
    double sum_hs = 0.0, max_hs = 0.0, sum_j = 0.0, max_j = 0.0;
    for (const StateDistance &x : d) {
        sum_hs += x.hs * x.hs;
        sum_j += x.mismatch * x.mismatch;
        max_hs = std::max(max_hs, x.hs);
        max_j = std::max(max_j, x.mismatch);
    }
    const double n = d.empty() ? 1.0 : static_cast<double>(d.size());
    return {{"count", d.size()},
            {"rms_hs", std::sqrt(sum_hs / n)},
            {"max_hs", max_hs},
            {"rms_mismatch", std::sqrt(sum_j / n)},
            {"max_mismatch", max_j}};
}

/// Grid pushed through the first l pulses for l = 1..N, in Bloch coordinates
/// of that pulse's dark basis, or of the orthonormalized target span for the
/// last stage.
struct StageCloud {
    int stage = 0;
    std::vector<BlochPoint> points;
    double radius = 0.0;  ///< largest distance from the cloud's centroid
};

inline double bounding_radius(const std::vector<BlochPoint> &pts) {
    if (pts.empty()) return 0.0;
    double cx = 0.0, cy = 0.0, cz = 0.0;
    for (const BlochPoint &p : pts) {
        cx += p.x;
        cy += p.y;
        cz += p.z;
    }
    const double n = static_cast<double>(pts.size());
    cx /= n;
    cy /= n;
    cz /= n;
    double r = 0.0;
    for (const BlochPoint &p : pts) r = std::max(r, std::hypot(p.x - cx, p.y - cy, p.z - cz));
    return r;
}

inline std::vector<StageCloud> stage_clouds(const PulseSequence &seq, const std::vector<Vec3> &states,
                                            const TargetState &target) {
    const std::size_t n = seq.size();
    std::vector<StageCloud> clouds(n);
    std::vector<DensityOperator> current;
    for (const Vec3 &v : states) current.push_back(DensityOperator::pure(v));
    const auto span = target.orthonormal_span();
    for (std::size_t l = 0; l < n; ++l) {
        const FieldParams &fp = seq.steps[l];
        const DarkBasis basis = dark_basis(fp);
        clouds[l].stage = static_cast<int>(l + 1);
        for (DensityOperator &rho : current) {
            rho = apply_map(rho, fp, seq.mode);
            clouds[l].points.push_back(l + 1 == n ? bloch_coords(rho, span.first, span.second)
                                                  : bloch_coords(rho, basis));
        }
        clouds[l].radius = bounding_radius(clouds[l].points);
    }
    return clouds;
}

namespace detail {

inline void write_meta(const RunOptions &opt, const std::string &command, double seconds) {
    write_atomic(opt.out / (command + ".meta.json"),
                 dump_json({{"command", command}, {"wall_seconds", seconds}, {"threads", opt.threads}}));
}

inline PulseSequence load_sequence(const ExperimentConfig &cfg, const RunOptions &opt) {
    const std::filesystem::path path = opt.sequence ? *opt.sequence : opt.out / "optimize.json";
    PulseSequence seq = sequence_from_json(read_json_file(path.string()), cfg.pulse());
    if (seq.mode != cfg.rates.mode)
        config_error("sequence.mode", std::string("sequence was optimized for mode ") + to_string(seq.mode) +
                                          " but the config selects " + to_string(cfg.rates.mode));
    return seq;
}

}  // namespace detail

inline int cmd_optimize(const ExperimentConfig &cfg, const RunOptions &opt) {
    const auto t0 = std::chrono::steady_clock::now();
    OptimizerSettings s = cfg.optimizer;
    s.threads = opt.threads;
    const TargetState target = cfg.target();
    const StateGrid grid = initial_state_grid(cfg.grid_resolution);
    const OptimizationResult r = optimize_sequence(target, grid, s);

    const std::vector<Vec3> test = random_pure_states(cfg.test_states, cfg.test_seed());
    json test_stats = distance_stats(state_distances(r.sequence, test, target, opt.threads));
    test_stats["seed"] = cfg.test_seed();

    const json doc = {{"command", "optimize"},
                      {"seed", r.seed},
                      {"steps", cfg.steps},
                      {"grid_resolution", cfg.grid_resolution},
                      {"sequence", sequence_json(r.sequence)},
                      {"objective", r.objective_value},
                      {"converged", r.converged},
                      {"iterations", r.iterations},
                      {"best_restart", r.best_restart},
                      {"restart_objectives", r.restart_objectives},
                      {"history", r.history},
                      {"training", distance_stats(r.per_state_distances)},
                      {"test", test_stats}};
    write_atomic(opt.out / "optimize.json", dump_json(doc));
    detail::write_meta(opt, "optimize", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());

    *opt.log << "optimize: rms " << format_double(r.objective_value) << ", test max "
             << format_double(test_stats["max_hs"].get<double>()) << "\n";
    if (opt.strict && !r.converged) {
        *opt.log << "optimize: objective above tol " << format_double(s.tol) << "\n";
        return kExitNoConvergence;
    }
    return kExitOk;
}

inline int cmd_simulate(const ExperimentConfig &cfg, const RunOptions &opt) {
    const auto t0 = std::chrono::steady_clock::now();
    const PulseSequence seq = detail::load_sequence(cfg, opt);
    const DensityOperator target = cfg.target().rho();

    json durations = json::array();
    std::vector<double> lengths;
    for (const FieldParams &fp : seq.steps) {
        lengths.push_back(pulse_duration(fp, cfg.rates, cfg.residual));
        durations.push_back(lengths.back());
    }

    std::vector<std::string> header = {"time"};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            for (const char *part : {"re", "im"})
                header.push_back("rho" + std::to_string(i) + std::to_string(j) + "_" + part);
    for (int i = 0; i < 4; ++i) header.push_back("pop" + std::to_string(i));
    header.push_back("trace");
    header.push_back("dark_weight");

    json states = json::array();
    for (std::size_t k = 0; k < cfg.initial_states.size(); ++k) {
        const DensityOperator rho0 = DensityOperator::pure(cfg.initial_states[k]);
        DensityOperator rho = rho0;
        double t_offset = 0.0;
        for (std::size_t l = 0; l < seq.size(); ++l) {
            const FieldParams &fp = seq.steps[l];
            const DarkBasis basis = dark_basis(fp);
            const Trajectory traj = integrate_master(rho, fp, cfg.rates, lengths[l], cfg.integrator);
            CsvTable csv(header);
            for (std::size_t s = 0; s < traj.times.size(); ++s) {
                const Mat4 &m = traj.states[s].matrix();
                csv.row() << t_offset + traj.times[s];
                for (int i = 0; i < 4; ++i)
                    for (int j = 0; j < 4; ++j) csv << m(i, j).real() << m(i, j).imag();
                for (int i = 0; i < 4; ++i) csv << m(i, i).real();
                csv << traj.states[s].trace() << dark_weight(traj.states[s], basis);
                csv.end_row();
            }
            write_atomic(opt.out / ("simulate_state" + std::to_string(k) + "_pulse" + std::to_string(l + 1) + ".csv"),
                         csv.str());
            rho = traj.final;
            t_offset += lengths[l];
        }
        const DensityOperator mapped = compose_sequence(rho0, seq);
        states.push_back({{"index", k},
                          {"ode_vs_map", hs_distance(rho, mapped)},
                          {"ode_vs_target", hs_distance(rho, target)},
                          {"map_vs_target", hs_distance(mapped, target)}});
    }
    const json doc = {{"command", "simulate"},
                      {"mode", to_string(seq.mode)},
                      {"residual", cfg.residual},
                      {"durations", durations},
                      {"states", states}};
    write_atomic(opt.out / "simulate_summary.json", dump_json(doc));
    detail::write_meta(opt, "simulate", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());

    double worst = 0.0;
    for (const json &s : states) worst = std::max(worst, s["ode_vs_map"].get<double>());
    *opt.log << "simulate: " << states.size() << " states, max |ode - map| " << format_double(worst) << "\n";
    return kExitOk;
}

/// Certifies each pulse (the sequence, or the config's single field) by
/// integrating random ground states for the recommended duration.
inline int cmd_verify(const ExperimentConfig &cfg, const RunOptions &opt) {
    const auto t0 = std::chrono::steady_clock::now();
    PulseSequence seq;
    seq.mode = cfg.rates.mode;
    if (cfg.field && !opt.sequence) {
        seq.steps.push_back(*cfg.field);
    } else {
        seq = detail::load_sequence(cfg, opt);
    }
    const std::vector<Vec3> inputs = random_pure_states(cfg.verify_states, mix_seed(cfg.test_seed()));

    json pulses = json::array();
    double worst = 0.0;
    for (std::size_t l = 0; l < seq.size(); ++l) {
        const FieldParams &fp = seq.steps[l];
        const double length = pulse_duration(fp, cfg.rates, cfg.residual);
        double max_d = 0.0;
        for (const Vec3 &v : inputs) {
            const DensityOperator rho0 = DensityOperator::pure(v);
            const Trajectory traj = integrate_master(rho0, fp, cfg.rates, length, cfg.integrator);
            max_d = std::max(max_d, hs_distance(traj.final, apply_map(rho0, fp, cfg.rates.mode)));
        }
        worst = std::max(worst, max_d);
        pulses.push_back({{"pulse", l + 1}, {"duration", length}, {"max_distance", max_d}});
    }
    const bool passed = worst < cfg.verify_tolerance;
    const json doc = {{"command", "verify"},
                      {"mode", to_string(seq.mode)},
                      {"residual", cfg.residual},
                      {"states", inputs.size()},
                      {"tolerance", cfg.verify_tolerance},
                      {"pulses", pulses},
                      {"max_distance", worst},
                      {"passed", passed}};
    write_atomic(opt.out / "verify.json", dump_json(doc));
    detail::write_meta(opt, "verify", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());

    *opt.log << "verify: max |ode - map| " << format_double(worst) << (passed ? " (pass)" : " (FAIL)") << "\n";
    return opt.strict && !passed ? kExitIntegrator : kExitOk;
}

inline int cmd_bloch_export(const ExperimentConfig &cfg, const RunOptions &opt) {
    const auto t0 = std::chrono::steady_clock::now();
    const PulseSequence seq = detail::load_sequence(cfg, opt);
    const StateGrid grid = initial_state_grid(cfg.grid_resolution);
    const std::vector<StageCloud> clouds = stage_clouds(seq, grid.states, cfg.target());

    CsvTable points({"stage", "x", "y", "z", "in_span_weight"});
    CsvTable radii({"stage", "radius", "points"});
    for (const StageCloud &c : clouds) {
        for (const BlochPoint &p : c.points) {
            points.row() << c.stage << p.x << p.y << p.z << p.in_span_weight;
            points.end_row();
        }
        radii.row() << c.stage << c.radius << c.points.size();
        radii.end_row();
    }
    write_atomic(opt.out / "bloch_points.csv", points.str());
    write_atomic(opt.out / "bloch_radii.csv", radii.str());
    detail::write_meta(opt, "bloch-export",
                       std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());

    if (!clouds.empty()) *opt.log << "bloch-export: final radius " << format_double(clouds.back().radius) << "\n";
    return kExitOk;
}

inline int cmd_spectrum(const ExperimentConfig &cfg, const RunOptions &opt) {
    const auto t0 = std::chrono::steady_clock::now();
    FieldParams fp;
    if (cfg.field && !opt.sequence) {
        fp = *cfg.field;
    } else {
        const PulseSequence seq = detail::load_sequence(cfg, opt);
        if (seq.size() == 0) detail::config_error("sequence.steps", "empty sequence has no field");
        fp = seq.steps.front();
    }
    const Liouvillian lv = build_liouvillian(fp, cfg.rates, 1.0);

    json eigenvalues = json::array();
    for (cplx l : spectrum(lv)) eigenvalues.push_back({{"re", l.real()}, {"im", l.imag()}});
    const double rate = slowest_rate(lv);
    const ZeroSubspace z = zero_subspace(lv);
    json durations = json::array();
    for (double eps : {1e-6, 1e-10, 1e-12})
        durations.push_back({{"residual", eps}, {"duration", recommended_duration(lv, eps)}});
    const double left_right = max_principal_angle(orthonormal_columns(ZeroSubspace::as_columns(z.left)),
                                                  orthonormal_columns(ZeroSubspace::as_columns(z.right)));

    const json doc = {{"command", "spectrum"},
                      {"mode", to_string(cfg.rates.mode)},
                      {"field", field_json(fp)},
                      {"eigenvalues", eigenvalues},
                      {"zero_dimension", z.dimension},
                      {"slowest_rate", rate},
                      {"durations", durations},
                      {"left_right_span_angle", left_right},
                      {"transpose_reading_angle", transpose_reading_angle(lv)}};
    write_atomic(opt.out / "spectrum.json", dump_json(doc));
    detail::write_meta(opt, "spectrum", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    *opt.log << "spectrum: zero dimension " << z.dimension << ", slowest rate " << format_double(rate) << "\n";
    return kExitOk;
}

inline int cmd_sweep_purity(const ExperimentConfig &cfg, const RunOptions &opt) {
    const auto t0 = std::chrono::steady_clock::now();
    if (cfg.sweep.weights.empty()) detail::config_error("sweep.weights", "missing or empty");
    OptimizerSettings s = cfg.optimizer;
    s.threads = opt.threads;
    const std::vector<SweepRow> rows = purity_sweep(cfg.psi1, cfg.psi2, cfg.sweep.weights, cfg.sweep.steps,
                                                    initial_state_grid(cfg.grid_resolution), s);
    CsvTable csv({"p1", "N", "rms_objective", "max_distance", "iterations"});
    for (const SweepRow &r : rows) {
        csv.row() << r.p1 << r.steps << r.rms_objective << r.max_distance << r.iterations;
        csv.end_row();
        *opt.log << "sweep-purity: p1 " << format_double(r.p1) << ", N " << r.steps << ", rms "
                 << format_double(r.rms_objective) << "\n";
    }
    write_atomic(opt.out / "sweep_purity.csv", csv.str());
    detail::write_meta(opt, "sweep-purity",
                       std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return kExitOk;
}

/// optimize, then simulate and bloch-export on the freshly written sequence.
inline int cmd_reproduce(const ExperimentConfig &cfg, const RunOptions &opt) {
    RunOptions chained = opt;
    chained.sequence = opt.out / "optimize.json";
    for (auto cmd : {cmd_optimize, cmd_simulate, cmd_bloch_export}) {
        const int code = cmd(cfg, chained);
        if (code != kExitOk) return code;
    }
    return kExitOk;
}

/// Runs one command, mapping library errors to exit codes.
template <typename F>
int run_guarded(F &&fn, std::ostream &err) {
    try {
        return fn();
    } catch (const Error &e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

}  // namespace darkstate
