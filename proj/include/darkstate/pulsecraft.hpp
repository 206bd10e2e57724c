#pragma once

// Search for one fixed pulse sequence that sends every initial ground state
// to a prescribed target density operator.

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "darkstate/parallel.hpp"
#include "darkstate/relax_maps.hpp"

namespace darkstate {

struct StateGrid {
    std::vector<Vec3> states;
    int resolution = 0;
};

/// Pure ground states |psi> = [cos c1, sin c1 cos c2 e^{i b2}, sin c1 sin c2 e^{i b3}]
/// on a uniform grid: amplitude angles c1, c2 on [0, pi/2] with both
/// endpoints, phases b2, b3 on [0, 2 pi) without the endpoint. The last
/// coordinate varies fastest.
inline StateGrid initial_state_grid(int resolution) {
    if (resolution < 2) throw Error(ErrorKind::InvalidArgument, "grid resolution must be at least 2");
    StateGrid grid;
    grid.resolution = resolution;
    const int n = resolution;
    grid.states.reserve(static_cast<std::size_t>(n) * n * n * n);
    for (int i = 0; i < n; ++i) {
        const double c1 = 0.5 * kPi * i / (n - 1);
        for (int j = 0; j < n; ++j) {
            const double c2 = 0.5 * kPi * j / (n - 1);
            for (int k = 0; k < n; ++k) {
                const double b2 = kTwoPi * k / n;
                for (int l = 0; l < n; ++l) {
                    const double b3 = kTwoPi * l / n;
                    Vec3 v;
                    v << std::cos(c1), std::sin(c1) * std::cos(c2) * std::exp(kI * b2),
                        std::sin(c1) * std::sin(c2) * std::exp(kI * b3);
                    grid.states.push_back(v);
                }
            }
        }
    }
    return grid;
}

/// splitmix64; used to derive independent per-restart seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Small deterministic generator (splitmix64 stream) so that draws do not
/// depend on the standard library's distribution implementations.
class SeededStream {
   public:
    explicit SeededStream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double normal() {
        // Box-Muller; u1 kept away from zero.
        const double u1 = (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }

   private:
    std::uint64_t state_;
};

/// Haar-random pure ground states.
inline std::vector<Vec3> random_pure_states(std::size_t count, std::uint64_t seed) {
    SeededStream rng(seed);
    std::vector<Vec3> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Vec3 v;
        for (int q = 0; q < 3; ++q) {
            const double re = rng.normal();
            const double im = rng.normal();
            v(q) = cplx(re, im);
        }
        out.push_back(v.normalized());
    }
    return out;
}

/// Sequence whose step l takes (theta, phi, mu_-, mu_+) from params[4l .. 4l+3]
/// and every other field from `pulse`.
inline PulseSequence sequence_from_params(const std::vector<double> &params, Mode mode,
                                          const FieldParams &pulse = {}) {
    if (params.size() % 4 != 0) throw Error(ErrorKind::InvalidArgument, "parameter vector length must be 4N");
    PulseSequence seq;
    seq.mode = mode;
    for (std::size_t l = 0; l < params.size() / 4; ++l) {
        FieldParams fp = pulse;
        fp.theta = params[4 * l];
        fp.phi = params[4 * l + 1];
        fp.mu_minus = params[4 * l + 2];
        fp.mu_plus = params[4 * l + 3];
        seq.steps.push_back(fp);
    }
    return seq;
}

struct StateDistance {
    double hs = 0.0;
    double mismatch = 0.0;
};

inline std::vector<StateDistance> state_distances(const PulseSequence &seq, const std::vector<Vec3> &states,
                                                  const TargetState &target, int threads = 1) {
    const DensityOperator rho_f = target.rho();
    std::vector<StateDistance> out(states.size());
    parallel_for(states.size(), threads, [&](std::size_t i) {
        const DensityOperator rho = compose_sequence(DensityOperator::pure(states[i]), seq);
        out[i] = {hs_distance(rho, rho_f), mismatch_J(rho, rho_f)};
    });
    return out;
}

struct ObjectiveValue {
    double rms = 0.0;
    double max = 0.0;
};

/// RMS (and max) over per-state Hilbert-Schmidt distances, summed in index order.
inline ObjectiveValue aggregate(const std::vector<StateDistance> &d) {
    ObjectiveValue v;
    if (d.empty()) return v;
    double sum = 0.0;
    for (const StateDistance &s : d) {
        sum += s.hs * s.hs;
        v.max = std::max(v.max, s.hs);
    }
    v.rms = std::sqrt(sum / static_cast<double>(d.size()));
    return v;
}

/// Reference evaluation: every grid state is pushed through compose_sequence.
inline ObjectiveValue objective(const std::vector<double> &params, const StateGrid &grid, const TargetState &target,
                                Mode mode, int threads = 1) {
    return aggregate(state_distances(sequence_from_params(params, mode), grid.states, target, threads));
}

/// Exact fast form of the grid objective. The relaxation maps are linear on
/// ground-space operators once the trace is carried along (Tr rho = 1 on the
/// grid), so the composite map is a 9x9 complex matrix and
///   mean_i ||A x_i - f||^2 = ||Z C||_F^2,
/// with Z_a = A(e_a) - Tr(e_a) rho_f and C C^dagger = mean_i x_i x_i^dagger.
/// Nothing cancels: Z is formed directly, so small objectives keep full
/// relative precision.
class MomentObjective {
   public:
    MomentObjective(const std::vector<Vec3> &states, const TargetState &target, Mode mode)
        : mode_(mode), target_(target.rho().matrix().topLeftCorner<3, 3>()) {
        using Mat9 = Eigen::Matrix<cplx, 9, 9>;
        Mat9 second = Mat9::Zero();
        for (const Vec3 &v : states) {
            const Mat3 rho = v * v.adjoint();
            Eigen::Matrix<cplx, 9, 1> x;
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k) x(3 * j + k) = rho(j, k);
            second += x * x.adjoint();
        }
        second /= static_cast<double>(states.size());
        Eigen::SelfAdjointEigenSolver<Mat9> es(second);
        const Eigen::Matrix<double, 9, 1> w = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        factor_ = es.eigenvectors() * w.asDiagonal();
    }

    /// Mean squared Hilbert-Schmidt distance (the square of the RMS objective).
    double mean_square(const std::vector<double> &params) const {
        const std::size_t steps = params.size() / 4;
        std::array<Mat3, 9> images;
        for (int a = 0; a < 9; ++a) {
            images[a].setZero();
            images[a](a / 3, a % 3) = 1.0;
        }
        for (std::size_t l = 0; l < steps; ++l) {
            FieldParams fp;
            fp.theta = params[4 * l];
            fp.phi = params[4 * l + 1];
            fp.mu_minus = params[4 * l + 2];
            fp.mu_plus = params[4 * l + 3];
            const DarkBasis basis = dark_basis(fp);
            const Mat3 p = basis.projector.topLeftCorner<3, 3>();
            Mat3 offset = Mat3::Zero();
            if (mode_ == Mode::Beta) {
                const Mat3 tilde = rho_tilde(fp).matrix().topLeftCorner<3, 3>();
                offset = tilde - p * tilde * p;
            }
            for (Mat3 &x : images) {
                const cplx tr = x.trace();
                const Mat3 projected = p * x * p;
                x = projected + 0.5 * (tr - projected.trace()) * p + tr * offset;
            }
        }
        Eigen::Matrix<cplx, 9, 9> z;
        for (int a = 0; a < 9; ++a) {
            const Mat3 diff = a / 3 == a % 3 ? Mat3(images[a] - target_) : images[a];
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k) z(3 * j + k, a) = diff(j, k);
        }
        return (z * factor_).squaredNorm();
    }

    double rms(const std::vector<double> &params) const { return std::sqrt(mean_square(params)); }

   private:
    Mode mode_;
    Mat3 target_;
    Eigen::Matrix<cplx, 9, 9> factor_;
};

struct OptimizerSettings {
    int steps = 4;
    Mode mode = Mode::Alpha;
    std::uint64_t seed = 1;
    int restarts = 8;
    int max_iter = 2000;
    double tol = 1e-6;          ///< stop once the RMS distance falls below this
    double fd_step = 1e-6;      ///< central-difference step per angle
    bool pin_last = false;      ///< keep the last pulse at the target span
    int threads = 1;
    FieldParams pulse;          ///< amplitude, detuning, envelope, duration shared by all steps
};

struct OptimizationResult {
    PulseSequence sequence;
    double objective_value = 0.0;  ///< RMS Hilbert-Schmidt distance over the grid
    std::vector<StateDistance> per_state_distances;
    std::vector<double> history;             ///< RMS per iteration, winning restart
    std::vector<double> restart_objectives;  ///< final RMS of each restart
    int iterations = 0;
    int best_restart = 0;
    std::uint64_t seed = 0;
    bool converged = false;
};

namespace detail {

struct LineMinimum {
    double alpha = 0.0;
    double value = 0.0;
};

/// Minimizes f along alpha >= 0 from f(0) = f0: bracket by golden expansion,
/// then refine with Brent's parabolic/golden search.
template <typename F>
LineMinimum line_minimize(F &&f, double f0, double alpha0) {
    constexpr double kGold = 1.618033988749895;
    constexpr double kCGold = 0.3819660112501051;
    double a = 0.0, fa = f0;
    double b = alpha0, fb = f(b);
    int shrink = 0;
    while (!(fb < fa)) {
        if (++shrink > 40) return {0.0, f0};
        b *= 0.1;
        fb = f(b);
    }
    double c = b + kGold * (b - a), fc = f(c);
    for (int k = 0; k < 60 && fc < fb; ++k) {
        a = b;
        fa = fb;
        b = c;
        fb = fc;
        c = b + kGold * (b - a);
        fc = f(c);
    }
    (void)fa;

    // Brent on [a, c] with best point b.
    double lo = std::min(a, c), hi = std::max(a, c);
    double x = b, w = b, v = b, fx = fb, fw = fb, fv = fb;
    double d = 0.0, e = 0.0;
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double tol1 = 1e-9 * std::abs(x) + 1e-18;
        const double tol2 = 2.0 * tol1;
        if (std::abs(x - mid) <= tol2 - 0.5 * (hi - lo)) break;
        bool golden = true;
        if (std::abs(e) > tol1) {
            double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            q = std::abs(q);
            const double etemp = e;
            e = d;
            if (!(std::abs(p) >= std::abs(0.5 * q * etemp) || p <= q * (lo - x) || p >= q * (hi - x))) {
                d = p / q;
                const double u = x + d;
                if (u - lo < tol2 || hi - u < tol2) d = mid >= x ? tol1 : -tol1;
                golden = false;
            }
        }
        if (golden) {
            e = x >= mid ? lo - x : hi - x;
            d = kCGold * e;
        }
        const double u = std::abs(d) >= tol1 ? x + d : x + (d >= 0 ? tol1 : -tol1);
        const double fu = f(u);
        if (fu <= fx) {
            (u >= x ? lo : hi) = x;
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            (u < x ? lo : hi) = u;
            if (fu <= fw || w == x) {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u;
                fv = fu;
            }
        }
    }
    return {x, fx};
}

struct DescentOutcome {
    std::vector<double> params;
    std::vector<double> history;
    double rms = 0.0;
    int iterations = 0;
};

/// Polak-Ribiere+ nonlinear conjugate gradient on the mean-square objective
/// over the free parameters, with central-difference gradients.
inline DescentOutcome conjugate_gradient(const MomentObjective &obj, std::vector<double> params, std::size_t n_free,
                                         const OptimizerSettings &s) {
    const std::size_t n = n_free;
    auto value = [&](const std::vector<double> &p) { return obj.mean_square(p); };
    auto gradient = [&](std::vector<double> p) {
        std::vector<double> g(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double keep = p[i];
            p[i] = keep + s.fd_step;
            const double up = value(p);
            p[i] = keep - s.fd_step;
            const double down = value(p);
            p[i] = keep;
            g[i] = (up - down) / (2.0 * s.fd_step);
        }
        return g;
    };
    auto dot = [n](const std::vector<double> &a, const std::vector<double> &b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
        return acc;
    };

    DescentOutcome out;
    double f = value(params);
    std::vector<double> g = gradient(params);
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
    bool steepest = true;
    double last_alpha = 0.0, last_slope = 0.0;
    std::vector<double> trial(params);

    for (int it = 0; it < s.max_iter; ++it) {
        if (std::sqrt(f) < s.tol) break;
        double slope = dot(g, d);
        if (!(slope < 0.0)) {
            for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
            slope = dot(g, d);
            steepest = true;
            if (!(slope < 0.0)) break;
        }
        double dmax = 0.0;
        for (double di : d) dmax = std::max(dmax, std::abs(di));
        double alpha0 = 0.1 / dmax;
        if (!steepest && last_alpha > 0.0) alpha0 = std::min(1.0 / dmax, last_alpha * last_slope / slope);

        auto along = [&](double alpha) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = params[i] + alpha * d[i];
            return value(trial);
        };
        const LineMinimum lm = line_minimize(along, f, alpha0);
        ++out.iterations;
        if (!(lm.value < f)) {
            if (steepest) {
                out.history.push_back(std::sqrt(f));
                break;
            }
            for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
            steepest = true;
            out.history.push_back(std::sqrt(f));
            continue;
        }
        for (std::size_t i = 0; i < n; ++i) params[i] += lm.alpha * d[i];
        f = lm.value;
        out.history.push_back(std::sqrt(f));
        last_alpha = lm.alpha;
        last_slope = slope;

        const std::vector<double> g_new = gradient(params);
        double beta = 0.0;
        const double gg = dot(g, g);
        if (gg > 0.0 && (it + 1) % static_cast<int>(n) != 0) {
            double num = 0.0;
            for (std::size_t i = 0; i < n; ++i) num += g_new[i] * (g_new[i] - g[i]);
            beta = std::max(0.0, num / gg);
        }
        for (std::size_t i = 0; i < n; ++i) d[i] = -g_new[i] + beta * d[i];
        steepest = beta == 0.0;
        g = g_new;
    }
    out.params = std::move(params);
    out.rms = std::sqrt(f);
    return out;
}

}  // namespace detail

/// Multi-start conjugate-gradient search. Each restart draws uniform angles
/// from its own derived seed, except the last pulse, which starts at the
/// field whose dark span is span{psi1, psi2}. The best restart wins (lowest
/// index on ties), so the result does not depend on the thread count.
inline OptimizationResult optimize_sequence(const TargetState &target, const StateGrid &grid,
                                            const OptimizerSettings &s) {
    if (s.steps < 1) throw Error(ErrorKind::InvalidArgument, "need at least one pulse");
    if (s.restarts < 1) throw Error(ErrorKind::InvalidArgument, "need at least one restart");
    if (s.max_iter < 0) throw Error(ErrorKind::InvalidArgument, "max_iter must be nonnegative");
    if (grid.states.empty()) throw Error(ErrorKind::InvalidArgument, "empty state grid");
    const MomentObjective obj(grid.states, target, s.mode);
    const FieldParams span = field_for_span(target.psi1(), target.psi2()).field;
    const std::size_t n_params = 4 * static_cast<std::size_t>(s.steps);
    const std::size_t n_free = s.pin_last ? n_params - 4 : n_params;

    std::vector<detail::DescentOutcome> outcomes(static_cast<std::size_t>(s.restarts));
    parallel_for(outcomes.size(), s.threads, [&](std::size_t r) {
        SeededStream rng(mix_seed(s.seed ^ mix_seed(r)));
        std::vector<double> p(n_params);
        for (int l = 0; l + 1 < s.steps; ++l) {
            p[4 * l] = kPi * rng.uniform();
            for (int k = 1; k < 4; ++k) p[4 * l + k] = kTwoPi * rng.uniform();
        }
        const std::size_t last = n_params - 4;
        p[last] = span.theta;
        p[last + 1] = span.phi;
        p[last + 2] = span.mu_minus;
        p[last + 3] = span.mu_plus;
        outcomes[r] = detail::conjugate_gradient(obj, std::move(p), n_free, s);
    });

    OptimizationResult result;
    result.seed = s.seed;
    std::size_t best = 0;
    for (std::size_t r = 0; r < outcomes.size(); ++r) {
        result.restart_objectives.push_back(outcomes[r].rms);
        if (outcomes[r].rms < outcomes[best].rms) best = r;
    }
    const detail::DescentOutcome &win = outcomes[best];
    result.best_restart = static_cast<int>(best);
    result.history = win.history;
    result.iterations = win.iterations;

    PulseSequence seq = sequence_from_params(win.params, s.mode, s.pulse);
    for (FieldParams &fp : seq.steps) fp = fp.canonical();
    result.sequence = seq;
    result.per_state_distances = state_distances(seq, grid.states, target, s.threads);
    result.objective_value = aggregate(result.per_state_distances).rms;
    result.converged = result.objective_value < s.tol;
    return result;
}

struct SweepRow {
    double p1 = 0.0;
    int steps = 0;
    double rms_objective = 0.0;
    double max_distance = 0.0;
    int iterations = 0;
};

/// One optimization per (weight, N) pair with the same budget; weights are
/// p1 with p2 = 1 - p1. Rows are ordered weight-major.
inline std::vector<SweepRow> purity_sweep(const Vec3 &psi1, const Vec3 &psi2, const std::vector<double> &weights,
                                          const std::vector<int> &steps, const StateGrid &grid,
                                          const OptimizerSettings &base) {
    std::vector<SweepRow> rows;
    for (double p1 : weights) {
        const TargetState target = TargetState::make(p1, 1.0 - p1, psi1, psi2);
        for (int n : steps) {
            OptimizerSettings s = base;
            s.steps = n;
            const OptimizationResult r = optimize_sequence(target, grid, s);
            const ObjectiveValue v = aggregate(r.per_state_distances);
            rows.push_back({p1, n, r.objective_value, v.max, r.iterations});
        }
    }
    return rows;
}

}  // namespace darkstate
