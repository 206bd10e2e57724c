#pragma once

// Time integration of the full master equation through one pulse, and the
// certification that long pulses reproduce the asymptotic relaxation maps.

#include <array>
#include <vector>

#include "darkstate/liouvillian.hpp"
#include "darkstate/relax_maps.hpp"

namespace darkstate {

struct Trajectory {
    std::vector<double> times;
    std::vector<DensityOperator> states;
    DensityOperator final;
};

struct IntegratorSettings {
    double rtol = 1e-9;
    double atol = 1e-12;
    int samples = 64;  ///< evenly spaced output intervals
};

namespace detail {

// Dormand-Prince 5(4) tableau.
struct DormandPrince {
    static constexpr std::array<double, 7> c{0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                            b6 = 11.0 / 84;
    // b - b_hat, the embedded error weights.
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
};

class MasterEquation {
   public:
    MasterEquation(const FieldParams &fp, const Rates &rates, double length)
        : envelope_(fp.envelope), length_(length) {
        const Liouvillian off = build_liouvillian(fp, rates, 0.0);
        const Liouvillian on = build_liouvillian(fp, rates, 1.0);
        static_ = off.m;
        drive_ = on.m - off.m;
        full_ = on.m;
        d_ = on.d;
    }

    Vec16 operator()(double t, const Vec16 &r) const {
        if (envelope_ == Envelope::Square) return full_ * r + d_;
        return static_ * r + envelope_shape(envelope_, t, length_) * (drive_ * r) + d_;
    }

    double scale() const { return full_.cwiseAbs().rowwise().sum().maxCoeff(); }

   private:
    Envelope envelope_;
    double length_;
    Mat16 static_, drive_, full_;
    Vec16 d_;
};

}  // namespace detail

inline double dark_weight(const DensityOperator &rho, const DarkBasis &basis) {
    return (basis.projector * rho.matrix()).trace().real();
}

/// Integrates d rho/dt over [0, t_final] with an adaptive Dormand-Prince 5(4)
/// pair. Snapshots are taken at `samples + 1` evenly spaced times including
/// both ends; steps are shortened to land on them exactly.
inline Trajectory integrate_master(const DensityOperator &rho0, const FieldParams &fp, const Rates &rates,
                                   double t_final, const IntegratorSettings &settings = {}) {
    if (!(t_final > 0.0)) throw Error(ErrorKind::InvalidArgument, "t_final must be positive");
    if (!(settings.rtol > 0.0) || !(settings.atol > 0.0))
        throw Error(ErrorKind::InvalidArgument, "tolerances must be positive");
    if (settings.samples < 1) throw Error(ErrorKind::InvalidArgument, "need at least one output interval");
    using DP = detail::DormandPrince;

    const detail::MasterEquation rhs(fp, rates, t_final);
    const double psd_floor = -100.0 * settings.atol;

    Trajectory traj;
    auto record = [&](double t, const Vec16 &r) {
        DensityOperator snap(unvectorize(r));
        if (snap.min_eigenvalue() < psd_floor)
            throw Error(ErrorKind::PositivityViolation, "negative eigenvalue at t = " + std::to_string(t));
        traj.times.push_back(t);
        traj.states.push_back(snap);
    };

    Vec16 y = vectorize(rho0.matrix());
    double t = 0.0;
    double h = std::min(t_final / settings.samples, 0.1 / std::max(1.0, rhs.scale()));
    record(t, y);
    Vec16 k1 = rhs(t, y);

    for (int s = 1; s <= settings.samples; ++s) {
        const double t_out = s == settings.samples ? t_final : t_final * s / settings.samples;
        while (t < t_out) {
            // Stretch a step by up to 1% rather than leave a sliver before t_out.
            const bool last = t + 1.01 * h >= t_out;
            const double step = last ? t_out - t : h;
            if (step < 1e-13 * std::max(1.0, std::abs(t)))
                throw Error(ErrorKind::StepSizeUnderflow, "step size underflow at t = " + std::to_string(t));

            const Vec16 k2 = rhs(t + DP::c[1] * step, y + step * (DP::a21 * k1));
            const Vec16 k3 = rhs(t + DP::c[2] * step, y + step * (DP::a31 * k1 + DP::a32 * k2));
            const Vec16 k4 = rhs(t + DP::c[3] * step, y + step * (DP::a41 * k1 + DP::a42 * k2 + DP::a43 * k3));
            const Vec16 k5 = rhs(t + DP::c[4] * step,
                                 y + step * (DP::a51 * k1 + DP::a52 * k2 + DP::a53 * k3 + DP::a54 * k4));
            const Vec16 k6 = rhs(t + step, y + step * (DP::a61 * k1 + DP::a62 * k2 + DP::a63 * k3 +
                                                       DP::a64 * k4 + DP::a65 * k5));
            const Vec16 y_new =
                y + step * (DP::b1 * k1 + DP::b3 * k3 + DP::b4 * k4 + DP::b5 * k5 + DP::b6 * k6);
            const Vec16 k7 = rhs(t + step, y_new);
            const Vec16 err = step * (DP::e1 * k1 + DP::e3 * k3 + DP::e4 * k4 + DP::e5 * k5 + DP::e6 * k6 +
                                      DP::e7 * k7);

            double norm = 0.0;
            for (int i = 0; i < 16; ++i) {
                const double sc = settings.atol + settings.rtol * std::max(std::abs(y(i)), std::abs(y_new(i)));
                const double q = std::abs(err(i)) / sc;
                norm += q * q;
            }
            norm = std::sqrt(norm / 16.0);
            if (!std::isfinite(norm))
                throw Error(ErrorKind::StepSizeUnderflow, "non-finite error estimate at t = " + std::to_string(t));

            const double factor = norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0);
            if (norm <= 1.0) {
                t = last ? t_out : t + step;
                y = y_new;
                k1 = k7;
                // A step clipped to an output time says nothing about the
                // natural step length; keep h unless it must shrink.
                if (!last || factor < 1.0) h = step * factor;
            } else {
                h = step * std::max(0.2, factor);
            }
        }
        record(t, y);
    }
    traj.final = traj.states.back();
    return traj;
}

/// ln(1 / residual) / slowest_rate: long enough for the slowest decaying
/// mode to shrink by `residual`.
inline double recommended_duration(const Liouvillian &lv, double residual) {
    if (!(residual > 0.0) || !(residual < 1.0))
        throw Error(ErrorKind::InvalidArgument, "residual must lie in (0, 1)");
    return std::log(1.0 / residual) / slowest_rate(lv);
}

/// Integrates one pulse for the recommended duration and returns the
/// Hilbert-Schmidt distance between the endpoint and the asymptotic map.
inline double verify_map(const DensityOperator &rho0, const FieldParams &fp, const Rates &rates, double residual,
                         const IntegratorSettings &settings = {}) {
    const Liouvillian lv = build_liouvillian(fp, rates, 1.0);
    const double duration = recommended_duration(lv, residual);
    const Trajectory traj = integrate_master(rho0, fp, rates, duration, settings);
    return hs_distance(traj.final, apply_map(rho0, fp, rates.mode));
}

}  // namespace darkstate
