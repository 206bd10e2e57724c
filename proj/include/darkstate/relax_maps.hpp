#pragma once

// Asymptotic input-output maps of a single pulse (the t -> infinity limit of
// the master equation), their composition over a pulse sequence, and the two
// state-distance metrics.

#include <vector>

#include "darkstate/core.hpp"

namespace darkstate {

enum class Mode { Alpha, Beta };

inline const char *to_string(Mode m) { return m == Mode::Alpha ? "alpha" : "beta"; }

struct PulseSequence {
    std::vector<FieldParams> steps;
    Mode mode = Mode::Alpha;

    std::size_t size() const { return steps.size(); }
};

namespace detail {

inline void require_unit_trace(const DensityOperator &rho) {
    if (std::abs(rho.trace() - 1.0) > 1e-9)
        throw Error(ErrorKind::TraceMismatch, "input trace " + std::to_string(rho.trace()) + " differs from 1");
}

}  // namespace detail

/// rho' + (1 - Tr rho') P_D / 2 with rho' = P_D rho P_D.
inline DensityOperator apply_Ta(const DensityOperator &rho, const DarkBasis &basis) {
    detail::require_unit_trace(rho);
    const Mat4 &p = basis.projector;
    const Mat4 projected = p * rho.matrix() * p;
    return DensityOperator(projected + 0.5 * (1.0 - projected.trace().real()) * p);
}

/// Constant solution of the repumped (mode beta) equations.
inline DensityOperator rho_tilde(const FieldParams &fp) {
    const double s = std::sin(fp.phi), c = std::cos(fp.phi);
    Mat4 m = Mat4::Zero();
    m(kGPlus, kGPlus) = s * s;
    m(kGMinus, kGMinus) = c * c;
    const cplx coherence = 0.5 * std::exp(kI * (fp.mu_plus - fp.mu_minus)) * std::sin(2.0 * fp.phi);
    m(kGPlus, kGMinus) = -coherence;
    m(kGMinus, kGPlus) = -std::conj(coherence);
    return DensityOperator(m);
}

/// rho~ - rho~' + rho' + (1 - Tr rho') P_D / 2.
inline DensityOperator apply_Tb(const DensityOperator &rho, const FieldParams &fp) {
    detail::require_unit_trace(rho);
    const DarkBasis basis = dark_basis(fp);
    const Mat4 &p = basis.projector;
    const Mat4 tilde = rho_tilde(fp).matrix();
    const Mat4 projected = p * rho.matrix() * p;
    return DensityOperator(tilde - p * tilde * p + projected + 0.5 * (1.0 - projected.trace().real()) * p);
}

inline DensityOperator apply_map(const DensityOperator &rho, const FieldParams &fp, Mode mode) {
    return mode == Mode::Alpha ? apply_Ta(rho, dark_basis(fp)) : apply_Tb(rho, fp);
}

inline DensityOperator compose_sequence(const DensityOperator &rho_in, const PulseSequence &seq) {
    DensityOperator rho = rho_in;
    if (seq.steps.empty()) detail::require_unit_trace(rho);
    for (const FieldParams &fp : seq.steps) rho = apply_map(rho, fp, seq.mode);
    return rho;
}

/// (1 - Tr{rho_bar rho_f})^(1/2). Radicands within 1e-12 of zero (either
/// sign) are rounding noise and give exactly 0.
inline double mismatch_J(const DensityOperator &rho_bar, const DensityOperator &rho_f) {
    const double overlap = (rho_bar.matrix() * rho_f.matrix()).trace().real();
    if (overlap > 1.0 + 1e-9) throw Error(ErrorKind::NegativeRadicand, "overlap exceeds 1");
    const double radicand = 1.0 - overlap;
    if (radicand <= 1e-12) return 0.0;
    return std::sqrt(radicand);
}

/// Hilbert-Schmidt distance sqrt(Tr{(rho_bar - rho_f)^2}).
inline double hs_distance(const DensityOperator &rho_bar, const DensityOperator &rho_f) {
    return (rho_bar.matrix() - rho_f.matrix()).norm();
}

}  // namespace darkstate
