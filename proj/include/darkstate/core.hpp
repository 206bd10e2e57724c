#pragma once

// Four-level Lambda system: three degenerate ground sublevels |g->, |g_pi>,
// |g+> coupled to a single excited level |e> by one elliptically polarized
// field. This header holds the state-space types, the field parameterization,
// the Hamiltonian, and the dark-state geometry that everything else builds on.

#include <Eigen/Eigenvalues>
#include <optional>
#include <string>

#include "darkstate/error.hpp"
#include "darkstate/linalg.hpp"

namespace darkstate {

enum class Envelope { Square, SineSquared };

inline const char *to_string(Envelope e) { return e == Envelope::Square ? "square" : "sine-squared"; }

/// Shape of the shared field envelope at time t of a pulse lasting `length`.
inline double envelope_shape(Envelope e, double t, double length) {
    if (e == Envelope::Square) return 1.0;
    const double s = std::sin(kPi * t / length);
    return s * s;
}

struct FieldParams {
    double theta = 0.0;
    double phi = 0.0;
    double mu_minus = 0.0;
    double mu_plus = 0.0;
    double xi = 0.0;          ///< global phase
    double omega_peak = 1.0;  ///< Rabi amplitude, units of gamma_in
    double delta = 0.0;       ///< detuning, units of gamma_in
    Envelope envelope = Envelope::Square;
    double duration = 1.0;  ///< units of 1 / gamma_in

    /// Same physical field with theta in [0, pi] and the other angles in
    /// [0, 2 pi). Folding theta > pi flips sin(theta), which is absorbed by
    /// shifting both relative phases by pi; the Hamiltonian is unchanged.
    FieldParams canonical() const {
        FieldParams c = *this;
        double t = wrap_angle(theta);
        double shift = 0.0;
        if (t > kPi) {
            t = kTwoPi - t;
            shift = kPi;
        }
        c.theta = t;
        c.phi = wrap_angle(phi);
        c.mu_minus = wrap_angle(mu_minus + shift);
        c.mu_plus = wrap_angle(mu_plus + shift);
        c.xi = wrap_angle(xi);
        return c;
    }

    void validate() const {
        for (double a : {theta, phi, mu_minus, mu_plus, xi, omega_peak, delta, duration}) {
            if (!std::isfinite(a)) throw Error(ErrorKind::InvalidArgument, "field parameter is not finite");
        }
        if (!(omega_peak > 0.0)) throw Error(ErrorKind::InvalidArgument, "omega_peak must be positive");
        if (!(duration > 0.0)) throw Error(ErrorKind::InvalidArgument, "duration must be positive");
    }
};

/// 4x4 density operator in the ordered basis {g-, g_pi, g+, e}. Construction
/// does not validate; call `violation()` or `validate()` where it matters.
class DensityOperator {
   public:
    DensityOperator() : m_(Mat4::Zero()) {}
    explicit DensityOperator(const Mat4 &m) : m_(m) {}

    static DensityOperator pure(const Vec3 &ground) { return DensityOperator(projector(ground)); }
    static DensityOperator pure(const Vec4 &v) { return DensityOperator(outer(v, v)); }

    const Mat4 &matrix() const { return m_; }
    cplx operator()(int i, int j) const { return m_(i, j); }
    double trace() const { return m_.trace().real(); }

    double min_eigenvalue() const {
        const Mat4 h = 0.5 * (m_ + m_.adjoint());
        Eigen::SelfAdjointEigenSolver<Mat4> es(h, Eigen::EigenvaluesOnly);
        return es.eigenvalues()(0);
    }

    std::optional<std::string> violation(double psd_tol = 1e-10) const {
        if (!m_.allFinite()) return "non-finite entries";
        if (hermiticity_error(m_) >= 1e-12) return "not Hermitian";
        if (min_eigenvalue() < -psd_tol) return "not positive semidefinite";
        const double tr = trace();
        if (!(tr > 0.0) || tr > 1.0 + 1e-12) return "trace outside (0, 1]";
        return std::nullopt;
    }

    void validate() const {
        if (auto v = violation()) throw Error(ErrorKind::InvalidArgument, "density operator " + *v);
    }

   private:
    Mat4 m_;
};

/// Dark vectors n1, n2 of the Hamiltonian, the bright ground vector
/// orthogonal to both, and the dark projector embedded in the 4-level space.
struct DarkBasis {
    Vec3 n1;
    Vec3 n2;
    Vec3 phi_perp;
    Mat4 projector;
};

struct BlochPoint {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double in_span_weight = 0.0;
};

/// Rabi frequencies (Omega_-, Omega_pi, Omega_+) for an instantaneous
/// amplitude omega.
inline Vec3 rabi_frequencies(const FieldParams &fp, double omega) {
    const cplx global = omega / 3.0 * std::exp(kI * fp.xi);
    const double st = std::sin(fp.theta), ct = std::cos(fp.theta);
    Vec3 r;
    r << global * std::exp(kI * fp.mu_minus) * st * std::sin(fp.phi), -global * ct,
        global * std::exp(kI * fp.mu_plus) * st * std::cos(fp.phi);
    return r;
}

/// H / hbar with Omega(t) = omega_peak * envelope_value.
inline Mat4 build_hamiltonian(const FieldParams &fp, double envelope_value) {
    const Vec3 rabi = rabi_frequencies(fp, fp.omega_peak * envelope_value);
    Mat4 h = Mat4::Zero();
    for (int q = 0; q < 3; ++q) {
        h(q, kExcited) = 0.5 * rabi(q);
        h(kExcited, q) = 0.5 * std::conj(rabi(q));
    }
    h(kExcited, kExcited) = fp.delta;
    return h;
}

inline Vec3 orthogonal_state(const FieldParams &fp) {
    const double st = std::sin(fp.theta), ct = std::cos(fp.theta);
    Vec3 v;
    v << std::exp(kI * fp.mu_minus) * st * std::sin(fp.phi), -ct, std::exp(kI * fp.mu_plus) * st * std::cos(fp.phi);
    return v;
}

inline DarkBasis dark_basis(const FieldParams &fp) {
    const double st = std::sin(fp.theta), ct = std::cos(fp.theta);
    const double sp = std::sin(fp.phi), cp = std::cos(fp.phi);
    DarkBasis b;
    b.n1 << std::exp(kI * fp.mu_minus) * ct * sp, st, std::exp(kI * fp.mu_plus) * ct * cp;
    b.n2 << -std::exp(-kI * fp.mu_plus) * cp, 0.0, std::exp(-kI * fp.mu_minus) * sp;
    b.phi_perp = orthogonal_state(fp);
    b.projector = projector(b.n1) + projector(b.n2);
    return b;
}

/// Weighted pair of ground-space vectors, rho_f = p1 |psi1><psi1| + p2 |psi2><psi2|.
class TargetState {
   public:
    static TargetState make(double p1, double p2, const Vec3 &psi1, const Vec3 &psi2) {
        if (!(p1 >= 0.0) || !(p2 >= 0.0) || std::abs(p1 + p2 - 1.0) > 1e-9)
            throw Error(ErrorKind::InvalidTarget, "weights must be nonnegative and sum to 1");
        if (std::abs(psi1.norm() - 1.0) > 1e-9 || std::abs(psi2.norm() - 1.0) > 1e-9)
            throw Error(ErrorKind::InvalidTarget, "target vectors must have unit norm");
        Eigen::Matrix<cplx, 3, 2> pair;
        pair << psi1, psi2;
        Eigen::JacobiSVD<Eigen::Matrix<cplx, 3, 2>> svd(pair);
        if (svd.singularValues()(1) <= 1e-10)
            throw Error(ErrorKind::InvalidTarget, "target vectors are linearly dependent");
        return TargetState(p1, p2, psi1, psi2);
    }

    double p1() const { return p1_; }
    double p2() const { return p2_; }
    const Vec3 &psi1() const { return psi1_; }
    const Vec3 &psi2() const { return psi2_; }

    DensityOperator rho() const { return DensityOperator(p1_ * projector(psi1_) + p2_ * projector(psi2_)); }

    /// Orthonormal pair spanning {psi1, psi2}, psi1 first.
    std::pair<Vec3, Vec3> orthonormal_span() const {
        Vec3 a = psi1_.normalized();
        Vec3 b = psi2_ - a * a.dot(psi2_);
        return {a, b.normalized()};
    }

   private:
    TargetState(double p1, double p2, Vec3 psi1, Vec3 psi2) : p1_(p1), p2_(p2), psi1_(psi1), psi2_(psi2) {}

    double p1_;
    double p2_;
    Vec3 psi1_;
    Vec3 psi2_;
};

struct SpanSolution {
    FieldParams field;
    /// Set when sin(theta) vanishes: the polarization is pure pi and phi,
    /// mu_-, mu_+ are unobservable (reported as 0).
    bool angles_underdetermined = false;
};

/// Polarization angles whose dark subspace equals span{psi1, psi2}. Only the
/// angles are set; the remaining fields keep their defaults.
inline SpanSolution field_for_span(const Vec3 &psi1, const Vec3 &psi2) {
    Eigen::Matrix<cplx, 3, 2> pair;
    pair << psi1, psi2;
    Eigen::JacobiSVD<Eigen::Matrix<cplx, 3, 2>> svd(pair);
    if (svd.singularValues()(1) < 1e-10) throw Error(ErrorKind::DegenerateSpan, "spanning vectors are dependent");

    // <c|psi> = det[psi1 psi2 psi] = 0 for psi in the span. Written out
    // because Eigen's complex cross product conjugates its operands.
    Vec3 c;
    c << std::conj(psi1(1) * psi2(2) - psi1(2) * psi2(1)), std::conj(psi1(2) * psi2(0) - psi1(0) * psi2(2)),
        std::conj(psi1(0) * psi2(1) - psi1(1) * psi2(0));
    c.normalize();

    // Gauge: pi component real and nonpositive. If it vanishes, make the
    // first nonvanishing sigma component real and positive instead.
    constexpr double kZero = 1e-12;
    if (std::abs(c(kGPi)) > kZero) {
        c *= -std::abs(c(kGPi)) / c(kGPi);
    } else {
        c(kGPi) = 0.0;
        const int ref = std::abs(c(kGMinus)) > kZero ? kGMinus : kGPlus;
        c *= std::abs(c(ref)) / c(ref);
    }

    SpanSolution out;
    FieldParams &fp = out.field;
    fp.theta = std::acos(std::clamp(-c(kGPi).real(), -1.0, 1.0));
    if (std::sin(fp.theta) < kZero) {
        out.angles_underdetermined = true;
        fp.phi = fp.mu_minus = fp.mu_plus = 0.0;
        return out;
    }
    fp.mu_minus = std::abs(c(kGMinus)) > kZero ? wrap_angle(std::arg(c(kGMinus))) : 0.0;
    fp.mu_plus = std::abs(c(kGPlus)) > kZero ? wrap_angle(std::arg(c(kGPlus))) : 0.0;
    fp.phi = std::atan2(std::abs(c(kGMinus)), std::abs(c(kGPlus)));
    return out;
}

/// Bloch coordinates of rho projected onto span{n1, n2}; sigma_z = +1 on n1.
/// Coordinates are not normalized by the in-span weight.
inline BlochPoint bloch_coords(const DensityOperator &rho, const Vec3 &n1, const Vec3 &n2) {
    const Vec4 a = embed(n1), b = embed(n2);
    const Mat4 &m = rho.matrix();
    const cplx b11 = a.dot(m * a), b22 = b.dot(m * b), b12 = a.dot(m * b);
    BlochPoint p;
    p.x = 2.0 * b12.real();
    p.y = -2.0 * b12.imag();
    p.z = (b11 - b22).real();
    p.in_span_weight = (b11 + b22).real();
    return p;
}

inline BlochPoint bloch_coords(const DensityOperator &rho, const DarkBasis &basis) {
    return bloch_coords(rho, basis.n1, basis.n2);
}

}  // namespace darkstate
