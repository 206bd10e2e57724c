#pragma once

// Vectorized master-equation generator d r / dt = M r + d, its spectrum, and
// the zero subspaces that define the relaxation maps.

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <vector>

#include "darkstate/core.hpp"
#include "darkstate/relax_maps.hpp"

namespace darkstate {

struct Rates {
    double gamma_in = 1.0;
    double gamma_ext = 0.0;
    double r_pump = 0.0;
    Mode mode = Mode::Alpha;

    static Rates alpha(double gamma_in = 1.0) { return {gamma_in, 0.0, 0.0, Mode::Alpha}; }
    static Rates beta(double gamma_in, double gamma_ext, double r_pump) {
        return {gamma_in, gamma_ext, r_pump, Mode::Beta};
    }

    void validate() const {
        if (!(gamma_in > 0.0) || !std::isfinite(gamma_in))
            throw Error(ErrorKind::InvalidArgument, "gamma_in must be positive");
        if (mode == Mode::Alpha && (gamma_ext != 0.0 || r_pump != 0.0))
            throw Error(ErrorKind::InvalidArgument, "mode alpha requires gamma_ext = r_pump = 0");
        if (mode == Mode::Beta && (!(gamma_ext > 0.0) || !(r_pump > 0.0) || !std::isfinite(gamma_ext) ||
                                   !std::isfinite(r_pump)))
            throw Error(ErrorKind::InvalidArgument, "mode beta requires gamma_ext > 0 and r_pump > 0");
    }
};

struct Liouvillian {
    Mat16 m;  ///< linear part (M in mode alpha, M' in mode beta)
    Vec16 d;  ///< constant repump drive
    Rates rates;
    FieldParams field;
};

struct ZeroSubspace {
    std::vector<Vec16> right;
    std::vector<Vec16> left;
    int dimension = 0;

    static Eigen::MatrixXcd as_columns(const std::vector<Vec16> &vs) {
        Eigen::MatrixXcd out(16, static_cast<Eigen::Index>(vs.size()));
        for (std::size_t k = 0; k < vs.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = vs[k];
        return out;
    }
};

namespace detail {

/// Row-major vec(A X B) = (A kron B^T) vec(X).
inline Mat16 sandwich(const Mat4 &a, const Mat4 &b) {
    Mat16 out;
    const Mat4 bt = b.transpose();
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k) out.block<4, 4>(4 * i, 4 * k) = a(i, k) * bt;
    return out;
}

inline int expected_zero_dimension(Mode mode) { return mode == Mode::Alpha ? 4 : 3; }

}  // namespace detail

inline Liouvillian build_liouvillian(const FieldParams &fp, const Rates &rates, double envelope_value) {
    const Mat4 id = Mat4::Identity();
    const Mat4 h = build_hamiltonian(fp, envelope_value);

    Mat16 m = -kI * (detail::sandwich(h, id) - detail::sandwich(id, h));

    const double inv_sqrt3 = 1.0 / std::sqrt(3.0);
    for (int q = 0; q < 3; ++q) {
        Mat4 jump = Mat4::Zero();
        jump(q, kExcited) = inv_sqrt3;
        const Mat4 jj = jump.adjoint() * jump;
        m += 0.5 * rates.gamma_in *
             (2.0 * detail::sandwich(jump, jump.adjoint()) - detail::sandwich(jj, id) - detail::sandwich(id, jj));
    }

    Mat4 excited = Mat4::Zero();
    excited(kExcited, kExcited) = 1.0;
    m -= 0.5 * rates.gamma_ext * (detail::sandwich(excited, id) + detail::sandwich(id, excited));

    // R_p (1 - Tr rho) L_e: the -R_p Tr(rho) L_e part is linear, R_p L_e is the drive.
    const Vec16 e_vec = vectorize(excited);
    const Vec16 trace_row = vectorize(id);
    m -= rates.r_pump * e_vec * trace_row.transpose();

    return Liouvillian{m, rates.r_pump * e_vec, rates, fp};
}

/// Orthonormal bases of the right null space of m and of m^dagger, by
/// singular-value thresholding relative to the largest singular value.
struct NullSpaces {
    Eigen::MatrixXcd right;
    Eigen::MatrixXcd left;
    Eigen::VectorXd singular_values;
};

inline NullSpaces null_spaces(const Mat16 &m, double rel_tol = 1e-10) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::VectorXd &s = svd.singularValues();
    const double cutoff = rel_tol * s(0);
    Eigen::Index rank = 0;
    while (rank < s.size() && s(rank) >= cutoff) ++rank;
    const Eigen::Index k = s.size() - rank;
    return {svd.matrixV().rightCols(k), svd.matrixU().rightCols(k), s};
}

inline ZeroSubspace zero_subspace(const Liouvillian &lv) {
    const NullSpaces ns = null_spaces(lv.m);
    const int dim = static_cast<int>(ns.right.cols());
    const int expected = detail::expected_zero_dimension(lv.rates.mode);
    if (dim != expected)
        throw Error(ErrorKind::UnexpectedDimension,
                    "null dimension " + std::to_string(dim) + ", expected " + std::to_string(expected));

    // Rescale the left vectors so that (left_k | right_l) = delta_kl.
    const Eigen::MatrixXcd gram = ns.left.adjoint() * ns.right;
    const Eigen::MatrixXcd left = ns.left * gram.inverse().adjoint();

    ZeroSubspace z;
    z.dimension = dim;
    for (int k = 0; k < dim; ++k) {
        z.right.push_back(ns.right.col(k));
        z.left.push_back(left.col(k));
    }
    return z;
}

/// Zero modes assembled from the dark states: the three traceless Hermitian
/// combinations plus, in mode alpha, P_D / sqrt 2 on the right paired with
/// I / sqrt 2 on the left.
inline ZeroSubspace closed_form_zero_modes(const DarkBasis &basis, Mode mode) {
    const Vec4 a = embed(basis.n1), b = embed(basis.n2);
    const double r = 1.0 / std::sqrt(2.0);
    std::vector<Mat4> right = {
        r * (outer(a, a) - outer(b, b)),
        r * (outer(a, b) + outer(b, a)),
        kI * r * (outer(b, a) - outer(a, b)),
    };
    std::vector<Mat4> left = right;
    if (mode == Mode::Alpha) {
        right.push_back(r * (outer(a, a) + outer(b, b)));
        left.push_back(r * Mat4::Identity());
    }
    ZeroSubspace z;
    z.dimension = static_cast<int>(right.size());
    for (std::size_t k = 0; k < right.size(); ++k) {
        z.right.push_back(vectorize(right[k]));
        z.left.push_back(vectorize(left[k]));
    }
    return z;
}

/// Constant solution r~ of M' r~ = -d. The system is singular along the
/// zero modes of M'; the numerical least-squares solution is completed along
/// those directions towards the dark-state closed form, and the closed form is
/// returned once both agree and it solves the system.
inline DensityOperator steady_affine(const Liouvillian &lv) {
    if (lv.rates.mode != Mode::Beta)
        throw Error(ErrorKind::InvalidArgument, "steady_affine requires mode beta");
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(lv.m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    svd.setThreshold(1e-10);
    const Eigen::VectorXcd least_squares = svd.solve(Eigen::VectorXcd(-lv.d));

    const NullSpaces ns = null_spaces(lv.m);
    const DensityOperator closed = rho_tilde(lv.field);
    const Vec16 closed_vec = vectorize(closed.matrix());
    const Vec16 solution = least_squares + ns.right * (ns.right.adjoint() * (closed_vec - least_squares));

    const double residual = (lv.m * closed_vec + lv.d).norm();
    const double mismatch = (solution - closed_vec).norm();
    if (residual > 1e-10 || mismatch > 1e-10)
        throw Error(ErrorKind::SingularSystem, "no constant solution matches the dark-state form (residual " +
                                                   std::to_string(residual) + ", mismatch " +
                                                   std::to_string(mismatch) + ")");
    return closed;
}

/// Eigenvalues sorted by decreasing real part, ties by imaginary part.
inline std::vector<cplx> spectrum(const Liouvillian &lv) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(lv.m, false);
    std::vector<cplx> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(ev.begin(), ev.end(), [](cplx a, cplx b) {
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() < b.imag();
    });
    return ev;
}

/// Smallest |Re lambda| over eigenvalues that are nonzero relative to the
/// spectral radius. This rate bounds how fast relaxation completes.
inline double slowest_rate(const Liouvillian &lv) {
    const std::vector<cplx> ev = spectrum(lv);
    double radius = 0.0;
    for (cplx l : ev) {
        if (l.real() > 1e-9) throw Error(ErrorKind::UnstableSpectrum, "eigenvalue with positive real part");
        radius = std::max(radius, std::abs(l));
    }
    double slowest = std::numeric_limits<double>::infinity();
    for (cplx l : ev)
        if (std::abs(l) > 1e-9 * radius) slowest = std::min(slowest, std::abs(l.real()));
    if (!std::isfinite(slowest) || slowest <= 0.0)
        throw Error(ErrorKind::UnstableSpectrum, "no decaying eigenvalue");
    return slowest;
}

/// Largest principal angle between null(m^T) and null(m^dagger). Zero means
/// reading the left eigenvectors with a plain transpose gives the same span.
inline double transpose_reading_angle(const Liouvillian &lv) {
    const NullSpaces adjoint = null_spaces(lv.m);
    const NullSpaces transposed = null_spaces(lv.m.conjugate());  // null(m^T) = right null of (m^T)^dagger
    return max_principal_angle(adjoint.left, transposed.left);
}

}  // namespace darkstate
