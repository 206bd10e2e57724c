#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace darkstate {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3cd;
using Vec4 = Eigen::Vector4cd;
using Mat3 = Eigen::Matrix3cd;
using Mat4 = Eigen::Matrix4cd;
using Vec16 = Eigen::Matrix<cplx, 16, 1>;
using Mat16 = Eigen::Matrix<cplx, 16, 16>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

/// Basis ordering used throughout: |g-> , |g_pi>, |g+>, |e>.
enum Level : int { kGMinus = 0, kGPi = 1, kGPlus = 2, kExcited = 3 };

/// Row-major vectorization, r[4 i + j] = rho(i, j).
inline Vec16 vectorize(const Mat4 &rho) {
    Vec16 r;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) r(4 * i + j) = rho(i, j);
    return r;
}

inline Mat4 unvectorize(const Vec16 &r) {
    Mat4 rho;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) rho(i, j) = r(4 * i + j);
    return rho;
}

/// Scalar product (r1|r2) = sum conj(r1_s) r2_s, i.e. Tr{rho1^dagger rho2}.
inline cplx scalar_product(const Vec16 &a, const Vec16 &b) { return a.dot(b); }

inline Vec4 embed(const Vec3 &ground) {
    Vec4 v;
    v << ground(0), ground(1), ground(2), cplx{0.0, 0.0};
    return v;
}

inline Mat4 outer(const Vec4 &a, const Vec4 &b) { return a * b.adjoint(); }

inline Mat4 projector(const Vec3 &ground) {
    const Vec4 v = embed(ground);
    return outer(v, v);
}

inline double hermiticity_error(const Mat4 &m) { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }

/// Wraps into [0, 2 pi).
inline double wrap_angle(double a) {
    double w = std::fmod(a, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    if (w >= kTwoPi) w = 0.0;
    return w;
}

/// Orthonormal basis of the column span of `cols`.
inline Eigen::MatrixXcd orthonormal_columns(const Eigen::MatrixXcd &cols) {
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(cols);
    return qr.householderQ() * Eigen::MatrixXcd::Identity(cols.rows(), cols.cols());
}

/// Largest principal angle between two subspaces given by orthonormal
/// columns. Computed from the sine (residual of projecting b onto a) so that
/// angles near zero are resolved to machine precision.
inline double max_principal_angle(const Eigen::MatrixXcd &a, const Eigen::MatrixXcd &b) {
    if (a.cols() != b.cols()) return kPi / 2.0;
    if (a.cols() == 0) return 0.0;
    const Eigen::MatrixXcd residual = b - a * (a.adjoint() * b);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(residual);
    const double s = std::min(1.0, svd.singularValues()(0));
    return std::asin(s);
}

}  // namespace darkstate
