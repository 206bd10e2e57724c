#include "darkstate/core.hpp"

#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"

using namespace darkstate;
using darkstate::testing::random_field;
using darkstate::testing::random_ground_vector;

namespace {

Mat3 ground_projector(const Vec3 &a, const Vec3 &b) { return a * a.adjoint() + b * b.adjoint(); }

Mat3 span_projector(const Vec3 &psi1, const Vec3 &psi2) {
    Eigen::Matrix<cplx, 3, 2> pair;
    pair << psi1, psi2;
    Eigen::HouseholderQR<Eigen::Matrix<cplx, 3, 2>> qr(pair);
    const Eigen::Matrix<cplx, 3, 2> q = qr.householderQ() * Eigen::Matrix<cplx, 3, 2>::Identity();
    return q * q.adjoint();
}

}  // namespace

TEST(Hamiltonian, AnnihilatesDarkVectors) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 10000; ++trial) {
        const FieldParams fp = random_field(rng);
        const Mat4 h = build_hamiltonian(fp, 1.0);
        const DarkBasis b = dark_basis(fp);
        EXPECT_LT((h * embed(b.n1)).norm(), 1e-12 * h.norm());
        EXPECT_LT((h * embed(b.n2)).norm(), 1e-12 * h.norm());
    }
}

TEST(Hamiltonian, IsHermitian) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const Mat4 h = build_hamiltonian(random_field(rng), 0.7);
        EXPECT_EQ(hermiticity_error(h), 0.0);
    }
}

TEST(Hamiltonian, BrightSplittingIsOneSixth) {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        FieldParams fp = random_field(rng);
        fp.omega_peak = 1.0;
        fp.delta = 0.0;
        Eigen::SelfAdjointEigenSolver<Mat4> es(build_hamiltonian(fp, 1.0));
        const Eigen::Vector4d ev = es.eigenvalues();
        EXPECT_NEAR(ev(0), -1.0 / 6.0, 1e-14);
        EXPECT_NEAR(ev(1), 0.0, 1e-14);
        EXPECT_NEAR(ev(2), 0.0, 1e-14);
        EXPECT_NEAR(ev(3), 1.0 / 6.0, 1e-14);
    }
}

TEST(Hamiltonian, EnvelopeScalesCoupling) {
    FieldParams fp;
    fp.theta = 0.4;
    fp.phi = 1.0;
    fp.omega_peak = 2.0;
    const Mat4 half = build_hamiltonian(fp, 0.5);
    fp.omega_peak = 1.0;
    EXPECT_LT((half - build_hamiltonian(fp, 1.0)).norm(), 1e-15);
}

TEST(DarkBasis, ThetaHalfPiGivesPiState) {
    FieldParams fp;
    fp.theta = kPi / 2;
    fp.phi = 0.3;
    fp.mu_minus = 1.0;
    fp.mu_plus = 2.0;
    const DarkBasis b = dark_basis(fp);
    EXPECT_LT((b.n1 - Vec3(0, 1, 0)).norm(), 1e-15);
}

TEST(DarkBasis, ThetaZeroQuarterPhi) {
    FieldParams fp;
    fp.theta = 0.0;
    fp.phi = kPi / 4;
    const DarkBasis b = dark_basis(fp);
    const double r = 1.0 / std::sqrt(2.0);
    EXPECT_LT((b.n1 - Vec3(r, 0, r)).norm(), 1e-15);
    EXPECT_LT((b.n2 - Vec3(-r, 0, r)).norm(), 1e-15);
}

TEST(DarkBasis, GramMatrixIsIdentityOnGrid) {
    // 10 points on each of the four angle axes.
    const int n = 10;
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    FieldParams fp;
                    fp.theta = kPi * i / (n - 1);
                    fp.phi = kTwoPi * j / n;
                    fp.mu_minus = kTwoPi * k / n;
                    fp.mu_plus = kTwoPi * l / n;
                    const DarkBasis b = dark_basis(fp);
                    Mat3 v;
                    v << b.n1, b.n2, b.phi_perp;
                    worst = std::max(worst, (v.adjoint() * v - Mat3::Identity()).cwiseAbs().maxCoeff());
                }
    EXPECT_LT(worst, 1e-12);
}

TEST(DarkBasis, ProjectorProperties) {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 200; ++trial) {
        const DarkBasis b = dark_basis(random_field(rng));
        const Mat4 &p = b.projector;
        EXPECT_LT((p * p - p).norm(), 1e-14);
        EXPECT_NEAR(p.trace().real(), 2.0, 1e-14);
        EXPECT_LT(p.col(kExcited).norm(), 1e-15);
    }
}

TEST(DarkBasis, IndependentOfAmplitudePhaseDetuningEnvelope) {
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 100; ++trial) {
        const FieldParams fp = random_field(rng);
        FieldParams other = random_field(rng);
        other.theta = fp.theta;
        other.phi = fp.phi;
        other.mu_minus = fp.mu_minus;
        other.mu_plus = fp.mu_plus;
        other.envelope = Envelope::SineSquared;
        other.duration = 17.0;
        EXPECT_EQ((dark_basis(fp).projector - dark_basis(other).projector).norm(), 0.0);
    }
}

TEST(OrthogonalState, Examples) {
    FieldParams fp;
    fp.theta = kPi;
    EXPECT_LT((orthogonal_state(fp) - Vec3(0, 1, 0)).norm(), 1e-15);

    fp.theta = kPi / 2;
    fp.phi = 0.0;
    fp.mu_plus = 0.0;
    EXPECT_LT((orthogonal_state(fp) - Vec3(0, 0, 1)).norm(), 1e-15);
}

TEST(OrthogonalState, OrthogonalToDarkVectors) {
    std::mt19937_64 rng(16);
    for (int trial = 0; trial < 1000; ++trial) {
        const DarkBasis b = dark_basis(random_field(rng));
        EXPECT_LT(std::abs(b.phi_perp.dot(b.n1)), 1e-12);
        EXPECT_LT(std::abs(b.phi_perp.dot(b.n2)), 1e-12);
        EXPECT_NEAR(b.phi_perp.norm(), 1.0, 1e-14);
    }
}

TEST(FieldParams, CanonicalPreservesHamiltonian) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> wide(-20.0, 20.0);
    for (int trial = 0; trial < 500; ++trial) {
        FieldParams fp = random_field(rng);
        fp.theta = wide(rng);
        fp.phi = wide(rng);
        fp.mu_minus = wide(rng);
        fp.mu_plus = wide(rng);
        const FieldParams c = fp.canonical();
        EXPECT_GE(c.theta, 0.0);
        EXPECT_LE(c.theta, kPi);
        for (double a : {c.phi, c.mu_minus, c.mu_plus}) {
            EXPECT_GE(a, 0.0);
            EXPECT_LT(a, kTwoPi);
        }
        EXPECT_LT((build_hamiltonian(fp, 1.0) - build_hamiltonian(c, 1.0)).norm(), 1e-12);
        EXPECT_LT((dark_basis(fp).projector - dark_basis(c).projector).norm(), 1e-12);
    }
}

TEST(FieldParams, ValidateRejectsNonPositiveAmplitude) {
    FieldParams fp;
    fp.omega_peak = 0.0;
    EXPECT_THROW(fp.validate(), Error);
    fp.omega_peak = 1.0;
    fp.duration = -1.0;
    EXPECT_THROW(fp.validate(), Error);
}

TEST(FieldForSpan, SigmaOnlySpanIsPurePi) {
    const SpanSolution s = field_for_span(Vec3(1, 0, 0), Vec3(0, 0, 1));
    EXPECT_TRUE(s.angles_underdetermined);
    EXPECT_NEAR(std::sin(s.field.theta), 0.0, 1e-15);
    EXPECT_EQ(s.field.phi, 0.0);
    EXPECT_EQ(s.field.mu_minus, 0.0);
    EXPECT_EQ(s.field.mu_plus, 0.0);
    const DarkBasis b = dark_basis(s.field);
    EXPECT_LT((ground_projector(b.n1, b.n2) - span_projector(Vec3(1, 0, 0), Vec3(0, 0, 1))).norm(), 1e-12);
}

TEST(FieldForSpan, PiAndSymmetricSigma) {
    const double r = 1.0 / std::sqrt(2.0);
    const Vec3 psi1(0, 1, 0), psi2(r, 0, r);
    const SpanSolution s = field_for_span(psi1, psi2);
    EXPECT_FALSE(s.angles_underdetermined);
    EXPECT_NEAR(s.field.theta, kPi / 2, 1e-12);
    EXPECT_NEAR(s.field.phi, kPi / 4, 1e-12);
    EXPECT_NEAR(s.field.mu_minus, 0.0, 1e-12);
    EXPECT_NEAR(s.field.mu_plus, kPi, 1e-12);
    const Vec3 perp = orthogonal_state(s.field);
    EXPECT_LT(std::abs(perp.dot(psi1)), 1e-12);
    EXPECT_LT(std::abs(perp.dot(psi2)), 1e-12);
}

TEST(FieldForSpan, ReproductionTargetVectors) {
    Vec3 psi1, psi2;
    psi1 << 2.0 / 7 * std::exp(kI * kPi / 3.0), 3.0 / 7 * std::exp(kI * kPi / 5.0), 6.0 / 7;
    psi2 << 3.0 / 5, 4.0 / 5 * std::exp(kI * kPi / 7.0), 0.0;
    // Independent route: the normal by Gram-Schmidt against a completing vector.
    Vec3 q1 = psi1;
    Vec3 q2 = (psi2 - q1 * q1.dot(psi2)).normalized();
    Vec3 normal = Vec3(0, 0, 1) - q1 * q1.dot(Vec3(0, 0, 1)) - q2 * q2.dot(Vec3(0, 0, 1));
    normal.normalize();

    const SpanSolution s = field_for_span(psi1, psi2);
    const Vec3 perp = orthogonal_state(s.field);
    EXPECT_LT(std::abs(perp.dot(psi1)), 1e-10);
    EXPECT_LT(std::abs(perp.dot(psi2)), 1e-10);
    EXPECT_NEAR(std::abs(perp.dot(normal)), 1.0, 1e-12);
}

TEST(FieldForSpan, RejectsDependentVectors) {
    const Vec3 v = Vec3(1, 2, 3).normalized();
    try {
        field_for_span(v, v * std::exp(kI * 0.3));
        FAIL() << "expected DegenerateSpan";
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateSpan);
    }
}

TEST(FieldForSpan, RightInverseAtSubspaceLevel) {
    std::mt19937_64 rng(18);
    for (int trial = 0; trial < 2000; ++trial) {
        const Vec3 psi1 = random_ground_vector(rng), psi2 = random_ground_vector(rng);
        const SpanSolution s = field_for_span(psi1, psi2);
        const DarkBasis b = dark_basis(s.field);
        EXPECT_LT((ground_projector(b.n1, b.n2) - span_projector(psi1, psi2)).norm(), 1e-9);
        EXPECT_LT(std::abs(b.phi_perp.dot(psi1)), 1e-10);
        EXPECT_LT(std::abs(b.phi_perp.dot(psi2)), 1e-10);
    }
}

TEST(FieldForSpan, RecoversAnglesOfDarkSpan) {
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 500; ++trial) {
        const FieldParams fp = random_field(rng);
        const DarkBasis b = dark_basis(fp);
        const SpanSolution s = field_for_span(b.n1, b.n2);
        EXPECT_LT((dark_basis(s.field).projector - b.projector).norm(), 1e-9);
    }
}

TEST(Bloch, Examples) {
    FieldParams fp;
    fp.theta = 0.8;
    fp.phi = 2.1;
    fp.mu_minus = 0.4;
    fp.mu_plus = 5.0;
    const DarkBasis b = dark_basis(fp);

    BlochPoint p = bloch_coords(DensityOperator(0.5 * b.projector), b);
    EXPECT_NEAR(p.x, 0.0, 1e-15);
    EXPECT_NEAR(p.y, 0.0, 1e-15);
    EXPECT_NEAR(p.z, 0.0, 1e-15);
    EXPECT_NEAR(p.in_span_weight, 1.0, 1e-15);

    p = bloch_coords(DensityOperator::pure(b.n1), b);
    EXPECT_NEAR(p.x, 0.0, 1e-15);
    EXPECT_NEAR(p.y, 0.0, 1e-15);
    EXPECT_NEAR(p.z, 1.0, 1e-15);
    EXPECT_NEAR(p.in_span_weight, 1.0, 1e-15);

    p = bloch_coords(DensityOperator::pure(b.phi_perp), b);
    EXPECT_NEAR(p.x, 0.0, 1e-15);
    EXPECT_NEAR(p.y, 0.0, 1e-15);
    EXPECT_NEAR(p.z, 0.0, 1e-15);
    EXPECT_NEAR(p.in_span_weight, 0.0, 1e-15);
}

TEST(Bloch, PauliAxesFollowDarkBasis) {
    FieldParams fp;
    fp.theta = 1.1;
    fp.phi = 0.3;
    const DarkBasis b = dark_basis(fp);
    const double r = 1.0 / std::sqrt(2.0);
    BlochPoint p = bloch_coords(DensityOperator::pure(Vec3(r * (b.n1 + b.n2))), b);
    EXPECT_NEAR(p.x, 1.0, 1e-14);
    p = bloch_coords(DensityOperator::pure(Vec3(r * (b.n1 + kI * b.n2))), b);
    EXPECT_NEAR(p.y, 1.0, 1e-14);
}

TEST(Bloch, AffineInRho) {
    std::mt19937_64 rng(20);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const DarkBasis b = dark_basis(random_field(rng));
        const DensityOperator r1 = darkstate::testing::random_density(rng);
        const DensityOperator r2 = darkstate::testing::random_density(rng);
        const double a = u(rng);
        const BlochPoint p1 = bloch_coords(r1, b), p2 = bloch_coords(r2, b);
        const BlochPoint mix = bloch_coords(DensityOperator(a * r1.matrix() + (1 - a) * r2.matrix()), b);
        EXPECT_NEAR(mix.x, a * p1.x + (1 - a) * p2.x, 1e-14);
        EXPECT_NEAR(mix.y, a * p1.y + (1 - a) * p2.y, 1e-14);
        EXPECT_NEAR(mix.z, a * p1.z + (1 - a) * p2.z, 1e-14);
        EXPECT_NEAR(mix.in_span_weight, a * p1.in_span_weight + (1 - a) * p2.in_span_weight, 1e-14);
        EXPECT_LE(p1.x * p1.x + p1.y * p1.y + p1.z * p1.z, p1.in_span_weight * p1.in_span_weight + 1e-9);
    }
}

TEST(TargetState, Validation) {
    const Vec3 a(1, 0, 0), b(0, 1, 0);
    EXPECT_NO_THROW(TargetState::make(0.4, 0.6, a, b));
    try {
        TargetState::make(0.4, 0.5, a, b);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidTarget);
    }
    EXPECT_THROW(TargetState::make(0.5, 0.5, a, a), Error);
    EXPECT_THROW(TargetState::make(0.5, 0.5, a, Vec3(0, 2, 0)), Error);
    const DensityOperator rho = TargetState::make(0.25, 0.75, a, b).rho();
    EXPECT_FALSE(rho.violation().has_value());
    EXPECT_NEAR(rho.trace(), 1.0, 1e-15);
}
