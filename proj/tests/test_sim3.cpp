#include "chunkalign/sim3.hpp"

#include "chunkalign/error.hpp"
#include "chunkalign/rng.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace chunkalign {
namespace {

using testsupport::matrix_exp;
using testsupport::random_sim3;
using testsupport::random_tangent;
using testsupport::sim3_hat;
using testsupport::sim3_matrix;
using testsupport::w_matrix_quadrature;
using Mat4 = testsupport::Mat4;

double diff(const Sim3& a, const Sim3& b) {
  return (sim3_matrix(a) - sim3_matrix(b)).cwiseAbs().maxCoeff();
}

TEST(Sim3, IdentityCompose) {
  Rng rng(1);
  const Sim3 s = random_sim3(rng);
  EXPECT_LT(diff(Sim3::identity() * s, s), 1e-15);
  EXPECT_LT(diff(s * Sim3::identity(), s), 1e-15);
}

TEST(Sim3, InverseLaw) {
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const Sim3 s = random_sim3(rng);
    EXPECT_LT(diff(s * s.inverse(), Sim3::identity()), 1e-12);
    EXPECT_LT(diff(s.inverse() * s, Sim3::identity()), 1e-12);
    EXPECT_LT(diff(s.inverse().inverse(), s), 1e-12);
  }
}

TEST(Sim3, InverseHandExample) {
  // s'R'(sRp + t) + t' = p  =>  s' = 1/2, t' = (-2, 0, 0).
  const Sim3 s(2.0, Mat3::Identity(), Vec3(4, 0, 0));
  const Sim3 inv = s.inverse();
  EXPECT_NEAR(inv.scale(), 0.5, 1e-15);
  EXPECT_LT((inv.translation() - Vec3(-2, 0, 0)).norm(), 1e-15);
}

TEST(Sim3, ComposeHandExample) {
  // Outer: scale 2, rotate 90 deg about z, translate (1,0,0).
  // Inner: pure translation (1,0,0). Applied to the origin:
  // inner gives (1,0,0); outer maps it to 2*rot_z(90)*(1,0,0) + (1,0,0) = (1,2,0).
  const Sim3 outer(2.0, so3_exp(Vec3(0, 0, M_PI / 2)), Vec3(1, 0, 0));
  const Sim3 inner(1.0, Mat3::Identity(), Vec3(1, 0, 0));
  const Vec3 composed = (outer * inner).apply(Vec3::Zero());
  EXPECT_LT((composed - Vec3(1, 2, 0)).norm(), 1e-12);
  EXPECT_NEAR((outer * inner).scale(), 2.0, 1e-15);
}

TEST(Sim3, ComposeMatchesSequentialApplication) {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const Sim3 a = random_sim3(rng);
    const Sim3 b = random_sim3(rng);
    const Vec3 p = rng.gaussian3() * 3.0;
    EXPECT_LT(((a * b).apply(p) - a.apply(b.apply(p))).norm(), 1e-10);
  }
}

TEST(Sim3, GroupLaws1000Elements) {
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const Sim3 a = random_sim3(rng);
    const Sim3 b = random_sim3(rng);
    const Sim3 c = random_sim3(rng);
    // Associativity, scaled to the operands' magnitude.
    const double magnitude = std::max({1.0, sim3_matrix(a * b).cwiseAbs().maxCoeff(),
                                       sim3_matrix(b * c).cwiseAbs().maxCoeff()});
    EXPECT_LT(diff((a * b) * c, a * (b * c)) / magnitude, 1e-10);
    EXPECT_LT(diff(a * Sim3::identity(), a), 1e-12);
    EXPECT_LT(diff(a * a.inverse(), Sim3::identity()), 1e-10);
  }
}

TEST(Sim3, ExpZeroIsIdentity) {
  const Sim3 s = Sim3::exp(Sim3Tangent{});
  EXPECT_LT(diff(s, Sim3::identity()), 1e-15);
}

TEST(Sim3, ExpPureTranslation) {
  const Sim3 s = Sim3::exp(Sim3Tangent(Vec3(1, 0, 0), Vec3::Zero(), 0.0));
  EXPECT_LT((s.translation() - Vec3(1, 0, 0)).norm(), 1e-15);
  EXPECT_NEAR(s.scale(), 1.0, 1e-15);
}

TEST(Sim3, LogPureScale) {
  const Sim3 s(std::exp(1.0), Mat3::Identity(), Vec3::Zero());
  const Sim3Tangent xi = s.log();
  EXPECT_NEAR(xi.lambda, 1.0, 1e-12);
  EXPECT_LT(xi.omega.norm(), 1e-12);
  EXPECT_LT(xi.upsilon.norm(), 1e-12);
}

TEST(Sim3, LogIdentityIsZero) {
  EXPECT_LT(Sim3::identity().log().vector().norm(), 1e-15);
}

TEST(Sim3, ExpAgainstMatrixExponential) {
  Rng rng(5);
  for (int i = 0; i < 300; ++i) {
    const Sim3Tangent xi = random_tangent(rng);
    const Mat4 expected = matrix_exp(sim3_hat(xi));
    const Mat4 actual = sim3_matrix(Sim3::exp(xi));
    EXPECT_LT((expected - actual).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Sim3, ExpLogRoundTrip1000) {
  Rng rng(6);
  for (int i = 0; i < 1000; ++i) {
    Sim3Tangent xi = random_tangent(rng);
    xi.omega = xi.omega.normalized() * rng.uniform(0.0, M_PI - 1e-3);
    const Sim3Tangent back = Sim3::exp(xi).log();
    EXPECT_LT((back.vector() - xi.vector()).norm(), 1e-9);
  }
}

TEST(Sim3, LogExpRoundTripOnGroup) {
  Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    const Sim3 s = random_sim3(rng);
    EXPECT_LT(diff(Sim3::exp(s.log()), s), 1e-9);
  }
}

TEST(Sim3, SmallAngleSeriesAgreement) {
  // At 1e-8 magnitudes exp must match the leading-order series to 1e-12
  // without NaN or cancellation.
  const double eps = 1e-8;
  const Vec3 axis = Vec3(1, -2, 0.5).normalized();
  const Sim3Tangent xi(Vec3(0.3, -0.7, 0.2), axis * eps, eps);
  const Sim3 s = Sim3::exp(xi);
  ASSERT_TRUE(sim3_matrix(s).allFinite());

  // Series: R ~ I + hat(omega); scale ~ 1 + lambda; W ~ I + hat(omega)/2 + lambda/2 I.
  const Mat3 rotation_series = Mat3::Identity() + skew(xi.omega);
  EXPECT_LT((s.rotation() - rotation_series).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(s.scale(), 1.0 + xi.lambda, 1e-12);
  const Mat3 w_series =
      Mat3::Identity() * (1.0 + xi.lambda / 2.0) + 0.5 * skew(xi.omega);
  EXPECT_LT((s.translation() - w_series * xi.upsilon).norm(), 1e-12);

  const Sim3Tangent back = s.log();
  EXPECT_LT((back.vector() - xi.vector()).norm(), 1e-12);
}

TEST(Sim3, WMatrixAgainstQuadratureAcrossRegimes) {
  // Sweep both variables through the series switchover.
  for (double theta : {0.0, 1e-9, 1e-6, 9e-6, 1.1e-5, 1e-4, 1e-2, 0.5, 2.0, 3.0}) {
    for (double lambda : {0.0, 1e-9, 1e-6, 9e-6, 1.1e-5, 1e-4, 1e-2, 0.5, -0.5, 2.0}) {
      const Vec3 omega = Vec3(0.26726, -0.53452, 0.80178) * theta;
      const Sim3Tangent xi(Vec3(0.7, -0.3, 1.1), omega, lambda);
      const Sim3 s = Sim3::exp(xi);
      const Vec3 expected = w_matrix_quadrature(omega, lambda) * xi.upsilon;
      EXPECT_LT((s.translation() - expected).norm(), 1e-9)
          << "theta=" << theta << " lambda=" << lambda;
    }
  }
}

TEST(Sim3, LogSingularityAtPi) {
  const Sim3 s(1.0, so3_exp(Vec3(M_PI, 0, 0)), Vec3::Zero());
  EXPECT_THROW(s.log(), LogSingularityError);
}

TEST(Sim3, ActExamples) {
  Rng rng(8);
  const std::vector<Vec3> points = {Vec3(1, 1, 1), Vec3(0, 0, 0), Vec3(-2, 3, 5)};
  const auto unchanged = act(Sim3::identity(), points);
  for (std::size_t i = 0; i < points.size(); ++i) {
    EXPECT_LT((unchanged[i] - points[i]).norm(), 1e-15);
  }
  const Sim3 doubler(2.0, Mat3::Identity(), Vec3::Zero());
  EXPECT_LT((doubler.apply(Vec3(1, 1, 1)) - Vec3(2, 2, 2)).norm(), 1e-15);
}

TEST(Sim3, ActEquivariance) {
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    const Sim3 a = random_sim3(rng);
    const Sim3 b = random_sim3(rng);
    const Vec3 p = rng.gaussian3() * 2.0;
    const Vec3 lhs = (a * b).apply(p);
    const Vec3 rhs = a.apply(b.apply(p));
    const double magnitude = std::max(1.0, rhs.norm());
    EXPECT_LT((lhs - rhs).norm() / magnitude, 1e-10);
  }
}

TEST(Sim3, AdjointMatchesConjugation) {
  Rng rng(10);
  for (int i = 0; i < 100; ++i) {
    const Sim3 s = random_sim3(rng);
    const Mat7 ad = adjoint(s);
    const Sim3Tangent xi = random_tangent(rng, 0.1, 0.1, 0.05);
    const Sim3 conjugated = s * Sim3::exp(xi) * s.inverse();
    EXPECT_LT((conjugated.log().vector() - ad * xi.vector()).norm(),
              1e-6 * std::max(1.0, (ad * xi.vector()).norm()));
  }
}

TEST(Sim3, RotationDefectDetectsCorruption) {
  Mat3 bad = Mat3::Identity();
  bad(0, 1) = 1e-3;
  EXPECT_GT(Sim3(1.0, bad, Vec3::Zero()).rotation_defect(), 1e-4);
  Rng rng(11);
  EXPECT_LT(random_sim3(rng).rotation_defect(), 1e-12);
}

}  // namespace
}  // namespace chunkalign
