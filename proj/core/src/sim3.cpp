#include "chunkalign/sim3.hpp"

#include "chunkalign/error.hpp"

#include <Eigen/LU>

#include <cmath>

namespace chunkalign {

namespace {

// Switchover from closed forms to series for small ||omega|| / |lambda|.
constexpr double kSeriesThreshold = 1e-5;

// W(omega, lambda) = integral_0^1 e^{s*lambda} * exp(s * hat(omega)) ds,
// so that exp maps (upsilon, omega, lambda) to translation W * upsilon.
// Written as C*I + A*Omega + B*Omega^2 with Omega = hat(omega).
//
// The integral splits into moments of e^{s*lambda} against {1, sin(s*theta),
// 1-cos(s*theta)}; each coefficient gets a closed form away from zero and a
// series near it. Cancellation-prone numerators are rearranged around
// expm1 so the closed forms stay accurate down to the switchover.
Mat3 sim3_w_matrix(const Vec3& omega, double lambda) {
  const double theta = omega.norm();
  const double sigma = lambda;
  const Mat3 big_omega = skew(omega);
  const Mat3 big_omega_sq = big_omega * big_omega;

  double coeff_a, coeff_b, coeff_c;

  if (std::abs(sigma) < kSeriesThreshold) {
    coeff_c = 1.0 + sigma / 2.0 + sigma * sigma / 6.0;
    if (theta < kSeriesThreshold) {
      const double theta_sq = theta * theta;
      coeff_a = 0.5 + sigma / 3.0 + sigma * sigma / 8.0 - theta_sq / 24.0;
      coeff_b = 1.0 / 6.0 + sigma / 8.0 + sigma * sigma / 20.0 - theta_sq / 120.0;
    } else {
      // For small sigma the sigma-dependence of A and B enters at first
      // order, so it cannot be dropped outright at a 1e-5 threshold.
      const double theta_sq = theta * theta;
      const double sin_t = std::sin(theta);
      const double cos_t = std::cos(theta);
      const double a0 = (1.0 - cos_t) / theta_sq;
      const double b0 = (theta - sin_t) / (theta_sq * theta);
      // d/dsigma at 0: moments of s against sin/1-cos.
      const double a1 = (sin_t - theta * cos_t) / (theta_sq * theta);
      const double b1 =
          (theta_sq / 2.0 - theta * sin_t + 1.0 - cos_t) / (theta_sq * theta_sq);
      coeff_a = a0 + sigma * a1;
      coeff_b = b0 + sigma * b1;
    }
  } else {
    const double scale = std::exp(sigma);
    coeff_c = std::expm1(sigma) / sigma;
    if (theta < kSeriesThreshold) {
      // m1 = integral s e^{s sigma}, m2 = integral s^2 e^{s sigma};
      // numerators via expm1 to survive sigma near the switchover.
      const double sigma_sq = sigma * sigma;
      const double m1_num = sigma * scale - std::expm1(sigma);
      const double m1 = m1_num / sigma_sq;
      const double m2 = (sigma_sq * scale - 2.0 * m1_num) / (sigma_sq * sigma);
      coeff_a = m1;
      coeff_b = 0.5 * m2;
    } else {
      const double theta_sq = theta * theta;
      const double c = theta_sq + sigma * sigma;
      const double a = scale * std::sin(theta);
      const double b = scale * std::cos(theta);
      coeff_a = (a * sigma + (1.0 - b) * theta) / (theta * c);
      coeff_b = (coeff_c - ((b - 1.0) * sigma + a * theta) / c) / theta_sq;
    }
  }

  return coeff_c * Mat3::Identity() + coeff_a * big_omega + coeff_b * big_omega_sq;
}

}  // namespace

Mat3 skew(const Vec3& v) {
  Mat3 s;
  // clang-format off
  s <<     0, -v.z(),  v.y(),
       v.z(),      0, -v.x(),
      -v.y(),  v.x(),      0;
  // clang-format on
  return s;
}

Mat3 so3_exp(const Vec3& omega) {
  const double theta = omega.norm();
  const Mat3 big_omega = skew(omega);
  if (theta < kSeriesThreshold) {
    const double theta_sq = theta * theta;
    return Mat3::Identity() + (1.0 - theta_sq / 6.0) * big_omega +
           (0.5 - theta_sq / 24.0) * (big_omega * big_omega);
  }
  const double theta_sq = theta * theta;
  return Mat3::Identity() + (std::sin(theta) / theta) * big_omega +
         ((1.0 - std::cos(theta)) / theta_sq) * (big_omega * big_omega);
}

Vec3 so3_log(const Mat3& rotation) {
  Eigen::Quaterniond q(rotation);
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const Vec3 vec = q.vec();
  const double n = vec.norm();
  const double w = q.w();
  const double angle = 2.0 * std::atan2(n, w);
  if (angle > M_PI - 1e-9) {
    throw LogSingularityError("log branch singularity: rotation angle at pi");
  }
  double factor;
  if (n < kSeriesThreshold) {
    // 2*atan2(n, w)/n expanded around n = 0 (w ~ 1).
    factor = 2.0 / w - 2.0 * n * n / (3.0 * w * w * w);
  } else {
    factor = angle / n;
  }
  return factor * vec;
}

Sim3 Sim3::exp(const Sim3Tangent& xi) {
  const Mat3 rotation = so3_exp(xi.omega);
  const double scale = std::exp(xi.lambda);
  const Vec3 translation = sim3_w_matrix(xi.omega, xi.lambda) * xi.upsilon;
  return Sim3(scale, rotation, translation);
}

Sim3Tangent Sim3::log() const {
  Sim3Tangent xi;
  xi.lambda = std::log(scale_);
  xi.omega = so3_log(rotation_);
  const Mat3 w = sim3_w_matrix(xi.omega, xi.lambda);
  xi.upsilon = w.partialPivLu().solve(translation_);
  return xi;
}

double Sim3::rotation_defect() const {
  const double ortho = (rotation_.transpose() * rotation_ - Mat3::Identity())
                           .cwiseAbs()
                           .maxCoeff();
  const double det = std::abs(rotation_.determinant() - 1.0);
  return std::max(ortho, det);
}

std::vector<Vec3> act(const Sim3& s, const std::vector<Vec3>& points) {
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const Vec3& p : points) out.push_back(s.apply(p));
  return out;
}

Mat7 adjoint(const Sim3& s) {
  Mat7 ad = Mat7::Zero();
  const Mat3& r = s.rotation();
  ad.block<3, 3>(0, 0) = s.scale() * r;
  ad.block<3, 3>(0, 3) = skew(s.translation()) * r;
  ad.block<3, 1>(0, 6) = -s.translation();
  ad.block<3, 3>(3, 3) = r;
  ad(6, 6) = 1.0;
  return ad;
}

Mat7 adjoint_algebra(const Sim3Tangent& xi) {
  Mat7 ad = Mat7::Zero();
  ad.block<3, 3>(0, 0) = skew(xi.omega) + xi.lambda * Mat3::Identity();
  ad.block<3, 3>(0, 3) = skew(xi.upsilon);
  ad.block<3, 1>(0, 6) = -xi.upsilon;
  ad.block<3, 3>(3, 3) = skew(xi.omega);
  return ad;
}

Mat7 inverse_right_jacobian(const Sim3Tangent& xi) {
  // J_r^{-1}(xi) = I + ad/2 + sum_{k>=1} B_{2k}/(2k)! ad^{2k}.
  static const double kBernoulliOverFactorial[] = {
      1.0 / 12.0,           // B_2 / 2!
      -1.0 / 720.0,         // B_4 / 4!
      1.0 / 30240.0,        // B_6 / 6!
      -1.0 / 1209600.0,     // B_8 / 8!
      1.0 / 47900160.0,     // B_10 / 10!
      -691.0 / 1307674368000.0,
      1.0 / 74724249600.0,
  };
  const Mat7 ad = adjoint_algebra(xi);
  const Mat7 ad_sq = ad * ad;
  Mat7 result = Mat7::Identity() + 0.5 * ad;
  Mat7 power = ad_sq;
  for (double coeff : kBernoulliOverFactorial) {
    const Mat7 term = coeff * power;
    result += term;
    if (term.cwiseAbs().maxCoeff() < 1e-18) break;
    power = power * ad_sq;
  }
  return result;
}

}  // namespace chunkalign
