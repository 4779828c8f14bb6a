#include "support/oracles.hpp"

#include <cmath>

namespace chunkalign::testsupport {

Mat4 matrix_exp(const Mat4& a) {
  int squarings = 0;
  double norm = a.cwiseAbs().maxCoeff();
  while (norm > 0.25) {
    norm /= 2.0;
    ++squarings;
  }
  const Mat4 x = a / std::pow(2.0, squarings);
  Mat4 result = Mat4::Identity();
  Mat4 term = Mat4::Identity();
  for (int i = 1; i <= 30; ++i) {
    term = term * x / static_cast<double>(i);
    result += term;
  }
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

Mat4 sim3_hat(const Sim3Tangent& xi) {
  Mat4 hat = Mat4::Zero();
  hat.block<3, 3>(0, 0) = skew(xi.omega) + xi.lambda * Mat3::Identity();
  hat.block<3, 1>(0, 3) = xi.upsilon;
  return hat;
}

Mat4 sim3_matrix(const Sim3& s) {
  Mat4 m = Mat4::Identity();
  m.block<3, 3>(0, 0) = s.scale() * s.rotation();
  m.block<3, 1>(0, 3) = s.translation();
  return m;
}

Mat3 w_matrix_quadrature(const Vec3& omega, double lambda, int steps) {
  // Simpson's rule needs an even interval count.
  if (steps % 2 == 1) ++steps;
  const Mat3 hat = skew(omega);
  auto integrand = [&](double s) -> Mat3 {
    Mat3 rot = Mat3::Identity();
    Mat3 term = Mat3::Identity();
    const Mat3 sh = s * hat;
    for (int i = 1; i <= 25; ++i) {
      term = term * sh / static_cast<double>(i);
      rot += term;
    }
    return std::exp(s * lambda) * rot;
  };
  const double h = 1.0 / steps;
  Mat3 sum = integrand(0.0) + integrand(1.0);
  for (int i = 1; i < steps; ++i) {
    sum += (i % 2 == 1 ? 4.0 : 2.0) * integrand(i * h);
  }
  return (h / 3.0) * sum;
}

Sim3Tangent sim3_log_oracle(const Sim3& s) {
  Sim3Tangent xi;
  xi.lambda = std::log(s.scale());
  Eigen::Quaterniond q(s.rotation());
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const double n = q.vec().norm();
  const double angle = 2.0 * std::atan2(n, q.w());
  xi.omega = n > 1e-14 ? Vec3((angle / n) * q.vec()) : Vec3(2.0 * q.vec());
  xi.upsilon = w_matrix_quadrature(xi.omega, xi.lambda)
                   .colPivHouseholderQr()
                   .solve(s.translation());
  return xi;
}

Vec7 edge_residual_oracle(const Sim3& from, const Sim3& to, const Sim3& measurement) {
  const Mat4 m = sim3_matrix(measurement).inverse() * sim3_matrix(from).inverse() *
                 sim3_matrix(to);
  const Mat3 sr = m.block<3, 3>(0, 0);
  const double scale = std::cbrt(sr.determinant());
  const Sim3 combined(scale, Mat3(sr / scale), Vec3(m.block<3, 1>(0, 3)));
  return sim3_log_oracle(combined).vector();
}

double weighted_sse(const CorrespondenceSet& corr, const std::vector<double>& weights,
                    const Sim3& transform) {
  double sum = 0.0;
  for (std::size_t i = 0; i < corr.size(); ++i) {
    sum += weights[i] *
           (corr.target_points[i] - transform.apply(corr.source_points[i])).squaredNorm();
  }
  return sum;
}

Sim3 pattern_search_umeyama(const CorrespondenceSet& corr,
                            const std::vector<double>& weights, int sweeps) {
  Vec7 params = Vec7::Zero();  // tangent coordinates around the identity
  auto cost_at = [&](const Vec7& p) {
    return weighted_sse(corr, weights, Sim3::exp(Sim3Tangent(p)));
  };
  double step = 0.5;
  double best = cost_at(params);
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    bool improved = false;
    for (int c = 0; c < 7; ++c) {
      for (double direction : {+1.0, -1.0}) {
        Vec7 trial = params;
        trial[c] += direction * step;
        const double cost = cost_at(trial);
        if (cost < best) {
          best = cost;
          params = trial;
          improved = true;
        }
      }
    }
    if (!improved) {
      step *= 0.5;
      if (step < 1e-12) break;
    }
  }
  return Sim3::exp(Sim3Tangent(params));
}

}  // namespace chunkalign::testsupport
