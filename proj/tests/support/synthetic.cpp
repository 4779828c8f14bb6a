#include "support/synthetic.hpp"

#include <unistd.h>

#include <atomic>
#include <cmath>

namespace chunkalign::testsupport {

Sim3Tangent random_tangent(Rng& rng, double translation_mag, double rotation_mag,
                           double log_scale_mag) {
  Sim3Tangent xi;
  xi.upsilon = rng.gaussian3() * translation_mag;
  xi.omega = rng.gaussian3().normalized() * rng.uniform(0.0, rotation_mag);
  xi.lambda = rng.uniform(-log_scale_mag, log_scale_mag);
  return xi;
}

Sim3 random_sim3(Rng& rng) {
  const double scale = std::exp(rng.uniform(std::log(0.1), std::log(10.0)));
  const Vec3 axis = rng.gaussian3().normalized();
  const double angle = rng.uniform(0.0, M_PI - 1e-3);
  const Vec3 translation = rng.gaussian3() * 5.0;
  return Sim3(scale, so3_exp(axis * angle), translation);
}

CorrespondenceSet make_correspondences(const Sim3& gt, const CorrespondenceScenario& sc,
                                       Rng& rng) {
  CorrespondenceSet corr;
  const Vec3 lo = Vec3::Constant(-sc.extent);
  const Vec3 hi = Vec3::Constant(sc.extent);
  for (int i = 0; i < sc.inliers; ++i) {
    const Vec3 src = rng.uniform_box(lo, hi);
    const bool outlier = rng.uniform() < sc.outlier_fraction;
    if (outlier) {
      corr.source_points.push_back(src);
      corr.target_points.push_back(rng.uniform_box(lo, hi));
      corr.confidence.push_back(sc.outlier_confidence);
    } else {
      corr.source_points.push_back(src);
      corr.target_points.push_back(gt.apply(src) + sc.noise * rng.gaussian3());
      corr.confidence.push_back(sc.inlier_confidence);
    }
  }
  return corr;
}

double rotation_error_deg(const Sim3& a, const Sim3& b) {
  const Mat3 rel = a.rotation().transpose() * b.rotation();
  const double c = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c) * 180.0 / M_PI;
}

double scale_error_rel(const Sim3& a, const Sim3& b) {
  return std::abs(a.scale() - b.scale()) / a.scale();
}

double translation_error(const Sim3& a, const Sim3& b) {
  return (a.translation() - b.translation()).norm();
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<unsigned> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("chunkalign_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
           std::to_string(counter.fetch_add(1)));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace chunkalign::testsupport
