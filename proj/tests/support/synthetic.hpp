#pragma once

#include "chunkalign/rng.hpp"
#include "chunkalign/robust_align.hpp"
#include "chunkalign/sim3.hpp"

#include <filesystem>
#include <string>

namespace chunkalign::testsupport {

Sim3Tangent random_tangent(Rng& rng, double translation_mag = 2.0,
                           double rotation_mag = 2.5, double log_scale_mag = 1.5);

/// Uniform-ish random element with scale in [0.1, 10] and angle below pi.
Sim3 random_sim3(Rng& rng);

struct CorrespondenceScenario {
  int inliers = 200;
  double noise = 0.0;           ///< Gaussian sigma, same units as the extent
  double extent = 10.0;         ///< half-width of the sampled box
  double outlier_fraction = 0.0;
  double outlier_confidence = 1.0;
  double inlier_confidence = 1.0;
};

/// Correspondences target = S_gt * source (+noise), with a fraction of the
/// pairs replaced by uniform box outliers.
CorrespondenceSet make_correspondences(const Sim3& gt, const CorrespondenceScenario& sc,
                                       Rng& rng);

double rotation_error_deg(const Sim3& a, const Sim3& b);
double scale_error_rel(const Sim3& a, const Sim3& b);
double translation_error(const Sim3& a, const Sim3& b);

/// Unique temp directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace chunkalign::testsupport
