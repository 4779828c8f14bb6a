#pragma once

#include "chunkalign/sim3.hpp"

#include <optional>
#include <vector>

namespace chunkalign {

/// Paired 3-D points with combined per-pair confidence weights.
/// source_points live in the frame being aligned (chunk k+1), target_points
/// in the frame being aligned to (chunk k).
struct CorrespondenceSet {
  std::vector<Vec3> source_points;
  std::vector<Vec3> target_points;
  std::vector<double> confidence;

  std::size_t size() const { return source_points.size(); }
};

enum class HuberDeltaMode {
  kFixed,      ///< delta = huber_delta (may be +inf to disable the kernel)
  kMadScaled,  ///< delta = huber_mad_factor * 1.4826 * MAD(residuals), per iteration
};

struct IrlsConfig {
  int max_iterations = 10;
  HuberDeltaMode huber_delta_mode = HuberDeltaMode::kMadScaled;
  double huber_delta = 1.0;
  double huber_mad_factor = 1.345;
  double convergence_tol = 1e-8;  ///< tangent-norm change between iterates
  int min_points = 3;
};

struct AlignResult {
  Sim3 transform;  ///< maps source frame into target frame
  std::vector<double> final_weights;
  int iterations_used = 0;
  double final_cost = 0.0;  ///< sum of Huber rho over final residuals
  double rms_residual = 0.0;
};

struct UmeyamaOptions {
  bool fix_scale = false;  ///< lock scale to 1 (rigid fit, used by ICP / SE(3) ATE)
};

/// Closed-form minimizer of sum_i w_i ||target_i - S * source_i||^2 over
/// Sim(3): weighted centroids, SVD of the weighted cross-covariance with
/// det-sign correction, scale from the weighted variance ratio.
///
/// Throws InsufficientCorrespondencesError (fewer than 3 strictly positive
/// weights) or DegenerateConfigurationError (rank-deficient covariance).
Sim3 weighted_umeyama(const CorrespondenceSet& corr,
                      const std::vector<double>& weights,
                      const UmeyamaOptions& opts = {});

/// IRLS with Huber loss: alternates the closed-form weighted fit with
/// residual-based reweighting w_i = c_i * rho'(r_i)/r_i, starting from
/// w_i = c_i. Stops when the tangent-norm change between iterates drops
/// below convergence_tol or max_iterations is reached.
AlignResult irls_align(const CorrespondenceSet& corr, const IrlsConfig& cfg);

enum class ConfidenceCombine { kGeometricMean, kMin };

struct GateOptions {
  double median_factor = 0.1;
  ConfidenceCombine combine = ConfidenceCombine::kGeometricMean;
  /// Chunk-wide medians; when unset, the median of the supplied vector is used.
  std::optional<double> median_a;
  std::optional<double> median_b;
};

/// Drops pairs where either side's confidence falls below
/// median_factor * (that side's chunk median) and combines the survivors'
/// confidences into the per-pair c_i. Side a becomes the target of the
/// returned set, side b the source.
CorrespondenceSet confidence_gate(const std::vector<Vec3>& points_a,
                                  const std::vector<double>& confidence_a,
                                  const std::vector<Vec3>& points_b,
                                  const std::vector<double>& confidence_b,
                                  const GateOptions& opts = {});

double huber_rho(double r, double delta);

/// rho'(r)/r: 1 for r <= delta, delta/r above.
double huber_weight_factor(double r, double delta);

/// Midpoint-convention median; empty input is an error.
double median(std::vector<double> values);

}  // namespace chunkalign
