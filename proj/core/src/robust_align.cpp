#include "chunkalign/robust_align.hpp"

#include "chunkalign/error.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace chunkalign {

namespace {

constexpr double kMinHuberDelta = 1e-9;

void check_sizes(const CorrespondenceSet& corr) {
  if (corr.target_points.size() != corr.source_points.size() ||
      corr.confidence.size() != corr.source_points.size()) {
    throw Error("correspondence set has mismatched lengths");
  }
}

std::vector<double> residual_norms(const CorrespondenceSet& corr, const Sim3& s) {
  std::vector<double> r(corr.size());
  for (std::size_t i = 0; i < corr.size(); ++i) {
    r[i] = (corr.target_points[i] - s.apply(corr.source_points[i])).norm();
  }
  return r;
}

double huber_delta_for(const IrlsConfig& cfg, const std::vector<double>& residuals) {
  if (cfg.huber_delta_mode == HuberDeltaMode::kFixed) return cfg.huber_delta;
  std::vector<double> dev = residuals;
  const double med = median(dev);
  for (double& d : dev) d = std::abs(d - med);
  const double mad = median(std::move(dev));
  return std::max(cfg.huber_mad_factor * 1.4826 * mad, kMinHuberDelta);
}

}  // namespace

double median(std::vector<double> values) {
  if (values.empty()) throw Error("median of empty vector");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  std::nth_element(values.begin(), values.begin() + mid - 1, values.begin() + mid);
  return 0.5 * (values[mid - 1] + upper);
}

double huber_rho(double r, double delta) {
  if (r <= delta) return 0.5 * r * r;
  return delta * (r - 0.5 * delta);
}

double huber_weight_factor(double r, double delta) {
  if (r <= delta) return 1.0;
  return delta / r;
}

Sim3 weighted_umeyama(const CorrespondenceSet& corr,
                      const std::vector<double>& weights,
                      const UmeyamaOptions& opts) {
  check_sizes(corr);
  const std::size_t n = corr.size();
  if (weights.size() != n) throw Error("weight vector length mismatch");

  int positive = 0;
  double weight_sum = 0.0;
  for (double w : weights) {
    if (w < 0.0 || !std::isfinite(w)) throw Error("weights must be finite and >= 0");
    if (w > 0.0) ++positive;
    weight_sum += w;
  }
  if (positive < 3) {
    throw InsufficientCorrespondencesError(
        "insufficient correspondences: fewer than 3 positive-weight pairs");
  }

  Vec3 mu_src = Vec3::Zero();
  Vec3 mu_tgt = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mu_src += weights[i] * corr.source_points[i];
    mu_tgt += weights[i] * corr.target_points[i];
  }
  mu_src /= weight_sum;
  mu_tgt /= weight_sum;

  Mat3 cov = Mat3::Zero();
  double var_src = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 ds = corr.source_points[i] - mu_src;
    const Vec3 dt = corr.target_points[i] - mu_tgt;
    cov += weights[i] * (dt * ds.transpose());
    var_src += weights[i] * ds.squaredNorm();
  }
  cov /= weight_sum;
  var_src /= weight_sum;

  if (var_src <= 0.0) {
    throw DegenerateConfigurationError(
        "degenerate configuration: weighted source points are coincident");
  }

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 d = svd.singularValues();
  if (!(d(1) > 1e-12 * d(0)) || d(0) <= 0.0) {
    throw DegenerateConfigurationError(
        "degenerate configuration: rank-deficient covariance (collinear points)");
  }

  Mat3 sign_fix = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) {
    sign_fix(2, 2) = -1.0;
  }
  const Mat3 rotation = svd.matrixU() * sign_fix * svd.matrixV().transpose();

  double scale = 1.0;
  if (!opts.fix_scale) {
    scale = (d(0) + d(1) + sign_fix(2, 2) * d(2)) / var_src;
    if (!(scale > 0.0)) {
      throw DegenerateConfigurationError("degenerate configuration: nonpositive scale");
    }
  }

  return Sim3(scale, rotation, mu_tgt - scale * (rotation * mu_src));
}

AlignResult irls_align(const CorrespondenceSet& corr, const IrlsConfig& cfg) {
  check_sizes(corr);
  if (cfg.max_iterations < 1) throw Error("max_iterations must be >= 1");
  if (!(cfg.convergence_tol > 0.0)) throw Error("convergence_tol must be > 0");
  const std::size_t n = corr.size();
  if (n < static_cast<std::size_t>(std::max(cfg.min_points, 3))) {
    throw InsufficientCorrespondencesError(
        "insufficient correspondences: " + std::to_string(n) + " < min_points");
  }

  AlignResult result;
  std::vector<double> weights = corr.confidence;

  Sim3 previous;
  bool have_previous = false;
  double delta = std::numeric_limits<double>::infinity();
  std::vector<double> residuals;

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    const Sim3 estimate = weighted_umeyama(corr, weights);
    result.iterations_used = iter + 1;

    residuals = residual_norms(corr, estimate);
    delta = huber_delta_for(cfg, residuals);
    for (std::size_t i = 0; i < n; ++i) {
      weights[i] = corr.confidence[i] * huber_weight_factor(residuals[i], delta);
    }

    if (have_previous) {
      const double change = (previous.inverse() * estimate).log().norm();
      if (change < cfg.convergence_tol) {
        result.transform = estimate;
        break;
      }
    }
    previous = estimate;
    have_previous = true;
    result.transform = estimate;
  }

  result.final_weights = std::move(weights);
  result.final_cost = 0.0;
  double sq_sum = 0.0;
  for (double r : residuals) {
    result.final_cost += huber_rho(r, delta);
    sq_sum += r * r;
  }
  result.rms_residual = std::sqrt(sq_sum / static_cast<double>(n));
  return result;
}

CorrespondenceSet confidence_gate(const std::vector<Vec3>& points_a,
                                  const std::vector<double>& confidence_a,
                                  const std::vector<Vec3>& points_b,
                                  const std::vector<double>& confidence_b,
                                  const GateOptions& opts) {
  if (points_a.size() != confidence_a.size() || points_b.size() != confidence_b.size() ||
      points_a.size() != points_b.size()) {
    throw Error("confidence_gate: mismatched input lengths");
  }
  if (opts.median_factor < 0.0) throw Error("median_factor must be >= 0");

  const double median_a = opts.median_a ? *opts.median_a : median(confidence_a);
  const double median_b = opts.median_b ? *opts.median_b : median(confidence_b);
  const double threshold_a = opts.median_factor * median_a;
  const double threshold_b = opts.median_factor * median_b;

  CorrespondenceSet out;
  for (std::size_t i = 0; i < points_a.size(); ++i) {
    if (confidence_a[i] < threshold_a || confidence_b[i] < threshold_b) continue;
    out.target_points.push_back(points_a[i]);
    out.source_points.push_back(points_b[i]);
    const double combined = opts.combine == ConfidenceCombine::kGeometricMean
                                ? std::sqrt(confidence_a[i] * confidence_b[i])
                                : std::min(confidence_a[i], confidence_b[i]);
    out.confidence.push_back(combined);
  }

  if (out.size() < 3) {
    std::ostringstream msg;
    msg << "insufficient correspondences after confidence gating (" << out.size()
        << " of " << points_a.size() << " survive)";
    throw InsufficientCorrespondencesError(msg.str());
  }
  return out;
}

}  // namespace chunkalign
