#pragma once

// Independent reference implementations used only by tests. These stay
// deliberately naive (quadrature, matrix Taylor series, pattern search) so
// they share no code path with the library routines they check.

#include "chunkalign/robust_align.hpp"
#include "chunkalign/sim3.hpp"

#include <Eigen/Dense>

namespace chunkalign::testsupport {

using Mat4 = Eigen::Matrix4d;

/// 4x4 matrix exponential via scaling-and-squaring Taylor series.
Mat4 matrix_exp(const Mat4& a);

/// The sim(3) hat matrix of a tangent vector.
Mat4 sim3_hat(const Sim3Tangent& xi);

/// Homogeneous matrix of a Sim3 (top-left s*R, top-right t).
Mat4 sim3_matrix(const Sim3& s);

/// W matrix via Simpson quadrature of integral_0^1 e^{s*lambda} exp(s*hat(omega)) ds.
Mat3 w_matrix_quadrature(const Vec3& omega, double lambda, int steps = 4000);

/// Independent log: rotation via quaternion, upsilon via the quadrature W.
Sim3Tangent sim3_log_oracle(const Sim3& s);

/// Independent pose-graph residual log(meas^-1 * from^-1 * to).
Vec7 edge_residual_oracle(const Sim3& from, const Sim3& to, const Sim3& measurement);

/// Weighted sum of squared alignment errors at a candidate transform.
double weighted_sse(const CorrespondenceSet& corr, const std::vector<double>& weights,
                    const Sim3& transform);

/// Derivative-free minimizer of the weighted SSE: cyclic coordinate descent
/// over the 7 tangent coordinates with a shrinking step, from the identity.
Sim3 pattern_search_umeyama(const CorrespondenceSet& corr,
                            const std::vector<double>& weights, int sweeps = 400);

}  // namespace chunkalign::testsupport
