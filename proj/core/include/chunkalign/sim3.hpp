#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <vector>

namespace chunkalign {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec7 = Eigen::Matrix<double, 7, 1>;
using Mat7 = Eigen::Matrix<double, 7, 7>;

/// Tangent vector of sim(3).
///
/// Ordering is fixed as (upsilon, omega, lambda) = (translational part,
/// rotation vector, log-scale); the pose-graph Jacobians, the adjoint
/// matrices and the graph dump format all depend on it.
struct Sim3Tangent {
  Vec3 upsilon = Vec3::Zero();
  Vec3 omega = Vec3::Zero();
  double lambda = 0.0;

  Sim3Tangent() = default;
  Sim3Tangent(const Vec3& upsilon_in, const Vec3& omega_in, double lambda_in)
      : upsilon(upsilon_in), omega(omega_in), lambda(lambda_in) {}
  explicit Sim3Tangent(const Vec7& v)
      : upsilon(v.segment<3>(0)), omega(v.segment<3>(3)), lambda(v[6]) {}

  Vec7 vector() const {
    Vec7 v;
    v << upsilon, omega, lambda;
    return v;
  }
  double norm() const { return vector().norm(); }
};

/// Similarity transform acting on points as p -> scale * rotation * p + translation.
///
/// Invariants: scale > 0; rotation orthonormal with det +1. Rotation is kept
/// as a matrix internally; quaternions appear only at I/O boundaries.
class Sim3 {
 public:
  Sim3() = default;
  Sim3(double scale, const Mat3& rotation, const Vec3& translation)
      : scale_(scale), rotation_(rotation), translation_(translation) {}
  Sim3(double scale, const Eigen::Quaterniond& rotation, const Vec3& translation)
      : scale_(scale), rotation_(rotation.normalized().toRotationMatrix()),
        translation_(translation) {}

  static Sim3 identity() { return Sim3(); }

  /// Group exponential. Continuous through omega -> 0 and lambda -> 0
  /// (series evaluation below the 1e-5 switchover).
  static Sim3 exp(const Sim3Tangent& xi);

  double scale() const { return scale_; }
  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  Eigen::Quaterniond unit_quaternion() const { return Eigen::Quaterniond(rotation_); }

  Vec3 apply(const Vec3& p) const { return scale_ * (rotation_ * p) + translation_; }

  /// Composition: (a.compose(b)).apply(p) == a.apply(b.apply(p)).
  Sim3 compose(const Sim3& rhs) const {
    return Sim3(scale_ * rhs.scale_, rotation_ * rhs.rotation_,
                scale_ * (rotation_ * rhs.translation_) + translation_);
  }

  Sim3 inverse() const {
    const Mat3 rt = rotation_.transpose();
    const double inv_scale = 1.0 / scale_;
    return Sim3(inv_scale, rt, -inv_scale * (rt * translation_));
  }

  /// Principal logarithm. Throws LogSingularityError when the rotation
  /// angle reaches pi, where the log branch is not unique.
  Sim3Tangent log() const;

  /// Max deviation of rotation from orthonormality / unit determinant.
  double rotation_defect() const;

 private:
  double scale_ = 1.0;
  Mat3 rotation_ = Mat3::Identity();
  Vec3 translation_ = Vec3::Zero();
};

inline Sim3 operator*(const Sim3& a, const Sim3& b) { return a.compose(b); }
inline Vec3 operator*(const Sim3& s, const Vec3& p) { return s.apply(p); }

/// Applies s to every point.
std::vector<Vec3> act(const Sim3& s, const std::vector<Vec3>& points);

Mat3 skew(const Vec3& v);

/// Rotation-vector exponential (Rodrigues), series below the switchover.
Mat3 so3_exp(const Vec3& omega);

/// Rotation-matrix log via quaternion; requires angle < pi.
Vec3 so3_log(const Mat3& rotation);

/// Group adjoint: S * exp(xi) * S^-1 == exp(adjoint(S) * xi).
Mat7 adjoint(const Sim3& s);

/// Algebra adjoint ad_xi, the matrix of the Lie bracket [xi, .].
Mat7 adjoint_algebra(const Sim3Tangent& xi);

/// Inverse right Jacobian of exp at xi, evaluated as the Bernoulli series
/// in ad_xi (exact to machine precision for ||xi|| well inside the
/// convergence radius 2*pi). Used by the analytic pose-graph Jacobians.
Mat7 inverse_right_jacobian(const Sim3Tangent& xi);

}  // namespace chunkalign
