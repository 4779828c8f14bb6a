#pragma once

#include "chunkalign/sim3.hpp"
#include "chunkalign/trajectory.hpp"

#include <map>
#include <utility>
#include <vector>

namespace chunkalign {

enum class AteAlignment { kSim3, kSe3, kNone };

/// RMSE of positional residuals between frame-matched trajectories, after
/// optionally aligning the estimate to the reference (uniform-weight
/// Umeyama; scale locked to 1 in se3 mode). Lengths must match.
double ate_rmse(const Trajectory& estimated, const Trajectory& reference,
                AteAlignment alignment = AteAlignment::kSim3);

struct IcpOptions {
  int iterations = 20;
  double motion_tol = 1e-9;  ///< stop when the incremental tangent norm drops below
  double cell_size = 0.0;    ///< voxel grid cell; 0 derives 2x expected spacing
};

struct CloudMetrics {
  double accuracy = 0.0;      ///< mean NN distance predicted -> reference
  double completeness = 0.0;  ///< mean NN distance reference -> predicted
  double chamfer = 0.0;       ///< mean of the two
  Sim3 icp_transform;         ///< rigid refinement applied to the prediction
  std::vector<double> icp_cost;  ///< mean squared pairing distance per iteration
};

/// Point-to-point ICP refinement (rigid, nearest neighbors via a voxel hash
/// grid) followed by directed nearest-neighbor distances. Assumes coarse
/// pose-based alignment has already been applied.
CloudMetrics cloud_metrics(const std::vector<Vec3>& predicted,
                           const std::vector<Vec3>& reference,
                           const IcpOptions& opts = {});

/// Exact nearest-neighbor queries over a regular voxel hash grid.
class VoxelGrid {
 public:
  VoxelGrid(const std::vector<Vec3>& points, double cell_size);

  /// Index of the nearest stored point and its distance (exact: the ring
  /// search expands until no closer cell can exist).
  std::pair<std::size_t, double> nearest(const Vec3& query) const;

  double cell_size() const { return cell_; }

 private:
  struct CellKey {
    long long x, y, z;
    bool operator<(const CellKey& o) const {
      if (x != o.x) return x < o.x;
      if (y != o.y) return y < o.y;
      return z < o.z;
    }
  };
  CellKey key_of(const Vec3& p) const;

  const std::vector<Vec3>& points_;
  double cell_;
  std::map<CellKey, std::vector<std::size_t>> cells_;
  CellKey key_lo_{0, 0, 0};
  CellKey key_hi_{0, 0, 0};
};

/// 2x the expected point spacing for a roughly uniform cloud.
double default_cell_size(const std::vector<Vec3>& points);

}  // namespace chunkalign
