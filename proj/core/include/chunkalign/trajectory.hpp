#pragma once

#include "chunkalign/sim3.hpp"

#include <filesystem>
#include <vector>

namespace chunkalign {

struct TrajectoryEntry {
  double timestamp = 0.0;
  Vec3 position = Vec3::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
};

using Trajectory = std::vector<TrajectoryEntry>;

/// TUM format: "timestamp tx ty tz qx qy qz qw" per line. Values are written
/// with max_digits10 precision so a write/read/write cycle is byte-stable.
void write_trajectory_tum(const std::filesystem::path& path, const Trajectory& traj);
Trajectory read_trajectory_tum(const std::filesystem::path& path);

/// KITTI pose format: 12 values per line, row-major 3x4 [R|t].
/// Timestamps are the line index.
Trajectory read_trajectory_kitti(const std::filesystem::path& path);

}  // namespace chunkalign
