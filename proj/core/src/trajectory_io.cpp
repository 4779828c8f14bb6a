#include "chunkalign/trajectory.hpp"

#include "chunkalign/error.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace chunkalign {

void write_trajectory_tum(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  char line[256];
  for (const TrajectoryEntry& e : traj) {
    Eigen::Quaterniond q = e.orientation.normalized();
    if (q.w() < 0.0) q.coeffs() = -q.coeffs();
    std::snprintf(line, sizeof(line),
                  "%.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", e.timestamp,
                  e.position.x(), e.position.y(), e.position.z(), q.x(), q.y(), q.z(),
                  q.w());
    out << line;
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Trajectory read_trajectory_tum(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trajectory file: " + path.string());
  Trajectory traj;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    TrajectoryEntry e;
    double qx, qy, qz, qw;
    if (!(row >> e.timestamp >> e.position.x() >> e.position.y() >> e.position.z() >>
          qx >> qy >> qz >> qw)) {
      throw IoError(path.string() + ":" + std::to_string(line_no) +
                    ": expected 'timestamp tx ty tz qx qy qz qw'");
    }
    e.orientation = Eigen::Quaterniond(qw, qx, qy, qz);
    traj.push_back(e);
  }
  return traj;
}

Trajectory read_trajectory_kitti(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trajectory file: " + path.string());
  Trajectory traj;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    double v[12];
    for (int i = 0; i < 12; ++i) {
      if (!(row >> v[i])) {
        throw IoError(path.string() + ":" + std::to_string(line_no) +
                      ": expected 12 values of a 3x4 pose");
      }
    }
    Mat3 rotation;
    rotation << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
    TrajectoryEntry e;
    e.timestamp = static_cast<double>(traj.size());
    e.position = Vec3(v[3], v[7], v[11]);
    e.orientation = Eigen::Quaterniond(rotation).normalized();
    traj.push_back(e);
  }
  return traj;
}

}  // namespace chunkalign
