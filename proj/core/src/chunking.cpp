#include "chunkalign/chunking.hpp"

#include "chunkalign/error.hpp"
#include "chunkalign/robust_align.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace chunkalign {

std::vector<ChunkRange> plan_chunks(const ChunkSpec& spec) {
  if (spec.total_frames <= 0) throw Error("plan_chunks: total_frames must be > 0");
  if (spec.chunk_size <= 0) throw Error("plan_chunks: chunk_size must be > 0");
  if (spec.overlap <= 0 || spec.overlap >= spec.chunk_size) {
    throw Error("plan_chunks: require 0 < overlap < chunk_size");
  }

  const int n = spec.total_frames;
  const int step = spec.chunk_size - spec.overlap;

  std::vector<ChunkRange> plan;
  if (n <= spec.chunk_size) {
    plan.push_back({1, 0, n});
    return plan;
  }

  int k = 1;
  while (true) {
    const int start = (k - 1) * step;
    const int end = std::min(start + spec.chunk_size, n);
    plan.push_back({k, start, end});
    if (end >= n) break;
    ++k;
  }
  // The ceil-style cover guarantees the final chunk keeps at least O+1
  // frames, so the merge clause never has to fire.
  return plan;
}

int chunk_for_frame(const std::vector<ChunkRange>& plan, int frame) {
  int best = -1;
  double best_distance = 0.0;
  for (const ChunkRange& range : plan) {
    if (frame < range.frame_start || frame >= range.frame_end) continue;
    const double center = 0.5 * (range.frame_start + range.frame_end - 1);
    const double distance = std::abs(frame - center);
    if (best < 0 || distance < best_distance) {
      best = range.chunk_index;
      best_distance = distance;
    }
  }
  if (best < 0) throw Error("chunk_for_frame: frame outside every planned chunk");
  return best;
}

Sim3 ChunkPointMap::camera_pose(std::uint32_t frame) const {
  if (!has_poses) throw Error("chunk has no camera poses");
  const std::size_t base = static_cast<std::size_t>(frame) * 7;
  const Eigen::Quaterniond q(poses[base + 6], poses[base + 3], poses[base + 4],
                             poses[base + 5]);
  const Vec3 t(poses[base], poses[base + 1], poses[base + 2]);
  return Sim3(1.0, q, t);
}

void ChunkPointMap::set_camera_pose(std::uint32_t frame, const Sim3& pose) {
  if (poses.size() != static_cast<std::size_t>(frames) * 7) {
    poses.assign(static_cast<std::size_t>(frames) * 7, 0.0f);
  }
  has_poses = true;
  const Eigen::Quaterniond q = pose.unit_quaternion();
  const std::size_t base = static_cast<std::size_t>(frame) * 7;
  poses[base] = static_cast<float>(pose.translation().x());
  poses[base + 1] = static_cast<float>(pose.translation().y());
  poses[base + 2] = static_cast<float>(pose.translation().z());
  poses[base + 3] = static_cast<float>(q.x());
  poses[base + 4] = static_cast<float>(q.y());
  poses[base + 5] = static_cast<float>(q.z());
  poses[base + 6] = static_cast<float>(q.w());
}

double ChunkPointMap::confidence_median() const {
  return median(std::vector<double>(confidence.begin(), confidence.end()));
}

double ChunkPointMap::confidence_mean() const {
  if (confidence.empty()) throw Error("chunk has no confidence values");
  double sum = 0.0;
  for (float c : confidence) sum += c;
  return sum / static_cast<double>(confidence.size());
}

}  // namespace chunkalign
