#pragma once

#include "chunkalign/sim3.hpp"

#include <cstdint>
#include <vector>

namespace chunkalign {

/// Partition parameters: chunk size L, overlap O, total frame count N.
struct ChunkSpec {
  int chunk_size = 75;
  int overlap = 15;
  int total_frames = 0;
};

/// Half-open global frame range [frame_start, frame_end) of one chunk.
struct ChunkRange {
  int chunk_index = 0;  ///< 1-based
  int frame_start = 0;
  int frame_end = 0;

  int frames() const { return frame_end - frame_start; }
};

/// Chunk k covers [(k-1)(L-O), (k-1)(L-O)+L) intersected with [0, N);
/// K is the smallest count covering frame N-1. Consecutive chunks share
/// exactly O frames. N < L degenerates to a single chunk over all frames.
std::vector<ChunkRange> plan_chunks(const ChunkSpec& spec);

/// Owning chunk of a frame: the plan entry whose range contains it and whose
/// center is nearest (ties to the smaller index). Used to attach loop
/// endpoints to pose-graph nodes.
int chunk_for_frame(const std::vector<ChunkRange>& plan, int frame);

/// Per-chunk point map with per-pixel confidence, the stand-in for the
/// neural frontend's output. Frame-major layout: points[(f*H + y)*W + x].
/// Raw f32 storage mirrors the on-disk chunk format so store/load
/// round-trips are bit-exact.
struct ChunkPointMap {
  std::uint32_t chunk_index = 0;  ///< 0 marks auxiliary (loop-centric) maps
  std::uint32_t frame_start = 0;
  std::uint32_t frames = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<float> points;      ///< frames*height*width*3
  std::vector<float> confidence;  ///< frames*height*width
  bool has_poses = false;
  std::vector<float> poses;  ///< frames*7 as (tx,ty,tz,qx,qy,qz,qw), camera-to-chunk

  std::size_t pixels_per_frame() const {
    return static_cast<std::size_t>(height) * width;
  }
  std::size_t pixel_count() const { return frames * pixels_per_frame(); }

  Vec3 point(std::uint32_t frame, std::uint32_t y, std::uint32_t x) const {
    const std::size_t base = 3 * ((static_cast<std::size_t>(frame) * height + y) * width + x);
    return Vec3(points[base], points[base + 1], points[base + 2]);
  }
  double confidence_at(std::uint32_t frame, std::uint32_t y, std::uint32_t x) const {
    return confidence[(static_cast<std::size_t>(frame) * height + y) * width + x];
  }

  /// Camera-to-chunk pose of a frame (requires has_poses).
  Sim3 camera_pose(std::uint32_t frame) const;
  void set_camera_pose(std::uint32_t frame, const Sim3& pose);

  /// Median over the whole chunk's confidence values.
  double confidence_median() const;
  /// Mean over the whole chunk's confidence values.
  double confidence_mean() const;

  int frame_end() const { return static_cast<int>(frame_start + frames); }
};

}  // namespace chunkalign
