#include "chunkalign/pipeline.hpp"

#include "chunkalign/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace chunkalign {

CorrespondenceSet overlap_correspondences(const ChunkPointMap& a, const ChunkPointMap& b,
                                          const ExtractOptions& opts) {
  if (opts.stride < 1) throw Error("stride must be >= 1");
  if (a.height != b.height || a.width != b.width) {
    throw Error("chunks have mismatched image dimensions");
  }
  const int shared_start = std::max<int>(a.frame_start, b.frame_start);
  const int shared_end = std::min<int>(a.frame_end(), b.frame_end());
  if (shared_start >= shared_end) {
    throw Error("not adjacent: chunks share no frames");
  }

  std::vector<Vec3> pts_a, pts_b;
  std::vector<double> conf_a, conf_b;
  for (int frame = shared_start; frame < shared_end; ++frame) {
    const std::uint32_t fa = static_cast<std::uint32_t>(frame - static_cast<int>(a.frame_start));
    const std::uint32_t fb = static_cast<std::uint32_t>(frame - static_cast<int>(b.frame_start));
    for (std::uint32_t y = 0; y < a.height; y += opts.stride) {
      for (std::uint32_t x = 0; x < a.width; x += opts.stride) {
        const Vec3 pa = a.point(fa, y, x);
        const Vec3 pb = b.point(fb, y, x);
        if (!pa.allFinite() || !pb.allFinite()) continue;
        pts_a.push_back(pa);
        pts_b.push_back(pb);
        conf_a.push_back(a.confidence_at(fa, y, x));
        conf_b.push_back(b.confidence_at(fb, y, x));
      }
    }
  }

  GateOptions gate = opts.gate;
  if (opts.ignore_confidence) {
    std::fill(conf_a.begin(), conf_a.end(), 1.0);
    std::fill(conf_b.begin(), conf_b.end(), 1.0);
    gate.median_a.reset();
    gate.median_b.reset();
  } else {
    // The paper's gate is relative to the whole chunk, not just the
    // sampled overlap.
    if (!gate.median_a) gate.median_a = a.confidence_median();
    if (!gate.median_b) gate.median_b = b.confidence_median();
  }
  return confidence_gate(pts_a, conf_a, pts_b, conf_b, gate);
}

std::vector<SequentialEdge> align_sequence(ChunkStore& store, const IrlsConfig& irls,
                                           const ExtractOptions& extract) {
  const std::vector<int> indices = store.chunk_indices();
  if (indices.empty()) throw Error("no chunks found");
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] != static_cast<int>(i) + 1) {
      throw Error("chunk index gap: expected chunk " + std::to_string(i + 1) +
                  ", found " + std::to_string(indices[i]));
    }
  }

  std::vector<SequentialEdge> edges;
  for (std::size_t i = 0; i + 1 < indices.size(); ++i) {
    const int k = indices[i];
    try {
      const auto a = store.load(k);
      const auto b = store.load(k + 1);
      const CorrespondenceSet corr = overlap_correspondences(*a, *b, extract);
      const AlignResult aligned = irls_align(corr, irls);
      SequentialEdge edge;
      edge.from_chunk = k;
      edge.to_chunk = k + 1;
      edge.measurement = aligned.transform;
      edge.diagnostics = {corr.size(), aligned.iterations_used, aligned.final_cost,
                          aligned.rms_residual};
      edges.push_back(edge);
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "alignment of chunk pair (" << k << ", " << k + 1 << ") failed: "
          << e.what();
      throw Error(msg.str());
    }
  }
  return edges;
}

std::vector<Sim3> accumulate_world(const std::vector<SequentialEdge>& edges) {
  std::vector<Sim3> world;
  world.push_back(Sim3::identity());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const SequentialEdge& edge = edges[i];
    if (edge.from_chunk != static_cast<int>(i) + 1 ||
        edge.to_chunk != static_cast<int>(i) + 2) {
      throw Error("missing or out-of-order sequential edge at position " +
                  std::to_string(i + 1));
    }
    world.push_back(world.back() * edge.measurement);
  }
  return world;
}

ExportResult export_fused(const ChunkStore& store, const std::vector<Sim3>& world,
                          const ExportOptions& opts, const PointSink& sink) {
  const std::vector<int> indices = store.chunk_indices();
  if (indices.empty()) throw Error("no chunks found");
  if (indices.size() != world.size()) {
    throw Error("world transform count does not match chunk count");
  }

  ExportResult result;
  int previous_end = 0;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const int k = indices[i];
    ChunkPointMap chunk;
    try {
      chunk = read_chunk_file(store.chunk_path(k));
    } catch (const Error& e) {
      throw IoError("export failed at chunk " + std::to_string(k) + ": " + e.what());
    }
    const Sim3& transform = world[i];
    const double threshold = opts.confidence_keep_factor * chunk.confidence_mean();

    const int owned_start = i == 0 ? static_cast<int>(chunk.frame_start)
                                   : std::max<int>(chunk.frame_start, previous_end);
    for (int frame = owned_start; frame < chunk.frame_end(); ++frame) {
      const std::uint32_t f = static_cast<std::uint32_t>(frame - static_cast<int>(chunk.frame_start));
      Vec3 kept_centroid = Vec3::Zero();
      std::size_t kept = 0;
      for (std::uint32_t y = 0; y < chunk.height; ++y) {
        for (std::uint32_t x = 0; x < chunk.width; ++x) {
          const double conf = chunk.confidence_at(f, y, x);
          if (!(conf > threshold)) continue;
          const Vec3 local = chunk.point(f, y, x);
          if (!local.allFinite()) continue;
          sink(transform.apply(local), conf);
          kept_centroid += local;
          ++kept;
          ++result.points_written;
        }
      }

      TrajectoryEntry entry;
      entry.timestamp = static_cast<double>(frame);
      if (chunk.has_poses) {
        const Sim3 cam = chunk.camera_pose(f);
        entry.position = transform.apply(cam.translation());
        entry.orientation =
            Eigen::Quaterniond(transform.rotation() * cam.rotation()).normalized();
      } else {
        // Documented fallback: centroid of the frame's kept points
        // (all points when the gate kept none).
        Vec3 centroid;
        if (kept > 0) {
          centroid = kept_centroid / static_cast<double>(kept);
        } else {
          centroid = Vec3::Zero();
          for (std::uint32_t y = 0; y < chunk.height; ++y)
            for (std::uint32_t x = 0; x < chunk.width; ++x)
              centroid += chunk.point(f, y, x);
          centroid /= static_cast<double>(chunk.pixels_per_frame());
        }
        entry.position = transform.apply(centroid);
        entry.orientation = transform.unit_quaternion().normalized();
      }
      result.trajectory.push_back(entry);
    }
    previous_end = chunk.frame_end();
  }
  return result;
}

}  // namespace chunkalign
