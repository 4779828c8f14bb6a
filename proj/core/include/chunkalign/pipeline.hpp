#pragma once

#include "chunkalign/chunk_store.hpp"
#include "chunkalign/chunking.hpp"
#include "chunkalign/robust_align.hpp"
#include "chunkalign/trajectory.hpp"

#include <functional>
#include <vector>

namespace chunkalign {

struct ExtractOptions {
  int stride = 4;           ///< pixel subsampling on the overlap grid
  GateOptions gate;         ///< 0.1x-median confidence gate
  bool ignore_confidence = false;  ///< treat every confidence as 1 (ablation)
};

/// Pairs the two chunks' 3-D points at identical (frame, pixel) locations on
/// a regular stride grid over their shared global frames, then applies the
/// confidence gate using each chunk's whole-map median. Chunk a is the
/// target side of the result, chunk b the source.
///
/// Throws Error("not adjacent") when the frame ranges do not intersect.
CorrespondenceSet overlap_correspondences(const ChunkPointMap& a, const ChunkPointMap& b,
                                          const ExtractOptions& opts = {});

struct AlignDiagnostics {
  std::size_t correspondences = 0;
  int iterations_used = 0;
  double final_cost = 0.0;
  double rms_residual = 0.0;
};

struct SequentialEdge {
  int from_chunk = 0;  ///< k
  int to_chunk = 0;    ///< k+1
  Sim3 measurement;    ///< S_{k,k+1}: maps chunk k+1 coordinates into chunk k
  AlignDiagnostics diagnostics;
};

/// Aligns every adjacent chunk pair, loading exactly the two involved chunks
/// at a time. A failed pair aborts with an error naming the pair.
std::vector<SequentialEdge> align_sequence(ChunkStore& store, const IrlsConfig& irls,
                                           const ExtractOptions& extract = {});

/// Prefix-composes sequential edges into chunk-to-world transforms:
/// world[0] = identity, world[k] = world[k-1] * S_{k,k+1}.
std::vector<Sim3> accumulate_world(const std::vector<SequentialEdge>& edges);

struct ExportOptions {
  double confidence_keep_factor = 0.75;  ///< keep points above factor * chunk mean
};

/// Receives each surviving world-frame point as it is produced.
using PointSink = std::function<void(const Vec3& position, double confidence)>;

struct ExportResult {
  Trajectory trajectory;
  std::size_t points_written = 0;
};

/// Streams every chunk's gated points through its world transform into the
/// sink, one chunk resident at a time. Overlapping frames are emitted by the
/// earlier chunk only, so each global frame appears exactly once in both the
/// point stream and the returned trajectory. Frames without stored camera
/// poses fall back to the centroid of their kept points.
ExportResult export_fused(const ChunkStore& store, const std::vector<Sim3>& world,
                          const ExportOptions& opts, const PointSink& sink);

}  // namespace chunkalign
