#pragma once

#include "chunkalign/chunking.hpp"
#include "chunkalign/loop.hpp"
#include "chunkalign/pipeline.hpp"
#include "chunkalign/trajectory.hpp"

#include <filesystem>

namespace chunkalign {

enum class TrajectoryKind { kStraight, kCircuitWithLoop, kFigureEight };

/// Synthetic sequence description. Everything downstream is a pure function
/// of these fields, so identical scenarios produce identical bytes.
struct SimScenario {
  std::uint64_t seed = 1;
  TrajectoryKind trajectory_kind = TrajectoryKind::kCircuitWithLoop;
  int total_frames = 1500;
  int chunk_size = 75;
  int overlap = 15;
  double speed = 1.0;  ///< scene units per frame

  /// Scene sampling grid per frame; 10x14 at overlap 15 gives ~2100 points
  /// per chunk overlap, enough to keep the weighted covariance well
  /// conditioned.
  int image_height = 10;
  int image_width = 14;

  /// Per-chunk drift magnitudes (applied cumulatively along the sequence).
  double drift_rotation_deg = 0.4;
  double drift_scale_pct = 0.5;
  double drift_translation = 0.5;

  double point_noise = 0.01;  ///< Gaussian sigma on inliers, scene units
  double outlier_fraction = 0.0;
  double outlier_confidence = 1.0;
  double inlier_confidence = 1.0;

  int descriptor_dim = 16;
  int loop_half_width = 18;  ///< frames to each side of a loop endpoint
  LoopConfig loop_detection;  ///< used to pre-generate loop-centric chunks
};

struct SimGroundTruth {
  std::vector<ChunkRange> plan;
  std::vector<Sim3> chunk_to_world;  ///< true S_k, index k-1
  Trajectory camera_trajectory;      ///< per-frame world poses
  int revisit_period = 0;            ///< frames between genuine revisits (0: none)
};

struct SimOutput {
  SimGroundTruth ground_truth;
  std::vector<LoopPair> planted_loops;  ///< pairs with pre-generated loop chunks
};

/// Camera-to-world pose of a frame (pure function of the scenario).
Sim3 sim_camera_pose(const SimScenario& scenario, int frame);

/// World-frame scene point sampled by pixel (y, x) of a frame (pure
/// function of the scenario; shared frames give identical points in
/// every chunk that renders them, which is what makes overlap
/// correspondences exact).
Vec3 sim_world_point(const SimScenario& scenario, int frame, int y, int x);

/// True chunk-to-world states (cumulative per-chunk drift, chunk 1 = identity).
std::vector<Sim3> sim_chunk_states(const SimScenario& scenario,
                                   const std::vector<ChunkRange>& plan);

/// Frame descriptor: multi-scale positional sin/cos features plus heading,
/// L2-normalized. Genuine revisits score ~1; the closest non-revisit
/// approach stays well under the default threshold.
DescriptorSet sim_descriptors(const SimScenario& scenario);

/// Materializes one sequence chunk (drifted local frame, noise, outliers,
/// confidence, camera poses).
ChunkPointMap sim_chunk(const SimScenario& scenario, const ChunkRange& range,
                        const Sim3& chunk_to_world);

/// Writes the complete synthetic dataset into `out_dir`: chunk files,
/// descriptors.vgld, loop-centric chunk segments for every pair its own
/// loop detection finds, gt_trajectory.tum and gt_graph.g2o.
SimOutput generate(const SimScenario& scenario, const std::filesystem::path& out_dir);

/// Exact sequential measurements S_{k,k+1} = S_k^-1 * S_{k+1} from ground
/// truth; the independent oracle recovered edges are compared against.
std::vector<Sim3> oracle_edges(const SimGroundTruth& gt);

/// Exact relative transform S_from^-1 * S_to between two chunks (1-based).
Sim3 oracle_relative(const SimGroundTruth& gt, int chunk_from, int chunk_to);

/// Scenario text file (key = value lines, '#' comments).
SimScenario read_scenario_file(const std::filesystem::path& path);

}  // namespace chunkalign
