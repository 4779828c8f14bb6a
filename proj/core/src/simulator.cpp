#include "chunkalign/simulator.hpp"

#include "chunkalign/chunk_store.hpp"
#include "chunkalign/config.hpp"
#include "chunkalign/error.hpp"
#include "chunkalign/pose_graph.hpp"
#include "chunkalign/rng.hpp"

#include <algorithm>
#include <cmath>

namespace chunkalign {

namespace {

// Stream tags keep the per-purpose RNG streams disjoint.
enum : std::uint64_t {
  kStreamScene = 1,
  kStreamDrift = 2,
  kStreamChunkNoise = 3,
  kStreamLoopFrame = 4,
  kStreamLoopNoise = 5,
};

struct PathPoint {
  Vec3 position;
  Vec3 heading;
};

int revisit_period_of(const SimScenario& s) {
  switch (s.trajectory_kind) {
    case TrajectoryKind::kStraight:
      return 0;
    case TrajectoryKind::kCircuitWithLoop:
      // Close the circuit at 90% of the sequence so the tail revisits the head.
      return std::max(2, static_cast<int>(std::lround(s.total_frames * 0.9)));
    case TrajectoryKind::kFigureEight:
      return std::max(2, static_cast<int>(std::lround(s.total_frames * 0.66)));
  }
  return 0;
}

PathPoint path_point(const SimScenario& s, double frame) {
  PathPoint p;
  switch (s.trajectory_kind) {
    case TrajectoryKind::kStraight: {
      p.position = Vec3(s.speed * frame, 0.0, 1.5);
      p.heading = Vec3(1, 0, 0);
      break;
    }
    case TrajectoryKind::kCircuitWithLoop: {
      const int period = revisit_period_of(s);
      const double radius = s.speed * period / (2.0 * M_PI);
      const double phi = 2.0 * M_PI * frame / period;
      p.position = Vec3(radius * std::sin(phi), radius * (1.0 - std::cos(phi)), 1.5);
      p.heading = Vec3(std::cos(phi), std::sin(phi), 0.0);
      break;
    }
    case TrajectoryKind::kFigureEight: {
      const int period = revisit_period_of(s);
      // Gerono lemniscate; arc length is roughly 6 half-widths per cycle.
      const double a = s.speed * period / 6.0;
      const double t = 2.0 * M_PI * frame / period;
      p.position = Vec3(a * std::sin(t), 0.5 * a * std::sin(2.0 * t), 1.5);
      Vec3 d(a * std::cos(t), a * std::cos(2.0 * t), 0.0);
      const double n = d.norm();
      p.heading = n > 0 ? Vec3(d / n) : Vec3(1, 0, 0);
      break;
    }
  }
  return p;
}

Mat3 camera_rotation(const Vec3& heading) {
  const Vec3 up(0, 0, 1);
  Vec3 right = heading.cross(up);
  const double n = right.norm();
  right = n > 1e-12 ? Vec3(right / n) : Vec3(0, -1, 0);
  const Vec3 cam_up = right.cross(heading).normalized();
  Mat3 r;
  r.col(0) = right;
  r.col(1) = cam_up;
  r.col(2) = heading.normalized();
  return r;
}

Sim3Tangent drift_tangent(const SimScenario& s, int chunk_index) {
  Rng rng(hash_mix(s.seed, kStreamDrift, static_cast<std::uint64_t>(chunk_index)));
  Sim3Tangent xi;
  const Vec3 axis = rng.gaussian3().normalized();
  xi.omega = axis * (s.drift_rotation_deg * M_PI / 180.0);
  xi.upsilon = rng.gaussian3().normalized() * s.drift_translation;
  xi.lambda = std::log1p(s.drift_scale_pct / 100.0) * rng.uniform(-1.0, 1.0);
  return xi;
}

void local_bounding_box(const SimScenario& s, const ChunkRange& range, const Sim3& inv,
                        Vec3& lo, Vec3& hi) {
  lo = Vec3::Constant(std::numeric_limits<double>::max());
  hi = Vec3::Constant(std::numeric_limits<double>::lowest());
  for (int g = range.frame_start; g < range.frame_end; ++g) {
    for (int y = 0; y < s.image_height; ++y) {
      for (int x = 0; x < s.image_width; ++x) {
        const Vec3 p = inv.apply(sim_world_point(s, g, y, x));
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
      }
    }
  }
}

ChunkPointMap fill_point_map(const SimScenario& s, int chunk_tag, std::uint64_t noise_stream,
                             int frame_start, int frame_count, const Sim3& local_to_world) {
  ChunkPointMap chunk;
  chunk.frame_start = static_cast<std::uint32_t>(frame_start);
  chunk.frames = static_cast<std::uint32_t>(frame_count);
  chunk.height = static_cast<std::uint32_t>(s.image_height);
  chunk.width = static_cast<std::uint32_t>(s.image_width);
  const std::size_t pixels = chunk.pixel_count();
  chunk.points.resize(pixels * 3);
  chunk.confidence.resize(pixels);
  chunk.poses.assign(static_cast<std::size_t>(frame_count) * 7, 0.0f);
  chunk.has_poses = true;

  const Sim3 inv = local_to_world.inverse();
  ChunkRange range{chunk_tag, frame_start, frame_start + frame_count};
  Vec3 box_lo, box_hi;
  if (s.outlier_fraction > 0.0) local_bounding_box(s, range, inv, box_lo, box_hi);

  std::size_t write = 0;
  for (int f = 0; f < frame_count; ++f) {
    const int g = frame_start + f;
    for (int y = 0; y < s.image_height; ++y) {
      for (int x = 0; x < s.image_width; ++x) {
        Rng rng(hash_mix(s.seed ^ noise_stream,
                         static_cast<std::uint64_t>(chunk_tag),
                         static_cast<std::uint64_t>(g),
                         static_cast<std::uint64_t>(y * s.image_width + x)));
        Vec3 local;
        double conf;
        if (s.outlier_fraction > 0.0 && rng.uniform() < s.outlier_fraction) {
          local = rng.uniform_box(box_lo, box_hi);
          conf = s.outlier_confidence;
        } else {
          const Vec3 world = sim_world_point(s, g, y, x) + s.point_noise * rng.gaussian3();
          local = inv.apply(world);
          conf = s.inlier_confidence;
        }
        chunk.points[write * 3] = static_cast<float>(local.x());
        chunk.points[write * 3 + 1] = static_cast<float>(local.y());
        chunk.points[write * 3 + 2] = static_cast<float>(local.z());
        chunk.confidence[write] = static_cast<float>(conf);
        ++write;
      }
    }
    const PathPoint cam = path_point(s, g);
    const Mat3 r_world = camera_rotation(cam.heading);
    const Sim3 cam_to_chunk(1.0, Mat3(inv.rotation() * r_world), inv.apply(cam.position));
    chunk.set_camera_pose(static_cast<std::uint32_t>(f), cam_to_chunk);
  }
  return chunk;
}

}  // namespace

Sim3 sim_camera_pose(const SimScenario& scenario, int frame) {
  const PathPoint p = path_point(scenario, frame);
  return Sim3(1.0, camera_rotation(p.heading), p.position);
}

Vec3 sim_world_point(const SimScenario& scenario, int frame, int y, int x) {
  Rng rng(hash_mix(scenario.seed ^ kStreamScene, static_cast<std::uint64_t>(frame),
                   static_cast<std::uint64_t>(y), static_cast<std::uint64_t>(x)));
  const PathPoint cam = path_point(scenario, frame);
  const Vec3 right = camera_rotation(cam.heading).col(0);

  const double u = scenario.image_width > 1
                       ? static_cast<double>(x) / (scenario.image_width - 1)
                       : 0.5;
  const double v = scenario.image_height > 1
                       ? static_cast<double>(y) / (scenario.image_height - 1)
                       : 0.5;
  double lateral = (u - 0.5) * 16.0;
  const double depth = 2.0 + v * 20.0 + rng.uniform(-0.3, 0.3);

  double height;
  if (std::abs(lateral) > 5.0) {
    // Facade band: vertical structure at the road edge.
    lateral = std::copysign(5.0 + rng.uniform(0.0, 0.8), lateral);
    height = rng.uniform(0.0, 6.0);
  } else {
    // Ground plane with mild relief.
    height = rng.uniform(0.0, 0.15);
  }
  lateral += rng.uniform(-0.3, 0.3);

  Vec3 p = cam.position + depth * cam.heading + lateral * right;
  p.z() = height;
  return p;
}

std::vector<Sim3> sim_chunk_states(const SimScenario& scenario,
                                   const std::vector<ChunkRange>& plan) {
  std::vector<Sim3> states;
  states.reserve(plan.size());
  Sim3 current;  // chunk 1 anchored at identity
  states.push_back(current);
  for (std::size_t k = 1; k < plan.size(); ++k) {
    current = current * Sim3::exp(drift_tangent(scenario, static_cast<int>(k)));
    states.push_back(current);
  }
  return states;
}

DescriptorSet sim_descriptors(const SimScenario& scenario) {
  if (scenario.descriptor_dim != 16) {
    throw Error("descriptor surrogate is defined for dimension 16");
  }
  DescriptorSet desc;
  desc.count = static_cast<std::uint32_t>(scenario.total_frames);
  desc.dim = 16;
  desc.vectors.resize(static_cast<std::size_t>(desc.count) * 16);

  // Three wavelengths (golden-ratio spaced so coincident recurrences stay
  // out of reach) along two axes, as sin/cos pairs: the dot product of two
  // rows is then an exact function of the displacement, with no random
  // phase noise. Heading breaks opposite-direction passes.
  const double wavelengths[3] = {5.0, 13.09, 34.27};
  const double heading_weight = std::sqrt(2.0);

  for (int f = 0; f < scenario.total_frames; ++f) {
    const PathPoint p = path_point(scenario, f);
    float* row = desc.vectors.data() + static_cast<std::size_t>(f) * 16;
    int d = 0;
    for (double wl : wavelengths) {
      const double kx = 2.0 * M_PI / wl;
      for (int axis = 0; axis < 2; ++axis) {
        const double phase = kx * p.position[axis];
        row[d++] = static_cast<float>(std::cos(phase));
        row[d++] = static_cast<float>(std::sin(phase));
      }
    }
    for (int axis = 0; axis < 3; ++axis) {
      row[d++] = static_cast<float>(heading_weight * p.heading[axis]);
    }
    row[d++] = 0.0f;
  }
  desc.normalize_rows();
  return desc;
}

ChunkPointMap sim_chunk(const SimScenario& scenario, const ChunkRange& range,
                        const Sim3& chunk_to_world) {
  ChunkPointMap chunk = fill_point_map(scenario, range.chunk_index, kStreamChunkNoise,
                                       range.frame_start, range.frames(), chunk_to_world);
  chunk.chunk_index = static_cast<std::uint32_t>(range.chunk_index);
  return chunk;
}

std::vector<Sim3> oracle_edges(const SimGroundTruth& gt) {
  std::vector<Sim3> edges;
  for (std::size_t k = 0; k + 1 < gt.chunk_to_world.size(); ++k) {
    edges.push_back(gt.chunk_to_world[k].inverse() * gt.chunk_to_world[k + 1]);
  }
  return edges;
}

Sim3 oracle_relative(const SimGroundTruth& gt, int chunk_from, int chunk_to) {
  if (chunk_from < 1 || chunk_to < 1 ||
      chunk_from > static_cast<int>(gt.chunk_to_world.size()) ||
      chunk_to > static_cast<int>(gt.chunk_to_world.size())) {
    throw Error("oracle_relative: chunk index out of range");
  }
  return gt.chunk_to_world[chunk_from - 1].inverse() * gt.chunk_to_world[chunk_to - 1];
}

SimOutput generate(const SimScenario& scenario, const std::filesystem::path& out_dir) {
  if (scenario.total_frames < 2) throw Error("scenario needs at least 2 frames");
  std::filesystem::create_directories(out_dir);

  SimOutput out;
  SimGroundTruth& gt = out.ground_truth;
  gt.plan = plan_chunks({scenario.chunk_size, scenario.overlap, scenario.total_frames});
  gt.chunk_to_world = sim_chunk_states(scenario, gt.plan);
  gt.revisit_period = revisit_period_of(scenario);
  if (scenario.trajectory_kind == TrajectoryKind::kStraight) gt.revisit_period = 0;

  for (int f = 0; f < scenario.total_frames; ++f) {
    const Sim3 cam = sim_camera_pose(scenario, f);
    TrajectoryEntry entry;
    entry.timestamp = static_cast<double>(f);
    entry.position = cam.translation();
    entry.orientation = cam.unit_quaternion();
    gt.camera_trajectory.push_back(entry);
  }

  ChunkStore store(out_dir, 1);
  for (std::size_t i = 0; i < gt.plan.size(); ++i) {
    store.store(sim_chunk(scenario, gt.plan[i], gt.chunk_to_world[i]));
  }

  const DescriptorSet descriptors = sim_descriptors(scenario);
  write_descriptor_file(out_dir / "descriptors.vgld", descriptors);

  // Pre-generate loop-centric chunks for exactly the pairs the detector
  // will re-find at run time (same pure function, same inputs).
  std::vector<LoopPair> pairs = detect_loops(descriptors, scenario.loop_detection);
  for (LoopPair& pair : pairs) {
    pair.chunk_i = chunk_for_frame(gt.plan, pair.frame_i);
    pair.chunk_j = chunk_for_frame(gt.plan, pair.frame_j);
    if (pair.chunk_i == pair.chunk_j) continue;

    Rng rng(hash_mix(scenario.seed ^ kStreamLoopFrame,
                     static_cast<std::uint64_t>(pair.frame_i),
                     static_cast<std::uint64_t>(pair.frame_j)));
    Sim3Tangent xi;
    xi.omega = rng.gaussian3().normalized() * (5.0 * M_PI / 180.0) * rng.uniform();
    xi.upsilon = rng.gaussian3();
    xi.lambda = rng.uniform(-0.02, 0.02);
    // The loop-centric chunk's own local frame, anchored near chunk i's
    // frame the way a fresh frontend inference would be.
    const Sim3 loop_to_world =
        gt.chunk_to_world[pair.chunk_i - 1] * Sim3::exp(xi);

    const int half = scenario.loop_half_width;
    const int tag = -(pair.frame_i * 100000 + pair.frame_j);
    for (int segment = 0; segment < 2; ++segment) {
      const int center = segment == 0 ? pair.frame_i : pair.frame_j;
      const int lo = std::max(0, center - half);
      const int hi = std::min(scenario.total_frames - 1, center + half);
      ChunkPointMap seg = fill_point_map(scenario, tag - segment, kStreamLoopNoise, lo,
                                         hi - lo + 1, loop_to_world);
      seg.chunk_index = 0;  // auxiliary
      write_chunk_file(
          store.loop_segment_path(pair.frame_i, pair.frame_j, segment), seg);
    }
    out.planted_loops.push_back(pair);
  }

  write_trajectory_tum(out_dir / "gt_trajectory.tum", gt.camera_trajectory);

  PoseGraph gt_graph;
  gt_graph.nodes = gt.chunk_to_world;
  const std::vector<Sim3> seq = oracle_edges(gt);
  for (std::size_t k = 0; k < seq.size(); ++k) {
    gt_graph.edges.push_back({static_cast<int>(k), static_cast<int>(k) + 1, seq[k],
                              EdgeKind::kSequential});
  }
  for (const LoopPair& pair : out.planted_loops) {
    gt_graph.edges.push_back({pair.chunk_j - 1, pair.chunk_i - 1,
                              oracle_relative(gt, pair.chunk_j, pair.chunk_i),
                              EdgeKind::kLoop});
  }
  write_pose_graph(out_dir / "gt_graph.g2o", gt_graph);
  return out;
}

SimScenario read_scenario_file(const std::filesystem::path& path) {
  KeyValueFile kv = KeyValueFile::parse(path);
  SimScenario s;
  s.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long>(s.seed)));
  const std::string kind = kv.get_string("trajectory", "circuit_with_loop");
  if (kind == "straight") {
    s.trajectory_kind = TrajectoryKind::kStraight;
  } else if (kind == "circuit_with_loop") {
    s.trajectory_kind = TrajectoryKind::kCircuitWithLoop;
  } else if (kind == "figure_eight") {
    s.trajectory_kind = TrajectoryKind::kFigureEight;
  } else {
    throw Error("unknown trajectory kind: " + kind);
  }
  s.total_frames = static_cast<int>(kv.get_int("frames", s.total_frames));
  s.chunk_size = static_cast<int>(kv.get_int("chunk_size", s.chunk_size));
  s.overlap = static_cast<int>(kv.get_int("overlap", s.overlap));
  s.speed = kv.get_double("speed", s.speed);
  s.image_height = static_cast<int>(kv.get_int("image_height", s.image_height));
  s.image_width = static_cast<int>(kv.get_int("image_width", s.image_width));
  s.drift_rotation_deg = kv.get_double("drift_rotation_deg", s.drift_rotation_deg);
  s.drift_scale_pct = kv.get_double("drift_scale_pct", s.drift_scale_pct);
  s.drift_translation = kv.get_double("drift_translation", s.drift_translation);
  s.point_noise = kv.get_double("point_noise", s.point_noise);
  s.outlier_fraction = kv.get_double("outlier_fraction", s.outlier_fraction);
  s.outlier_confidence = kv.get_double("outlier_confidence", s.outlier_confidence);
  s.inlier_confidence = kv.get_double("inlier_confidence", s.inlier_confidence);
  s.loop_half_width = static_cast<int>(kv.get_int("loop_half_width", s.loop_half_width));
  s.loop_detection.similarity_threshold =
      kv.get_double("loop_similarity_threshold", s.loop_detection.similarity_threshold);
  s.loop_detection.min_separation = static_cast<int>(
      kv.get_int("loop_min_separation", s.loop_detection.min_separation));
  s.loop_detection.nms_window =
      static_cast<int>(kv.get_int("loop_nms_window", s.loop_detection.nms_window));
  s.loop_detection.max_candidates =
      static_cast<int>(kv.get_int("loop_max_candidates", s.loop_detection.max_candidates));
  kv.finish();
  return s;
}

}  // namespace chunkalign
