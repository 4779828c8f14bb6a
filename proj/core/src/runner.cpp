#include "chunkalign/runner.hpp"

#include "chunkalign/chunk_store.hpp"
#include "chunkalign/metrics.hpp"
#include "chunkalign/ply.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

namespace chunkalign {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

IrlsConfig effective_irls(const PipelineConfig& config) {
  IrlsConfig irls = config.irls;
  if (!config.toggles.irls) {
    // Single-pass confidence-weighted fit: one solve, Huber disabled.
    irls.max_iterations = 1;
    irls.huber_delta_mode = HuberDeltaMode::kFixed;
    irls.huber_delta = std::numeric_limits<double>::infinity();
  }
  return irls;
}

ExtractOptions effective_extract(const PipelineConfig& config) {
  ExtractOptions extract = config.extract;
  extract.ignore_confidence = !config.toggles.confidence_weighting;
  return extract;
}

std::uint8_t confidence_shade(double confidence) {
  const double c = std::clamp(confidence, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(40.0 + 215.0 * c));
}

void write_report(const PipelineConfig& config, const RunResult& result) {
  nlohmann::json report;
  report["chunk_count"] = result.chunk_count;
  report["total_frames"] = result.total_frames;
  report["points_written"] = result.points_written;

  nlohmann::json stages = nlohmann::json::object();
  for (Stage stage : {Stage::kLoad, Stage::kSequentialAlign, Stage::kLoopDetect,
                      Stage::kLoopAlign, Stage::kOptimize, Stage::kExport}) {
    stages[stage_name(stage)] = result.stage_ms[static_cast<int>(stage)];
  }
  report["stage_ms"] = stages;
  report["total_ms"] = result.total_ms;

  nlohmann::json edges = nlohmann::json::array();
  for (const SequentialEdge& edge : result.sequential_edges) {
    edges.push_back({{"from", edge.from_chunk},
                     {"to", edge.to_chunk},
                     {"correspondences", edge.diagnostics.correspondences},
                     {"iterations", edge.diagnostics.iterations_used},
                     {"cost", edge.diagnostics.final_cost},
                     {"rms_residual", edge.diagnostics.rms_residual}});
  }
  report["sequential_edges"] = edges;

  nlohmann::json loops = nlohmann::json::array();
  for (const LoopRecord& loop : result.loops) {
    loops.push_back({{"frame_i", loop.frame_i},
                     {"frame_j", loop.frame_j},
                     {"chunk_i", loop.chunk_i},
                     {"chunk_j", loop.chunk_j},
                     {"similarity", loop.similarity},
                     {"used", loop.used},
                     {"skip_reason", loop.skip_reason},
                     {"rms_residual_i", loop.rms_residual_i},
                     {"rms_residual_j", loop.rms_residual_j}});
  }
  report["loops"] = loops;
  report["loop_edges_used"] = result.loop_edges_used;

  nlohmann::json lm = nlohmann::json::object();
  lm["initial_cost"] = result.lm_report.initial_cost;
  lm["final_cost"] = result.lm_report.final_cost;
  lm["accepted_steps"] = result.lm_report.accepted_steps;
  lm["stop_reason"] = result.lm_report.stop_reason;
  lm["total_ms"] = result.lm_report.total_ms;
  nlohmann::json iters = nlohmann::json::array();
  for (const LmIteration& it : result.lm_report.iterations) {
    iters.push_back({{"iteration", it.iteration},
                     {"cost", it.cost},
                     {"damping", it.damping},
                     {"step_norm", it.step_norm},
                     {"accepted", it.accepted},
                     {"wall_ms", it.wall_ms}});
  }
  lm["iterations"] = iters;
  report["lm"] = lm;

  nlohmann::json toggles;
  toggles["loop_closure"] = config.toggles.loop_closure;
  toggles["irls"] = config.toggles.irls;
  toggles["confidence_weighting"] = config.toggles.confidence_weighting;
  report["toggles"] = toggles;

  std::ofstream out(config.output_dir / "report.json", std::ios::trunc);
  if (!out) throw IoError("cannot write report.json");
  out << report.dump(2) << "\n";

  std::ofstream summary(config.output_dir / "summary.txt", std::ios::trunc);
  if (!summary) throw IoError("cannot write summary.txt");
  summary << "chunks: " << result.chunk_count << ", frames: " << result.total_frames
          << "\n";
  summary << "sequential edges: " << result.sequential_edges.size() << "\n";
  summary << "loop candidates: " << result.loops.size()
          << ", used: " << result.loop_edges_used << "\n";
  summary << "LM: cost " << result.lm_report.initial_cost << " -> "
          << result.lm_report.final_cost << " in " << result.lm_report.accepted_steps
          << " accepted steps (" << result.lm_report.stop_reason << ")\n";
  summary << "points written: " << result.points_written << "\n";
  for (Stage stage : {Stage::kLoad, Stage::kSequentialAlign, Stage::kLoopDetect,
                      Stage::kLoopAlign, Stage::kOptimize, Stage::kExport}) {
    summary << stage_name(stage) << ": " << result.stage_ms[static_cast<int>(stage)]
            << " ms\n";
  }
  summary << "total: " << result.total_ms << " ms\n";
}

}  // namespace

const char* stage_name(Stage stage) {
  switch (stage) {
    case Stage::kLoad:
      return "load";
    case Stage::kSequentialAlign:
      return "sequential_align";
    case Stage::kLoopDetect:
      return "loop_detect";
    case Stage::kLoopAlign:
      return "loop_align";
    case Stage::kOptimize:
      return "optimize";
    case Stage::kExport:
      return "export";
  }
  return "unknown";
}

RunResult run_pipeline(const PipelineConfig& config) {
  const auto t_total = Clock::now();
  RunResult result;
  std::filesystem::create_directories(config.output_dir);

  // --- load ----------------------------------------------------------------
  auto t_stage = Clock::now();
  ChunkStore store(config.chunk_dir, config.cache_capacity);
  std::vector<ChunkRange> plan;
  {
    if (store.chunk_count() == 0) {
      throw StageError(Stage::kLoad, "no chunks found in " + config.chunk_dir.string());
    }
    const std::vector<int> indices = store.chunk_indices();
    int total_frames = 0;
    std::vector<ChunkRange> actual;
    for (int k : indices) {
      ChunkPointMap header;
      try {
        header = read_chunk_header(store.chunk_path(k));
      } catch (const Error& e) {
        throw StageError(Stage::kLoad, e.what());
      }
      actual.push_back({k, static_cast<int>(header.frame_start), header.frame_end()});
      total_frames = std::max(total_frames, header.frame_end());
    }
    result.total_frames = total_frames;
    result.chunk_count = store.chunk_count();

    ChunkSpec spec = config.chunk;
    spec.total_frames = total_frames;
    try {
      plan = plan_chunks(spec);
    } catch (const Error& e) {
      throw StageError(Stage::kLoad, e.what());
    }
    if (plan.size() != actual.size()) {
      throw StageError(Stage::kLoad,
                       "store holds " + std::to_string(actual.size()) +
                           " chunks but the partition formula expects " +
                           std::to_string(plan.size()) +
                           " (check chunk_size/overlap)");
    }
    for (std::size_t i = 0; i < plan.size(); ++i) {
      if (plan[i].chunk_index != actual[i].chunk_index ||
          plan[i].frame_start != actual[i].frame_start ||
          plan[i].frame_end != actual[i].frame_end) {
        throw StageError(Stage::kLoad,
                         "chunk " + std::to_string(actual[i].chunk_index) +
                             " frame range does not match the partition formula");
      }
    }
  }
  result.stage_ms[static_cast<int>(Stage::kLoad)] = ms_since(t_stage);

  // --- sequential alignment -------------------------------------------------
  t_stage = Clock::now();
  const IrlsConfig irls = effective_irls(config);
  const ExtractOptions extract = effective_extract(config);
  try {
    result.sequential_edges = align_sequence(store, irls, extract);
  } catch (const Error& e) {
    throw StageError(Stage::kSequentialAlign, e.what());
  }
  std::vector<Sim3> world;
  try {
    world = accumulate_world(result.sequential_edges);
  } catch (const Error& e) {
    throw StageError(Stage::kSequentialAlign, e.what());
  }
  result.stage_ms[static_cast<int>(Stage::kSequentialAlign)] = ms_since(t_stage);

  // --- loop detection ---------------------------------------------------------
  t_stage = Clock::now();
  std::vector<LoopPair> pairs;
  if (config.toggles.loop_closure) {
    try {
      if (config.loop_pairs_override) {
        pairs = read_loop_pair_file(*config.loop_pairs_override);
      } else {
        const DescriptorSet descriptors = read_descriptor_file(config.descriptor_file);
        if (static_cast<int>(descriptors.count) != result.total_frames) {
          throw Error("descriptor count " + std::to_string(descriptors.count) +
                      " does not match frame count " +
                      std::to_string(result.total_frames));
        }
        pairs = detect_loops(descriptors, config.loop);
      }
      for (LoopPair& pair : pairs) {
        pair.chunk_i = chunk_for_frame(plan, pair.frame_i);
        pair.chunk_j = chunk_for_frame(plan, pair.frame_j);
      }
    } catch (const Error& e) {
      throw StageError(Stage::kLoopDetect, e.what());
    }
  }
  result.stage_ms[static_cast<int>(Stage::kLoopDetect)] = ms_since(t_stage);

  // --- loop constraints -------------------------------------------------------
  t_stage = Clock::now();
  std::vector<GraphEdge> loop_edges;
  if (config.toggles.loop_closure && !pairs.empty()) {
    double residual_threshold = std::numeric_limits<double>::infinity();
    if (config.loop_residual_gate && !result.sequential_edges.empty()) {
      std::vector<double> rms;
      rms.reserve(result.sequential_edges.size());
      for (const SequentialEdge& edge : result.sequential_edges) {
        rms.push_back(edge.diagnostics.rms_residual);
      }
      residual_threshold = config.loop_residual_gate_factor * median(std::move(rms));
    }

    for (const LoopPair& pair : pairs) {
      LoopRecord record;
      record.frame_i = pair.frame_i;
      record.frame_j = pair.frame_j;
      record.chunk_i = pair.chunk_i;
      record.chunk_j = pair.chunk_j;
      record.similarity = pair.similarity;

      if (pair.chunk_i == pair.chunk_j) {
        record.skip_reason = "both endpoints in chunk " + std::to_string(pair.chunk_i);
        result.loops.push_back(record);
        continue;
      }
      if (!store.has_loop_segments(pair.frame_i, pair.frame_j)) {
        record.skip_reason = "no loop-centric chunk data";
        result.loops.push_back(record);
        continue;
      }
      try {
        const ChunkPointMap segment_i = store.load_loop_segment(pair.frame_i, pair.frame_j, 0);
        const ChunkPointMap segment_j = store.load_loop_segment(pair.frame_i, pair.frame_j, 1);
        const auto chunk_i = store.load(pair.chunk_i);
        const AlignResult to_i =
            irls_align(overlap_correspondences(*chunk_i, segment_i, extract), irls);
        const auto chunk_j = store.load(pair.chunk_j);
        const AlignResult to_j =
            irls_align(overlap_correspondences(*chunk_j, segment_j, extract), irls);
        record.rms_residual_i = to_i.rms_residual;
        record.rms_residual_j = to_j.rms_residual;
        if (to_i.rms_residual > residual_threshold ||
            to_j.rms_residual > residual_threshold) {
          record.skip_reason = "alignment residual above gate";
          result.loops.push_back(record);
          continue;
        }
        // S_ji maps chunk i coordinates into chunk j: edge j -> i.
        const Sim3 constraint = compose_loop_constraint(to_i.transform, to_j.transform);
        loop_edges.push_back(
            {pair.chunk_j - 1, pair.chunk_i - 1, constraint, EdgeKind::kLoop});
        record.used = true;
        result.loops.push_back(record);
      } catch (const Error& e) {
        throw StageError(Stage::kLoopAlign,
                         "loop pair (" + std::to_string(pair.frame_i) + ", " +
                             std::to_string(pair.frame_j) + "): " + e.what());
      }
    }
    result.loop_edges_used = loop_edges.size();
  }
  result.stage_ms[static_cast<int>(Stage::kLoopAlign)] = ms_since(t_stage);

  // --- global optimization ----------------------------------------------------
  t_stage = Clock::now();
  PoseGraph graph;
  graph.nodes = world;
  for (const SequentialEdge& edge : result.sequential_edges) {
    graph.edges.push_back(
        {edge.from_chunk - 1, edge.to_chunk - 1, edge.measurement, EdgeKind::kSequential});
  }
  for (const GraphEdge& edge : loop_edges) graph.edges.push_back(edge);

  try {
    write_pose_graph(config.output_dir / "graph_initial.g2o", graph);
    result.lm_report = optimize(graph, config.lm);
    write_pose_graph(config.output_dir / "graph_optimized.g2o", graph);
  } catch (const Error& e) {
    throw StageError(Stage::kOptimize, e.what());
  }
  const std::vector<Sim3> corrected = apply_correction(graph, world);
  result.stage_ms[static_cast<int>(Stage::kOptimize)] = ms_since(t_stage);

  // --- export -------------------------------------------------------------------
  t_stage = Clock::now();
  try {
    store.evict_all();
    PlyStreamWriter ply(config.output_dir / "cloud.ply");
    const ExportResult exported = export_fused(
        store, corrected, config.export_opts, [&](const Vec3& p, double confidence) {
          const std::uint8_t shade = confidence_shade(confidence);
          ply.add(p, shade, shade, shade);
        });
    ply.close();
    result.trajectory = exported.trajectory;
    result.points_written = exported.points_written;
    write_trajectory_tum(config.output_dir / "trajectory.tum", result.trajectory);
  } catch (const Error& e) {
    throw StageError(Stage::kExport, e.what());
  }
  result.stage_ms[static_cast<int>(Stage::kExport)] = ms_since(t_stage);

  result.total_ms = ms_since(t_total);
  write_report(config, result);
  return result;
}

}  // namespace chunkalign
