#pragma once

#include "chunkalign/config.hpp"
#include "chunkalign/error.hpp"
#include "chunkalign/pose_graph.hpp"
#include "chunkalign/trajectory.hpp"

#include <string>

namespace chunkalign {

/// Pipeline stages, doubling as CLI exit codes on failure.
enum class Stage : int {
  kLoad = 2,
  kSequentialAlign = 3,
  kLoopDetect = 4,
  kLoopAlign = 5,
  kOptimize = 6,
  kExport = 7,
};

const char* stage_name(Stage stage);

class StageError : public Error {
 public:
  StageError(Stage stage, const std::string& what)
      : Error(std::string(stage_name(stage)) + ": " + what), stage_(stage) {}
  Stage stage() const { return stage_; }
  int exit_code() const { return static_cast<int>(stage_); }

 private:
  Stage stage_;
};

struct LoopRecord {
  int frame_i = 0;
  int frame_j = 0;
  int chunk_i = 0;
  int chunk_j = 0;
  double similarity = 0.0;
  bool used = false;
  std::string skip_reason;
  double rms_residual_i = 0.0;
  double rms_residual_j = 0.0;
};

struct RunResult {
  Trajectory trajectory;
  std::size_t points_written = 0;
  std::size_t chunk_count = 0;
  int total_frames = 0;
  std::vector<SequentialEdge> sequential_edges;
  std::vector<LoopRecord> loops;
  std::size_t loop_edges_used = 0;
  OptimizeReport lm_report;
  double stage_ms[8] = {0, 0, 0, 0, 0, 0, 0, 0};  // indexed by Stage value
  double total_ms = 0.0;
};

/// Runs plan -> sequential align -> loop detect -> loop constraints ->
/// global optimize -> correct -> export, writing trajectory.tum, cloud.ply,
/// graph_initial.g2o, graph_optimized.g2o, report.json and summary.txt into
/// the configured output directory. Throws StageError with a diagnostic
/// naming the failing stage and chunk/edge.
RunResult run_pipeline(const PipelineConfig& config);

}  // namespace chunkalign
