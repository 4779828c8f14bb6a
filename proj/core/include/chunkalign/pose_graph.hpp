#pragma once

#include "chunkalign/sim3.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace chunkalign {

enum class EdgeKind { kSequential, kLoop };

struct GraphEdge {
  int from = 0;
  int to = 0;
  Sim3 measurement;  ///< expected S_from^-1 * S_to
  EdgeKind kind = EdgeKind::kSequential;
};

/// Chunk nodes (chunk-to-world Sim3 states) plus relative measurements.
/// Node 0 is the gauge anchor and stays fixed during optimization.
struct PoseGraph {
  std::vector<Sim3> nodes;
  std::vector<GraphEdge> edges;
};

enum class JacobianMode { kNumeric, kAnalytic };

struct LmConfig {
  int max_iterations = 50;
  double initial_damping = 1e-4;
  double damping_up = 10.0;
  double damping_down = 2.0;
  double cost_tol = 1e-10;  ///< relative cost decrease
  double step_tol = 1e-10;  ///< tangent-space step norm
  JacobianMode jacobian_mode = JacobianMode::kNumeric;
};

/// log(measurement^-1 * S_from^-1 * S_to); zero iff the states satisfy the
/// measurement exactly. Throws GraphError (naming the edge) when the log
/// hits the rotation-angle-pi branch point.
Vec7 edge_residual(const PoseGraph& graph, const GraphEdge& edge);

/// Sum of squared residual norms over all edges.
double total_cost(const PoseGraph& graph);

/// Jacobians of edge_residual w.r.t. right-multiplied tangent perturbations
/// of the two endpoint states.
void edge_jacobians(const PoseGraph& graph, const GraphEdge& edge, JacobianMode mode,
                    Vec7& residual, Mat7& j_from, Mat7& j_to);

struct LmIteration {
  int iteration = 0;
  double cost = 0.0;  ///< cost after this evaluation
  double damping = 0.0;
  double step_norm = 0.0;
  bool accepted = false;
  double wall_ms = 0.0;
};

struct OptimizeReport {
  std::vector<LmIteration> iterations;
  int accepted_steps = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  std::string stop_reason;
  double total_ms = 0.0;
};

/// Levenberg-Marquardt over the free nodes' 7-D tangents (node 0 anchored):
/// damped normal equations from the edge Jacobians, steps accepted only when
/// the cost decreases. Requires a connected graph.
OptimizeReport optimize(PoseGraph& graph, const LmConfig& cfg);

/// Replaces the accumulated chunk-to-world transforms with the optimized
/// node states.
std::vector<Sim3> apply_correction(const PoseGraph& graph, const std::vector<Sim3>& world);

/// g2o-style text dump:
///   VERTEX_SIM3 k tx ty tz qx qy qz qw s
///   EDGE_SIM3 k k' tx ty tz qx qy qz qw s kind
/// with 0-based node ids and kind in {sequential, loop}. Values carry full
/// double precision so dump/load round-trips are byte-stable.
void write_pose_graph(const std::filesystem::path& path, const PoseGraph& graph);
PoseGraph read_pose_graph(const std::filesystem::path& path);

}  // namespace chunkalign
