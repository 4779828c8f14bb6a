#include "chunkalign/pose_graph.hpp"

#include "chunkalign/error.hpp"

#include <Eigen/Cholesky>

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <queue>
#include <sstream>

namespace chunkalign {

namespace {

constexpr double kFdStep = 1e-6;
constexpr double kMaxDamping = 1e13;

void check_edge_nodes(const PoseGraph& graph, const GraphEdge& edge) {
  const int n = static_cast<int>(graph.nodes.size());
  if (edge.from < 0 || edge.from >= n || edge.to < 0 || edge.to >= n ||
      edge.from == edge.to) {
    throw GraphError("edge (" + std::to_string(edge.from) + ", " +
                     std::to_string(edge.to) + ") references invalid nodes");
  }
}

void check_connected(const PoseGraph& graph) {
  const std::size_t n = graph.nodes.size();
  if (n == 0) throw GraphError("graph has no nodes");
  std::vector<char> seen(n, 0);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = 1;
  std::vector<std::vector<int>> adjacency(n);
  for (const GraphEdge& edge : graph.edges) {
    check_edge_nodes(graph, edge);
    adjacency[edge.from].push_back(edge.to);
    adjacency[edge.to].push_back(edge.from);
  }
  while (!frontier.empty()) {
    const int node = frontier.front();
    frontier.pop();
    for (int next : adjacency[node]) {
      if (!seen[next]) {
        seen[next] = 1;
        frontier.push(next);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen[i]) {
      throw GraphError("graph not connected: node " + std::to_string(i) +
                       " unreachable from the anchor");
    }
  }
}

Vec7 residual_for_states(const Sim3& from, const Sim3& to, const GraphEdge& edge) {
  try {
    return (edge.measurement.inverse() * from.inverse() * to).log().vector();
  } catch (const LogSingularityError& e) {
    throw GraphError("edge (" + std::to_string(edge.from) + ", " +
                     std::to_string(edge.to) + "): " + e.what());
  }
}

double cost_for_states(const std::vector<Sim3>& nodes, const PoseGraph& graph) {
  double cost = 0.0;
  for (const GraphEdge& edge : graph.edges) {
    cost += residual_for_states(nodes[edge.from], nodes[edge.to], edge).squaredNorm();
  }
  return cost;
}

}  // namespace

Vec7 edge_residual(const PoseGraph& graph, const GraphEdge& edge) {
  check_edge_nodes(graph, edge);
  return residual_for_states(graph.nodes[edge.from], graph.nodes[edge.to], edge);
}

double total_cost(const PoseGraph& graph) {
  double cost = 0.0;
  for (const GraphEdge& edge : graph.edges) {
    cost += edge_residual(graph, edge).squaredNorm();
  }
  return cost;
}

void edge_jacobians(const PoseGraph& graph, const GraphEdge& edge, JacobianMode mode,
                    Vec7& residual, Mat7& j_from, Mat7& j_to) {
  check_edge_nodes(graph, edge);
  const Sim3& from = graph.nodes[edge.from];
  const Sim3& to = graph.nodes[edge.to];
  residual = residual_for_states(from, to, edge);

  if (mode == JacobianMode::kAnalytic) {
    const Mat7 jr_inv = inverse_right_jacobian(Sim3Tangent(residual));
    j_to = jr_inv;
    j_from = -jr_inv * adjoint(to.inverse() * from);
    return;
  }

  for (int c = 0; c < 7; ++c) {
    Vec7 h = Vec7::Zero();
    h[c] = kFdStep;
    const Sim3 d_plus = Sim3::exp(Sim3Tangent(h));
    const Sim3 d_minus = Sim3::exp(Sim3Tangent((-h).eval()));
    j_from.col(c) = (residual_for_states(from * d_plus, to, edge) -
                     residual_for_states(from * d_minus, to, edge)) /
                    (2.0 * kFdStep);
    j_to.col(c) = (residual_for_states(from, to * d_plus, edge) -
                   residual_for_states(from, to * d_minus, edge)) /
                  (2.0 * kFdStep);
  }
}

OptimizeReport optimize(PoseGraph& graph, const LmConfig& cfg) {
  if (cfg.max_iterations < 0) throw GraphError("max_iterations must be >= 0");
  check_connected(graph);

  const auto t_start = std::chrono::steady_clock::now();
  OptimizeReport report;

  const int node_count = static_cast<int>(graph.nodes.size());
  const int free_count = node_count - 1;  // node 0 is the gauge anchor
  double cost = total_cost(graph);
  report.initial_cost = cost;
  report.final_cost = cost;
  if (free_count == 0 || graph.edges.empty()) {
    report.stop_reason = "nothing to optimize";
    return report;
  }

  const int dim = 7 * free_count;
  double damping = cfg.initial_damping;
  std::string stop_reason;

  for (int iter = 0; iter < cfg.max_iterations && stop_reason.empty(); ++iter) {
    const auto t_iter = std::chrono::steady_clock::now();

    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
    for (const GraphEdge& edge : graph.edges) {
      Vec7 r;
      Mat7 j_from, j_to;
      edge_jacobians(graph, edge, cfg.jacobian_mode, r, j_from, j_to);
      const int bf = (edge.from - 1) * 7;
      const int bt = (edge.to - 1) * 7;
      if (edge.from != 0) {
        h.block<7, 7>(bf, bf) += j_from.transpose() * j_from;
        g.segment<7>(bf) += j_from.transpose() * r;
      }
      if (edge.to != 0) {
        h.block<7, 7>(bt, bt) += j_to.transpose() * j_to;
        g.segment<7>(bt) += j_to.transpose() * r;
      }
      if (edge.from != 0 && edge.to != 0) {
        h.block<7, 7>(bf, bt) += j_from.transpose() * j_to;
        h.block<7, 7>(bt, bf) += j_to.transpose() * j_from;
      }
    }

    // Damping attempts on a fixed linearization.
    while (true) {
      Eigen::MatrixXd damped = h;
      damped.diagonal().array() += damping;
      const Eigen::LLT<Eigen::MatrixXd> llt(damped);
      if (llt.info() != Eigen::Success) {
        damping *= cfg.damping_up;
        if (damping > kMaxDamping) {
          throw GraphError("normal-equation solve failed at maximum damping");
        }
        continue;
      }
      const Eigen::VectorXd step = llt.solve(-g);
      const double step_norm = step.norm();

      if (step_norm <= cfg.step_tol) {
        stop_reason = "step below step_tol";
        report.iterations.push_back({iter, cost, damping, step_norm, false,
                                     std::chrono::duration<double, std::milli>(
                                         std::chrono::steady_clock::now() - t_iter)
                                         .count()});
        break;
      }

      std::vector<Sim3> candidate = graph.nodes;
      for (int nidx = 1; nidx < node_count; ++nidx) {
        const Vec7 delta = step.segment<7>((nidx - 1) * 7);
        candidate[nidx] = candidate[nidx] * Sim3::exp(Sim3Tangent(delta));
      }
      const double candidate_cost = cost_for_states(candidate, graph);
      const double wall_ms = std::chrono::duration<double, std::milli>(
                                 std::chrono::steady_clock::now() - t_iter)
                                 .count();

      if (candidate_cost < cost) {
        graph.nodes = std::move(candidate);
        report.iterations.push_back({iter, candidate_cost, damping, step_norm, true, wall_ms});
        ++report.accepted_steps;
        const double decrease = cost - candidate_cost;
        const double prev_cost = cost;
        cost = candidate_cost;
        damping /= cfg.damping_down;
        if (decrease <= cfg.cost_tol * prev_cost) {
          stop_reason = "relative cost decrease below cost_tol";
        }
        break;
      }

      report.iterations.push_back({iter, cost, damping, step_norm, false, wall_ms});
      damping *= cfg.damping_up;
      if (damping > kMaxDamping) {
        stop_reason = "no acceptable step at maximum damping";
        break;
      }
    }
  }

  if (stop_reason.empty()) stop_reason = "max_iterations reached";
  report.stop_reason = stop_reason;
  report.final_cost = cost;
  report.total_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t_start)
                        .count();
  return report;
}

std::vector<Sim3> apply_correction(const PoseGraph& graph, const std::vector<Sim3>& world) {
  if (graph.nodes.size() != world.size()) {
    throw GraphError("apply_correction: node count does not match world transform count");
  }
  return graph.nodes;
}

void write_pose_graph(const std::filesystem::path& path, const PoseGraph& graph) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  char line[512];
  auto format_sim3 = [&](const Sim3& s, char* buf, std::size_t size) {
    Eigen::Quaterniond q = s.unit_quaternion();
    if (q.w() < 0.0) q.coeffs() = -q.coeffs();  // canonical sign
    std::snprintf(buf, size, "%.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g",
                  s.translation().x(), s.translation().y(), s.translation().z(), q.x(),
                  q.y(), q.z(), q.w(), s.scale());
  };
  char body[480];
  for (std::size_t k = 0; k < graph.nodes.size(); ++k) {
    format_sim3(graph.nodes[k], body, sizeof(body));
    std::snprintf(line, sizeof(line), "VERTEX_SIM3 %zu %s\n", k, body);
    out << line;
  }
  for (const GraphEdge& edge : graph.edges) {
    format_sim3(edge.measurement, body, sizeof(body));
    std::snprintf(line, sizeof(line), "EDGE_SIM3 %d %d %s %s\n", edge.from, edge.to, body,
                  edge.kind == EdgeKind::kLoop ? "loop" : "sequential");
    out << line;
  }
  if (!out) throw IoError("write failed: " + path.string());
}

PoseGraph read_pose_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open graph file: " + path.string());
  PoseGraph graph;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string tag;
    row >> tag;
    if (tag == "VERTEX_SIM3") {
      std::size_t k = 0;
      double tx, ty, tz, qx, qy, qz, qw, s;
      if (!(row >> k >> tx >> ty >> tz >> qx >> qy >> qz >> qw >> s)) {
        throw IoError("malformed VERTEX_SIM3 at line " + std::to_string(line_no));
      }
      if (graph.nodes.size() <= k) graph.nodes.resize(k + 1);
      graph.nodes[k] = Sim3(s, Eigen::Quaterniond(qw, qx, qy, qz), Vec3(tx, ty, tz));
    } else if (tag == "EDGE_SIM3") {
      int from, to;
      double tx, ty, tz, qx, qy, qz, qw, s;
      std::string kind;
      if (!(row >> from >> to >> tx >> ty >> tz >> qx >> qy >> qz >> qw >> s >> kind)) {
        throw IoError("malformed EDGE_SIM3 at line " + std::to_string(line_no));
      }
      GraphEdge edge;
      edge.from = from;
      edge.to = to;
      edge.measurement = Sim3(s, Eigen::Quaterniond(qw, qx, qy, qz), Vec3(tx, ty, tz));
      if (kind == "loop") {
        edge.kind = EdgeKind::kLoop;
      } else if (kind == "sequential") {
        edge.kind = EdgeKind::kSequential;
      } else {
        throw IoError("unknown edge kind '" + kind + "' at line " + std::to_string(line_no));
      }
      graph.edges.push_back(edge);
    } else {
      throw IoError("unknown record '" + tag + "' at line " + std::to_string(line_no));
    }
  }
  return graph;
}

}  // namespace chunkalign
