#include "chunkalign/metrics.hpp"

#include "chunkalign/error.hpp"
#include "chunkalign/robust_align.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace chunkalign {

double ate_rmse(const Trajectory& estimated, const Trajectory& reference,
                AteAlignment alignment) {
  if (estimated.size() != reference.size()) {
    throw Error("ate_rmse: trajectory length mismatch (" +
                std::to_string(estimated.size()) + " vs " +
                std::to_string(reference.size()) + ")");
  }
  if (estimated.size() < 2) throw Error("ate_rmse: need at least 2 poses");

  Sim3 align;
  if (alignment != AteAlignment::kNone) {
    CorrespondenceSet corr;
    corr.source_points.reserve(estimated.size());
    corr.target_points.reserve(estimated.size());
    for (std::size_t i = 0; i < estimated.size(); ++i) {
      corr.source_points.push_back(estimated[i].position);
      corr.target_points.push_back(reference[i].position);
    }
    corr.confidence.assign(estimated.size(), 1.0);
    UmeyamaOptions opts;
    opts.fix_scale = alignment == AteAlignment::kSe3;
    align = weighted_umeyama(corr, corr.confidence, opts);
  }

  double sq_sum = 0.0;
  for (std::size_t i = 0; i < estimated.size(); ++i) {
    sq_sum += (reference[i].position - align.apply(estimated[i].position)).squaredNorm();
  }
  return std::sqrt(sq_sum / static_cast<double>(estimated.size()));
}

double default_cell_size(const std::vector<Vec3>& points) {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
  Vec3 hi = Vec3::Constant(std::numeric_limits<double>::lowest());
  for (const Vec3& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec3 extent = (hi - lo).cwiseMax(1e-9);
  const double volume = extent.x() * extent.y() * extent.z();
  const double spacing = std::cbrt(volume / static_cast<double>(points.size()));
  return std::max(2.0 * spacing, 1e-9);
}

VoxelGrid::VoxelGrid(const std::vector<Vec3>& points, double cell_size)
    : points_(points), cell_(cell_size) {
  if (points_.empty()) throw Error("VoxelGrid: empty point set");
  if (!(cell_ > 0.0)) throw Error("VoxelGrid: cell size must be > 0");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const CellKey key = key_of(points_[i]);
    if (i == 0) {
      key_lo_ = key;
      key_hi_ = key;
    } else {
      key_lo_ = {std::min(key_lo_.x, key.x), std::min(key_lo_.y, key.y),
                 std::min(key_lo_.z, key.z)};
      key_hi_ = {std::max(key_hi_.x, key.x), std::max(key_hi_.y, key.y),
                 std::max(key_hi_.z, key.z)};
    }
    cells_[key].push_back(i);
  }
}

VoxelGrid::CellKey VoxelGrid::key_of(const Vec3& p) const {
  return {static_cast<long long>(std::floor(p.x() / cell_)),
          static_cast<long long>(std::floor(p.y() / cell_)),
          static_cast<long long>(std::floor(p.z() / cell_))};
}

std::pair<std::size_t, double> VoxelGrid::nearest(const Vec3& query) const {
  const CellKey center = key_of(query);

  // Every occupied cell sits within this Chebyshev radius of the query cell,
  // so the ring scan is guaranteed to terminate with a result.
  auto axis_reach = [](long long c, long long lo, long long hi) {
    return std::max(std::llabs(c - lo), std::llabs(c - hi));
  };
  const long long last_ring = std::max(
      {axis_reach(center.x, key_lo_.x, key_hi_.x), axis_reach(center.y, key_lo_.y, key_hi_.y),
       axis_reach(center.z, key_lo_.z, key_hi_.z)});

  std::size_t best_index = 0;
  double best_sq = std::numeric_limits<double>::max();

  for (long long ring = 0; ring <= last_ring; ++ring) {
    // Points in ring r lie at least (r-1)*cell away; once the current best
    // beats that bound no farther ring can improve it.
    if (best_sq < std::numeric_limits<double>::max() && ring >= 1) {
      const double safe = (static_cast<double>(ring) - 1.0) * cell_;
      if (safe * safe >= best_sq) break;
    }
    for (long long dx = -ring; dx <= ring; ++dx) {
      for (long long dy = -ring; dy <= ring; ++dy) {
        for (long long dz = -ring; dz <= ring; ++dz) {
          if (std::max({std::llabs(dx), std::llabs(dy), std::llabs(dz)}) != ring) continue;
          const auto it = cells_.find({center.x + dx, center.y + dy, center.z + dz});
          if (it == cells_.end()) continue;
          for (std::size_t idx : it->second) {
            const double sq = (points_[idx] - query).squaredNorm();
            if (sq < best_sq) {
              best_sq = sq;
              best_index = idx;
            }
          }
        }
      }
    }
  }
  return {best_index, std::sqrt(best_sq)};
}

namespace {

double directed_mean_distance(const std::vector<Vec3>& from, const VoxelGrid& to_grid) {
  double sum = 0.0;
  for (const Vec3& p : from) sum += to_grid.nearest(p).second;
  return sum / static_cast<double>(from.size());
}

}  // namespace

CloudMetrics cloud_metrics(const std::vector<Vec3>& predicted,
                           const std::vector<Vec3>& reference,
                           const IcpOptions& opts) {
  if (predicted.empty() || reference.empty()) {
    throw Error("cloud_metrics: point sets must be non-empty");
  }

  const double cell =
      opts.cell_size > 0.0 ? opts.cell_size : default_cell_size(reference);
  const VoxelGrid ref_grid(reference, cell);

  CloudMetrics out;
  std::vector<Vec3> working = predicted;
  Sim3 total;

  for (int iter = 0; iter < opts.iterations; ++iter) {
    CorrespondenceSet corr;
    corr.source_points = working;
    corr.target_points.reserve(working.size());
    double sq_sum = 0.0;
    for (const Vec3& p : working) {
      const auto [idx, dist] = ref_grid.nearest(p);
      corr.target_points.push_back(reference[idx]);
      sq_sum += dist * dist;
    }
    out.icp_cost.push_back(sq_sum / static_cast<double>(working.size()));
    corr.confidence.assign(working.size(), 1.0);

    UmeyamaOptions rigid;
    rigid.fix_scale = true;
    const Sim3 increment = weighted_umeyama(corr, corr.confidence, rigid);
    total = increment * total;
    for (Vec3& p : working) p = increment.apply(p);

    if (increment.log().norm() < opts.motion_tol) break;
  }
  out.icp_transform = total;

  out.accuracy = directed_mean_distance(working, ref_grid);
  const VoxelGrid pred_grid(working, cell);
  out.completeness = directed_mean_distance(reference, pred_grid);
  out.chamfer = 0.5 * (out.accuracy + out.completeness);
  return out;
}

}  // namespace chunkalign
