#pragma once

#include "chunkalign/chunking.hpp"

#include <filesystem>
#include <list>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace chunkalign {

/// Binary chunk file I/O. Little-endian layout:
///   magic "VGLC", u32 version=1, u32 chunk_index, u32 frame_start,
///   u32 F, u32 H, u32 W, u8 has_poses,
///   f32 points[F*H*W*3], f32 confidence[F*H*W],
///   then if has_poses: f32 poses[F*7] as (tx,ty,tz,qx,qy,qz,qw).
void write_chunk_file(const std::filesystem::path& path, const ChunkPointMap& chunk);
ChunkPointMap read_chunk_file(const std::filesystem::path& path);

/// Reads only the fixed-size header (dimensions and frame range).
ChunkPointMap read_chunk_header(const std::filesystem::path& path);

/// Disk-backed chunk collection with a bounded in-memory cache. During
/// pairwise alignment at most two chunks are resident; the store tracks the
/// peak so tests can assert the residency budget.
class ChunkStore {
 public:
  /// Scans `root` for chunk_NNNNN.vglc files. `capacity` bounds the number
  /// of concurrently resident chunks.
  explicit ChunkStore(std::filesystem::path root, std::size_t capacity = 2);

  const std::filesystem::path& root() const { return root_; }

  /// Sequential chunk indices present, ascending.
  std::vector<int> chunk_indices() const;
  std::size_t chunk_count() const { return index_.size(); }
  bool has_chunk(int chunk_index) const { return index_.count(chunk_index) != 0; }

  /// Loads through the cache (evicting least-recently-used beyond capacity).
  std::shared_ptr<const ChunkPointMap> load(int chunk_index);

  /// Writes a chunk file and registers it in the index.
  void store(const ChunkPointMap& chunk);

  void evict_all();

  std::size_t resident_count() const { return cache_.size(); }
  std::size_t peak_resident() const { return peak_resident_; }
  std::size_t capacity() const { return capacity_; }

  static std::string chunk_filename(int chunk_index);
  std::filesystem::path chunk_path(int chunk_index) const;

  /// Loop-centric chunks are stored as two contiguous segments sharing one
  /// local frame; segment is 0 (window around frame i) or 1 (around j).
  static std::string loop_segment_filename(int frame_i, int frame_j, int segment);
  std::filesystem::path loop_segment_path(int frame_i, int frame_j, int segment) const;
  bool has_loop_segments(int frame_i, int frame_j) const;
  ChunkPointMap load_loop_segment(int frame_i, int frame_j, int segment) const;

 private:
  std::filesystem::path root_;
  std::size_t capacity_;
  std::map<int, std::filesystem::path> index_;
  std::list<int> lru_;  // most recent at front
  std::map<int, std::shared_ptr<const ChunkPointMap>> cache_;
  std::size_t peak_resident_ = 0;

  void touch(int chunk_index);
};

}  // namespace chunkalign
