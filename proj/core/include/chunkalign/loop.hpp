#pragma once

#include "chunkalign/sim3.hpp"

#include <filesystem>
#include <vector>

namespace chunkalign {

/// L2-normalized global frame descriptors (N x D, row-major).
struct DescriptorSet {
  std::uint32_t count = 0;
  std::uint32_t dim = 0;
  std::vector<float> vectors;

  double similarity(std::uint32_t i, std::uint32_t j) const;
  void normalize_rows();
};

/// Descriptor file I/O. Little-endian layout:
///   magic "VGLD", u32 version=1, u32 N, u32 D, f32 vectors[N*D] row-major.
void write_descriptor_file(const std::filesystem::path& path, const DescriptorSet& desc);
DescriptorSet read_descriptor_file(const std::filesystem::path& path);

struct LoopConfig {
  double similarity_threshold = 0.85;  ///< tau_s
  int min_separation = 100;            ///< frames, |i-j| must exceed this
  int nms_window = 25;                 ///< frames
  int max_candidates = 32;
};

struct LoopPair {
  int frame_i = 0;  ///< i < j
  int frame_j = 0;
  double similarity = 0.0;
  int chunk_i = 0;  ///< owning chunk indices, filled by the caller
  int chunk_j = 0;
};

/// All frame pairs with cosine similarity >= tau_s and separation beyond
/// min_separation, reduced by NMS so no two surviving pairs have both
/// endpoints within nms_window of each other. Sorted by similarity
/// descending (ties by smaller (i, j)), truncated to max_candidates.
std::vector<LoopPair> detect_loops(const DescriptorSet& desc, const LoopConfig& cfg);

/// Frame batch for the loop-centric chunk: the union of the inclusive
/// windows [i-half_width, i+half_width] and [j-half_width, j+half_width],
/// clamped to [0, total_frames), sorted ascending, deduplicated.
std::vector<int> loop_chunk_frames(const LoopPair& pair, int half_width, int total_frames);

/// Eq.-style constraint chaining: returns s_j_loop * s_i_loop^-1, the
/// measurement mapping chunk i's frame into chunk j's frame via the
/// loop-centric bridge.
Sim3 compose_loop_constraint(const Sim3& s_i_loop, const Sim3& s_j_loop);

/// Test override: text lines "i j", one pair per line, '#' comments.
std::vector<LoopPair> read_loop_pair_file(const std::filesystem::path& path);

}  // namespace chunkalign
