#pragma once

#include "chunkalign/chunking.hpp"
#include "chunkalign/loop.hpp"
#include "chunkalign/pipeline.hpp"
#include "chunkalign/pose_graph.hpp"
#include "chunkalign/robust_align.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>

namespace chunkalign {

/// "key = value" file with '#' comments. Accessors mark keys consumed;
/// finish() rejects unknown keys so typos fail loudly.
class KeyValueFile {
 public:
  static KeyValueFile parse(const std::filesystem::path& path);
  static KeyValueFile from_string(const std::string& text, const std::string& origin);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string get_string(const std::string& key, const std::string& fallback);
  long get_int(const std::string& key, long fallback);
  double get_double(const std::string& key, double fallback);
  bool get_bool(const std::string& key, bool fallback);

  /// Throws listing any keys never consumed.
  void finish() const;

 private:
  std::string origin_;
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> consumed_;
};

struct AblationToggles {
  bool loop_closure = true;
  bool irls = true;
  bool confidence_weighting = true;
};

/// Full pipeline configuration; every module default is surfaced here so
/// ablations are reproducible from the command line alone.
struct PipelineConfig {
  std::filesystem::path chunk_dir;
  std::filesystem::path descriptor_file;  ///< defaults to chunk_dir/descriptors.vgld
  std::filesystem::path output_dir = "out";
  std::optional<std::filesystem::path> loop_pairs_override;

  ChunkSpec chunk;  ///< total_frames is discovered from the store
  IrlsConfig irls;
  ExtractOptions extract;
  LoopConfig loop;
  int loop_half_width = 0;  ///< 0: derive as chunk_size / 4
  bool loop_residual_gate = true;
  double loop_residual_gate_factor = 3.0;
  LmConfig lm;
  ExportOptions export_opts;
  AblationToggles toggles;
  std::size_t cache_capacity = 2;  ///< env CHUNKALIGN_CACHE_CHUNKS overrides

  int resolved_loop_half_width() const {
    return loop_half_width > 0 ? loop_half_width : std::max(1, chunk.chunk_size / 4);
  }
};

PipelineConfig parse_pipeline_config(const std::filesystem::path& path);

/// Applies the CHUNKALIGN_CACHE_CHUNKS environment override, if present.
void apply_environment(PipelineConfig& config);

}  // namespace chunkalign
