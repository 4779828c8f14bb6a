#include "chunkalign/loop.hpp"

#include "chunkalign/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace chunkalign {

namespace {

constexpr char kMagic[4] = {'V', 'G', 'L', 'D'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char buf[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  return static_cast<std::uint32_t>(buf[0]) | (static_cast<std::uint32_t>(buf[1]) << 8) |
         (static_cast<std::uint32_t>(buf[2]) << 16) |
         (static_cast<std::uint32_t>(buf[3]) << 24);
}

}  // namespace

double DescriptorSet::similarity(std::uint32_t i, std::uint32_t j) const {
  const float* a = vectors.data() + static_cast<std::size_t>(i) * dim;
  const float* b = vectors.data() + static_cast<std::size_t>(j) * dim;
  double dot = 0.0;
  for (std::uint32_t d = 0; d < dim; ++d) dot += static_cast<double>(a[d]) * b[d];
  return dot;
}

void DescriptorSet::normalize_rows() {
  for (std::uint32_t i = 0; i < count; ++i) {
    float* row = vectors.data() + static_cast<std::size_t>(i) * dim;
    double sq = 0.0;
    for (std::uint32_t d = 0; d < dim; ++d) sq += static_cast<double>(row[d]) * row[d];
    const double norm = std::sqrt(sq);
    if (norm <= 0.0) throw Error("cannot normalize zero descriptor row");
    for (std::uint32_t d = 0; d < dim; ++d) row[d] = static_cast<float>(row[d] / norm);
  }
}

void write_descriptor_file(const std::filesystem::path& path, const DescriptorSet& desc) {
  if (desc.vectors.size() != static_cast<std::size_t>(desc.count) * desc.dim) {
    throw Error("descriptor payload does not match declared dimensions");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u32(out, desc.count);
  write_u32(out, desc.dim);
  out.write(reinterpret_cast<const char*>(desc.vectors.data()),
            static_cast<std::streamsize>(desc.vectors.size() * sizeof(float)));
  if (!out) throw IoError("write failed: " + path.string());
}

DescriptorSet read_descriptor_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open descriptor file: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError("not a VGLD descriptor file: " + path.string());
  }
  const std::uint32_t version = read_u32(in);
  if (version != kVersion) {
    throw IoError("unsupported VGLD version " + std::to_string(version) + ": " +
                  path.string());
  }
  DescriptorSet desc;
  desc.count = read_u32(in);
  desc.dim = read_u32(in);
  desc.vectors.resize(static_cast<std::size_t>(desc.count) * desc.dim);
  in.read(reinterpret_cast<char*>(desc.vectors.data()),
          static_cast<std::streamsize>(desc.vectors.size() * sizeof(float)));
  if (!in) throw IoError("truncated VGLD payload: " + path.string());
  return desc;
}

std::vector<LoopPair> detect_loops(const DescriptorSet& desc, const LoopConfig& cfg) {
  if (cfg.nms_window < 1) throw Error("nms_window must be >= 1");
  if (cfg.min_separation < 1) throw Error("min_separation must be >= 1");

  std::vector<LoopPair> candidates;
  const int n = static_cast<int>(desc.count);
  for (int i = 0; i < n; ++i) {
    for (int j = i + cfg.min_separation + 1; j < n; ++j) {
      const double sim = desc.similarity(static_cast<std::uint32_t>(i),
                                         static_cast<std::uint32_t>(j));
      if (sim >= cfg.similarity_threshold) {
        candidates.push_back({i, j, sim, 0, 0});
      }
    }
  }

  // Highest similarity first; deterministic tie-break on (i, j).
  std::sort(candidates.begin(), candidates.end(), [](const LoopPair& a, const LoopPair& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    if (a.frame_i != b.frame_i) return a.frame_i < b.frame_i;
    return a.frame_j < b.frame_j;
  });

  std::vector<LoopPair> kept;
  for (const LoopPair& cand : candidates) {
    bool suppressed = false;
    for (const LoopPair& winner : kept) {
      if (std::abs(cand.frame_i - winner.frame_i) <= cfg.nms_window &&
          std::abs(cand.frame_j - winner.frame_j) <= cfg.nms_window) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) {
      kept.push_back(cand);
      if (cfg.max_candidates > 0 &&
          kept.size() >= static_cast<std::size_t>(cfg.max_candidates)) {
        break;
      }
    }
  }
  return kept;
}

std::vector<int> loop_chunk_frames(const LoopPair& pair, int half_width, int total_frames) {
  if (half_width < 0) throw Error("half_width must be >= 0");
  std::vector<int> frames;
  auto add_window = [&](int center) {
    const int lo = std::max(0, center - half_width);
    const int hi = std::min(total_frames - 1, center + half_width);
    for (int f = lo; f <= hi; ++f) frames.push_back(f);
  };
  add_window(pair.frame_i);
  add_window(pair.frame_j);
  std::sort(frames.begin(), frames.end());
  frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
  return frames;
}

Sim3 compose_loop_constraint(const Sim3& s_i_loop, const Sim3& s_j_loop) {
  return s_j_loop * s_i_loop.inverse();
}

std::vector<LoopPair> read_loop_pair_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open loop-pair file: " + path.string());
  std::vector<LoopPair> pairs;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    int i = 0, j = 0;
    if (row >> i >> j) {
      if (i >= j) throw IoError("loop pair must have i < j: " + line);
      pairs.push_back({i, j, 1.0, 0, 0});
    }
  }
  return pairs;
}

}  // namespace chunkalign
