#pragma once

#include "chunkalign/sim3.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

namespace chunkalign {

/// Streaming binary-little-endian PLY writer (x,y,z float32 + red,green,blue
/// uint8). Records are spooled to a side file and spliced behind the final
/// header on close, so peak memory stays independent of the point count.
class PlyStreamWriter {
 public:
  explicit PlyStreamWriter(std::filesystem::path path);
  ~PlyStreamWriter();

  PlyStreamWriter(const PlyStreamWriter&) = delete;
  PlyStreamWriter& operator=(const PlyStreamWriter&) = delete;

  void add(const Vec3& position, std::uint8_t red, std::uint8_t green, std::uint8_t blue);

  /// Finalizes the file; further add() calls are invalid.
  void close();

  std::size_t count() const { return count_; }

 private:
  std::filesystem::path path_;
  std::filesystem::path body_path_;
  std::ofstream body_;
  std::size_t count_ = 0;
  bool closed_ = false;
};

struct PlyPoint {
  float x = 0, y = 0, z = 0;
  std::uint8_t red = 0, green = 0, blue = 0;
};

/// Reads files produced by PlyStreamWriter (binary_little_endian, xyz + rgb).
std::vector<PlyPoint> read_ply(const std::filesystem::path& path);

}  // namespace chunkalign
