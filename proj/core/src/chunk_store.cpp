#include "chunkalign/chunk_store.hpp"

#include "chunkalign/error.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace chunkalign {

namespace {

constexpr char kMagic[4] = {'V', 'G', 'L', 'C'};
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

void write_f32_array(std::ostream& out, const std::vector<float>& values) {
  static_assert(sizeof(float) == 4);
  // Host is little-endian x86; floats go out verbatim.
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
}

void read_f32_array(std::istream& in, std::vector<float>& values, std::size_t count) {
  values.resize(count);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
}

ChunkPointMap read_chunk_stream(std::istream& in, const std::filesystem::path& path,
                                bool header_only) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError("not a VGLC chunk file: " + path.string());
  }
  const std::uint32_t version = read_u32(in);
  if (version != kVersion) {
    throw IoError("unsupported VGLC version " + std::to_string(version) + ": " +
                  path.string());
  }
  ChunkPointMap chunk;
  chunk.chunk_index = read_u32(in);
  chunk.frame_start = read_u32(in);
  chunk.frames = read_u32(in);
  chunk.height = read_u32(in);
  chunk.width = read_u32(in);
  char has_poses = 0;
  in.read(&has_poses, 1);
  chunk.has_poses = has_poses != 0;
  if (!in) throw IoError("truncated VGLC header: " + path.string());
  if (header_only) return chunk;

  const std::size_t pixels = chunk.pixel_count();
  read_f32_array(in, chunk.points, pixels * 3);
  read_f32_array(in, chunk.confidence, pixels);
  if (chunk.has_poses) {
    read_f32_array(in, chunk.poses, static_cast<std::size_t>(chunk.frames) * 7);
  }
  if (!in) throw IoError("truncated VGLC payload: " + path.string());
  return chunk;
}

}  // namespace

void write_chunk_file(const std::filesystem::path& path, const ChunkPointMap& chunk) {
  const std::size_t pixels = chunk.pixel_count();
  if (chunk.points.size() != pixels * 3 || chunk.confidence.size() != pixels) {
    throw Error("chunk payload does not match declared dimensions");
  }
  if (chunk.has_poses && chunk.poses.size() != static_cast<std::size_t>(chunk.frames) * 7) {
    throw Error("chunk pose array does not match frame count");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u32(out, chunk.chunk_index);
  write_u32(out, chunk.frame_start);
  write_u32(out, chunk.frames);
  write_u32(out, chunk.height);
  write_u32(out, chunk.width);
  const char has_poses = chunk.has_poses ? 1 : 0;
  out.write(&has_poses, 1);
  write_f32_array(out, chunk.points);
  write_f32_array(out, chunk.confidence);
  if (chunk.has_poses) write_f32_array(out, chunk.poses);
  if (!out) throw IoError("write failed: " + path.string());
}

ChunkPointMap read_chunk_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open chunk file: " + path.string());
  return read_chunk_stream(in, path, /*header_only=*/false);
}

ChunkPointMap read_chunk_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open chunk file: " + path.string());
  return read_chunk_stream(in, path, /*header_only=*/true);
}

ChunkStore::ChunkStore(std::filesystem::path root, std::size_t capacity)
    : root_(std::move(root)), capacity_(std::max<std::size_t>(capacity, 1)) {
  if (!std::filesystem::exists(root_)) {
    std::filesystem::create_directories(root_);
  }
  for (const auto& entry : std::filesystem::directory_iterator(root_)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    unsigned index = 0;
    if (std::sscanf(name.c_str(), "chunk_%u.vglc", &index) == 1 &&
        name == chunk_filename(static_cast<int>(index))) {
      index_[static_cast<int>(index)] = entry.path();
    }
  }
}

std::vector<int> ChunkStore::chunk_indices() const {
  std::vector<int> out;
  out.reserve(index_.size());
  for (const auto& [k, _] : index_) out.push_back(k);
  return out;
}

void ChunkStore::touch(int chunk_index) {
  lru_.remove(chunk_index);
  lru_.push_front(chunk_index);
}

std::shared_ptr<const ChunkPointMap> ChunkStore::load(int chunk_index) {
  auto cached = cache_.find(chunk_index);
  if (cached != cache_.end()) {
    touch(chunk_index);
    return cached->second;
  }
  auto it = index_.find(chunk_index);
  if (it == index_.end()) {
    throw IoError("chunk " + std::to_string(chunk_index) + " not in store " +
                  root_.string());
  }
  // Evict before reading so the budget holds even during the load.
  while (cache_.size() >= capacity_) {
    const int victim = lru_.back();
    lru_.pop_back();
    cache_.erase(victim);
  }
  auto chunk = std::make_shared<const ChunkPointMap>(read_chunk_file(it->second));
  cache_[chunk_index] = chunk;
  touch(chunk_index);
  peak_resident_ = std::max(peak_resident_, cache_.size());
  return chunk;
}

void ChunkStore::store(const ChunkPointMap& chunk) {
  const auto path = chunk_path(static_cast<int>(chunk.chunk_index));
  write_chunk_file(path, chunk);
  index_[static_cast<int>(chunk.chunk_index)] = path;
}

void ChunkStore::evict_all() {
  cache_.clear();
  lru_.clear();
}

std::string ChunkStore::chunk_filename(int chunk_index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "chunk_%05d.vglc", chunk_index);
  return buf;
}

std::filesystem::path ChunkStore::chunk_path(int chunk_index) const {
  return root_ / chunk_filename(chunk_index);
}

std::string ChunkStore::loop_segment_filename(int frame_i, int frame_j, int segment) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "loop_%06d_%06d_%c.vglc", frame_i, frame_j,
                segment == 0 ? 'a' : 'b');
  return buf;
}

std::filesystem::path ChunkStore::loop_segment_path(int frame_i, int frame_j,
                                                    int segment) const {
  return root_ / loop_segment_filename(frame_i, frame_j, segment);
}

bool ChunkStore::has_loop_segments(int frame_i, int frame_j) const {
  return std::filesystem::exists(loop_segment_path(frame_i, frame_j, 0)) &&
         std::filesystem::exists(loop_segment_path(frame_i, frame_j, 1));
}

ChunkPointMap ChunkStore::load_loop_segment(int frame_i, int frame_j, int segment) const {
  return read_chunk_file(loop_segment_path(frame_i, frame_j, segment));
}

}  // namespace chunkalign
