#include "chunkalign/ply.hpp"

#include "chunkalign/error.hpp"

#include <cstring>
#include <sstream>

namespace chunkalign {

namespace {

constexpr std::size_t kRecordBytes = 3 * sizeof(float) + 3;

}  // namespace

PlyStreamWriter::PlyStreamWriter(std::filesystem::path path)
    : path_(std::move(path)), body_path_(path_.string() + ".body.tmp") {
  body_.open(body_path_, std::ios::binary | std::ios::trunc);
  if (!body_) throw IoError("cannot open for writing: " + body_path_.string());
}

PlyStreamWriter::~PlyStreamWriter() {
  if (!closed_) {
    // Best effort cleanup; failures during stack unwinding stay silent.
    try {
      close();
    } catch (...) {
    }
  }
}

void PlyStreamWriter::add(const Vec3& position, std::uint8_t red, std::uint8_t green,
                          std::uint8_t blue) {
  if (closed_) throw Error("PlyStreamWriter: add after close");
  char record[kRecordBytes];
  const float xyz[3] = {static_cast<float>(position.x()), static_cast<float>(position.y()),
                        static_cast<float>(position.z())};
  std::memcpy(record, xyz, sizeof(xyz));
  record[12] = static_cast<char>(red);
  record[13] = static_cast<char>(green);
  record[14] = static_cast<char>(blue);
  body_.write(record, sizeof(record));
  if (!body_) throw IoError("write failed: " + body_path_.string());
  ++count_;
}

void PlyStreamWriter::close() {
  if (closed_) return;
  closed_ = true;
  body_.flush();
  body_.close();
  if (body_.fail()) throw IoError("flush failed: " + body_path_.string());

  std::ofstream out(path_, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path_.string());
  out << "ply\n"
      << "format binary_little_endian 1.0\n"
      << "element vertex " << count_ << "\n"
      << "property float x\n"
      << "property float y\n"
      << "property float z\n"
      << "property uchar red\n"
      << "property uchar green\n"
      << "property uchar blue\n"
      << "end_header\n";

  std::ifstream body_in(body_path_, std::ios::binary);
  if (!body_in) throw IoError("cannot reopen body: " + body_path_.string());
  std::vector<char> buffer(1 << 20);
  while (body_in) {
    body_in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    out.write(buffer.data(), body_in.gcount());
  }
  out.flush();
  if (!out) throw IoError("write failed: " + path_.string());
  body_in.close();
  std::error_code ec;
  std::filesystem::remove(body_path_, ec);
}

std::vector<PlyPoint> read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open PLY file: " + path.string());

  std::string line;
  if (!std::getline(in, line) || line != "ply") {
    throw IoError("not a PLY file: " + path.string());
  }
  std::size_t count = 0;
  bool little_endian = false;
  std::vector<std::string> properties;
  while (std::getline(in, line)) {
    if (line == "end_header") break;
    std::istringstream row(line);
    std::string tag;
    row >> tag;
    if (tag == "format") {
      std::string fmt;
      row >> fmt;
      little_endian = fmt == "binary_little_endian";
    } else if (tag == "element") {
      std::string what;
      row >> what >> count;
      if (what != "vertex") throw IoError("unsupported PLY element: " + what);
    } else if (tag == "property") {
      std::string type, name;
      row >> type >> name;
      properties.push_back(type + " " + name);
    } else if (tag == "comment") {
      continue;
    } else {
      throw IoError("unsupported PLY header line: " + line);
    }
  }
  if (!little_endian) throw IoError("expected binary_little_endian PLY: " + path.string());
  const std::vector<std::string> expected = {"float x",    "float y",    "float z",
                                             "uchar red",  "uchar green", "uchar blue"};
  if (properties != expected) {
    throw IoError("unsupported PLY property layout: " + path.string());
  }

  std::vector<PlyPoint> points(count);
  for (std::size_t i = 0; i < count; ++i) {
    char record[kRecordBytes];
    in.read(record, sizeof(record));
    if (!in) throw IoError("truncated PLY payload: " + path.string());
    float xyz[3];
    std::memcpy(xyz, record, sizeof(xyz));
    points[i].x = xyz[0];
    points[i].y = xyz[1];
    points[i].z = xyz[2];
    points[i].red = static_cast<std::uint8_t>(record[12]);
    points[i].green = static_cast<std::uint8_t>(record[13]);
    points[i].blue = static_cast<std::uint8_t>(record[14]);
  }
  return points;
}

}  // namespace chunkalign
