#include "lsf/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>

namespace lsf {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats assume a little-endian host");

std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const std::streamoff size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<char> bytes(static_cast<std::size_t>(size));
  if (size > 0) in.read(bytes.data(), size);
  require(in.good(), "short read on " + path.string());
  return bytes;
}

void write_bytes(const std::filesystem::path& path, const char* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), "cannot write " + path.string());
  out.write(data, static_cast<std::streamsize>(size));
  require(out.good(), "short write on " + path.string());
}

double parse_double_field(const std::string& field, const std::filesystem::path& path) {
  double v = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto res = std::from_chars(begin, end, v);
  require(res.ec == std::errc{} && res.ptr == end,
          "malformed numeric field '" + field + "' in " + path.string());
  return v;
}

}  // namespace

PointCloud read_bin(const std::filesystem::path& path) {
  const std::vector<char> bytes = read_bytes(path);
  require(bytes.size() % 16 == 0, "malformed point file " + path.string() + ": " +
                                      std::to_string(bytes.size()) +
                                      " bytes is not a multiple of 16");
  PointCloud cloud;
  cloud.frame_id = path.stem().string();
  cloud.points.resize(bytes.size() / 16);
  const char* p = bytes.data();
  for (Point& pt : cloud.points) {
    float f[4];
    std::memcpy(f, p, 16);
    pt.x = f[0];
    pt.y = f[1];
    pt.z = f[2];
    pt.intensity = f[3];
    p += 16;
  }
  return cloud;
}

void write_bin(const std::filesystem::path& path, const PointCloud& cloud) {
  std::vector<char> bytes(cloud.size() * 16);
  char* p = bytes.data();
  for (const Point& pt : cloud.points) {
    const float f[4] = {static_cast<float>(pt.x), static_cast<float>(pt.y),
                        static_cast<float>(pt.z), static_cast<float>(pt.intensity)};
    std::memcpy(p, f, 16);
    p += 16;
  }
  write_bytes(path, bytes.data(), bytes.size());
}

namespace {

std::vector<std::vector<double>> read_csv_rows(const std::filesystem::path& path,
                                               std::size_t min_fields, std::size_t max_fields) {
  std::ifstream in(path);
  require(in.good(), "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> fields;
    std::size_t start = 0;
    while (start <= line.size()) {
      const std::size_t comma = line.find(',', start);
      const std::string field =
          line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      fields.push_back(parse_double_field(field, path));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    require(fields.size() >= min_fields && fields.size() <= max_fields,
            "label row with " + std::to_string(fields.size()) + " fields in " + path.string());
    rows.push_back(std::move(fields));
  }
  return rows;
}

}  // namespace

std::vector<Detection> read_labels(const std::filesystem::path& path) {
  std::vector<Detection> out;
  for (const auto& row : read_csv_rows(path, 7, 8)) {
    Detection d;
    d.box = Box3D{row[0], row[1], row[2], row[3], row[4], row[5], row[6]};
    d.confidence = row.size() == 8 ? row[7] : 1.0;
    out.push_back(d);
  }
  return out;
}

std::vector<Box3D> read_label_boxes(const std::filesystem::path& path) {
  std::vector<Box3D> boxes;
  for (const Detection& d : read_labels(path)) boxes.push_back(d.box);
  return boxes;
}

void write_labels(const std::filesystem::path& path, const std::vector<Detection>& dets) {
  std::string out;
  for (const Detection& d : dets) {
    const Box3D& b = d.box;
    out += fmt_double(b.cx) + "," + fmt_double(b.cy) + "," + fmt_double(b.cz) + "," +
           fmt_double(b.l) + "," + fmt_double(b.w) + "," + fmt_double(b.h) + "," +
           fmt_double(b.yaw) + "," + fmt_double(d.confidence) + "\n";
  }
  write_bytes(path, out.data(), out.size());
}

void write_labels(const std::filesystem::path& path, const std::vector<Box3D>& boxes) {
  std::string out;
  for (const Box3D& b : boxes) {
    out += fmt_double(b.cx) + "," + fmt_double(b.cy) + "," + fmt_double(b.cz) + "," +
           fmt_double(b.l) + "," + fmt_double(b.w) + "," + fmt_double(b.h) + "," +
           fmt_double(b.yaw) + "\n";
  }
  write_bytes(path, out.data(), out.size());
}

namespace {
constexpr char kParamMagic[4] = {'L', 'S', 'F', '1'};
}

void write_param_file(const std::filesystem::path& path, const std::string& config_string,
                      const std::vector<double>& params) {
  std::vector<char> bytes(4 + 8 + 8 + params.size() * 8);
  char* p = bytes.data();
  std::memcpy(p, kParamMagic, 4);
  p += 4;
  const std::uint64_t hash = fnv1a_hash(config_string);
  std::memcpy(p, &hash, 8);
  p += 8;
  const std::uint64_t count = params.size();
  std::memcpy(p, &count, 8);
  p += 8;
  std::memcpy(p, params.data(), params.size() * 8);
  write_bytes(path, bytes.data(), bytes.size());
}

std::vector<double> read_param_file(const std::filesystem::path& path,
                                    const std::string& config_string) {
  const std::vector<char> bytes = read_bytes(path);
  require(bytes.size() >= 20, "parameter file " + path.string() + " is truncated");
  require(std::memcmp(bytes.data(), kParamMagic, 4) == 0,
          "parameter file " + path.string() + " has a wrong magic");
  std::uint64_t hash = 0, count = 0;
  std::memcpy(&hash, bytes.data() + 4, 8);
  std::memcpy(&count, bytes.data() + 12, 8);
  require(hash == fnv1a_hash(config_string),
          "parameter file " + path.string() + " was written for a different configuration");
  require(bytes.size() == 20 + count * 8,
          "parameter file " + path.string() + " has an inconsistent length");
  std::vector<double> params(count);
  std::memcpy(params.data(), bytes.data() + 20, count * 8);
  return params;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  write_bytes(path, content.data(), content.size());
}

std::string read_text_file(const std::filesystem::path& path) {
  const std::vector<char> bytes = read_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

}  // namespace lsf
