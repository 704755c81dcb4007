#include "mash/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

namespace mash {
namespace {

enum class ScalarType { i8, u8, i16, u16, i32, u32, f32, f64 };

std::optional<ScalarType> parse_scalar_type(std::string_view name) {
  if (name == "char" || name == "int8") return ScalarType::i8;
  if (name == "uchar" || name == "uint8") return ScalarType::u8;
  if (name == "short" || name == "int16") return ScalarType::i16;
  if (name == "ushort" || name == "uint16") return ScalarType::u16;
  if (name == "int" || name == "int32") return ScalarType::i32;
  if (name == "uint" || name == "uint32") return ScalarType::u32;
  if (name == "float" || name == "float32") return ScalarType::f32;
  if (name == "double" || name == "float64") return ScalarType::f64;
  return std::nullopt;
}

std::size_t scalar_size(ScalarType t) {
  switch (t) {
    case ScalarType::i8:
    case ScalarType::u8: return 1;
    case ScalarType::i16:
    case ScalarType::u16: return 2;
    case ScalarType::i32:
    case ScalarType::u32:
    case ScalarType::f32: return 4;
    case ScalarType::f64: return 8;
  }
  return 0;
}

struct PlyProperty {
  std::string name;
  ScalarType type = ScalarType::f32;
  bool is_list = false;
  ScalarType count_type = ScalarType::u8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

std::uint64_t load_le(const char* p, std::size_t n) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < n; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

double decode_le(const char* p, ScalarType t) {
  switch (t) {
    case ScalarType::i8: return static_cast<std::int8_t>(load_le(p, 1));
    case ScalarType::u8: return static_cast<double>(load_le(p, 1));
    case ScalarType::i16: return static_cast<std::int16_t>(load_le(p, 2));
    case ScalarType::u16: return static_cast<double>(load_le(p, 2));
    case ScalarType::i32: return static_cast<std::int32_t>(load_le(p, 4));
    case ScalarType::u32: return static_cast<double>(load_le(p, 4));
    case ScalarType::f32: return std::bit_cast<float>(static_cast<std::uint32_t>(load_le(p, 4)));
    case ScalarType::f64: return std::bit_cast<double>(load_le(p, 8));
  }
  return 0.0;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool parse_double(std::string_view tok, double& out) {
  // from_chars rejects a leading '+'.
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

// Iterates lines, reporting the byte offset of each line start. Strips '\r'.
template <class F>
void for_each_line(std::string_view text, F&& f) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    f(line, pos);
    pos = end + 1;
  }
}

void store_le(std::string& out, std::uint64_t v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

}  // namespace

CloudFormat format_from_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".ply") return CloudFormat::ply;
  if (ext == ".obj") return CloudFormat::obj;
  if (ext == ".xyz" || ext == ".txt" || ext == ".pts") return CloudFormat::xyz;
  throw std::invalid_argument("unrecognised point cloud extension '" + ext + "'");
}

PointCloud parse_ply(std::string_view bytes) {
  if (bytes.substr(0, 3) != "ply") throw IoError("malformed PLY header: missing 'ply' magic", 0);

  std::vector<PlyElement> elements;
  enum class Encoding { ascii, binary_le } encoding = Encoding::ascii;
  bool have_format = false;
  std::size_t pos = 0;
  std::size_t body = std::string_view::npos;
  while (pos < bytes.size()) {
    std::size_t end = bytes.find('\n', pos);
    if (end == std::string_view::npos) throw IoError("malformed PLY header: no end_header", pos);
    std::string_view line = bytes.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto tok = split_ws(line);
    const std::size_t line_at = pos;
    pos = end + 1;
    if (tok.empty() || tok[0] == "ply" || tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "end_header") {
      body = pos;
      break;
    }
    if (tok[0] == "format") {
      if (tok.size() < 2) throw IoError("malformed PLY header: bad format line", line_at);
      if (tok[1] == "ascii") {
        encoding = Encoding::ascii;
      } else if (tok[1] == "binary_little_endian") {
        encoding = Encoding::binary_le;
      } else {
        throw IoError("unsupported PLY encoding '" + std::string(tok[1]) + "'", line_at);
      }
      have_format = true;
    } else if (tok[0] == "element") {
      std::size_t count = 0;
      if (tok.size() != 3 ||
          std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), count).ec != std::errc())
        throw IoError("malformed PLY header: bad element line", line_at);
      elements.push_back({std::string(tok[1]), count, {}});
    } else if (tok[0] == "property") {
      if (elements.empty()) throw IoError("malformed PLY header: property before element", line_at);
      PlyProperty prop;
      if (tok.size() == 5 && tok[1] == "list") {
        const auto ct = parse_scalar_type(tok[2]);
        const auto vt = parse_scalar_type(tok[3]);
        if (!ct || !vt) throw IoError("malformed PLY header: unknown list type", line_at);
        prop = {std::string(tok[4]), *vt, true, *ct};
      } else if (tok.size() == 3) {
        const auto t = parse_scalar_type(tok[1]);
        if (!t) throw IoError("malformed PLY header: unknown property type", line_at);
        prop = {std::string(tok[2]), *t, false, ScalarType::u8};
      } else {
        throw IoError("malformed PLY header: bad property line", line_at);
      }
      elements.back().properties.push_back(prop);
    } else {
      throw IoError("malformed PLY header: unexpected keyword '" + std::string(tok[0]) + "'",
                    line_at);
    }
  }
  if (body == std::string_view::npos) throw IoError("malformed PLY header: no end_header", pos);
  if (!have_format) throw IoError("malformed PLY header: missing format line", 0);

  const PlyElement* vertex = nullptr;
  for (const auto& e : elements)
    if (e.name == "vertex") vertex = &e;
  if (!vertex) throw IoError("malformed PLY header: no vertex element", 0);

  auto index_of = [&](std::string_view name) -> int {
    for (std::size_t i = 0; i < vertex->properties.size(); ++i)
      if (vertex->properties[i].name == name && !vertex->properties[i].is_list)
        return static_cast<int>(i);
    return -1;
  };
  const int ix = index_of("x"), iy = index_of("y"), iz = index_of("z");
  if (ix < 0 || iy < 0 || iz < 0) throw IoError("malformed PLY header: vertex lacks x/y/z", 0);
  const int inx = index_of("nx"), iny = index_of("ny"), inz = index_of("nz");
  const bool has_normals = inx >= 0 && iny >= 0 && inz >= 0;

  PointCloud cloud;
  cloud.points.reserve(vertex->count);
  if (has_normals) cloud.normals.reserve(vertex->count);
  std::vector<double> values;

  if (encoding == Encoding::binary_le) {
    std::size_t at = body;
    auto need = [&](std::size_t n) {
      if (at + n > bytes.size()) throw IoError("truncated PLY body", at);
    };
    for (const auto& e : elements) {
      const bool is_vertex = &e == vertex;
      for (std::size_t item = 0; item < e.count; ++item) {
        values.assign(e.properties.size(), 0.0);
        for (std::size_t p = 0; p < e.properties.size(); ++p) {
          const PlyProperty& prop = e.properties[p];
          if (prop.is_list) {
            need(scalar_size(prop.count_type));
            const double n = decode_le(bytes.data() + at, prop.count_type);
            at += scalar_size(prop.count_type);
            const auto len = static_cast<std::size_t>(n) * scalar_size(prop.type);
            need(len);
            at += len;
          } else {
            need(scalar_size(prop.type));
            values[p] = decode_le(bytes.data() + at, prop.type);
            at += scalar_size(prop.type);
          }
        }
        if (is_vertex) {
          cloud.points.emplace_back(values[ix], values[iy], values[iz]);
          if (has_normals) cloud.normals.emplace_back(values[inx], values[iny], values[inz]);
        }
      }
      if (is_vertex) break;
    }
    return cloud;
  }

  // ASCII: a whitespace token stream.
  std::size_t at = body;
  auto next_token = [&]() -> std::string_view {
    while (at < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[at]))) ++at;
    if (at >= bytes.size()) throw IoError("truncated PLY body", at);
    const std::size_t start = at;
    while (at < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[at]))) ++at;
    return bytes.substr(start, at - start);
  };
  for (const auto& e : elements) {
    const bool is_vertex = &e == vertex;
    for (std::size_t item = 0; item < e.count; ++item) {
      values.assign(e.properties.size(), 0.0);
      for (std::size_t p = 0; p < e.properties.size(); ++p) {
        const std::size_t tok_at = at;
        const std::string_view tok = next_token();
        double v = 0.0;
        if (!parse_double(tok, v)) throw IoError("malformed PLY value '" + std::string(tok) + "'", tok_at);
        if (e.properties[p].is_list) {
          for (std::size_t k = 0; k < static_cast<std::size_t>(v); ++k) next_token();
        } else {
          values[p] = v;
        }
      }
      if (is_vertex) {
        cloud.points.emplace_back(values[ix], values[iy], values[iz]);
        if (has_normals) cloud.normals.emplace_back(values[inx], values[iny], values[inz]);
      }
    }
    if (is_vertex) break;
  }
  return cloud;
}

PointCloud parse_obj(std::string_view text) {
  PointCloud cloud;
  std::vector<Vec3> normals;
  for_each_line(text, [&](std::string_view line, std::size_t at) {
    const auto tok = split_ws(line);
    if (tok.empty()) return;
    if (tok[0] != "v" && tok[0] != "vn") return;
    if (tok.size() < 4) throw IoError("malformed OBJ line", at);
    Vec3 p;
    for (int i = 0; i < 3; ++i)
      if (!parse_double(tok[static_cast<std::size_t>(i) + 1], p[i])) throw IoError("malformed OBJ number", at);
    (tok[0] == "v" ? cloud.points : normals).push_back(p);
  });
  if (normals.size() == cloud.points.size()) cloud.normals = std::move(normals);
  return cloud;
}

PointCloud parse_xyz(std::string_view text) {
  PointCloud cloud;
  bool normals_ok = true;
  for_each_line(text, [&](std::string_view line, std::size_t at) {
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0].front() == '#') return;
    if (tok.size() < 3) throw IoError("malformed XYZ line: expected at least 3 values", at);
    double v[6] = {};
    const std::size_t n = std::min<std::size_t>(tok.size(), 6);
    for (std::size_t i = 0; i < n; ++i)
      if (!parse_double(tok[i], v[i])) throw IoError("malformed XYZ number '" + std::string(tok[i]) + "'", at);
    cloud.points.emplace_back(v[0], v[1], v[2]);
    if (n == 6) {
      cloud.normals.emplace_back(v[3], v[4], v[5]);
    } else {
      normals_ok = false;
    }
  });
  if (!normals_ok || cloud.normals.size() != cloud.points.size()) cloud.normals.clear();
  return cloud;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

PointCloud load_cloud(const std::filesystem::path& path, std::optional<CloudFormat> format) {
  const CloudFormat f = format ? *format : format_from_path(path);
  const std::string bytes = read_file(path);
  switch (f) {
    case CloudFormat::ply: return parse_ply(bytes);
    case CloudFormat::obj: return parse_obj(bytes);
    case CloudFormat::xyz: return parse_xyz(bytes);
  }
  return {};
}

NormalizedCloud normalize(std::span<const Vec3> points) {
  if (points.empty()) throw std::invalid_argument("empty point set");
  Vec3 lo = points.front();
  Vec3 hi = points.front();
  for (const Vec3& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  NormalizedCloud out;
  out.transform.center = 0.5 * (lo + hi);
  const double extent = (hi - lo).maxCoeff();
  out.transform.scale = extent > 0.0 ? kNormalizedExtent / extent : 1.0;
  out.points.reserve(points.size());
  for (const Vec3& p : points) out.points.push_back(out.transform.apply(p));
  return out;
}

std::string encode_ply(std::span<const Vec3> points, std::span<const Vec3> normals) {
  const bool with_normals = !normals.empty();
  if (with_normals && normals.size() != points.size())
    throw std::invalid_argument("encode_ply: normals do not match points");
  std::string out = "ply\nformat binary_little_endian 1.0\nelement vertex " +
                    std::to_string(points.size()) +
                    "\nproperty double x\nproperty double y\nproperty double z\n";
  if (with_normals) out += "property double nx\nproperty double ny\nproperty double nz\n";
  out += "end_header\n";
  out.reserve(out.size() + points.size() * (with_normals ? 48 : 24));
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (int k = 0; k < 3; ++k) store_le(out, std::bit_cast<std::uint64_t>(points[i][k]), 8);
    if (with_normals)
      for (int k = 0; k < 3; ++k) store_le(out, std::bit_cast<std::uint64_t>(normals[i][k]), 8);
  }
  return out;
}

std::string encode_ply_ascii(std::span<const Vec3> points, std::span<const Vec3> normals) {
  const bool with_normals = !normals.empty();
  if (with_normals && normals.size() != points.size())
    throw std::invalid_argument("encode_ply_ascii: normals do not match points");
  std::ostringstream out;
  out << "ply\nformat ascii 1.0\nelement vertex " << points.size()
      << "\nproperty double x\nproperty double y\nproperty double z\n";
  if (with_normals) out << "property double nx\nproperty double ny\nproperty double nz\n";
  out << "end_header\n" << std::setprecision(17);
  for (std::size_t i = 0; i < points.size(); ++i) {
    out << points[i].x() << ' ' << points[i].y() << ' ' << points[i].z();
    if (with_normals) out << ' ' << normals[i].x() << ' ' << normals[i].y() << ' ' << normals[i].z();
    out << '\n';
  }
  return out.str();
}

void export_oriented_ply(const OrientedSamples& samples, const std::filesystem::path& path,
                         const Normalization& transform) {
  if (samples.points.empty()) throw std::invalid_argument("export_oriented_ply: empty sample set");
  if (samples.normals.size() != samples.points.size())
    throw std::invalid_argument("export_oriented_ply: normals do not match points");
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  points.reserve(samples.size());
  normals.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    points.push_back(transform.invert(samples.points[i]));
    normals.push_back(samples.normals[i].normalized());
  }
  write_file(path, encode_ply(points, normals));
}

}  // namespace mash
