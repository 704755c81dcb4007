#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mash/geometry.hpp"
#include "mash/model.hpp"
#include "mash/orientation.hpp"

namespace mash {

/// Parse or format failure. `offset()` is the byte position in the input
/// where the problem was detected.
class IoError : public std::runtime_error {
 public:
  IoError(const std::string& message, std::size_t offset)
      : std::runtime_error(message + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

enum class CloudFormat { ply, obj, xyz };

/// Picks the format from the file extension (case-insensitive).
CloudFormat format_from_path(const std::filesystem::path& path);

struct PointCloud {
  std::vector<Vec3> points;
  /// Empty when the file carries no normals.
  std::vector<Vec3> normals;
};

/// ASCII and binary little-endian PLY.
PointCloud parse_ply(std::string_view bytes);
PointCloud parse_obj(std::string_view text);
/// Whitespace-separated "x y z [nx ny nz]" lines; blank and '#' lines skipped.
PointCloud parse_xyz(std::string_view text);

PointCloud load_cloud(const std::filesystem::path& path,
                      std::optional<CloudFormat> format = std::nullopt);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

/// normalized = (p - center) * scale.
struct Normalization {
  Vec3 center = Vec3::Zero();
  double scale = 1.0;

  Vec3 apply(const Vec3& p) const { return (p - center) * scale; }
  Vec3 invert(const Vec3& p) const { return center + p / scale; }
};

/// Longest bounding-box edge after normalisation.
inline constexpr double kNormalizedExtent = 0.9;

struct NormalizedCloud {
  std::vector<Vec3> points;
  Normalization transform;
};

/// Centres on the bounding-box centre and scales the longest edge to 0.9.
NormalizedCloud normalize(std::span<const Vec3> points);

/// Maps a model fitted in normalised coordinates back to the original frame.
/// Patches scale linearly with the SH coefficients, so this is exact up to
/// rounding.
MashModel denormalize_model(const MashModel& model, const Normalization& transform);

// MASH parameter file, little-endian:
//   "MASH" | u16 version | u8 K | u8 L | u32 M | u32 n_dir       (16 bytes)
//   per anchor f64: position(3) rotvec(3) sh((L+1)^2) mask(2K+1)
//   u64 FNV-1a over every preceding byte
inline constexpr std::uint16_t kMashFormatVersion = 1;
inline constexpr std::size_t kMashHeaderBytes = 16;

std::size_t mash_file_size(std::size_t anchors, int mask_degree, int sh_degree);
std::uint64_t fnv1a64(std::string_view bytes);

std::string encode_mash(const MashModel& model);
MashModel decode_mash(std::string_view bytes);
void save_mash(const std::filesystem::path& path, const MashModel& model);
MashModel load_mash(const std::filesystem::path& path);

/// Binary little-endian PLY with double x,y,z (and nx,ny,nz when normals are given).
std::string encode_ply(std::span<const Vec3> points, std::span<const Vec3> normals = {});
/// ASCII PLY, used for fixtures and interchange.
std::string encode_ply_ascii(std::span<const Vec3> points, std::span<const Vec3> normals = {});

/// Writes oriented samples mapped back through `transform`.
void export_oriented_ply(const OrientedSamples& samples, const std::filesystem::path& path,
                         const Normalization& transform = {});

}  // namespace mash
