#include "mash/io.hpp"

#include <bit>
#include <cmath>

namespace mash {
namespace {

void put(std::string& out, std::uint64_t v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get(std::string_view in, std::size_t at, std::size_t n) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < n; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

}  // namespace

std::size_t mash_file_size(std::size_t anchors, int mask_degree, int sh_degree) {
  return kMashHeaderBytes + param_count(anchors, mask_degree, sh_degree) * 8 + 8;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string encode_mash(const MashModel& model) {
  model.validate();
  if (model.mask_degree > 255) throw std::invalid_argument("mask degree too large for file format");
  std::string out;
  out.reserve(mash_file_size(model.size(), model.mask_degree, model.sh_degree));
  out += "MASH";
  put(out, kMashFormatVersion, 2);
  put(out, static_cast<std::uint64_t>(model.mask_degree), 1);
  put(out, static_cast<std::uint64_t>(model.sh_degree), 1);
  put(out, model.size(), 4);
  put(out, static_cast<std::uint64_t>(model.n_dir), 4);
  for (double v : model.flatten()) put(out, std::bit_cast<std::uint64_t>(v), 8);
  put(out, fnv1a64(out), 8);
  return out;
}

MashModel decode_mash(std::string_view bytes) {
  if (bytes.size() < kMashHeaderBytes + 8) throw IoError("truncated MASH file", bytes.size());
  if (bytes.substr(0, 4) != "MASH") throw IoError("bad MASH magic", 0);
  const auto version = static_cast<std::uint16_t>(get(bytes, 4, 2));
  if (version != kMashFormatVersion)
    throw IoError("unsupported MASH format version " + std::to_string(version), 4);
  const int mask_degree = static_cast<int>(get(bytes, 6, 1));
  const int sh_degree = static_cast<int>(get(bytes, 7, 1));
  const auto anchors = static_cast<std::size_t>(get(bytes, 8, 4));
  const auto n_dir = static_cast<int>(get(bytes, 12, 4));
  if (sh_degree > kMaxShDegree) throw IoError("sh degree out of range", 7);
  const std::size_t expected = mash_file_size(anchors, mask_degree, sh_degree);
  if (bytes.size() != expected)
    throw IoError("MASH file size " + std::to_string(bytes.size()) + " does not match header (" +
                      std::to_string(expected) + ")",
                  std::min(bytes.size(), expected));
  const std::size_t payload = expected - 8;
  if (fnv1a64(bytes.substr(0, payload)) != get(bytes, payload, 8))
    throw IoError("MASH checksum mismatch", payload);

  MashModel model = MashModel::zeros(anchors, ShDegree(sh_degree), mask_degree, n_dir);
  std::vector<double> params(model.param_count());
  for (std::size_t i = 0; i < params.size(); ++i)
    params[i] = std::bit_cast<double>(get(bytes, kMashHeaderBytes + 8 * i, 8));
  model.unflatten(params);
  model.validate();
  return model;
}

void save_mash(const std::filesystem::path& path, const MashModel& model) {
  write_file(path, encode_mash(model));
}

MashModel load_mash(const std::filesystem::path& path) { return decode_mash(read_file(path)); }

MashModel denormalize_model(const MashModel& model, const Normalization& transform) {
  MashModel out = model;
  for (Anchor& a : out.anchors) {
    a.position = transform.invert(a.position);
    for (double& c : a.sh_coeffs) c /= transform.scale;
  }
  return out;
}

}  // namespace mash
