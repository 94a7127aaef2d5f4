#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "spkid/error.hpp"
#include "spkid/features.hpp"

namespace spkid {
namespace {

static_assert(std::endian::native == std::endian::little,
              "archive I/O assumes a little-endian host");

constexpr char kMagic[8] = {'S', 'P', 'K', 'F', 'E', 'A', 'T', '1'};
constexpr std::size_t kHeaderBytes = 8 + 4 + 4 + 8 + 8;

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(const unsigned char* p) {
  T v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

}  // namespace

void write_feature_archive(const std::filesystem::path& path,
                           const FeatureMatrix& feat,
                           std::uint64_t config_hash) {
  validate(feat);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(feat.kind));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(feat.dims()));
  put<std::uint64_t>(out, feat.frames());
  put<std::uint64_t>(out, config_hash);
  for (double v : feat.vectors.data()) put<float>(out, static_cast<float>(v));
  if (!out) throw Error(ErrorCode::kIoFailure, "short write " + path.string());
}

FeatureArchive read_feature_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < kHeaderBytes ||
      std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw Error(ErrorCode::kCorruptHeader, "not a feature archive: " + path.string());

  const auto kind_code = get<std::uint32_t>(bytes.data() + 8);
  const auto dims = get<std::uint32_t>(bytes.data() + 12);
  const auto frames = get<std::uint64_t>(bytes.data() + 16);
  const auto hash = get<std::uint64_t>(bytes.data() + 24);
  if (kind_code < 1 || kind_code > 4)
    throw Error(ErrorCode::kCorruptHeader, "unknown feature kind in " + path.string());
  if (bytes.size() != kHeaderBytes + frames * dims * sizeof(float))
    throw Error(ErrorCode::kCorruptHeader, "payload size mismatch in " + path.string());

  FeatureArchive out{{Matrix(frames, dims), static_cast<FeatureKind>(kind_code)}, hash};
  auto dst = out.features.vectors.data();
  for (std::size_t i = 0; i < dst.size(); ++i)
    dst[i] = get<float>(bytes.data() + kHeaderBytes + i * sizeof(float));
  validate(out.features);
  return out;
}

}  // namespace spkid
