#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "postmimic/models/network.hpp"

namespace postmimic::models {

inline constexpr int kArchiveFormatVersion = 1;
inline constexpr char kArchiveMagic[9] = "POSTMIMC";

/// Thrown for unreadable, truncated, corrupted or version-mismatched archives.
class ArchiveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ArchiveTensor {
  std::string name;
  std::string kind;  // "param", "buffer" or "optimizer"
  nn::Shape shape;
  std::vector<float> values;
};

/// Self-describing checkpoint.
///
/// Layout: 8-byte magic, u32 LE header length, JSON header, float32 LE blob.
/// The header holds format_version, config, training_state, the tensor
/// manifest {name, kind, shape, offset, count}, blob_bytes and an FNV-1a
/// checksum of the blob.
struct Archive {
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json training_state = nlohmann::json::object();
  std::vector<ArchiveTensor> tensors;

  const ArchiveTensor& tensor(const std::string& name) const;
  bool has(const std::string& name) const;
};

std::string encode_archive(const Archive& archive);
Archive decode_archive(const std::string& bytes);

/// Atomic write (temp file + rename).
void save_archive(const Archive& archive, const std::filesystem::path& path);
Archive load_archive(const std::filesystem::path& path);

/// Appends every parameter and buffer as "<prefix>/<param name>".
void append_network(Archive& archive, const std::string& prefix, const Network& net);
/// Copies stored values into `net`; every parameter must be present with a matching shape.
void restore_network(const Archive& archive, const std::string& prefix, Network& net);

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t seed = 1469598103934665603ULL);

}  // namespace postmimic::models
