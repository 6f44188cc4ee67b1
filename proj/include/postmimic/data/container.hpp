#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "postmimic/data/frames.hpp"

namespace postmimic::data {

inline constexpr int kContainerFormatVersion = 1;
inline constexpr const char* kCorpusManifestName = "manifest.json";

/// On-disk cineloop: `<stem>.json` header plus `<stem>.f32`, a little-endian
/// float32 blob of all frames in row-major order.
///
/// Header fields: format_version, id, extent [h, w], frame_count,
/// value_domain {kind, lo, hi}, scanner, target, seed, role ("raw" or
/// "processed"), pair_of (raw id, processed loops only), blob.
struct LoopFiles {
  std::filesystem::path header;
  std::filesystem::path blob;
};

/// Writes header and blob atomically (temp file + rename).
LoopFiles write_cineloop(const Cineloop& loop, const std::filesystem::path& dir, const std::string& role = "raw",
                         const std::string& pair_of = "");

/// A set of raw cineloops and, optionally, paired processed companions.
struct Corpus {
  std::vector<Cineloop> loops;
  std::map<std::string, Cineloop> processed;  // keyed by raw loop id

  std::vector<std::string> ids() const;
  const Cineloop& loop(const std::string& id) const;
  bool has_pair(const std::string& id) const { return processed.count(id) != 0; }
  /// Paired processed frame when present, otherwise the oracle post-processor output.
  Frame ground_truth(const std::string& id, std::size_t frame_index) const;
};

/// Writes every loop (and processed companion) plus a manifest file.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);

/// Reads a corpus directory. Uses the manifest when present, otherwise every
/// `*.json` header. All problems across all files are reported together in
/// one DataError. An empty or missing-manifest empty directory yields an empty corpus.
Corpus ingest_external(const std::filesystem::path& dir);

/// Single-loop reader; throws DataError describing the problem.
struct LoadedLoop {
  Cineloop loop;
  std::string role;
  std::string pair_of;
};
LoadedLoop read_cineloop(const std::filesystem::path& header_path);

/// Writes bytes to `path` via a sibling temp file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace postmimic::data
