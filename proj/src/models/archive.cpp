#include "postmimic/models/archive.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <unistd.h>

#include "postmimic/errors.hpp"

namespace postmimic::models {
namespace {

static_assert(std::endian::native == std::endian::little, "archive I/O assumes a little-endian host");

constexpr std::size_t kMagicBytes = 8;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

const ArchiveTensor& Archive::tensor(const std::string& name) const {
  const auto it = std::find_if(tensors.begin(), tensors.end(), [&](const ArchiveTensor& t) { return t.name == name; });
  if (it == tensors.end()) throw ArchiveError("archive has no tensor '" + name + "'");
  return *it;
}

bool Archive::has(const std::string& name) const {
  return std::any_of(tensors.begin(), tensors.end(), [&](const ArchiveTensor& t) { return t.name == name; });
}

std::string encode_archive(const Archive& archive) {
  std::set<std::string> names;
  std::string blob;
  nlohmann::json entries = nlohmann::json::array();
  for (const ArchiveTensor& t : archive.tensors) {
    if (!names.insert(t.name).second) throw ContractError("encode_archive: duplicate tensor '" + t.name + "'");
    if (t.values.size() != t.shape.count()) throw ContractError("encode_archive: '" + t.name + "' size disagrees with shape");
    entries.push_back({{"name", t.name},
                       {"kind", t.kind},
                       {"shape", {t.shape.n, t.shape.c, t.shape.h, t.shape.w}},
                       {"offset", blob.size()},
                       {"count", t.values.size()}});
    const auto* bytes = reinterpret_cast<const char*>(t.values.data());
    blob.append(bytes, t.values.size() * sizeof(float));
  }
  const nlohmann::json header = {{"format_version", kArchiveFormatVersion},
                                 {"config", archive.config},
                                 {"training_state", archive.training_state},
                                 {"manifest", entries},
                                 {"blob_bytes", blob.size()},
                                 {"checksum", hex64(fnv1a(blob.data(), blob.size()))}};
  const std::string text = header.dump();
  const auto len = static_cast<std::uint32_t>(text.size());
  std::string out(kArchiveMagic, kMagicBytes);
  out.append(reinterpret_cast<const char*>(&len), sizeof len);
  out += text;
  out += blob;
  return out;
}

Archive decode_archive(const std::string& bytes) {
  if (bytes.size() < kMagicBytes + 4 || bytes.compare(0, kMagicBytes, kArchiveMagic) != 0) {
    throw ArchiveError("not a checkpoint archive (bad magic)");
  }
  std::uint32_t len = 0;
  std::memcpy(&len, bytes.data() + kMagicBytes, sizeof len);
  const std::size_t blob_start = kMagicBytes + 4 + static_cast<std::size_t>(len);
  if (blob_start > bytes.size()) throw ArchiveError("archive truncated inside the header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(kMagicBytes + 4, len));
  } catch (const nlohmann::json::exception& e) {
    throw ArchiveError(std::string("archive header is malformed: ") + e.what());
  }
  Archive a;
  try {
    const int version = header.at("format_version").get<int>();
    if (version != kArchiveFormatVersion) {
      throw ArchiveError("archive format version " + std::to_string(version) + " is not supported (expected " +
                         std::to_string(kArchiveFormatVersion) + ")");
    }
    const auto blob_bytes = header.at("blob_bytes").get<std::size_t>();
    if (bytes.size() - blob_start != blob_bytes) {
      throw ArchiveError("archive blob has " + std::to_string(bytes.size() - blob_start) + " bytes, header declares " +
                         std::to_string(blob_bytes) + " (truncated or padded)");
    }
    const char* blob = bytes.data() + blob_start;
    if (header.at("checksum").get<std::string>() != hex64(fnv1a(blob, blob_bytes))) {
      throw ArchiveError("archive blob checksum mismatch");
    }
    a.config = header.at("config");
    a.training_state = header.at("training_state");
    std::size_t expected_offset = 0;
    for (const auto& e : header.at("manifest")) {
      ArchiveTensor t;
      t.name = e.at("name").get<std::string>();
      t.kind = e.at("kind").get<std::string>();
      const auto s = e.at("shape").get<std::vector<int>>();
      if (s.size() != 4) throw ArchiveError("manifest entry '" + t.name + "' has a malformed shape");
      t.shape = {s[0], s[1], s[2], s[3]};
      const auto offset = e.at("offset").get<std::size_t>();
      const auto count = e.at("count").get<std::size_t>();
      if (s[0] < 1 || s[1] < 1 || s[2] < 1 || s[3] < 1 || count != t.shape.count() || offset != expected_offset ||
          offset + count * sizeof(float) > blob_bytes) {
        throw ArchiveError("manifest entry '" + t.name + "' is inconsistent with the blob");
      }
      t.values.resize(count);
      std::memcpy(t.values.data(), blob + offset, count * sizeof(float));
      expected_offset = offset + count * sizeof(float);
      a.tensors.push_back(std::move(t));
    }
    if (expected_offset != blob_bytes) throw ArchiveError("manifest does not cover the blob");
  } catch (const nlohmann::json::exception& e) {
    throw ArchiveError(std::string("archive header field error: ") + e.what());
  }
  return a;
}

void save_archive(const Archive& archive, const std::filesystem::path& path) {
  const std::string bytes = encode_archive(archive);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ArchiveError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ArchiveError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Archive load_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArchiveError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return decode_archive(ss.str());
  } catch (const ArchiveError& e) {
    throw ArchiveError(path.string() + ": " + e.what());
  }
}

void append_network(Archive& archive, const std::string& prefix, const Network& net) {
  for (const Param* p : net.params()) {
    archive.tensors.push_back({prefix + "/" + p->name, to_string(p->kind), p->shape, p->value});
  }
}

void restore_network(const Archive& archive, const std::string& prefix, Network& net) {
  for (Param* p : net.params()) {
    const ArchiveTensor& t = archive.tensor(prefix + "/" + p->name);
    if (!(t.shape == p->shape) || t.kind != to_string(p->kind)) {
      throw ArchiveError("tensor '" + t.name + "' has shape " + t.shape.str() + " but the model expects " + p->shape.str());
    }
    p->value = t.values;
  }
}

}  // namespace postmimic::models
