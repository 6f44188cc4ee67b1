#include "postmimic/data/container.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "postmimic/data/synth.hpp"

namespace fs = std::filesystem;

namespace postmimic::data {
namespace {

static_assert(std::endian::native == std::endian::little, "blob I/O assumes a little-endian host");

std::string role_stem(const std::string& id, const std::string& role) {
  return role == "raw" ? id : id + "." + role;
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  const fs::path tmp = path.string() + ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LoopFiles write_cineloop(const Cineloop& loop, const fs::path& dir, const std::string& role, const std::string& pair_of) {
  loop.validate();
  if (role != "raw" && role != "processed") throw ContractError("write_cineloop: role must be raw or processed");
  fs::create_directories(dir);
  const std::string stem = role_stem(loop.id, role);
  const Extent e = loop.frames.front().values.extent();
  nlohmann::json header = {{"format_version", kContainerFormatVersion},
                           {"id", loop.id},
                           {"extent", {e.height, e.width}},
                           {"frame_count", loop.frames.size()},
                           {"value_domain", loop.frames.front().domain.to_json()},
                           {"scanner", loop.scanner},
                           {"target", loop.target},
                           {"seed", loop.seed},
                           {"role", role},
                           {"blob", stem + ".f32"}};
  if (!pair_of.empty()) header["pair_of"] = pair_of;

  std::string blob(loop.frames.size() * e.count() * sizeof(float), '\0');
  char* dst = blob.data();
  for (const Frame& f : loop.frames) {
    for (const double v : f.values.values()) {
      const float x = static_cast<float>(v);
      std::memcpy(dst, &x, sizeof x);
      dst += sizeof x;
    }
  }
  LoopFiles files{dir / (stem + ".json"), dir / (stem + ".f32")};
  write_file_atomic(files.blob, blob);
  write_file_atomic(files.header, header.dump(2) + "\n");
  return files;
}

LoadedLoop read_cineloop(const fs::path& header_path) {
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(read_file(header_path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(header_path.filename().string() + ": malformed header: " + e.what());
  }
  const std::string name = header_path.filename().string();
  try {
    const int version = h.at("format_version").get<int>();
    if (version != kContainerFormatVersion) {
      throw DataError(name + ": unsupported format version " + std::to_string(version));
    }
    LoadedLoop r;
    r.loop.id = h.at("id").get<std::string>();
    const auto ext = h.at("extent").get<std::vector<int>>();
    if (ext.size() != 2 || ext[0] < 1 || ext[1] < 1) throw DataError(name + ": extent must be two positive integers");
    const auto count = h.at("frame_count").get<std::size_t>();
    if (count < 1) throw DataError(name + ": frame_count must be >= 1");
    const ValueDomain domain = ValueDomain::from_json(h.at("value_domain"));
    r.loop.scanner = h.value("scanner", std::string("unknown"));
    r.loop.target = h.value("target", std::string("unknown"));
    r.loop.seed = h.value("seed", std::uint64_t{0});
    r.role = h.value("role", std::string("raw"));
    r.pair_of = h.value("pair_of", std::string());
    const fs::path blob_path = header_path.parent_path() / h.at("blob").get<std::string>();
    const std::string blob = read_file(blob_path);
    const std::size_t plane = static_cast<std::size_t>(ext[0]) * ext[1];
    if (blob.size() != count * plane * sizeof(float)) {
      throw DataError(name + ": blob has " + std::to_string(blob.size()) + " bytes, header implies " +
                      std::to_string(count * plane * sizeof(float)));
    }
    const char* src = blob.data();
    for (std::size_t f = 0; f < count; ++f) {
      std::vector<double> values(plane);
      for (std::size_t i = 0; i < plane; ++i) {
        float x;
        std::memcpy(&x, src, sizeof x);
        src += sizeof x;
        if (!std::isfinite(x) || !domain.contains(x)) {
          throw DataError(name + ": frame " + std::to_string(f) + " has value " + std::to_string(x) +
                          " outside the header range [" + std::to_string(domain.lo) + ", " +
                          std::to_string(domain.hi) + "]");
        }
        values[i] = x;
      }
      r.loop.frames.emplace_back(Image(ext[0], ext[1], std::move(values)), domain);
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(name + ": header field error: " + e.what());
  }
}

std::vector<std::string> Corpus::ids() const {
  std::vector<std::string> out;
  for (const auto& l : loops) out.push_back(l.id);
  return out;
}

const Cineloop& Corpus::loop(const std::string& id) const {
  const auto it = std::find_if(loops.begin(), loops.end(), [&](const Cineloop& l) { return l.id == id; });
  if (it == loops.end()) throw DataError("corpus has no cineloop '" + id + "'");
  return *it;
}

Frame Corpus::ground_truth(const std::string& id, std::size_t frame_index) const {
  const auto it = processed.find(id);
  if (it != processed.end()) {
    if (frame_index >= it->second.frames.size()) throw DataError("processed loop " + id + " is missing a frame");
    return it->second.frames[frame_index];
  }
  return oracle_postprocess(loop(id).frames.at(frame_index));
}

void write_corpus(const Corpus& corpus, const fs::path& dir) {
  fs::create_directories(dir);
  nlohmann::json entries = nlohmann::json::array();
  for (const Cineloop& l : corpus.loops) {
    const LoopFiles f = write_cineloop(l, dir);
    entries.push_back({{"id", l.id}, {"header", f.header.filename().string()}, {"role", "raw"}, {"frames", l.frames.size()}});
    const auto it = corpus.processed.find(l.id);
    if (it != corpus.processed.end()) {
      const LoopFiles p = write_cineloop(it->second, dir, "processed", l.id);
      entries.push_back(
          {{"id", l.id}, {"header", p.header.filename().string()}, {"role", "processed"}, {"frames", it->second.frames.size()}});
    }
  }
  nlohmann::json manifest = {{"format_version", kContainerFormatVersion}, {"loops", entries}};
  write_file_atomic(dir / kCorpusManifestName, manifest.dump(2) + "\n");
}

Corpus ingest_external(const fs::path& dir) {
  Corpus corpus;
  if (!fs::is_directory(dir)) throw DataError("corpus directory " + dir.string() + " does not exist");
  std::vector<fs::path> headers;
  const fs::path manifest_path = dir / kCorpusManifestName;
  std::vector<std::string> problems;
  if (fs::exists(manifest_path)) {
    try {
      const auto m = nlohmann::json::parse(read_file(manifest_path));
      for (const auto& e : m.at("loops")) headers.push_back(dir / e.at("header").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw DataError("corpus manifest is malformed: " + std::string(e.what()));
    }
  } else {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() == ".json") headers.push_back(entry.path());
    }
    std::sort(headers.begin(), headers.end());
  }
  std::vector<LoadedLoop> processed;
  for (const fs::path& h : headers) {
    try {
      LoadedLoop l = read_cineloop(h);
      if (l.role == "processed") {
        processed.push_back(std::move(l));
      } else if (l.role == "raw") {
        corpus.loops.push_back(std::move(l.loop));
      } else {
        problems.push_back(h.filename().string() + ": unknown role '" + l.role + "'");
      }
    } catch (const std::exception& e) {
      problems.push_back(e.what());
    }
  }
  for (LoadedLoop& p : processed) {
    const std::string key = p.pair_of.empty() ? p.loop.id : p.pair_of;
    const auto raw = std::find_if(corpus.loops.begin(), corpus.loops.end(), [&](const Cineloop& c) { return c.id == key; });
    if (raw == corpus.loops.end()) {
      problems.push_back("processed loop " + p.loop.id + " has no raw counterpart '" + key + "'");
    } else if (raw->frames.size() != p.loop.frames.size() ||
               raw->frames.front().values.extent() != p.loop.frames.front().values.extent()) {
      problems.push_back("processed loop " + p.loop.id + " does not match its raw counterpart in shape");
    } else {
      corpus.processed.emplace(key, std::move(p.loop));
    }
  }
  if (!problems.empty()) {
    std::string msg = "corpus " + dir.string() + " has " + std::to_string(problems.size()) + " problem(s):";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw DataError(msg);
  }
  return corpus;
}

}  // namespace postmimic::data
