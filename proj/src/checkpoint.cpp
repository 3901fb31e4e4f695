#include "ta/checkpoint.hpp"

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "ta/errors.hpp"
#include "ta/tensor_io.hpp"

namespace ta {

namespace {

constexpr char kMagic[] = "TACP1\n";
constexpr std::size_t kMagicLen = 6;

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                        static_cast<unsigned char>((v >> 8) & 0xFF),
                        static_cast<unsigned char>((v >> 16) & 0xFF),
                        static_cast<unsigned char>((v >> 24) & 0xFF)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw IoError("checkpoint: truncated length field");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

struct ManifestEntry {
  std::vector<int> shape;
  std::size_t offset = 0;
};

}  // namespace

void save_checkpoint(const std::string& path, const KvConfig& model_config,
                     const ModuleVisit& visit) {
  std::ostringstream manifest;
  std::ostringstream blobs(std::ios::binary);
  std::size_t offset = 0;
  visit([&](const std::string& name, Param& p) {
    manifest << name << " " << p.value.rank();
    for (int i = 0; i < p.value.rank(); ++i) manifest << " " << p.value.dim(i);
    manifest << " " << offset << "\n";
    dump_tensor(blobs, p.value);
    offset += tensor_record_size(p.value);
  });

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open checkpoint for writing: " + path);
  os.write(kMagic, kMagicLen);
  const std::string cfg = model_config.to_string();
  write_u32(os, static_cast<std::uint32_t>(cfg.size()));
  os.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  const std::string man = manifest.str();
  write_u32(os, static_cast<std::uint32_t>(man.size()));
  os.write(man.data(), static_cast<std::streamsize>(man.size()));
  const std::string blob = blobs.str();
  os.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!os) throw IoError("checkpoint write failed: " + path);
}

namespace {

void read_header(std::istream& is, const std::string& path, KvConfig& config,
                 std::map<std::string, ManifestEntry>& manifest, std::size_t& blob_start) {
  char magic[kMagicLen];
  is.read(magic, kMagicLen);
  if (!is || std::string(magic, kMagicLen) != std::string(kMagic, kMagicLen)) {
    throw IoError("not a checkpoint file: " + path);
  }
  const std::uint32_t cfg_len = read_u32(is);
  std::string cfg_text(cfg_len, '\0');
  is.read(cfg_text.data(), cfg_len);
  const std::uint32_t man_len = read_u32(is);
  std::string man_text(man_len, '\0');
  is.read(man_text.data(), man_len);
  if (!is) throw IoError("checkpoint: truncated header in " + path);
  config = KvConfig::parse_string(cfg_text);

  std::istringstream man(man_text);
  std::string line;
  while (std::getline(man, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string name;
    int rank;
    ls >> name >> rank;
    ManifestEntry entry;
    for (int i = 0; i < rank; ++i) {
      int d;
      ls >> d;
      entry.shape.push_back(d);
    }
    ls >> entry.offset;
    if (!ls) throw IoError("checkpoint: malformed manifest line: " + line);
    manifest[name] = std::move(entry);
  }
  blob_start = kMagicLen + 4 + cfg_len + 4 + man_len;
}

}  // namespace

KvConfig load_checkpoint_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path);
  KvConfig config;
  std::map<std::string, ManifestEntry> manifest;
  std::size_t blob_start;
  read_header(is, path, config, manifest, blob_start);
  return config;
}

void load_checkpoint_params(const std::string& path, const ModuleVisit& visit) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path);
  KvConfig config;
  std::map<std::string, ManifestEntry> manifest;
  std::size_t blob_start;
  read_header(is, path, config, manifest, blob_start);

  std::size_t used = 0;
  visit([&](const std::string& name, Param& p) {
    const auto it = manifest.find(name);
    if (it == manifest.end()) {
      throw IoError("checkpoint/config mismatch: tensor '" + name + "' missing from " + path);
    }
    if (it->second.shape != p.value.shape()) {
      throw IoError("checkpoint/config mismatch: tensor '" + name + "' has shape " +
                    shape_to_string(it->second.shape) + ", model expects " + p.value.shape_str());
    }
    is.clear();
    is.seekg(static_cast<std::streamoff>(blob_start + it->second.offset));
    p.value = load_tensor(is);
    p.reset_grad();
    ++used;
  });
  if (used != manifest.size()) {
    for (const auto& [name, entry] : manifest) {
      (void)entry;
      // Report the first manifest tensor the model never asked for.
      bool found = false;
      visit([&](const std::string& n, Param&) { found = found || n == name; });
      if (!found) {
        throw IoError("checkpoint/config mismatch: tensor '" + name + "' not used by the model");
      }
    }
  }
}

}  // namespace ta
