#include "pacer/ad/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "pacer/errors.hpp"

namespace pacer::ad {

namespace {
constexpr char kMagic[8] = {'P', 'A', 'C', 'E', 'R', 'B', 'I', 'N'};
constexpr std::uint32_t kVersion = 1;

void write_u64_le(std::ofstream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64_le(std::ifstream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}
}  // namespace

void Checkpoint::add(const std::string& name, std::vector<LayerShape> layers,
                     std::vector<double> values) {
  groups.push_back({name, std::move(layers), std::move(values)});
}

bool Checkpoint::has(const std::string& name) const {
  for (const Group& g : groups)
    if (g.name == name) return true;
  return false;
}

const Checkpoint::Group& Checkpoint::group(const std::string& name) const {
  for (const Group& g : groups)
    if (g.name == name) return g;
  throw CheckpointError("checkpoint has no group '" + name + "'");
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream bin(path, std::ios::binary | std::ios::trunc);
  if (!bin) throw CheckpointError("cannot write checkpoint: " + path);
  bin.write(kMagic, sizeof(kMagic));
  write_u64_le(bin, kVersion);
  std::uint64_t total = 0;
  for (const Group& g : groups) total += g.values.size();
  write_u64_le(bin, total);
  for (const Group& g : groups) {
    for (double v : g.values) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      write_u64_le(bin, bits);
    }
  }
  if (!bin) throw CheckpointError("failed writing checkpoint: " + path);

  nlohmann::json side;
  side["format"] = "pacer-checkpoint";
  side["version"] = kVersion;
  side["total_values"] = total;
  side["groups"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const Group& g : groups) {
    nlohmann::json jg;
    jg["name"] = g.name;
    jg["offset"] = offset;
    jg["size"] = g.values.size();
    jg["layers"] = nlohmann::json::array();
    for (const LayerShape& s : g.layers)
      jg["layers"].push_back({{"name", s.name}, {"shape", s.dims}});
    side["groups"].push_back(jg);
    offset += g.values.size();
  }
  side["meta"] = meta;
  std::ofstream js(path + ".json", std::ios::trunc);
  if (!js) throw CheckpointError("cannot write sidecar: " + path + ".json");
  js << side.dump(2) << "\n";
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream bin(path, std::ios::binary);
  if (!bin) throw CheckpointError("cannot open checkpoint: " + path);
  char magic[8];
  bin.read(magic, sizeof(magic));
  if (!bin || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError("bad checkpoint magic: " + path);
  const std::uint64_t version = read_u64_le(bin);
  if (version != kVersion)
    throw CheckpointError("unsupported checkpoint version in " + path);
  const std::uint64_t total = read_u64_le(bin);
  std::vector<double> flat(total);
  for (std::uint64_t i = 0; i < total; ++i) {
    const std::uint64_t bits = read_u64_le(bin);
    std::memcpy(&flat[i], &bits, sizeof(double));
  }
  if (!bin) throw CheckpointError("truncated checkpoint: " + path);

  std::ifstream js(path + ".json");
  if (!js) throw CheckpointError("missing sidecar: " + path + ".json");
  nlohmann::json side;
  try {
    js >> side;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("bad sidecar json: " + std::string(e.what()));
  }

  Checkpoint ckpt;
  for (const auto& jg : side.at("groups")) {
    Group g;
    g.name = jg.at("name").get<std::string>();
    const std::uint64_t off = jg.at("offset").get<std::uint64_t>();
    const std::uint64_t size = jg.at("size").get<std::uint64_t>();
    if (off + size > total)
      throw CheckpointError("sidecar group '" + g.name + "' exceeds blob");
    g.values.assign(flat.begin() + off, flat.begin() + off + size);
    for (const auto& jl : jg.at("layers"))
      g.layers.push_back({jl.at("name").get<std::string>(),
                          jl.at("shape").get<std::vector<int>>()});
    ckpt.groups.push_back(std::move(g));
  }
  if (side.contains("meta"))
    ckpt.meta = side.at("meta").get<std::map<std::string, std::string>>();
  return ckpt;
}

}  // namespace pacer::ad
