#pragma once

#include <map>
#include <string>
#include <vector>

#include "pacer/ad/mlp.hpp"

namespace pacer::ad {

// Parameter checkpoint: one little-endian binary blob of doubles plus a JSON
// sidecar (<path>.json) naming each group, its layer shapes, and its offset
// into the blob. Free-form string metadata rides along in the sidecar.
struct Checkpoint {
  struct Group {
    std::string name;
    std::vector<LayerShape> layers;
    std::vector<double> values;
  };

  std::vector<Group> groups;
  std::map<std::string, std::string> meta;

  void add(const std::string& name, std::vector<LayerShape> layers,
           std::vector<double> values);
  const Group& group(const std::string& name) const;
  bool has(const std::string& name) const;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace pacer::ad
