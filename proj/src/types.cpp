#include "afop/types.hpp"

#include <sstream>

namespace afop {

const char* material_name(Material m) {
  switch (m) {
    case Material::Resin: return "Resin";
    case Material::Wood: return "Wood";
    case Material::Aluminum: return "Aluminum";
  }
  return "?";
}

Material parse_material(const std::string& name) {
  if (name == "Resin") return Material::Resin;
  if (name == "Wood") return Material::Wood;
  if (name == "Aluminum") return Material::Aluminum;
  throw LabelError("unknown material \"" + name + "\" (expected Resin|Wood|Aluminum)");
}

void TactileTrial::validate() const {
  if (shape_id < 1 || shape_id > kNumShapes)
    throw LabelError("shape_id " + std::to_string(shape_id) + " outside 1..12");
  if (static_cast<int>(material) < 0 || static_cast<int>(material) >= kNumMaterials)
    throw LabelError("material id out of range");
  const auto len = channels[0].size();
  for (int c = 1; c < 4; ++c) {
    if (channels[c].size() != len) {
      std::ostringstream msg;
      msg << "ragged channels in trial " << trial_index << ": channel " << (c + 1)
          << " has " << channels[c].size() << " samples, channel 1 has " << len;
      throw IntegrityError(msg.str());
    }
  }
  if (len < kMinChannelLen)
    throw IntegrityError("trial " + std::to_string(trial_index) + " has only " +
                         std::to_string(len) + " samples per channel (min 64)");
}

void TactileDataset::rebuild_class_index() {
  class_index.clear();
  for (std::size_t i = 0; i < trials.size(); ++i)
    class_index[trials[i].cls()].push_back(i);
}

void TactileDataset::validate() const {
  for (const auto& t : trials) t.validate();
  std::size_t covered = 0;
  std::vector<char> seen(trials.size(), 0);
  for (const auto& [cls, ids] : class_index) {
    for (std::size_t id : ids) {
      if (id >= trials.size())
        throw IntegrityError("class_index references trial " + std::to_string(id) +
                             " beyond dataset size");
      if (trials[id].cls() != cls)
        throw IntegrityError("class_index assigns trial " + std::to_string(id) +
                             " to the wrong class");
      if (seen[id]++)
        throw IntegrityError("trial " + std::to_string(id) +
                             " indexed more than once");
      ++covered;
    }
  }
  if (covered != trials.size())
    throw IntegrityError("class_index covers " + std::to_string(covered) + " of " +
                         std::to_string(trials.size()) + " trials");
}

}  // namespace afop
