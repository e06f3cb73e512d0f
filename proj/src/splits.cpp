#include "afop/splits.hpp"

#include "afop/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace afop {

const char* protocol_name(Protocol p) {
  switch (p) {
    case Protocol::ClosedSet: return "closedSet";
    case Protocol::CrossShape: return "crossShape";
    case Protocol::CrossMaterial: return "crossMaterial";
    case Protocol::ForceSpeed: return "forceSpeed";
  }
  return "?";
}

Protocol parse_protocol(const std::string& name) {
  if (name == "closedSet") return Protocol::ClosedSet;
  if (name == "crossShape") return Protocol::CrossShape;
  if (name == "crossMaterial") return Protocol::CrossMaterial;
  if (name == "forceSpeed") return Protocol::ForceSpeed;
  throw ConfigError("unknown protocol \"" + name +
                    "\"; expected closedSet|crossShape|crossMaterial|forceSpeed");
}

std::vector<PerturbationCell> default_perturbation_grid() {
  std::vector<PerturbationCell> grid;
  for (double f : {0.75, 1.0, 1.25})
    for (double s : {0.5, 1.0, 1.5}) {
      if (f == 1.0 && s == 1.0) continue;
      grid.push_back({f, s});
    }
  return grid;
}

std::vector<int> cross_shape_test_shapes(int fold) {
  if (fold < 0 || fold > 2) throw ProtocolError("crossShape fold must be 0..2");
  std::vector<int> shapes;
  for (int s = 1; s <= kNumShapes; ++s)
    if ((s - 1) % 3 == fold) shapes.push_back(s);
  return shapes;
}

bool is_nominal_trial(const TactileTrial& trial) {
  const double ftol = 1e-9 * std::max(1.0, kNominalForceN);
  const double stol = 1e-9 * std::max(1.0, kNominalSpeedMmS);
  return std::abs(trial.force_n - kNominalForceN) <= ftol &&
         std::abs(trial.speed_mm_s - kNominalSpeedMmS) <= stol;
}

SplitSpec make_split(const TactileDataset& dataset, const ProtocolSpec& protocol,
                     std::uint64_t seed) {
  dataset.validate();
  SplitSpec split;
  split.protocol = protocol;
  split.rng_seed = seed;

  switch (protocol.protocol) {
    case Protocol::ClosedSet: {
      for (int cls = 0; cls < kNumClasses; ++cls) {
        auto it = dataset.class_index.find(cls);
        if (it == dataset.class_index.end()) continue;
        std::vector<std::size_t> ids = it->second;
        if (ids.size() < 2)
          throw ProtocolError("closedSet needs at least 2 trials per class; class " +
                              std::to_string(cls) + " has " + std::to_string(ids.size()));
        Rng rng = derive_rng(seed, {0x5C, static_cast<std::uint64_t>(cls)});
        std::shuffle(ids.begin(), ids.end(), rng);
        const std::size_t n_train = (ids.size() + 1) / 2;
        for (std::size_t i = 0; i < ids.size(); ++i)
          (i < n_train ? split.train_trial_ids : split.test_trial_ids).push_back(ids[i]);
      }
      break;
    }
    case Protocol::CrossShape: {
      const std::vector<int> test_shapes = cross_shape_test_shapes(protocol.fold);
      const std::set<int> test_set(test_shapes.begin(), test_shapes.end());
      for (std::size_t i = 0; i < dataset.size(); ++i)
        (test_set.count(dataset.trials[i].shape_id) ? split.test_trial_ids
                                                    : split.train_trial_ids)
            .push_back(i);
      break;
    }
    case Protocol::CrossMaterial: {
      for (std::size_t i = 0; i < dataset.size(); ++i)
        (dataset.trials[i].material == protocol.held_in ? split.train_trial_ids
                                                        : split.test_trial_ids)
            .push_back(i);
      break;
    }
    case Protocol::ForceSpeed: {
      for (std::size_t i = 0; i < dataset.size(); ++i)
        (is_nominal_trial(dataset.trials[i]) ? split.train_trial_ids
                                             : split.test_trial_ids)
            .push_back(i);
      break;
    }
  }

  if (split.train_trial_ids.empty())
    throw ProtocolError(std::string(protocol_name(protocol.protocol)) +
                        ": empty training side");
  if (split.test_trial_ids.empty())
    throw ProtocolError(std::string(protocol_name(protocol.protocol)) +
                        ": empty test side");
  return split;
}

bool SplitValidation::all_passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const SplitCheck& c) { return c.passed; });
}

std::string SplitValidation::summary() const {
  std::ostringstream os;
  for (const SplitCheck& c : checks)
    os << (c.passed ? "[ok]   " : "[FAIL] ") << c.rule
       << (c.detail.empty() ? "" : ": " + c.detail) << "\n";
  return os.str();
}

SplitValidation validate_split(const SplitSpec& split, const TactileDataset& dataset) {
  SplitValidation v;
  auto add = [&](std::string rule, bool ok, std::string detail = "") {
    v.checks.push_back({std::move(rule), ok, std::move(detail)});
  };

  const std::set<std::size_t> train(split.train_trial_ids.begin(),
                                    split.train_trial_ids.end());
  const std::set<std::size_t> test(split.test_trial_ids.begin(),
                                   split.test_trial_ids.end());

  {
    std::vector<std::size_t> overlap;
    std::set_intersection(train.begin(), train.end(), test.begin(), test.end(),
                          std::back_inserter(overlap));
    add("train/test disjoint", overlap.empty(),
        overlap.empty() ? "" : "trial " + std::to_string(overlap.front()) + " on both sides");
  }
  {
    bool in_range = true;
    std::size_t bad = 0;
    for (std::size_t id : split.train_trial_ids)
      if (id >= dataset.size()) { in_range = false; bad = id; break; }
    if (in_range)
      for (std::size_t id : split.test_trial_ids)
        if (id >= dataset.size()) { in_range = false; bad = id; break; }
    add("trial ids in range", in_range,
        in_range ? "" : "trial id " + std::to_string(bad) + " out of range");
    if (!in_range) return v;  // remaining rules would index out of bounds
  }
  add("no duplicate train ids", train.size() == split.train_trial_ids.size());
  add("no duplicate test ids", test.size() == split.test_trial_ids.size());

  auto shapes_of = [&](const std::set<std::size_t>& ids) {
    std::set<int> s;
    for (std::size_t id : ids) s.insert(dataset.trials[id].shape_id);
    return s;
  };
  auto materials_of = [&](const std::set<std::size_t>& ids) {
    std::set<Material> m;
    for (std::size_t id : ids) m.insert(dataset.trials[id].material);
    return m;
  };

  switch (split.protocol.protocol) {
    case Protocol::ClosedSet: {
      bool covered = true;
      std::string detail;
      for (const auto& [cls, ids] : dataset.class_index) {
        if (ids.size() < 2) continue;
        const bool in_train = std::any_of(ids.begin(), ids.end(),
                                          [&](std::size_t id) { return train.count(id); });
        const bool in_test = std::any_of(ids.begin(), ids.end(),
                                         [&](std::size_t id) { return test.count(id); });
        if (!in_train || !in_test) {
          covered = false;
          detail = "class " + std::to_string(cls) + " missing from " +
                   (in_train ? "test" : "train");
          break;
        }
      }
      add("every class on both sides", covered, detail);
      break;
    }
    case Protocol::CrossShape: {
      const std::set<int> train_shapes = shapes_of(train);
      const std::set<int> test_shapes = shapes_of(test);
      std::vector<int> leaked;
      std::set_intersection(train_shapes.begin(), train_shapes.end(), test_shapes.begin(),
                            test_shapes.end(), std::back_inserter(leaked));
      add("shape sets disjoint", leaked.empty(),
          leaked.empty() ? "" : "shape " + std::to_string(leaked.front()) + " on both sides");
      const std::vector<int> expect = cross_shape_test_shapes(split.protocol.fold);
      add("test shapes match fold",
          test_shapes == std::set<int>(expect.begin(), expect.end()));
      break;
    }
    case Protocol::CrossMaterial: {
      const std::set<Material> train_mats = materials_of(train);
      const std::set<Material> test_mats = materials_of(test);
      std::vector<Material> leaked;
      std::set_intersection(train_mats.begin(), train_mats.end(), test_mats.begin(),
                            test_mats.end(), std::back_inserter(leaked));
      add("material sets disjoint", leaked.empty(),
          leaked.empty() ? "" : std::string("material ") + material_name(leaked.front()) +
                                    " on both sides");
      add("train is the held-in material",
          train_mats == std::set<Material>{split.protocol.held_in});
      break;
    }
    case Protocol::ForceSpeed: {
      bool train_nominal = true;
      for (std::size_t id : train)
        if (!is_nominal_trial(dataset.trials[id])) { train_nominal = false; break; }
      add("train all nominal", train_nominal);
      bool test_perturbed = true;
      for (std::size_t id : test)
        if (is_nominal_trial(dataset.trials[id])) { test_perturbed = false; break; }
      add("test all perturbed", test_perturbed);
      break;
    }
  }
  return v;
}

}  // namespace afop
