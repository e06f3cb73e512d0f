#pragma once

#include "afop/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace afop {

enum class Protocol { ClosedSet, CrossShape, CrossMaterial, ForceSpeed };

const char* protocol_name(Protocol p);
Protocol parse_protocol(const std::string& name);  // throws ConfigError

struct PerturbationCell {
  double force_scale = 1.0;
  double speed_scale = 1.0;
};

/// {0.75, 1.0, 1.25} x {0.5, 1.0, 1.5} minus the nominal cell.
std::vector<PerturbationCell> default_perturbation_grid();

struct ProtocolSpec {
  Protocol protocol = Protocol::ClosedSet;
  int fold = 0;                         // CrossShape: 0..2
  Material held_in = Material::Resin;   // CrossMaterial: the single training material
  std::vector<PerturbationCell> grid = default_perturbation_grid();  // ForceSpeed
};

/// Test shapes of a CrossShape fold; round-robin so each fold trains on a
/// spread of geometries: fold f tests shapes {s : (s-1) % 3 == f}.
std::vector<int> cross_shape_test_shapes(int fold);

struct SplitSpec {
  ProtocolSpec protocol;
  std::vector<std::size_t> train_trial_ids;
  std::vector<std::size_t> test_trial_ids;
  std::uint64_t rng_seed = 0;
};

/// Deterministic for fixed (dataset, protocol, seed). ClosedSet partitions
/// each class 50/50 by seeded shuffle, the extra trial of an odd count going
/// to train. Throws ProtocolError when the dataset cannot support the protocol.
SplitSpec make_split(const TactileDataset& dataset, const ProtocolSpec& protocol,
                     std::uint64_t seed);

struct SplitCheck {
  std::string rule;
  bool passed = false;
  std::string detail;
};

struct SplitValidation {
  std::vector<SplitCheck> checks;
  bool all_passed() const;
  std::string summary() const;
};

/// Report-only leakage audit: disjointness plus per-protocol rules.
SplitValidation validate_split(const SplitSpec& split, const TactileDataset& dataset);

/// True when the trial carries nominal force and speed (ForceSpeed train side).
bool is_nominal_trial(const TactileTrial& trial);

}  // namespace afop
