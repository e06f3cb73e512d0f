#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace afop {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// File content does not match the expected column/field layout.
struct SchemaError : Error {
  using Error::Error;
};

/// Structurally valid input violating a dataset invariant (ragged channels, ...).
struct IntegrityError : Error {
  using Error::Error;
};

/// Unknown material string or out-of-range shape/material id.
struct LabelError : Error {
  using Error::Error;
};

/// A split protocol cannot be built from the given dataset.
struct ProtocolError : Error {
  using Error::Error;
};

/// Episode construction is infeasible (deficient class, empty query set, ...).
struct EpisodeError : Error {
  using Error::Error;
};

/// Dimension/length mismatch (signal length unsupported by DWT, D out of range, ...).
struct ShapeError : Error {
  using Error::Error;
};

/// Catalog-version mismatch between fitted state and data.
struct VersionError : Error {
  using Error::Error;
};

/// Degenerate statistics input (fewer than 2 values, single class, NaNs, ...).
struct StatsError : Error {
  using Error::Error;
};

/// Invalid configuration value.
struct ConfigError : Error {
  using Error::Error;
};

/// Filesystem / stream failure.
struct IoError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Class grid
// ---------------------------------------------------------------------------

enum class Material : std::uint8_t { Resin = 0, Wood = 1, Aluminum = 2 };

inline constexpr int kNumShapes = 12;
inline constexpr int kNumMaterials = 3;
inline constexpr int kNumClasses = kNumShapes * kNumMaterials;

inline constexpr double kDefaultSampleRateHz = 1000.0;
inline constexpr int kDefaultWindowLen = 2000;
inline constexpr int kMinChannelLen = 64;
inline constexpr double kNominalForceN = 1.0;
inline constexpr double kNominalSpeedMmS = 10.0;

const char* material_name(Material m);
Material parse_material(const std::string& name);  // throws LabelError

/// (shape_id, material) -> dense class id in [0, 36).
inline int class_id(int shape_id, Material material) {
  return (shape_id - 1) * kNumMaterials + static_cast<int>(material);
}

inline int shape_of_class(int cls) { return cls / kNumMaterials + 1; }
inline Material material_of_class(int cls) {
  return static_cast<Material>(cls % kNumMaterials);
}

// ---------------------------------------------------------------------------
// Trials and datasets
// ---------------------------------------------------------------------------

/// One sliding pass over an object. Channels 1-2 are PVDF (dynamic),
/// channels 3-4 are SG (static); stored 0-indexed.
struct TactileTrial {
  std::array<Eigen::VectorXd, 4> channels;
  int shape_id = 1;                      // 1..12
  Material material = Material::Resin;
  double force_n = kNominalForceN;       // nominal marker
  double speed_mm_s = kNominalSpeedMmS;  // nominal 10
  int trial_index = 0;

  int length() const { return static_cast<int>(channels[0].size()); }
  int cls() const { return class_id(shape_id, material); }

  /// Throws IntegrityError / LabelError on invariant violations.
  void validate() const;
};

struct TactileDataset {
  std::vector<TactileTrial> trials;
  std::map<int, std::vector<std::size_t>> class_index;  // class id -> trial indices
  double sample_rate_hz = kDefaultSampleRateHz;

  std::size_t size() const { return trials.size(); }
  int num_classes() const { return static_cast<int>(class_index.size()); }

  void rebuild_class_index();
  /// Checks trial invariants and class_index consistency.
  void validate() const;
};

}  // namespace afop
