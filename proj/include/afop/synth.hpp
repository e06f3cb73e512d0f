#pragma once

#include "afop/rng.hpp"
#include "afop/splits.hpp"
#include "afop/types.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace afop {

struct ShapeParams {
  int edge_count = 4;              // SG contour bumps per sweep at nominal speed
  double contour_asymmetry = 0.0;  // 0..1, skews bump spacing and amplitudes
  double bump_amplitude = 1.0;
};

struct MaterialParams {
  double spectral_exponent = 1.0;  // PVDF texture coloration (higher = more low-frequency)
  double resonance_hz = 100.0;     // PVDF texture resonance
  double texture_amplitude = 1.0;  // PVDF texture strength
  double sg_gain = 1.0;            // quasi-static coupling; stiffer surfaces press harder
  double resonance_r = 0.975;      // resonance pole radius; closer to 1 rings longer
};

struct SynthConfig {
  std::array<ShapeParams, kNumShapes> shapes;
  std::array<MaterialParams, kNumMaterials> materials;
  double noise_sigma = 0.12;
  int trials_per_class = 60;
  double sample_rate_hz = kDefaultSampleRateHz;
  double window_s = 2.0;
  std::uint64_t seed = 0;
  bool noiseless = false;  // drop additive measurement noise (oracle tests)

  // Optional perturbed trials for the ForceSpeed protocol: cycled over the grid.
  std::vector<PerturbationCell> perturbation_grid;
  int perturbed_trials_per_class = 0;

  SynthConfig();  // calibrated defaults

  int window_len() const {
    return static_cast<int>(sample_rate_hz * window_s + 0.5);
  }

  void validate() const;  // throws ConfigError
};

/// One trial of class (shape_id, material). SG channels carry a creep-filtered
/// bump-train contour whose static gain depends on the material; PVDF channels
/// carry the contour's time-derivative transients plus broadband texture,
/// scaled by force * speed. Deterministic given the rng state.
TactileTrial synth_trial(const SynthConfig& config, int shape_id, Material material,
                         double force_scale, double speed_scale, Rng& rng);

/// Full 12 x 3 grid, trials_per_class nominal trials per class plus any
/// configured perturbed trials. Per-trial RNG streams are derived from
/// (seed, shape, material, trial_index), so generation order is irrelevant.
TactileDataset synth_dataset(const SynthConfig& config);

}  // namespace afop
