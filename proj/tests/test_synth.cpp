#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "afop/rng.hpp"
#include "afop/synth.hpp"

#include <cmath>
#include <cstdint>

using namespace afop;

namespace {

bool trials_identical(const TactileTrial& a, const TactileTrial& b) {
  if (a.shape_id != b.shape_id || a.material != b.material) return false;
  if (a.force_n != b.force_n || a.speed_mm_s != b.speed_mm_s) return false;
  for (int ch = 0; ch < 4; ++ch)
    if (a.channels[ch] != b.channels[ch]) return false;
  return true;
}

// Counts clusters of samples exceeding frac * max(x), each cluster one spike.
// The first samples are skipped so the contact-make ramp is not mistaken for
// an edge transient.
int positive_spike_clusters(const Eigen::VectorXd& x, double frac, int skip) {
  const Eigen::VectorXd tail = x.tail(x.size() - skip);
  const double thr = frac * tail.maxCoeff();
  int clusters = 0;
  bool inside = false;
  for (int i = 0; i < tail.size(); ++i) {
    const bool above = tail[i] > thr;
    if (above && !inside) ++clusters;
    inside = above;
  }
  return clusters;
}

SynthConfig quiet_config() {
  SynthConfig config;
  config.noiseless = true;
  config.window_s = 4.0;  // generous bump spacing clears the contact ramp
  for (MaterialParams& m : config.materials) m.texture_amplitude = 0.0;
  return config;
}

}  // namespace

TEST_CASE("dataset covers the full class grid with the requested counts") {
  SynthConfig config;
  config.trials_per_class = 2;
  config.seed = 11;
  const TactileDataset ds = synth_dataset(config);
  CHECK(ds.trials.size() == 72);
  CHECK(ds.class_index.size() == 36);
  for (const auto& [cls, ids] : ds.class_index) CHECK(ids.size() == 2);
  for (std::size_t i = 0; i < ds.trials.size(); ++i)
    CHECK(ds.trials[i].trial_index == static_cast<int>(i));
}

TEST_CASE("generation is deterministic in the seed and sensitive to it") {
  SynthConfig config;
  config.trials_per_class = 2;
  config.seed = 5;
  const TactileDataset a = synth_dataset(config);
  const TactileDataset b = synth_dataset(config);
  REQUIRE(a.trials.size() == b.trials.size());
  for (std::size_t i = 0; i < a.trials.size(); ++i)
    CHECK(trials_identical(a.trials[i], b.trials[i]));

  config.seed = 6;
  const TactileDataset c = synth_dataset(config);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.trials.size() && !any_diff; ++i)
    any_diff = !trials_identical(a.trials[i], c.trials[i]);
  CHECK(any_diff);
}

TEST_CASE("perturbed trials carry off-nominal force or speed") {
  SynthConfig config;
  config.trials_per_class = 1;
  config.perturbed_trials_per_class = 2;
  config.perturbation_grid = default_perturbation_grid();
  config.seed = 3;
  const TactileDataset ds = synth_dataset(config);
  CHECK(ds.trials.size() == 36 * 3);
  int nominal = 0, perturbed = 0;
  for (const TactileTrial& t : ds.trials) {
    const bool nom = t.force_n == kNominalForceN && t.speed_mm_s == kNominalSpeedMmS;
    (nom ? nominal : perturbed)++;
  }
  CHECK(nominal == 36);
  CHECK(perturbed == 72);
}

TEST_CASE("dynamic channel spikes once per contour edge when texture is silenced") {
  const SynthConfig config = quiet_config();
  for (int s = 1; s <= kNumShapes; ++s) {
    for (int m = 0; m < kNumMaterials; ++m) {
      Rng rng = derive_rng(41, {static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(m)});
      const TactileTrial t =
          synth_trial(config, s, static_cast<Material>(m), 1.0, 1.0, rng);
      const int skip = static_cast<int>(0.15 * config.sample_rate_hz);
      CHECK(positive_spike_clusters(t.channels[0], 0.18, skip) ==
            config.shapes[s - 1].edge_count);
    }
  }
}

TEST_CASE("dynamic channels are blind to the material") {
  SynthConfig config;
  config.noiseless = true;
  for (int m = 1; m < kNumMaterials; ++m) {
    Rng r0 = derive_rng(19, {7});
    Rng rm = derive_rng(19, {7});
    const TactileTrial a = synth_trial(config, 5, Material::Resin, 1.0, 1.0, r0);
    const TactileTrial b =
        synth_trial(config, 5, static_cast<Material>(m), 1.0, 1.0, rm);
    CHECK(a.channels[0] == b.channels[0]);
    CHECK(a.channels[1] == b.channels[1]);
    CHECK(a.channels[2] != b.channels[2]);
  }
}

TEST_CASE("static channel level orders materials by coupling stiffness") {
  SynthConfig config;
  config.noiseless = true;
  double prev = -1.0;
  for (Material m : {Material::Resin, Material::Wood, Material::Aluminum}) {
    Rng rng = derive_rng(23, {3});
    const TactileTrial t = synth_trial(config, 8, m, 1.0, 1.0, rng);
    const double level = t.channels[2].mean();
    CHECK(level > prev);
    prev = level;
  }
}

TEST_CASE("static channel response is proportional to contact force") {
  SynthConfig config;
  config.noiseless = true;
  Rng r1 = derive_rng(29, {1});
  Rng r2 = derive_rng(29, {1});
  const TactileTrial base = synth_trial(config, 4, Material::Wood, 1.0, 1.0, r1);
  const TactileTrial heavy = synth_trial(config, 4, Material::Wood, 1.25, 1.0, r2);
  CHECK((heavy.channels[2] - 1.25 * base.channels[2]).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK(heavy.channels[2].squaredNorm() > base.channels[2].squaredNorm());
}

TEST_CASE("sweep speed reshapes the trace instead of rescaling it") {
  SynthConfig config;
  config.noiseless = true;
  Rng r1 = derive_rng(31, {1});
  Rng r2 = derive_rng(31, {1});
  const TactileTrial slow = synth_trial(config, 6, Material::Wood, 1.0, 1.0, r1);
  const TactileTrial fast = synth_trial(config, 6, Material::Wood, 1.0, 1.5, r2);
  CHECK(slow.channels[2] != fast.channels[2]);
  CHECK(slow.speed_mm_s != fast.speed_mm_s);
}

TEST_CASE("trial rejects out-of-range labels and scales") {
  SynthConfig config;
  Rng rng = derive_rng(1, {1});
  CHECK_THROWS_AS(synth_trial(config, 0, Material::Wood, 1.0, 1.0, rng), LabelError);
  CHECK_THROWS_AS(synth_trial(config, 13, Material::Wood, 1.0, 1.0, rng), LabelError);
  CHECK_THROWS_AS(synth_trial(config, 1, Material::Wood, 0.0, 1.0, rng), ConfigError);
  CHECK_THROWS_AS(synth_trial(config, 1, Material::Wood, 1.0, -1.0, rng), ConfigError);
}

TEST_CASE("config validation rejects each out-of-contract field") {
  auto broken = [](auto mutate) {
    SynthConfig config;
    mutate(config);
    CHECK_THROWS_AS(config.validate(), ConfigError);
  };
  broken([](SynthConfig& c) { c.sample_rate_hz = 0.0; });
  broken([](SynthConfig& c) { c.window_s = 0.01; });         // below minimum length
  broken([](SynthConfig& c) { c.window_s = 0.1234; });       // length not divisible by 8
  broken([](SynthConfig& c) { c.trials_per_class = 0; });
  broken([](SynthConfig& c) { c.noise_sigma = -0.1; });
  broken([](SynthConfig& c) { c.perturbed_trials_per_class = 1; });  // empty grid
  broken([](SynthConfig& c) { c.shapes[0].edge_count = 0; });
  broken([](SynthConfig& c) { c.shapes[3].contour_asymmetry = 1.5; });
  broken([](SynthConfig& c) { c.materials[1].resonance_hz = 900.0; });  // above Nyquist
  broken([](SynthConfig& c) { c.materials[2].resonance_r = 1.0; });
  broken([](SynthConfig& c) { c.materials[0].sg_gain = 0.0; });
  SynthConfig ok;
  CHECK_NOTHROW(ok.validate());
}
