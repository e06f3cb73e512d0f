#include "afop/synth.hpp"

#include "afop/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace afop {

namespace {

// The texture resonance sits in the D3 sub-band (62.5..125 Hz at 1 kHz
// sampling) and is shared by every material, so PVDF coloration carries no
// class information on its own.
constexpr double kTexExponent = 1.0;
constexpr double kTexResonanceHz = 180.0;

constexpr double kPlateauLevel = 0.55;
constexpr double kBumpBaseAmp = 0.8;
constexpr double kBumpBaseWidthS = 0.030;
constexpr double kEdgeAsymmetry = 0.14;   // rise/fall width split per unit asymmetry
constexpr double kAsymmetryJitter = 0.15; // per-edge scatter of the asymmetry level
constexpr double kUndershoot = 0.07;      // recovery-dip depth per unit asymmetry
constexpr double kSpacingChirp = 0.28;    // edge-spacing warp per unit asymmetry
constexpr double kAmpTaper = 0.07;        // amplitude taper per unit asymmetry
constexpr double kRampS = 0.12;           // contact make/break ramp
constexpr double kSnapHz = 290.0;         // stick-slip release ring frequency
constexpr double kSnapDecayS = 0.005;     // ring-down time constant
constexpr double kSnapGain = 0.35;        // ring peak relative to the edge transient
constexpr double kSnapFloor = 0.25;       // ring floor so every edge snaps a little
constexpr double kTransientGain = 0.045;
constexpr double kTextureGain = 0.33;
constexpr double kSgCreepS = 0.35;        // gauge creep time constant; blurs the contour
constexpr double kSgCreepJitter = 0.18;   // per-trial log scatter of the creep constant
constexpr double kSgNoiseShare = 0.4;     // SG channels are quieter than PVDF
constexpr double kSg4Gain = 0.85;
constexpr double kSg4DelayS = 0.012;
constexpr double kPvdf2Gain = 0.92;

double smoothstep01(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

struct Bump {
  double t_center, w_rise, w_fall, amp, under, snap;
};

double bump_value(const Bump& b, double t) {
  const double d = t - b.t_center;
  const double w = d < 0.0 ? b.w_rise : b.w_fall;
  const double z = d / w;
  double v = std::abs(z) <= 6.0 ? b.amp * std::exp(-0.5 * z * z) : 0.0;
  // Recovery dip trailing the edge; deeper for more asymmetric contours.
  const double zu = (d - 2.0 * b.w_fall) / b.w_fall;
  if (b.under != 0.0 && std::abs(zu) <= 6.0) v -= b.under * std::exp(-0.5 * zu * zu);
  return v;
}

}  // namespace

SynthConfig::SynthConfig() {
  const int edge_counts[kNumShapes] = {3, 3, 4, 4, 5, 5, 6, 6, 7, 7, 8, 8};
  for (int s = 0; s < kNumShapes; ++s) {
    shapes[s].edge_count = edge_counts[s];
    // Pair members share the edge count and differ only in how sharply the
    // leading vs trailing edge of each contour bump falls off.
    shapes[s].contour_asymmetry = (s % 2 == 0) ? 0.15 : 0.55;
    shapes[s].bump_amplitude = 1.0;
  }
  // Material identity lives in the quasi-static gauge coupling alone: stiffer
  // surfaces transfer more strain at the same contact force. Texture spectra
  // and contour geometry are identical across materials, so the dynamic
  // channels stay material-blind by construction.
  materials[static_cast<int>(Material::Resin)] = {kTexExponent, kTexResonanceHz, 1.0, 0.72, 0.975};
  materials[static_cast<int>(Material::Wood)] = {kTexExponent, kTexResonanceHz, 1.0, 1.00, 0.975};
  materials[static_cast<int>(Material::Aluminum)] = {kTexExponent, kTexResonanceHz, 1.0, 1.36, 0.975};
}

void SynthConfig::validate() const {
  if (sample_rate_hz <= 0.0) throw ConfigError("sample_rate_hz must be positive");
  if (window_s <= 0.0) throw ConfigError("window_s must be positive");
  const int n = window_len();
  if (n < kMinChannelLen || n % 8 != 0)
    throw ConfigError("window length " + std::to_string(n) +
                      " must be >= 64 and divisible by 8");
  if (trials_per_class < 1) throw ConfigError("trials_per_class must be >= 1");
  if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");
  if (perturbed_trials_per_class < 0)
    throw ConfigError("perturbed_trials_per_class must be >= 0");
  if (perturbed_trials_per_class > 0 && perturbation_grid.empty())
    throw ConfigError("perturbed trials requested with an empty perturbation grid");
  for (const ShapeParams& s : shapes) {
    if (s.edge_count < 1) throw ConfigError("edge_count must be >= 1");
    if (s.contour_asymmetry < 0.0 || s.contour_asymmetry > 1.0)
      throw ConfigError("contour_asymmetry must lie in [0, 1]");
  }
  for (const MaterialParams& m : materials) {
    if (m.resonance_hz <= 0.0 || m.resonance_hz >= sample_rate_hz / 2.0)
      throw ConfigError("resonance_hz must lie below Nyquist");
    if (m.resonance_r <= 0.0 || m.resonance_r >= 1.0)
      throw ConfigError("resonance_r must lie in (0, 1)");
    if (m.sg_gain <= 0.0) throw ConfigError("sg_gain must be positive");
  }
}

TactileTrial synth_trial(const SynthConfig& config, int shape_id, Material material,
                         double force_scale, double speed_scale, Rng& rng) {
  if (shape_id < 1 || shape_id > kNumShapes)
    throw LabelError("shape_id " + std::to_string(shape_id) + " outside 1..12");
  if (force_scale <= 0.0 || speed_scale <= 0.0)
    throw ConfigError("force and speed scales must be positive");

  const ShapeParams& sp = config.shapes[shape_id - 1];
  const MaterialParams& mp = config.materials[static_cast<int>(material)];
  const int n = config.window_len();
  const double fs = config.sample_rate_hz;
  const double window = n / fs;
  const int edges = sp.edge_count;
  const double a = sp.contour_asymmetry;

  std::normal_distribution<double> gauss(0.0, 1.0);

  // Trial-to-trial process variation; kept in noiseless mode. The level
  // jitters are pure nuisance on the dynamic channels; on the gauges they set
  // how far the material-dependent static coupling stands out of the scatter.
  const double gain3 = 1.0 + 0.03 * gauss(rng);
  const double gain4 = kSg4Gain * (1.0 + 0.03 * gauss(rng));
  const double plateau_jit = 1.0 + 0.18 * gauss(rng);
  const double bump_gain = 1.0 + 0.12 * gauss(rng);
  const double tex_gain = std::exp(0.25 * gauss(rng));
  const double creep_s = kSgCreepS * std::exp(kSgCreepJitter * gauss(rng));
  const double w0 = kBumpBaseWidthS;
  std::vector<Bump> bumps;
  bumps.reserve(edges);
  double last_center = 0.0;
  for (int k = 0; k < edges; ++k) {
    // Asymmetry shows up in several weak facets at once: the rise/fall width
    // split, a front-to-back amplitude taper, a spacing warp along the sweep
    // and a recovery dip after each edge. Per-edge scatter keeps any single
    // facet from resolving the level on its own; classification has to pool
    // evidence across edges and across features.
    const double frac = std::pow((k + 0.5) / edges, 1.0 + kSpacingChirp * a);
    const double u = 0.06 + 0.88 * frac + 0.018 * gauss(rng);
    const double amp_jit = 1.0 + 0.06 * gauss(rng);
    const double w_jit = 1.0 + 0.04 * gauss(rng);
    const double ak = std::clamp(a + kAsymmetryJitter * gauss(rng), 0.0, 0.9);
    const double snap_jit = 1.0 + 0.10 * gauss(rng);
    const double taper =
        edges > 1 ? 1.0 + kAmpTaper * a * (2.0 * k / (edges - 1.0) - 1.0) : 1.0;
    Bump b;
    b.t_center = u * window / speed_scale;  // faster sweeps compress the contour
    b.w_rise = w0 * (1.0 - kEdgeAsymmetry * ak) * w_jit / speed_scale;
    b.w_fall = w0 * (1.0 + kEdgeAsymmetry * ak) * w_jit / speed_scale;
    b.amp = kBumpBaseAmp * sp.bump_amplitude * bump_gain * amp_jit * taper;
    b.under = kUndershoot * ak * b.amp;
    b.snap = kSnapGain * (kSnapFloor + ak) * (b.amp / w0) * snap_jit;
    if (b.t_center < window + 4.0 * w0) bumps.push_back(b);
    last_center = std::max(last_center, b.t_center);
  }
  const double contact_end = std::min(window, last_center + 4.0 * w0 / speed_scale);

  auto envelope = [&](double t) {
    return smoothstep01(t / kRampS) * smoothstep01((contact_end - t) / kRampS);
  };

  // Sampled unit contour, its delayed copy for the second gauge, and the
  // centered-difference transient profile feeding the PVDF channels.
  Eigen::VectorXd c(n), c_delayed(n), env(n);
  const double plateau = kPlateauLevel * plateau_jit;
  for (int i = 0; i < n; ++i) {
    const double t = i / fs;
    env[i] = envelope(t);
    double v = plateau * env[i];
    double vd = plateau * envelope(t - kSg4DelayS);
    for (const Bump& b : bumps) {
      v += bump_value(b, t);
      vd += bump_value(b, t - kSg4DelayS);
    }
    c[i] = v;
    c_delayed[i] = vd;
  }
  Eigen::VectorXd dc(n);
  for (int i = 1; i + 1 < n; ++i) dc[i] = (c[i + 1] - c[i - 1]) * fs * 0.5;
  dc[0] = (c[1] - c[0]) * fs;
  dc[n - 1] = (c[n - 1] - c[n - 2]) * fs;

  // Gauge creep: a one-pole response much slower than a single bump smears
  // neighboring bumps into each other, so edge counting is unreliable on the
  // static channels, while the material-scaled standing level passes through
  // with unit DC gain. The transients above were taken before the filter; the
  // dynamic channels see the sharp contour.
  const double creep_a = std::exp(-1.0 / (fs * creep_s));
  double y3 = 0.0, y4 = 0.0;
  for (int i = 0; i < n; ++i) {
    y3 = creep_a * y3 + (1.0 - creep_a) * c[i];
    y4 = creep_a * y4 + (1.0 - creep_a) * c_delayed[i];
    c[i] = y3;
    c_delayed[i] = y4;
  }

  // Material texture: a structural resonance plus 1/f-style coloration,
  // independently realized per PVDF channel, normalized to unit RMS so the
  // configured amplitudes are comparable across materials.
  const double r = mp.resonance_r;
  const double cos_w0 = std::cos(2.0 * M_PI * mp.resonance_hz / fs);
  const double cutoff_hz = 500.0 * std::pow(2.0, -2.0 * mp.spectral_exponent);
  const double rho = std::exp(-2.0 * M_PI * cutoff_hz / fs);
  auto make_texture = [&](Eigen::VectorXd& out) {
    double r1 = 0.0, r2 = 0.0, col = 0.0;
    Eigen::VectorXd res(n), low(n);
    for (int i = 0; i < n; ++i) {
      const double xi_res = gauss(rng);
      const double xi_col = gauss(rng);
      const double r0 = 2.0 * r * cos_w0 * r1 - r * r * r2 + xi_res;
      r2 = r1;
      r1 = r0;
      res[i] = r0;
      col = rho * col + (1.0 - rho) * xi_col;
      low[i] = col;
    }
    const double sr = std::sqrt(res.squaredNorm() / n);
    const double sc = std::sqrt(low.squaredNorm() / n);
    out = 0.6 * res / (sr > 0.0 ? sr : 1.0) + 0.4 * low / (sc > 0.0 ? sc : 1.0);
  };
  Eigen::VectorXd tex1, tex2;
  make_texture(tex1);
  make_texture(tex2);

  const double force = force_scale;  // nominal force is 1 N
  const double excitation = 0.6 + 0.4 * speed_scale;
  const double tex_amp = kTextureGain * mp.texture_amplitude * tex_gain;

  TactileTrial trial;
  trial.shape_id = shape_id;
  trial.material = material;
  trial.force_n = kNominalForceN * force_scale;
  trial.speed_mm_s = kNominalSpeedMmS * speed_scale;
  for (auto& ch : trial.channels) ch.resize(n);
  for (int i = 0; i < n; ++i) {
    const double transient = kTransientGain * dc[i];
    trial.channels[0][i] =
        force * excitation * (transient + tex_amp * env[i] * tex1[i]);
    trial.channels[1][i] =
        force * excitation * kPvdf2Gain * (transient + tex_amp * env[i] * tex2[i]);
    trial.channels[2][i] = force * gain3 * mp.sg_gain * c[i];
    trial.channels[3][i] = force * gain4 * mp.sg_gain * c_delayed[i];
  }
  if (!config.noiseless && config.noise_sigma > 0.0) {
    for (int ch = 0; ch < 4; ++ch) {
      const double sigma = config.noise_sigma * (ch < 2 ? 1.0 : kSgNoiseShare);
      for (int i = 0; i < n; ++i) trial.channels[ch][i] += sigma * gauss(rng);
    }
  }
  return trial;
}

TactileDataset synth_dataset(const SynthConfig& config) {
  config.validate();

  struct Slot {
    int shape_id;
    Material material;
    int within_class;
    bool perturbed;
  };
  std::vector<Slot> slots;
  for (int s = 1; s <= kNumShapes; ++s)
    for (int m = 0; m < kNumMaterials; ++m) {
      for (int t = 0; t < config.trials_per_class; ++t)
        slots.push_back({s, static_cast<Material>(m), t, false});
      for (int t = 0; t < config.perturbed_trials_per_class; ++t)
        slots.push_back({s, static_cast<Material>(m), t, true});
    }

  TactileDataset ds;
  ds.sample_rate_hz = config.sample_rate_hz;
  ds.trials.resize(slots.size());
  parallel_for(slots.size(), [&](std::size_t i) {
    const Slot& slot = slots[i];
    const std::uint64_t stream = slot.perturbed ? 2 : 1;
    Rng rng = derive_rng(config.seed,
                         {stream, static_cast<std::uint64_t>(slot.shape_id),
                          static_cast<std::uint64_t>(slot.material),
                          static_cast<std::uint64_t>(slot.within_class)});
    double force_scale = 1.0, speed_scale = 1.0;
    if (slot.perturbed) {
      const PerturbationCell& cell =
          config.perturbation_grid[slot.within_class % config.perturbation_grid.size()];
      force_scale = cell.force_scale;
      speed_scale = cell.speed_scale;
    }
    ds.trials[i] =
        synth_trial(config, slot.shape_id, slot.material, force_scale, speed_scale, rng);
    ds.trials[i].trial_index = static_cast<int>(i);
  });
  ds.rebuild_class_index();
  return ds;
}

}  // namespace afop
