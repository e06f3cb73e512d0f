#include "afop/features.hpp"

#include "afop/dwt.hpp"
#include "afop/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace afop {

const char* sensor_kind_name(SensorKind k) {
  switch (k) {
    case SensorKind::PVDF: return "PVDF";
    case SensorKind::SG: return "SG";
    case SensorKind::Cross: return "Cross";
  }
  return "?";
}

const char* subband_name(Subband b) {
  switch (b) {
    case Subband::None: return "none";
    case Subband::A3: return "A3";
    case Subband::D3: return "D3";
    case Subband::D2: return "D2";
    case Subband::D1: return "D1";
  }
  return "?";
}

namespace {

// Degenerate second moment: the signal is constant up to rounding noise.
bool degenerate_m2(double m2, double meansq) {
  return m2 <= 1e-24 * std::max(meansq, 1e-300);
}

double percentile_sorted(const std::vector<double>& s, double q) {
  const std::size_t n = s.size();
  if (n == 1) return s[0];
  const double rank = q / 100.0 * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(rank);
  const double frac = rank - static_cast<double>(lo);
  if (lo + 1 >= n) return s[n - 1];
  return s[lo] * (1.0 - frac) + s[lo + 1] * frac;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return percentile_sorted(v, 50.0);
}

double autocorr(const Eigen::VectorXd& c, double m2_times_n, int lag) {
  const int n = static_cast<int>(c.size());
  if (lag >= n) return 0.0;
  const double num = c.head(n - lag).dot(c.tail(n - lag));
  return num / m2_times_n;
}

double hist_entropy16(const Eigen::VectorXd& x, double lo, double hi) {
  const int n = static_cast<int>(x.size());
  if (!(hi > lo)) return 0.0;
  constexpr int kBins = 16;
  int counts[kBins] = {0};
  const double scale = kBins / (hi - lo);
  for (int i = 0; i < n; ++i) {
    int b = static_cast<int>((x[i] - lo) * scale);
    b = std::clamp(b, 0, kBins - 1);
    ++counts[b];
  }
  double h = 0.0;
  for (int b = 0; b < kBins; ++b) {
    if (counts[b] == 0) continue;
    const double p = static_cast<double>(counts[b]) / n;
    h -= p * std::log(p);
  }
  return h;
}

/// Everything the 48-stat and 24-stat blocks need, computed once per signal.
struct SignalSummary {
  int n;
  double mean, meansq, m2, m3, m4;
  double maxv, minv, max_abs, mean_abs, rms, energy;
  Eigen::VectorXd centered;
  std::vector<double> sorted;
  double median;
  double var_d1;  // population variance of the first difference
  int zc, ssc, peaks, mean_cross;
  double wl, rms_d1, rms_d2, mean_abs_d2;
  double mobility, complexity;
  int longest_run_above;
  int frac_above_count;

  explicit SignalSummary(const Eigen::VectorXd& x) {
    n = static_cast<int>(x.size());
    mean = x.mean();
    meansq = x.squaredNorm() / n;
    centered = x.array() - mean;
    m2 = centered.squaredNorm() / n;
    m3 = centered.array().cube().mean();
    m4 = centered.array().square().square().mean();
    maxv = x.maxCoeff();
    minv = x.minCoeff();
    max_abs = x.cwiseAbs().maxCoeff();
    mean_abs = x.cwiseAbs().mean();
    energy = x.squaredNorm();
    rms = std::sqrt(meansq);
    sorted.assign(x.data(), x.data() + n);
    std::sort(sorted.begin(), sorted.end());
    median = percentile_sorted(sorted, 50.0);

    zc = ssc = peaks = mean_cross = 0;
    wl = 0.0;
    double sum_d1 = 0.0, sumsq_d1 = 0.0, sumsq_d2 = 0.0, sumabs_d2 = 0.0;
    for (int i = 1; i < n; ++i) {
      const double d = x[i] - x[i - 1];
      wl += std::abs(d);
      sum_d1 += d;
      sumsq_d1 += d * d;
      if (x[i] * x[i - 1] < 0.0) ++zc;
      if (centered[i] * centered[i - 1] < 0.0) ++mean_cross;
    }
    for (int i = 1; i + 1 < n; ++i) {
      const double dprev = x[i] - x[i - 1];
      const double dnext = x[i + 1] - x[i];
      if (dprev * dnext < 0.0) ++ssc;
      if (x[i] > x[i - 1] && x[i] > x[i + 1]) ++peaks;
      const double d2 = x[i + 1] - 2.0 * x[i] + x[i - 1];
      sumsq_d2 += d2 * d2;
      sumabs_d2 += std::abs(d2);
    }
    const int nd1 = n - 1, nd2 = n - 2;
    const double mean_d1 = sum_d1 / nd1;
    var_d1 = sumsq_d1 / nd1 - mean_d1 * mean_d1;
    if (var_d1 < 0.0) var_d1 = 0.0;
    rms_d1 = std::sqrt(sumsq_d1 / nd1);
    rms_d2 = nd2 > 0 ? std::sqrt(sumsq_d2 / nd2) : 0.0;
    mean_abs_d2 = nd2 > 0 ? sumabs_d2 / nd2 : 0.0;

    mobility = (m2 > 0.0 && !degenerate_m2(m2, meansq)) ? std::sqrt(var_d1 / m2) : 0.0;
    // second-difference variance relative to first difference, for complexity
    double var_d2 = 0.0;
    if (nd2 > 0) {
      double sum_dd = 0.0, sumsq_dd = 0.0;
      for (int i = 1; i + 1 < n; ++i) {
        const double dd = x[i + 1] - 2.0 * x[i] + x[i - 1];
        sum_dd += dd;
        sumsq_dd += dd * dd;
      }
      const double mdd = sum_dd / nd2;
      var_d2 = sumsq_dd / nd2 - mdd * mdd;
      if (var_d2 < 0.0) var_d2 = 0.0;
    }
    const double mob_d1 = var_d1 > 0.0 ? std::sqrt(var_d2 / var_d1) : 0.0;
    complexity = mobility > 0.0 ? mob_d1 / mobility : 0.0;

    longest_run_above = 0;
    frac_above_count = 0;
    int run = 0;
    for (int i = 0; i < n; ++i) {
      if (x[i] > mean) {
        ++frac_above_count;
        ++run;
        longest_run_above = std::max(longest_run_above, run);
      } else {
        run = 0;
      }
    }
  }

  bool flat() const { return degenerate_m2(m2, meansq); }
};

double acf_value(const SignalSummary& s, int lag) {
  if (s.flat() || s.m2 <= 0.0) return 0.0;
  return autocorr(s.centered, s.m2 * s.n, lag);
}

double skewness_of(const SignalSummary& s) {
  if (s.flat()) return 0.0;
  return s.m3 / std::pow(s.m2, 1.5);
}

double kurtosis_of(const SignalSummary& s) {  // excess
  if (s.flat()) return 0.0;
  return s.m4 / (s.m2 * s.m2) - 3.0;
}

double crest_of(const SignalSummary& s) { return s.rms > 0.0 ? s.max_abs / s.rms : 0.0; }
double shape_factor_of(const SignalSummary& s) {
  return s.mean_abs > 0.0 ? s.rms / s.mean_abs : 0.0;
}

}  // namespace

Eigen::VectorXd time_stats48(const Eigen::VectorXd& x) {
  const SignalSummary s(x);
  const int n = s.n;
  Eigen::VectorXd out(kStatsPerChannel);
  int i = 0;
  out[i++] = s.mean;
  out[i++] = std::sqrt(s.m2);
  out[i++] = s.m2;
  out[i++] = s.rms;
  out[i++] = s.maxv;
  out[i++] = s.minv;
  out[i++] = s.maxv - s.minv;
  out[i++] = s.mean_abs;
  out[i++] = s.median;
  {
    std::vector<double> dev(n);
    for (int k = 0; k < n; ++k) dev[k] = std::abs(x[k] - s.median);
    out[i++] = median_of(std::move(dev));
  }
  out[i++] = percentile_sorted(s.sorted, 75.0) - percentile_sorted(s.sorted, 25.0);
  out[i++] = skewness_of(s);
  out[i++] = kurtosis_of(s);
  out[i++] = s.energy;
  out[i++] = static_cast<double>(s.zc) / (n - 1);
  out[i++] = static_cast<double>(s.ssc) / (n - 2);
  out[i++] = s.wl;
  out[i++] = crest_of(s);
  out[i++] = shape_factor_of(s);
  out[i++] = s.mean_abs > 0.0 ? s.max_abs / s.mean_abs : 0.0;  // impulse
  {
    double mean_sqrt_abs = x.cwiseAbs().cwiseSqrt().mean();
    const double denom = mean_sqrt_abs * mean_sqrt_abs;
    out[i++] = denom > 0.0 ? s.max_abs / denom : 0.0;  // clearance
  }
  out[i++] = s.mobility;
  out[i++] = s.complexity;
  out[i++] = hist_entropy16(x, s.minv, s.maxv);
  for (double q : {1.0, 5.0, 10.0, 25.0, 75.0, 95.0, 99.0})
    out[i++] = percentile_sorted(s.sorted, q);
  for (int lag : {1, 2, 5}) out[i++] = acf_value(s, lag);
  out[i++] = static_cast<double>(s.mean_cross) / (n - 1);
  out[i++] = static_cast<double>(s.peaks) / (n - 2);
  out[i++] = s.rms_d1;
  out[i++] = s.mean_abs_d2;
  out[i++] = s.rms_d2;
  out[i++] = std::log1p(s.energy);
  {
    // energy distribution over 8 equal time segments
    constexpr int kSegs = 8;
    double e[kSegs] = {0.0};
    for (int seg = 0; seg < kSegs; ++seg) {
      const int lo = seg * n / kSegs, hi = (seg + 1) * n / kSegs;
      for (int k = lo; k < hi; ++k) e[seg] += x[k] * x[k];
    }
    double h = 0.0;
    if (s.energy > 0.0) {
      for (double ej : e) {
        if (ej <= 0.0) continue;
        const double p = ej / s.energy;
        h -= p * std::log(p);
      }
    }
    out[i++] = h;
  }
  out[i++] = s.max_abs;
  {
    const int trim = n / 10;
    double acc = 0.0;
    for (int k = trim; k < n - trim; ++k) acc += s.sorted[k];
    out[i++] = acc / (n - 2 * trim);
  }
  {
    std::vector<double> a(n);
    for (int k = 0; k < n; ++k) a[k] = std::abs(x[k]);
    out[i++] = median_of(std::move(a));
  }
  out[i++] = s.maxv > s.minv ? (s.mean - s.minv) / (s.maxv - s.minv) : 0.5;
  out[i++] = static_cast<double>(s.frac_above_count) / n;
  out[i++] = static_cast<double>(s.longest_run_above) / n;
  {
    double v = 0.0;
    if (!s.flat() && s.m2 > 0.0) {
      v = 1.0;
      const int max_lag = std::min(50, n - 1);
      for (int lag = 1; lag <= max_lag; ++lag) {
        if (autocorr(s.centered, s.m2 * s.n, lag) < 0.0) {
          v = static_cast<double>(lag) / 50.0;
          break;
        }
      }
    }
    out[i++] = v;
  }
  return out;
}

Eigen::VectorXd band_stats24(const Eigen::VectorXd& c, double rel_energy) {
  const SignalSummary s(c);
  const int n = s.n;
  Eigen::VectorXd out(kStatsPerBand);
  int i = 0;
  out[i++] = s.mean;
  out[i++] = std::sqrt(s.m2);
  out[i++] = s.rms;
  out[i++] = s.maxv;
  out[i++] = s.minv;
  out[i++] = s.maxv - s.minv;
  out[i++] = s.mean_abs;
  out[i++] = s.median;
  {
    std::vector<double> dev(n);
    for (int k = 0; k < n; ++k) dev[k] = std::abs(c[k] - s.median);
    out[i++] = median_of(std::move(dev));
  }
  out[i++] = percentile_sorted(s.sorted, 75.0) - percentile_sorted(s.sorted, 25.0);
  out[i++] = skewness_of(s);
  out[i++] = kurtosis_of(s);
  out[i++] = s.energy;
  out[i++] = static_cast<double>(s.zc) / (n - 1);
  out[i++] = static_cast<double>(s.ssc) / (n - 2);
  out[i++] = s.wl;
  out[i++] = crest_of(s);
  out[i++] = shape_factor_of(s);
  out[i++] = hist_entropy16(c, s.minv, s.maxv);
  out[i++] = acf_value(s, 1);
  out[i++] = percentile_sorted(s.sorted, 5.0);
  out[i++] = percentile_sorted(s.sorted, 95.0);
  out[i++] = rel_energy;
  out[i++] = std::log1p(s.energy);
  return out;
}

namespace {

const char* kTimeStatNames[kStatsPerChannel] = {
    "mean", "std", "var", "rms", "max", "min", "ptp", "mean_abs", "median", "mad",
    "iqr", "skew", "kurt", "energy", "zcr", "ssc", "wl", "crest", "shape_factor",
    "impulse", "clearance", "hjorth_mobility", "hjorth_complexity", "hist_entropy",
    "p01", "p05", "p10", "p25", "p75", "p95", "p99", "acf1", "acf2", "acf5",
    "mean_cross_rate", "peak_rate", "rms_d1", "mean_abs_d2", "rms_d2", "log_energy",
    "seg_energy_entropy", "max_abs", "trimmed_mean", "median_abs", "range_pos",
    "frac_above_mean", "longest_run_above", "acf_first_drop"};

const char* kBandStatNames[kStatsPerBand] = {
    "mean", "std", "rms", "max", "min", "ptp", "mean_abs", "median", "mad", "iqr",
    "skew", "kurt", "energy", "zcr", "ssc", "wl", "crest", "shape_factor",
    "hist_entropy", "acf1", "p05", "p95", "rel_energy", "log_energy"};

FeatureCatalog build_catalog() {
  FeatureCatalog cat;
  cat.version = kCatalogVersion;
  cat.entries.reserve(kNumFeatures);
  int idx = 0;
  auto push = [&](std::string name, int channel, SensorKind sensor, FeatureDomain domain,
                  Subband band) {
    cat.entries.push_back({idx++, std::move(name), channel, sensor, domain, band});
  };
  for (int ch = 1; ch <= 4; ++ch) {
    const SensorKind kind = ch <= 2 ? SensorKind::PVDF : SensorKind::SG;
    for (const char* stat : kTimeStatNames)
      push("ch" + std::to_string(ch) + "_" + stat, ch, kind, FeatureDomain::Time,
           Subband::None);
  }
  push("corr_ch1_ch2", 0, SensorKind::Cross, FeatureDomain::Time, Subband::None);
  push("corr_ch3_ch4", 0, SensorKind::Cross, FeatureDomain::Time, Subband::None);
  const Subband bands[4] = {Subband::A3, Subband::D3, Subband::D2, Subband::D1};
  for (int ch = 1; ch <= 2; ++ch) {
    for (Subband band : bands) {
      for (const char* stat : kBandStatNames)
        push("ch" + std::to_string(ch) + "_" + subband_name(band) + "_" + stat, ch,
             SensorKind::PVDF, FeatureDomain::Frequency, band);
    }
  }
  return cat;
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const int n = static_cast<int>(a.size());
  const double ma = a.mean(), mb = b.mean();
  const Eigen::VectorXd ca = a.array() - ma, cb = b.array() - mb;
  const double va = ca.squaredNorm() / n, vb = cb.squaredNorm() / n;
  if (degenerate_m2(va, a.squaredNorm() / n) || degenerate_m2(vb, b.squaredNorm() / n))
    return 0.0;
  return (ca.dot(cb) / n) / std::sqrt(va * vb);
}

}  // namespace

const FeatureCatalog& feature_catalog() {
  static const FeatureCatalog cat = build_catalog();
  return cat;
}

Eigen::VectorXd extract_time_features(const TactileTrial& trial) {
  Eigen::VectorXd out(kNumTimeFeatures);
  for (int ch = 0; ch < 4; ++ch)
    out.segment(ch * kStatsPerChannel, kStatsPerChannel) = time_stats48(trial.channels[ch]);
  out[4 * kStatsPerChannel] = pearson(trial.channels[0], trial.channels[1]);
  out[4 * kStatsPerChannel + 1] = pearson(trial.channels[2], trial.channels[3]);
  return out;
}

Eigen::VectorXd extract_freq_features(const TactileTrial& trial) {
  Eigen::VectorXd out(kNumFreqFeatures);
  int off = 0;
  for (int ch = 0; ch < 2; ++ch) {  // PVDF channels only
    const Dwt3Result coeffs = dwt3(trial.channels[ch]);
    const Eigen::VectorXd* bands[4] = {&coeffs.a3, &coeffs.d3, &coeffs.d2, &coeffs.d1};
    double energies[4];
    double total = 0.0;
    for (int b = 0; b < 4; ++b) {
      energies[b] = bands[b]->squaredNorm();
      total += energies[b];
    }
    for (int b = 0; b < 4; ++b) {
      const double rel = total > 0.0 ? energies[b] / total : 0.0;
      out.segment(off, kStatsPerBand) = band_stats24(*bands[b], rel);
      off += kStatsPerBand;
    }
  }
  return out;
}

Eigen::VectorXd extract_features(const TactileTrial& trial) {
  Eigen::VectorXd out(kNumFeatures);
  out.head(kNumTimeFeatures) = extract_time_features(trial);
  out.tail(kNumFreqFeatures) = extract_freq_features(trial);
  return out;
}

Eigen::MatrixXd extract_feature_matrix(const TactileDataset& dataset,
                                       const std::vector<std::size_t>& trial_ids) {
  Eigen::MatrixXd X(trial_ids.size(), kNumFeatures);
  parallel_for(trial_ids.size(), [&](std::size_t i) {
    X.row(i) = extract_features(dataset.trials[trial_ids[i]]).transpose();
  });
  return X;
}

Eigen::MatrixXd extract_feature_matrix(const TactileDataset& dataset) {
  std::vector<std::size_t> ids(dataset.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  return extract_feature_matrix(dataset, ids);
}

Standardizer fit_standardizer(const Eigen::MatrixXd& X, const std::string& catalog_version) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  if (n < 1) throw StatsError("fit_standardizer: empty training matrix");
  if (!X.allFinite()) throw StatsError("fit_standardizer: non-finite features");
  Standardizer s;
  s.catalog_version = catalog_version;
  s.means = X.colwise().mean();
  s.stds.resize(d);
  s.constant_mask.assign(d, false);
  for (int j = 0; j < d; ++j) {
    const double var = (X.col(j).array() - s.means[j]).square().mean();
    const double sd = std::sqrt(var);
    if (sd <= 1e-12 * std::max(1.0, std::abs(s.means[j]))) {
      s.constant_mask[j] = true;
      s.stds[j] = 1.0;  // unused; kept positive
    } else {
      s.stds[j] = sd;
    }
  }
  return s;
}

namespace {
void check_version(const Standardizer& s, const std::string& expected) {
  if (s.catalog_version != expected)
    throw VersionError("standardizer fitted on catalog \"" + s.catalog_version +
                       "\" applied to \"" + expected + "\"");
}
}  // namespace

Eigen::VectorXd apply_standardizer(const Eigen::VectorXd& raw, const Standardizer& s,
                                   const std::string& expected_version) {
  check_version(s, expected_version);
  if (raw.size() != s.means.size())
    throw ShapeError("apply_standardizer: dimension mismatch");
  Eigen::VectorXd z = (raw - s.means).cwiseQuotient(s.stds);
  for (int j = 0; j < z.size(); ++j)
    if (s.constant_mask[j]) z[j] = 0.0;
  return z;
}

Eigen::MatrixXd apply_standardizer(const Eigen::MatrixXd& raw, const Standardizer& s,
                                   const std::string& expected_version) {
  check_version(s, expected_version);
  if (raw.cols() != s.means.size())
    throw ShapeError("apply_standardizer: dimension mismatch");
  Eigen::MatrixXd z = (raw.rowwise() - s.means.transpose()).array().rowwise() /
                      s.stds.transpose().array();
  for (int j = 0; j < z.cols(); ++j)
    if (s.constant_mask[j]) z.col(j).setZero();
  return z;
}

}  // namespace afop
