#pragma once

#include "afop/types.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace afop {

inline constexpr int kNumFeatures = 386;
inline constexpr int kNumTimeFeatures = 194;
inline constexpr int kNumFreqFeatures = 192;
inline constexpr int kStatsPerChannel = 48;
inline constexpr int kStatsPerBand = 24;
inline const char* kCatalogVersion = "afop-feat-v1";

enum class SensorKind { PVDF, SG, Cross };
enum class FeatureDomain { Time, Frequency };
enum class Subband { None, A3, D3, D2, D1 };

const char* sensor_kind_name(SensorKind k);
const char* subband_name(Subband b);

struct CatalogEntry {
  int index = 0;
  std::string name;
  int source_channel = 0;  // 1..4, 0 = cross-channel pair
  SensorKind sensor = SensorKind::PVDF;
  FeatureDomain domain = FeatureDomain::Time;
  Subband subband = Subband::None;
};

struct FeatureCatalog {
  std::string version;
  std::vector<CatalogEntry> entries;
};

/// The fixed 386-entry catalog: 4 x 48 per-channel time statistics,
/// corr(ch1,ch2), corr(ch3,ch4), then 2 PVDF channels x 4 DWT sub-bands x 24.
const FeatureCatalog& feature_catalog();

/// The 48 per-channel time statistics, in catalog order.
Eigen::VectorXd time_stats48(const Eigen::VectorXd& x);

/// The 24 per-band statistics; rel_energy = band energy / total band energy
/// for the channel (0 when the total is 0).
Eigen::VectorXd band_stats24(const Eigen::VectorXd& coeffs, double rel_energy);

/// Raw (pre-standardization) features, catalog order, length 194.
Eigen::VectorXd extract_time_features(const TactileTrial& trial);

/// Raw features from the 3-level DWT of the two PVDF channels, length 192.
Eigen::VectorXd extract_freq_features(const TactileTrial& trial);

/// concat(time, frequency): raw 386-vector.
Eigen::VectorXd extract_features(const TactileTrial& trial);

/// Rows = trials, catalog order columns.
Eigen::MatrixXd extract_feature_matrix(const TactileDataset& dataset,
                                       const std::vector<std::size_t>& trial_ids);
Eigen::MatrixXd extract_feature_matrix(const TactileDataset& dataset);

struct Standardizer {
  Eigen::VectorXd means;
  Eigen::VectorXd stds;                // population std; > 0 where not constant
  std::vector<bool> constant_mask;     // near-zero-variance features map to 0
  std::string catalog_version;

  int dim() const { return static_cast<int>(means.size()); }
};

/// Fit on training features only. Population (1/n) standard deviation.
Standardizer fit_standardizer(const Eigen::MatrixXd& train_features,
                              const std::string& catalog_version = kCatalogVersion);

/// (x - mean) / std per feature; constant features map to 0.
/// Throws VersionError when expected_version mismatches the fitted one.
Eigen::VectorXd apply_standardizer(const Eigen::VectorXd& raw, const Standardizer& s,
                                   const std::string& expected_version = kCatalogVersion);
Eigen::MatrixXd apply_standardizer(const Eigen::MatrixXd& raw, const Standardizer& s,
                                   const std::string& expected_version = kCatalogVersion);

}  // namespace afop
