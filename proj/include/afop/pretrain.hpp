#pragma once

#include "afop/features.hpp"
#include "afop/head.hpp"
#include "afop/nca.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace afop {

/// {1..20} plus a sparse tail, clipped to the feature count at scan time.
std::vector<int> default_d_grid();

struct DScanConfig {
  std::vector<int> grid = default_d_grid();
  int episodes_per_d = 200;
  int n_way = 5;   // fixed 5-way-5-shot validation episodes
  int k_shot = 5;
  int q_query = 15;
  double alpha = 10.0;
  std::uint64_t seed = 0;
};

struct DScanResult {
  std::vector<int> grid;
  Eigen::VectorXd mean_accuracy;
  Eigen::VectorXd ci_halfwidth;
  int selected_d = 0;
  int episodes_per_d = 0;
};

/// Values at ranking[0..D) in ranking order. Throws ShapeError on D out of range.
Eigen::VectorXd select_top_d(const Eigen::VectorXd& x, const std::vector<int>& ranking, int d);
Eigen::MatrixXd select_top_d(const Eigen::MatrixXd& X, const std::vector<int>& ranking, int d);

/// Scores each candidate D with no-adaptation prototypical episodes sampled
/// from the training data only; selects the accuracy argmax, ties to the
/// smallest D. Throws EpisodeError when a training class has fewer than
/// k_shot + q_query samples.
DScanResult d_scan(const Eigen::MatrixXd& X_std, const std::vector<int>& y,
                   const std::vector<int>& ranking, const DScanConfig& config);

struct PretrainConfig {
  NcaConfig nca;
  DScanConfig dscan;
};

/// The frozen feature map f: standardization + NCA ranking + Top-D selection.
struct PretrainedModel {
  Standardizer standardizer;
  NcaWeights nca_weights;
  std::vector<int> ranking;   // permutation of 0..dim-1
  int selected_d = 0;
  std::string catalog_version;
  double pretrain_wall_time_s = 0.0;
  DScanResult dscan;

  /// Standardize a raw feature row and keep the top selected_d coordinates.
  Eigen::VectorXd embed(const Eigen::VectorXd& raw) const;
  Eigen::MatrixXd embed(const Eigen::MatrixXd& raw) const;
};

/// fit_standardizer -> fit_nca -> rank_features -> d_scan, wall-clock timed.
PretrainedModel pretrain(const Eigen::MatrixXd& X_raw, const std::vector<int>& y,
                         const PretrainConfig& config,
                         const std::string& catalog_version = kCatalogVersion);

/// Direct-Prot variant of the frozen map: identity ranking, D = all features,
/// unit weights, no NCA or D-scan.
PretrainedModel pretrain_direct(const Eigen::MatrixXd& X_raw, const std::vector<int>& y,
                                const std::string& catalog_version = kCatalogVersion);

void save_model(const PretrainedModel& model, const std::string& path);
PretrainedModel load_model(const std::string& path);

/// D-scan curve rows "D, mean_acc, ci_lo, ci_hi".
void write_dscan_curve_csv(const DScanResult& result, const std::string& path);

}  // namespace afop
