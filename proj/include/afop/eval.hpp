#pragma once

#include "afop/head.hpp"
#include "afop/pretrain.hpp"
#include "afop/rng.hpp"
#include "afop/splits.hpp"
#include "afop/types.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace afop {

struct EpisodeSpec {
  int n_way = 5;
  int k_shot = 1;
  int q_query = 15;
  std::uint64_t seed = 0;
};

/// Embedded samples of one split partition, grouped for episode sampling.
struct EpisodePool {
  Eigen::MatrixXd embeddings;              // rows = samples (already Top-D)
  std::vector<int> class_ids;              // per row
  std::vector<std::vector<int>> by_class;  // class slot -> row indices
  std::vector<int> pool_classes;           // class id per slot
};

EpisodePool make_episode_pool(const Eigen::MatrixXd& embeddings,
                              const std::vector<int>& class_ids);

/// Uniform class draw without replacement, then k_shot + q_query rows per
/// class without replacement; support/query disjoint by construction.
/// Throws EpisodeError naming the deficient class when infeasible.
Episode sample_episode(const EpisodePool& pool, const EpisodeSpec& spec, Rng& rng);

/// Normal-approximation 95% CI: mean +- 1.96 * sd / sqrt(n), sample sd (n-1).
/// Throws StatsError on fewer than 2 values.
std::pair<double, double> confidence_interval(const std::vector<double>& values);

/// Fraction of the top-D ranked features with PVDF provenance in the catalog.
double pvdf_fraction(const std::vector<int>& ranking, int d);

struct EvalConfig {
  PretrainConfig pretrain;
  AdaptConfig adapt;
  double alpha = 10.0;
  int episodes = 500;
  bool direct_prot = false;  // skip NCA + D-scan, feed all features
};

struct EvalReport {
  std::string protocol_id;
  EpisodeSpec spec;
  int episodes_run = 0;
  double accuracy_mean = 0.0;
  double ci_halfwidth = 0.0;
  double pretrain_wall_s = 0.0;
  double adapt_ms_per_episode = 0.0;
  int selected_d = 0;
  double pvdf_frac = 0.0;
  std::vector<double> per_episode_accuracy;
};

/// One split already materialized: pretrain on train rows, run episodes on
/// test rows. The model is fit from the training partition only.
EvalReport run_split(const Eigen::MatrixXd& X_raw_train, const std::vector<int>& y_train,
                     const Eigen::MatrixXd& X_raw_test, const std::vector<int>& y_test,
                     const EpisodeSpec& spec, const EvalConfig& config,
                     const std::string& protocol_id);

struct ProtocolRun {
  std::vector<EvalReport> per_fold;
  std::vector<PretrainedModel> models;
  EvalReport summary;  // medians across folds (single fold: that fold)
};

/// make_split -> pretrain -> 500 episodes, per fold (CrossShape: 3 folds,
/// CrossMaterial: 3 holds, otherwise 1). A failed episode aborts the run.
ProtocolRun run_protocol(const TactileDataset& dataset, const ProtocolSpec& protocol,
                         const EpisodeSpec& spec, const EvalConfig& config);

/// Identical path with direct_prot = true (D = all 386, identity ranking).
ProtocolRun run_baseline_direct_prot(const TactileDataset& dataset,
                                     const ProtocolSpec& protocol,
                                     const EpisodeSpec& spec, EvalConfig config);

struct EmbeddingDiagnostics {
  double one_nn_shape_acc = 0.0;  // leave-one-out 1-NN with shape labels
  double mix_sil = 0.0;           // (1 - mean material silhouette) / 2, in [0,1]
  double dgi = 0.0;               // cross/same-material ratio among same-shape neighbors
  std::string space = "Top-D standardized features";
};

/// Euclidean metrics in the embedded space. Silhouette uses material labels
/// (degenerate clusters score 0); DGI counts materials among the k=10 nearest
/// same-shape neighbors with the same-material count floored at 1.
/// Throws StatsError when fewer than 2 materials / shapes or a shape has < 2
/// samples.
EmbeddingDiagnostics embedding_diagnostics(const Eigen::MatrixXd& embedded,
                                           const std::vector<int>& shape_labels,
                                           const std::vector<int>& material_labels);

struct AdaptiveDRow {
  std::string protocol_id;
  double median_d = 0.0;
  double pvdf_frac = 0.0;  // at the median fold's ranking
};

/// Fig-style per-protocol table: median selected D across folds and the PVDF
/// share of the corresponding top-D set.
std::vector<AdaptiveDRow> adaptive_d_report(
    const std::vector<std::pair<std::string, std::vector<PretrainedModel>>>& per_protocol);

// --- report files ---

void save_report_json(const EvalReport& report, const std::string& path);
EvalReport load_report_json(const std::string& path);

/// Table-shaped CSV: protocol,n_way,k_shot,acc_mean,ci,pretrain_s,adapt_ms,
/// selected_D,pvdf_fraction. Appends one row per report.
void write_report_table_csv(const std::vector<EvalReport>& reports, const std::string& path);

void write_adaptive_d_csv(const std::vector<AdaptiveDRow>& rows, const std::string& path);

void write_diagnostics_csv(const EmbeddingDiagnostics& diag, const std::string& path);

}  // namespace afop
