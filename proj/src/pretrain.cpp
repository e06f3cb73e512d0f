#include "afop/pretrain.hpp"

#include "afop/eval.hpp"
#include "afop/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

namespace afop {

using nlohmann::json;

std::vector<int> default_d_grid() {
  std::vector<int> grid;
  for (int d = 1; d <= 20; ++d) grid.push_back(d);
  for (int d : {24, 28, 32, 40, 48, 64, 96, 128, 192, 386}) grid.push_back(d);
  return grid;
}

Eigen::VectorXd select_top_d(const Eigen::VectorXd& x, const std::vector<int>& ranking,
                             int d) {
  if (x.size() != static_cast<long>(ranking.size()))
    throw ShapeError("select_top_d: vector dim " + std::to_string(x.size()) +
                     " vs ranking size " + std::to_string(ranking.size()));
  if (d < 1 || d > static_cast<int>(ranking.size()))
    throw ShapeError("select_top_d: D = " + std::to_string(d) + " outside 1.." +
                     std::to_string(ranking.size()));
  Eigen::VectorXd out(d);
  for (int t = 0; t < d; ++t) out[t] = x[ranking[t]];
  return out;
}

Eigen::MatrixXd select_top_d(const Eigen::MatrixXd& X, const std::vector<int>& ranking,
                             int d) {
  if (X.cols() != static_cast<long>(ranking.size()))
    throw ShapeError("select_top_d: matrix dim " + std::to_string(X.cols()) +
                     " vs ranking size " + std::to_string(ranking.size()));
  if (d < 1 || d > static_cast<int>(ranking.size()))
    throw ShapeError("select_top_d: D = " + std::to_string(d) + " outside 1.." +
                     std::to_string(ranking.size()));
  Eigen::MatrixXd out(X.rows(), d);
  for (int t = 0; t < d; ++t) out.col(t) = X.col(ranking[t]);
  return out;
}

DScanResult d_scan(const Eigen::MatrixXd& X_std, const std::vector<int>& y,
                   const std::vector<int>& ranking, const DScanConfig& config) {
  if (X_std.rows() != static_cast<long>(y.size()))
    throw ShapeError("d_scan: rows vs labels mismatch");
  if (config.episodes_per_d < 2) throw ConfigError("d_scan: need >= 2 episodes per D");

  DScanResult result;
  for (int d : config.grid)
    if (d >= 1 && d <= static_cast<int>(ranking.size())) result.grid.push_back(d);
  if (result.grid.empty()) throw ConfigError("d_scan: empty candidate grid");
  result.episodes_per_d = config.episodes_per_d;

  const EpisodePool pool = make_episode_pool(X_std, y);
  EpisodeSpec spec;
  spec.n_way = config.n_way;
  spec.k_shot = config.k_shot;
  spec.q_query = config.q_query;

  const int n_d = static_cast<int>(result.grid.size());
  std::vector<std::vector<double>> acc(n_d);

  AdaptConfig no_adapt;
  no_adapt.steps = 0;
  for (int e = 0; e < config.episodes_per_d; ++e) {
    // one episode shared across the whole grid: paired comparisons
    Rng rng = derive_rng(config.seed, {0xD5CA, static_cast<std::uint64_t>(e)});
    const Episode full = sample_episode(pool, spec, rng);
    for (int di = 0; di < n_d; ++di) {
      Episode sub;
      sub.n_way = full.n_way;
      sub.k_shot = full.k_shot;
      sub.support = select_top_d(full.support, ranking, result.grid[di]);
      sub.query = select_top_d(full.query, ranking, result.grid[di]);
      sub.query_slots = full.query_slots;
      sub.class_map = full.class_map;
      const AdaptedHead head = adapt(sub, config.alpha, no_adapt);
      acc[di].push_back(classify_queries(sub, head).accuracy);
    }
  }

  result.mean_accuracy.resize(n_d);
  result.ci_halfwidth.resize(n_d);
  for (int di = 0; di < n_d; ++di) {
    const auto [mean, half] = confidence_interval(acc[di]);
    result.mean_accuracy[di] = mean;
    result.ci_halfwidth[di] = half;
  }
  int best = 0;
  for (int di = 1; di < n_d; ++di)
    if (result.mean_accuracy[di] > result.mean_accuracy[best]) best = di;
  result.selected_d = result.grid[best];
  return result;
}

Eigen::VectorXd PretrainedModel::embed(const Eigen::VectorXd& raw) const {
  return select_top_d(apply_standardizer(raw, standardizer, catalog_version), ranking,
                      selected_d);
}

Eigen::MatrixXd PretrainedModel::embed(const Eigen::MatrixXd& raw) const {
  return select_top_d(apply_standardizer(raw, standardizer, catalog_version), ranking,
                      selected_d);
}

PretrainedModel pretrain(const Eigen::MatrixXd& X_raw, const std::vector<int>& y,
                         const PretrainConfig& config, const std::string& catalog_version) {
  const auto t0 = std::chrono::steady_clock::now();
  PretrainedModel model;
  model.catalog_version = catalog_version;
  model.standardizer = fit_standardizer(X_raw, catalog_version);
  const Eigen::MatrixXd X_std = apply_standardizer(X_raw, model.standardizer, catalog_version);
  model.nca_weights = fit_nca(X_std, y, config.nca);
  model.ranking = rank_features(model.nca_weights);
  model.dscan = d_scan(X_std, y, model.ranking, config.dscan);
  model.selected_d = model.dscan.selected_d;
  model.pretrain_wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return model;
}

PretrainedModel pretrain_direct(const Eigen::MatrixXd& X_raw, const std::vector<int>& y,
                                const std::string& catalog_version) {
  if (X_raw.rows() != static_cast<long>(y.size()))
    throw ShapeError("pretrain_direct: rows vs labels mismatch");
  const auto t0 = std::chrono::steady_clock::now();
  PretrainedModel model;
  model.catalog_version = catalog_version;
  model.standardizer = fit_standardizer(X_raw, catalog_version);
  const int d = static_cast<int>(X_raw.cols());
  model.nca_weights.weights = Eigen::VectorXd::Ones(d);
  model.ranking.resize(d);
  std::iota(model.ranking.begin(), model.ranking.end(), 0);
  model.selected_d = d;
  model.dscan.selected_d = d;
  model.dscan.episodes_per_d = 0;
  model.pretrain_wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return model;
}

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (long i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vector_from_json(const json& a, const char* what) {
  if (!a.is_array()) throw SchemaError(std::string("model file: ") + what + " not an array");
  Eigen::VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) throw SchemaError(std::string("model file: ") + what +
                                             " holds a non-numeric entry");
    v[static_cast<long>(i)] = a[i].get<double>();
  }
  return v;
}

}  // namespace

void save_model(const PretrainedModel& model, const std::string& path) {
  json j;
  j["format"] = "afop-model";
  j["format_version"] = 1;
  j["catalog_version"] = model.catalog_version;
  j["standardizer"] = {{"means", vector_to_json(model.standardizer.means)},
                       {"stds", vector_to_json(model.standardizer.stds)},
                       {"constant_mask", model.standardizer.constant_mask},
                       {"catalog_version", model.standardizer.catalog_version}};
  j["nca"] = {{"weights", vector_to_json(model.nca_weights.weights)},
              {"objective_trace", model.nca_weights.objective_trace},
              {"lambda", model.nca_weights.config.lambda},
              {"learning_rate", model.nca_weights.config.learning_rate},
              {"max_iters", model.nca_weights.config.max_iters},
              {"batch_size", model.nca_weights.config.batch_size},
              {"seed", model.nca_weights.config.seed}};
  j["ranking"] = model.ranking;
  j["selected_d"] = model.selected_d;
  j["pretrain_wall_time_s"] = model.pretrain_wall_time_s;
  j["dscan"] = {{"grid", model.dscan.grid},
                {"mean_accuracy", vector_to_json(model.dscan.mean_accuracy)},
                {"ci_halfwidth", vector_to_json(model.dscan.ci_halfwidth)},
                {"selected_d", model.dscan.selected_d},
                {"episodes_per_d", model.dscan.episodes_per_d}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed for " + path);
}

PretrainedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SchemaError(path + ": invalid JSON: " + e.what());
  }
  try {
    if (j.value("format", "") != "afop-model")
      throw SchemaError(path + ": not a model file");
    if (j.at("format_version").get<int>() != 1)
      throw SchemaError(path + ": unsupported model format version");
    PretrainedModel m;
    m.catalog_version = j.at("catalog_version").get<std::string>();
    const json& s = j.at("standardizer");
    m.standardizer.means = vector_from_json(s.at("means"), "standardizer means");
    m.standardizer.stds = vector_from_json(s.at("stds"), "standardizer stds");
    m.standardizer.constant_mask = s.at("constant_mask").get<std::vector<bool>>();
    m.standardizer.catalog_version = s.at("catalog_version").get<std::string>();
    const json& nca = j.at("nca");
    m.nca_weights.weights = vector_from_json(nca.at("weights"), "nca weights");
    m.nca_weights.objective_trace = nca.at("objective_trace").get<std::vector<double>>();
    m.nca_weights.config.lambda = nca.at("lambda").get<double>();
    m.nca_weights.config.learning_rate = nca.at("learning_rate").get<double>();
    m.nca_weights.config.max_iters = nca.at("max_iters").get<int>();
    m.nca_weights.config.batch_size = nca.at("batch_size").get<int>();
    m.nca_weights.config.seed = nca.at("seed").get<std::uint64_t>();
    m.ranking = j.at("ranking").get<std::vector<int>>();
    m.selected_d = j.at("selected_d").get<int>();
    m.pretrain_wall_time_s = j.at("pretrain_wall_time_s").get<double>();
    const json& ds = j.at("dscan");
    m.dscan.grid = ds.at("grid").get<std::vector<int>>();
    m.dscan.mean_accuracy = vector_from_json(ds.at("mean_accuracy"), "dscan accuracy");
    m.dscan.ci_halfwidth = vector_from_json(ds.at("ci_halfwidth"), "dscan ci");
    m.dscan.selected_d = ds.at("selected_d").get<int>();
    m.dscan.episodes_per_d = ds.at("episodes_per_d").get<int>();

    const int dim = static_cast<int>(m.standardizer.means.size());
    if (m.standardizer.stds.size() != dim ||
        static_cast<int>(m.standardizer.constant_mask.size()) != dim)
      throw SchemaError(path + ": standardizer arrays disagree on dimension");
    if (static_cast<int>(m.ranking.size()) != dim)
      throw SchemaError(path + ": ranking length vs dimension mismatch");
    std::set<int> seen(m.ranking.begin(), m.ranking.end());
    if (static_cast<int>(seen.size()) != dim || *seen.begin() != 0 ||
        *seen.rbegin() != dim - 1)
      throw SchemaError(path + ": ranking is not a permutation of 0.." +
                        std::to_string(dim - 1));
    if (m.selected_d < 1 || m.selected_d > dim)
      throw SchemaError(path + ": selected_d out of range");
    return m;
  } catch (const json::exception& e) {
    throw SchemaError(path + ": missing or mistyped field: " + e.what());
  }
}

void write_dscan_curve_csv(const DScanResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "D,mean_acc,ci_lo,ci_hi\n";
  char buf[128];
  for (std::size_t i = 0; i < result.grid.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", result.grid[i],
                  result.mean_accuracy[static_cast<long>(i)],
                  result.mean_accuracy[static_cast<long>(i)] -
                      result.ci_halfwidth[static_cast<long>(i)],
                  result.mean_accuracy[static_cast<long>(i)] +
                      result.ci_halfwidth[static_cast<long>(i)]);
    out << buf;
  }
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace afop
