#include "afop/eval.hpp"

#include "afop/dataset_io.hpp"
#include "afop/features.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>

namespace afop {

using nlohmann::json;

EpisodePool make_episode_pool(const Eigen::MatrixXd& embeddings,
                              const std::vector<int>& class_ids) {
  if (embeddings.rows() != static_cast<long>(class_ids.size()))
    throw ShapeError("make_episode_pool: rows vs labels mismatch");
  EpisodePool pool;
  pool.embeddings = embeddings;
  pool.class_ids = class_ids;
  std::map<int, int> slot_of;
  for (std::size_t i = 0; i < class_ids.size(); ++i) {
    auto [it, inserted] = slot_of.try_emplace(class_ids[i], -1);
    if (inserted) {
      it->second = static_cast<int>(pool.pool_classes.size());
      pool.pool_classes.push_back(class_ids[i]);
      pool.by_class.emplace_back();
    }
    pool.by_class[it->second].push_back(static_cast<int>(i));
  }
  return pool;
}

Episode sample_episode(const EpisodePool& pool, const EpisodeSpec& spec, Rng& rng) {
  const int n_slots = static_cast<int>(pool.pool_classes.size());
  if (spec.n_way < 2 || spec.k_shot < 1 || spec.q_query < 1)
    throw ConfigError("episode spec needs n_way >= 2, k_shot >= 1, q_query >= 1");
  if (n_slots < spec.n_way)
    throw EpisodeError("pool has " + std::to_string(n_slots) + " classes, need " +
                       std::to_string(spec.n_way));

  // partial Fisher-Yates: uniform class subset without replacement
  std::vector<int> slots(n_slots);
  std::iota(slots.begin(), slots.end(), 0);
  for (int t = 0; t < spec.n_way; ++t) {
    std::uniform_int_distribution<int> pick(t, n_slots - 1);
    std::swap(slots[t], slots[pick(rng)]);
  }
  slots.resize(spec.n_way);

  const int per_class = spec.k_shot + spec.q_query;
  Episode ep;
  ep.n_way = spec.n_way;
  ep.k_shot = spec.k_shot;
  ep.support.resize(static_cast<long>(spec.n_way) * spec.k_shot, pool.embeddings.cols());
  ep.query.resize(static_cast<long>(spec.n_way) * spec.q_query, pool.embeddings.cols());
  ep.query_slots.resize(ep.query.rows());

  for (int s = 0; s < spec.n_way; ++s) {
    const int cls = pool.pool_classes[slots[s]];
    std::vector<int> rows = pool.by_class[slots[s]];
    if (static_cast<int>(rows.size()) < per_class)
      throw EpisodeError("class " + std::to_string(cls) + " has " +
                         std::to_string(rows.size()) + " samples, need " +
                         std::to_string(per_class));
    for (int t = 0; t < per_class; ++t) {
      std::uniform_int_distribution<int> pick(t, static_cast<int>(rows.size()) - 1);
      std::swap(rows[t], rows[pick(rng)]);
    }
    for (int k = 0; k < spec.k_shot; ++k)
      ep.support.row(static_cast<long>(s) * spec.k_shot + k) = pool.embeddings.row(rows[k]);
    for (int q = 0; q < spec.q_query; ++q) {
      const long qr = static_cast<long>(s) * spec.q_query + q;
      ep.query.row(qr) = pool.embeddings.row(rows[spec.k_shot + q]);
      ep.query_slots[qr] = s;
    }
    ep.class_map.emplace_back(shape_of_class(cls), material_of_class(cls));
  }
  return ep;
}

std::pair<double, double> confidence_interval(const std::vector<double>& values) {
  const int n = static_cast<int>(values.size());
  if (n < 2) throw StatsError("confidence_interval: need at least 2 values");
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  // Two-pass variance with the compensation term, so constant inputs yield an
  // exact zero spread despite accumulation error in the mean.
  double ss = 0.0, comp = 0.0;
  for (double v : values) {
    ss += (v - mean) * (v - mean);
    comp += v - mean;
  }
  const double sd = std::sqrt(std::max(0.0, ss - comp * comp / n) / (n - 1));
  return {mean, 1.96 * sd / std::sqrt(static_cast<double>(n))};
}

double pvdf_fraction(const std::vector<int>& ranking, int d) {
  const FeatureCatalog& cat = feature_catalog();
  if (ranking.size() != cat.entries.size())
    throw ShapeError("pvdf_fraction: ranking does not index the feature catalog");
  if (d < 1 || d > static_cast<int>(ranking.size()))
    throw ShapeError("pvdf_fraction: D out of range");
  int pvdf = 0;
  for (int t = 0; t < d; ++t)
    if (cat.entries[ranking[t]].sensor == SensorKind::PVDF) ++pvdf;
  return static_cast<double>(pvdf) / d;
}

namespace {

std::pair<EvalReport, PretrainedModel> run_split_impl(
    const Eigen::MatrixXd& X_raw_train, const std::vector<int>& y_train,
    const Eigen::MatrixXd& X_raw_test, const std::vector<int>& y_test,
    const EpisodeSpec& spec, const EvalConfig& config, const std::string& protocol_id,
    std::uint64_t fold_stream) {
  PretrainedModel model = config.direct_prot
                              ? pretrain_direct(X_raw_train, y_train)
                              : pretrain(X_raw_train, y_train, config.pretrain);
  const EpisodePool pool = make_episode_pool(model.embed(X_raw_test), y_test);

  EvalReport report;
  report.protocol_id = protocol_id;
  report.spec = spec;
  report.pretrain_wall_s = model.pretrain_wall_time_s;
  report.selected_d = model.selected_d;
  report.pvdf_frac = static_cast<int>(model.ranking.size()) == kNumFeatures
                         ? pvdf_fraction(model.ranking, model.selected_d)
                         : 0.0;

  double total_ms = 0.0;
  for (int e = 0; e < config.episodes; ++e) {
    Rng rng = derive_rng(spec.seed, {0xE9, fold_stream, static_cast<std::uint64_t>(e)});
    const Episode episode = sample_episode(pool, spec, rng);
    const auto t0 = std::chrono::steady_clock::now();
    const AdaptedHead head = adapt(episode, config.alpha, config.adapt);
    const QueryResult result = classify_queries(episode, head);
    total_ms +=
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    report.per_episode_accuracy.push_back(result.accuracy);
  }
  report.episodes_run = config.episodes;
  report.adapt_ms_per_episode = total_ms / std::max(1, config.episodes);
  const auto [mean, half] = confidence_interval(report.per_episode_accuracy);
  report.accuracy_mean = mean;
  report.ci_halfwidth = half;
  return {std::move(report), std::move(model)};
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ProtocolRun run_protocol_impl(const TactileDataset& dataset, const ProtocolSpec& protocol,
                              const EpisodeSpec& spec, const EvalConfig& config) {
  std::vector<ProtocolSpec> folds;
  if (protocol.protocol == Protocol::CrossShape) {
    for (int f = 0; f < 3; ++f) {
      ProtocolSpec p = protocol;
      p.fold = f;
      folds.push_back(p);
    }
  } else if (protocol.protocol == Protocol::CrossMaterial) {
    for (int m = 0; m < kNumMaterials; ++m) {
      ProtocolSpec p = protocol;
      p.held_in = static_cast<Material>(m);
      folds.push_back(p);
    }
  } else {
    folds.push_back(protocol);
  }

  ProtocolRun run;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const SplitSpec split = make_split(dataset, folds[f], spec.seed);
    const Eigen::MatrixXd X_train = extract_feature_matrix(dataset, split.train_trial_ids);
    const Eigen::MatrixXd X_test = extract_feature_matrix(dataset, split.test_trial_ids);
    std::vector<int> y_train, y_test;
    for (std::size_t id : split.train_trial_ids)
      y_train.push_back(dataset.trials[id].cls());
    for (std::size_t id : split.test_trial_ids) y_test.push_back(dataset.trials[id].cls());
    std::string id = protocol_name(folds[f].protocol);
    if (folds[f].protocol == Protocol::CrossShape)
      id += "/fold" + std::to_string(folds[f].fold);
    else if (folds[f].protocol == Protocol::CrossMaterial)
      id += std::string("/") + material_name(folds[f].held_in);
    auto [report, model] =
        run_split_impl(X_train, y_train, X_test, y_test, spec, config, id, f);
    run.per_fold.push_back(std::move(report));
    run.models.push_back(std::move(model));
  }

  if (run.per_fold.size() == 1) {
    run.summary = run.per_fold.front();
    run.summary.protocol_id = protocol_name(protocol.protocol);
  } else {
    EvalReport& s = run.summary;
    s.protocol_id = protocol_name(protocol.protocol);
    s.spec = spec;
    s.episodes_run = config.episodes * static_cast<int>(run.per_fold.size());
    auto med = [&](auto field) {
      std::vector<double> v;
      for (const EvalReport& r : run.per_fold) v.push_back(field(r));
      return median_of(v);
    };
    s.accuracy_mean = med([](const EvalReport& r) { return r.accuracy_mean; });
    s.ci_halfwidth = med([](const EvalReport& r) { return r.ci_halfwidth; });
    s.pretrain_wall_s = med([](const EvalReport& r) { return r.pretrain_wall_s; });
    s.adapt_ms_per_episode =
        med([](const EvalReport& r) { return r.adapt_ms_per_episode; });
    s.selected_d = static_cast<int>(
        med([](const EvalReport& r) { return static_cast<double>(r.selected_d); }));
    s.pvdf_frac = med([](const EvalReport& r) { return r.pvdf_frac; });
  }
  return run;
}

}  // namespace

EvalReport run_split(const Eigen::MatrixXd& X_raw_train, const std::vector<int>& y_train,
                     const Eigen::MatrixXd& X_raw_test, const std::vector<int>& y_test,
                     const EpisodeSpec& spec, const EvalConfig& config,
                     const std::string& protocol_id) {
  return run_split_impl(X_raw_train, y_train, X_raw_test, y_test, spec, config,
                        protocol_id, 0)
      .first;
}

ProtocolRun run_protocol(const TactileDataset& dataset, const ProtocolSpec& protocol,
                         const EpisodeSpec& spec, const EvalConfig& config) {
  return run_protocol_impl(dataset, protocol, spec, config);
}

ProtocolRun run_baseline_direct_prot(const TactileDataset& dataset,
                                     const ProtocolSpec& protocol,
                                     const EpisodeSpec& spec, EvalConfig config) {
  config.direct_prot = true;
  config.adapt.steps = 0;  // prototypes as-is, no per-episode fitting
  return run_protocol_impl(dataset, protocol, spec, config);
}

EmbeddingDiagnostics embedding_diagnostics(const Eigen::MatrixXd& embedded,
                                           const std::vector<int>& shape_labels,
                                           const std::vector<int>& material_labels) {
  const int n = static_cast<int>(embedded.rows());
  if (n != static_cast<int>(shape_labels.size()) ||
      n != static_cast<int>(material_labels.size()))
    throw ShapeError("embedding_diagnostics: rows vs labels mismatch");
  if (std::set<int>(shape_labels.begin(), shape_labels.end()).size() < 2)
    throw StatsError("embedding_diagnostics: need at least 2 shapes");
  if (std::set<int>(material_labels.begin(), material_labels.end()).size() < 2)
    throw StatsError("embedding_diagnostics: need at least 2 materials");
  std::map<int, int> shape_count;
  for (int s : shape_labels) ++shape_count[s];
  for (const auto& [shape, count] : shape_count)
    if (count < 2)
      throw StatsError("embedding_diagnostics: shape " + std::to_string(shape) +
                       " has a single sample");

  Eigen::MatrixXd dist(n, n);
  for (int i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      const double d = (embedded.row(i) - embedded.row(j)).norm();
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }

  EmbeddingDiagnostics diag;

  int nn_correct = 0;
  for (int i = 0; i < n; ++i) {
    int best = -1;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      if (best < 0 || dist(i, j) < dist(i, best)) best = j;
    }
    if (shape_labels[best] == shape_labels[i]) ++nn_correct;
  }
  diag.one_nn_shape_acc = static_cast<double>(nn_correct) / n;

  std::map<int, int> material_count;
  for (int m : material_labels) ++material_count[m];
  double sil_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    if (material_count[material_labels[i]] < 2) continue;  // degenerate: scores 0
    std::map<int, std::pair<double, int>> acc;  // material -> (dist sum, count)
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      auto& slot = acc[material_labels[j]];
      slot.first += dist(i, j);
      slot.second += 1;
    }
    const auto own = acc.find(material_labels[i]);
    const double a = own->second.first / own->second.second;
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [m, slot] : acc)
      if (m != material_labels[i]) b = std::min(b, slot.first / slot.second);
    const double denom = std::max(a, b);
    sil_sum += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  const double mean_sil = sil_sum / n;
  diag.mix_sil = std::clamp((1.0 - mean_sil) / 2.0, 0.0, 1.0);

  double dgi_sum = 0.0;
  std::vector<int> order;
  for (int i = 0; i < n; ++i) {
    order.clear();
    for (int j = 0; j < n; ++j)
      if (j != i && shape_labels[j] == shape_labels[i]) order.push_back(j);
    const int k = std::min<int>(10, static_cast<int>(order.size()));
    std::partial_sort(order.begin(), order.begin() + k, order.end(),
                      [&](int a, int b) {
                        if (dist(i, a) != dist(i, b)) return dist(i, a) < dist(i, b);
                        return a < b;
                      });
    int same = 0, cross = 0;
    for (int t = 0; t < k; ++t)
      (material_labels[order[t]] == material_labels[i] ? same : cross) += 1;
    dgi_sum += static_cast<double>(cross) / std::max(same, 1);
  }
  diag.dgi = dgi_sum / n;
  return diag;
}

std::vector<AdaptiveDRow> adaptive_d_report(
    const std::vector<std::pair<std::string, std::vector<PretrainedModel>>>& per_protocol) {
  std::vector<AdaptiveDRow> rows;
  for (const auto& [id, models] : per_protocol) {
    if (models.empty()) throw StatsError("adaptive_d_report: no models for " + id);
    AdaptiveDRow row;
    row.protocol_id = id;
    std::vector<double> ds;
    for (const PretrainedModel& m : models) ds.push_back(m.selected_d);
    row.median_d = median_of(ds);
    // report the PVDF share at the fold realizing the (lower) median D
    std::vector<std::size_t> order(models.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (models[a].selected_d != models[b].selected_d)
        return models[a].selected_d < models[b].selected_d;
      return a < b;
    });
    const PretrainedModel& mid = models[order[(order.size() - 1) / 2]];
    row.pvdf_frac = static_cast<int>(mid.ranking.size()) == kNumFeatures
                        ? pvdf_fraction(mid.ranking, mid.selected_d)
                        : 0.0;
    rows.push_back(std::move(row));
  }
  return rows;
}

void save_report_json(const EvalReport& report, const std::string& path) {
  json j;
  j["format"] = "afop-report";
  j["format_version"] = 1;
  j["protocol_id"] = report.protocol_id;
  j["n_way"] = report.spec.n_way;
  j["k_shot"] = report.spec.k_shot;
  j["q_query"] = report.spec.q_query;
  j["seed"] = report.spec.seed;
  j["episodes_run"] = report.episodes_run;
  j["accuracy_mean"] = report.accuracy_mean;
  j["ci_halfwidth"] = report.ci_halfwidth;
  j["pretrain_wall_s"] = report.pretrain_wall_s;
  j["adapt_ms_per_episode"] = report.adapt_ms_per_episode;
  j["selected_d"] = report.selected_d;
  j["pvdf_fraction"] = report.pvdf_frac;
  j["per_episode_accuracy"] = report.per_episode_accuracy;
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed for " + path);
}

EvalReport load_report_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SchemaError(path + ": invalid JSON: " + e.what());
  }
  try {
    if (j.value("format", "") != "afop-report")
      throw SchemaError(path + ": not a report file");
    EvalReport r;
    r.protocol_id = j.at("protocol_id").get<std::string>();
    r.spec.n_way = j.at("n_way").get<int>();
    r.spec.k_shot = j.at("k_shot").get<int>();
    r.spec.q_query = j.at("q_query").get<int>();
    r.spec.seed = j.at("seed").get<std::uint64_t>();
    r.episodes_run = j.at("episodes_run").get<int>();
    r.accuracy_mean = j.at("accuracy_mean").get<double>();
    r.ci_halfwidth = j.at("ci_halfwidth").get<double>();
    r.pretrain_wall_s = j.at("pretrain_wall_s").get<double>();
    r.adapt_ms_per_episode = j.at("adapt_ms_per_episode").get<double>();
    r.selected_d = j.at("selected_d").get<int>();
    r.pvdf_frac = j.at("pvdf_fraction").get<double>();
    r.per_episode_accuracy = j.at("per_episode_accuracy").get<std::vector<double>>();
    return r;
  } catch (const json::exception& e) {
    throw SchemaError(path + ": missing or mistyped field: " + e.what());
  }
}

void write_report_table_csv(const std::vector<EvalReport>& reports,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "protocol,n_way,k_shot,acc_mean,ci,pretrain_s,adapt_ms,selected_D,pvdf_fraction\n";
  char buf[256];
  for (const EvalReport& r : reports) {
    std::snprintf(buf, sizeof buf, "%s,%d,%d,%.6f,%.6f,%.3f,%.3f,%d,%.4f\n",
                  r.protocol_id.c_str(), r.spec.n_way, r.spec.k_shot, r.accuracy_mean,
                  r.ci_halfwidth, r.pretrain_wall_s, r.adapt_ms_per_episode, r.selected_d,
                  r.pvdf_frac);
    out << buf;
  }
  if (!out) throw IoError("write failed for " + path);
}

void write_adaptive_d_csv(const std::vector<AdaptiveDRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "protocol,median_D,pvdf_fraction\n";
  char buf[128];
  for (const AdaptiveDRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.1f,%.4f\n", r.protocol_id.c_str(), r.median_d,
                  r.pvdf_frac);
    out << buf;
  }
  if (!out) throw IoError("write failed for " + path);
}

void write_diagnostics_csv(const EmbeddingDiagnostics& diag, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "metric,value\n";
  char buf[96];
  std::snprintf(buf, sizeof buf, "one_nn_shape_acc,%.6f\n", diag.one_nn_shape_acc);
  out << buf;
  std::snprintf(buf, sizeof buf, "mix_sil,%.6f\n", diag.mix_sil);
  out << buf;
  std::snprintf(buf, sizeof buf, "dgi,%.6f\n", diag.dgi);
  out << buf;
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace afop
