#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "afop/dataset_io.hpp"
#include "afop/rng.hpp"
#include "afop/splits.hpp"
#include "afop/synth.hpp"
#include "afop/types.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

using namespace afop;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("afop_ds_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

TactileDataset small_dataset(unsigned seed, int trials_per_class = 2) {
  SynthConfig config;
  config.trials_per_class = trials_per_class;
  config.window_s = 0.256;  // 256 samples keeps the suite quick
  config.seed = seed;
  return synth_dataset(config);
}

bool datasets_identical(const TactileDataset& a, const TactileDataset& b) {
  if (a.size() != b.size() || a.sample_rate_hz != b.sample_rate_hz) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const TactileTrial& x = a.trials[i];
    const TactileTrial& y = b.trials[i];
    if (x.shape_id != y.shape_id || x.material != y.material) return false;
    if (x.force_n != y.force_n || x.speed_mm_s != y.speed_mm_s) return false;
    if (x.trial_index != y.trial_index) return false;
    for (int ch = 0; ch < 4; ++ch) {
      if (x.channels[ch].size() != y.channels[ch].size()) return false;
      for (int t = 0; t < x.channels[ch].size(); ++t)
        if (x.channels[ch][t] != y.channels[ch][t]) return false;  // bit exact
    }
  }
  return true;
}

}  // namespace

TEST_CASE("binary and csv round trips are bit exact across seeds") {
  TempDir tmp;
  for (unsigned seed : {1u, 17u, 904u}) {
    const TactileDataset ds = small_dataset(seed);
    const std::string bin = tmp.file("rt_" + std::to_string(seed) + ".tact");
    const std::string csv = tmp.file("rt_" + std::to_string(seed) + ".csv");
    write_dataset(ds, bin);
    write_dataset(ds, csv);
    CHECK(datasets_identical(ds, load_dataset(bin)));
    CHECK(datasets_identical(ds, load_dataset(csv)));
  }
}

TEST_CASE("format is picked from the extension") {
  CHECK(format_from_extension("a/b/c.csv") == FileFormat::Csv);
  CHECK(format_from_extension("a/b/c.tact") == FileFormat::Binary);
  CHECK(format_from_extension("noext") == FileFormat::Binary);
}

TEST_CASE("loader rejects a truncated binary file") {
  TempDir tmp;
  const TactileDataset ds = small_dataset(3);
  const std::string path = tmp.file("trunc.tact");
  write_dataset(ds, path);
  const auto full_size = fs::file_size(path);
  fs::resize_file(path, full_size / 2);
  CHECK_THROWS_AS(load_dataset(path), IoError);
}

TEST_CASE("loader rejects trailing bytes after the channel data") {
  TempDir tmp;
  const TactileDataset ds = small_dataset(5);
  const std::string path = tmp.file("trail.tact");
  write_dataset(ds, path);
  {
    std::ofstream f(path, std::ios::app | std::ios::binary);
    f.write("x", 1);
  }
  CHECK_THROWS_AS(load_dataset(path), IntegrityError);
}

TEST_CASE("loader rejects a corrupted magic header") {
  TempDir tmp;
  const TactileDataset ds = small_dataset(4);
  const std::string path = tmp.file("magic.tact");
  write_dataset(ds, path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("JUNK", 4);
  }
  CHECK_THROWS_AS(load_dataset(path), SchemaError);
}

TEST_CASE("loader reports a missing file") {
  CHECK_THROWS_AS(load_dataset("/nonexistent/afop/nowhere.tact"), IoError);
}

TEST_CASE("csv loader rejects a bad header and bad labels") {
  TempDir tmp;
  const std::string path = tmp.file("bad.csv");
  {
    std::ofstream f(path);
    f << "trial_id,wrong,material,force_n,speed_mm_s,t_index,ch1,ch2,ch3,ch4\n";
  }
  CHECK_THROWS_AS(load_dataset(path), SchemaError);

  const std::string path2 = tmp.file("badlabel.csv");
  {
    std::ofstream f(path2);
    f << "trial_id,shape_id,material,force_n,speed_mm_s,t_index,ch1,ch2,ch3,ch4\n";
    f << "0,99,Resin,1.0,10.0,0,0.0,0.0,0.0,0.0\n";
  }
  // Label violations surface as integrity failures with the offending line.
  CHECK_THROWS_AS(load_dataset(path2), IntegrityError);
}

TEST_CASE("closed set split halves every class with the extra trial in train") {
  const TactileDataset ds = small_dataset(11, 5);  // odd per-class count
  ProtocolSpec spec;
  spec.protocol = Protocol::ClosedSet;
  const SplitSpec split = make_split(ds, spec, 42);

  std::map<int, int> train_count, test_count;
  std::set<std::size_t> seen;
  for (std::size_t id : split.train_trial_ids) {
    train_count[ds.trials[id].cls()]++;
    seen.insert(id);
  }
  for (std::size_t id : split.test_trial_ids) {
    test_count[ds.trials[id].cls()]++;
    CHECK(seen.count(id) == 0);  // disjoint
  }
  CHECK(split.train_trial_ids.size() + split.test_trial_ids.size() == ds.size());
  for (const auto& [cls, ids] : ds.class_index) {
    CHECK(train_count[cls] == 3);
    CHECK(test_count[cls] == 2);
  }
}

TEST_CASE("closed set split is deterministic in the seed and varies with it") {
  const TactileDataset ds = small_dataset(12, 4);
  ProtocolSpec spec;
  const SplitSpec a = make_split(ds, spec, 7);
  const SplitSpec b = make_split(ds, spec, 7);
  const SplitSpec c = make_split(ds, spec, 8);
  CHECK(a.train_trial_ids == b.train_trial_ids);
  CHECK(a.test_trial_ids == b.test_trial_ids);
  CHECK(a.train_trial_ids != c.train_trial_ids);
}

TEST_CASE("cross shape folds stride the shape list and cover it") {
  std::set<int> all;
  for (int fold = 0; fold < 3; ++fold) {
    const std::vector<int> shapes = cross_shape_test_shapes(fold);
    CHECK(shapes.size() == 4);
    for (int s : shapes) {
      CHECK(((s - 1) % 3) == fold);
      all.insert(s);
    }
  }
  CHECK(all.size() == 12);
  CHECK_THROWS_AS(cross_shape_test_shapes(3), ProtocolError);
  CHECK_THROWS_AS(cross_shape_test_shapes(-1), ProtocolError);
}

TEST_CASE("cross shape split keeps held-out shapes fully out of train") {
  const TactileDataset ds = small_dataset(13, 3);
  for (int fold = 0; fold < 3; ++fold) {
    ProtocolSpec spec;
    spec.protocol = Protocol::CrossShape;
    spec.fold = fold;
    const SplitSpec split = make_split(ds, spec, 5);
    const std::vector<int> test_shapes = cross_shape_test_shapes(fold);
    const std::set<int> held(test_shapes.begin(), test_shapes.end());
    for (std::size_t id : split.train_trial_ids)
      CHECK(held.count(ds.trials[id].shape_id) == 0);
    for (std::size_t id : split.test_trial_ids)
      CHECK(held.count(ds.trials[id].shape_id) == 1);
    // All trials of the held shapes land on the test side.
    std::size_t held_total = 0;
    for (const TactileTrial& t : ds.trials) held_total += held.count(t.shape_id);
    CHECK(split.test_trial_ids.size() == held_total);
  }
}

TEST_CASE("cross material split trains on one material only") {
  const TactileDataset ds = small_dataset(14, 3);
  for (Material m : {Material::Resin, Material::Wood, Material::Aluminum}) {
    ProtocolSpec spec;
    spec.protocol = Protocol::CrossMaterial;
    spec.held_in = m;
    const SplitSpec split = make_split(ds, spec, 5);
    for (std::size_t id : split.train_trial_ids)
      CHECK(ds.trials[id].material == m);
    for (std::size_t id : split.test_trial_ids)
      CHECK(ds.trials[id].material != m);
    CHECK(split.train_trial_ids.size() == ds.size() / 3);
    CHECK(split.test_trial_ids.size() == 2 * ds.size() / 3);
  }
}

TEST_CASE("force speed split tests only perturbed trials") {
  SynthConfig config;
  config.trials_per_class = 2;
  config.perturbed_trials_per_class = 2;
  config.perturbation_grid = default_perturbation_grid();
  config.window_s = 0.256;
  config.seed = 15;
  const TactileDataset ds = synth_dataset(config);
  ProtocolSpec spec;
  spec.protocol = Protocol::ForceSpeed;
  const SplitSpec split = make_split(ds, spec, 5);
  for (std::size_t id : split.train_trial_ids)
    CHECK(is_nominal_trial(ds.trials[id]));
  for (std::size_t id : split.test_trial_ids)
    CHECK_FALSE(is_nominal_trial(ds.trials[id]));
  CHECK(split.train_trial_ids.size() + split.test_trial_ids.size() == ds.size());
}

TEST_CASE("validate_split passes clean splits and names a leaked shape") {
  const TactileDataset ds = small_dataset(16, 3);
  ProtocolSpec spec;
  spec.protocol = Protocol::CrossShape;
  spec.fold = 1;
  SplitSpec split = make_split(ds, spec, 9);
  CHECK(validate_split(split, ds).all_passed());

  // Smuggle one held-out-shape trial into train.
  const std::size_t leaked = split.test_trial_ids.back();
  split.train_trial_ids.push_back(leaked);
  const SplitValidation v = validate_split(split, ds);
  CHECK_FALSE(v.all_passed());
  const std::string expect =
      "shape " + std::to_string(ds.trials[leaked].shape_id);
  bool named = false;
  for (const SplitCheck& c : v.checks)
    if (!c.passed && c.detail.find(expect) != std::string::npos) named = true;
  CHECK(named);
}

TEST_CASE("validate_split flags train test overlap") {
  const TactileDataset ds = small_dataset(17, 2);
  ProtocolSpec spec;
  SplitSpec split = make_split(ds, spec, 3);
  split.train_trial_ids.push_back(split.test_trial_ids.front());
  CHECK_FALSE(validate_split(split, ds).all_passed());
}

TEST_CASE("make_split refuses an impossible protocol") {
  // Single-material dataset cannot hold out two other materials.
  SynthConfig config;
  config.trials_per_class = 1;
  config.window_s = 0.256;
  config.seed = 18;
  TactileDataset ds = synth_dataset(config);
  ds.trials.erase(std::remove_if(ds.trials.begin(), ds.trials.end(),
                                 [](const TactileTrial& t) {
                                   return t.material != Material::Resin;
                                 }),
                  ds.trials.end());
  ds.rebuild_class_index();
  ProtocolSpec spec;
  spec.protocol = Protocol::CrossMaterial;
  spec.held_in = Material::Resin;
  CHECK_THROWS_AS(make_split(ds, spec, 1), ProtocolError);
}
