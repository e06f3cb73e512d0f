#include "afop/dataset_io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

static_assert(std::endian::native == std::endian::little,
              "TACT container assumes a little-endian host");

namespace afop {

FileFormat format_from_extension(const std::string& path) {
  const auto dot = path.rfind('.');
  if (dot != std::string::npos && path.substr(dot) == ".csv") return FileFormat::Csv;
  return FileFormat::Binary;
}

namespace {

constexpr char kMagic[4] = {'T', 'A', 'C', 'T'};
constexpr std::uint16_t kBinaryVersion = 1;
const char* kCsvHeader =
    "trial_id,shape_id,material,force_n,speed_mm_s,t_index,ch1,ch2,ch3,ch4";

std::string shortest_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& field, std::size_t line, const char* what) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = first + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw SchemaError("line " + std::to_string(line) + ": cannot parse " + what +
                      " from \"" + field + "\"");
  return v;
}

long parse_long(const std::string& field, std::size_t line, const char* what) {
  long v = 0;
  const char* first = field.data();
  const char* last = first + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw SchemaError("line " + std::to_string(line) + ": cannot parse " + what +
                      " from \"" + field + "\"");
  return v;
}

std::vector<std::string> split_fields(const std::string& row) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : row) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

struct TrialBuilder {
  long trial_id = -1;
  int shape_id = 0;
  Material material = Material::Resin;
  double force_n = 0.0, speed_mm_s = 0.0;
  std::vector<double> ch[4];

  TactileTrial finish(std::size_t line) const {
    TactileTrial t;
    t.shape_id = shape_id;
    t.material = material;
    t.force_n = force_n;
    t.speed_mm_s = speed_mm_s;
    t.trial_index = static_cast<int>(trial_id);
    for (int c = 0; c < 4; ++c)
      t.channels[c] = Eigen::Map<const Eigen::VectorXd>(ch[c].data(),
                                                        static_cast<long>(ch[c].size()));
    try {
      t.validate();
    } catch (const Error& e) {
      throw IntegrityError("trial ending at line " + std::to_string(line) + ": " +
                           e.what());
    }
    return t;
  }
};

TactileDataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string row;
  if (!std::getline(in, row)) throw SchemaError(path + ": empty file");
  if (!row.empty() && row.back() == '\r') row.pop_back();
  if (row != kCsvHeader)
    throw SchemaError(path + ": header mismatch; expected \"" + kCsvHeader + "\"");

  TactileDataset ds;
  TrialBuilder cur;
  std::size_t line = 1;
  auto flush = [&]() {
    if (cur.trial_id >= 0) ds.trials.push_back(cur.finish(line));
  };
  while (std::getline(in, row)) {
    ++line;
    if (row.empty() || row == "\r") continue;
    const std::vector<std::string> f = split_fields(row);
    if (f.size() != 10)
      throw SchemaError("line " + std::to_string(line) + ": expected 10 fields, got " +
                        std::to_string(f.size()));
    for (std::size_t i = 0; i < f.size(); ++i)
      if (f[i].empty())
        throw IntegrityError("line " + std::to_string(line) + ": empty cell in column " +
                             std::to_string(i + 1));
    const long trial_id = parse_long(f[0], line, "trial_id");
    const long shape_id = parse_long(f[1], line, "shape_id");
    const Material material = parse_material(f[2]);
    const double force_n = parse_double(f[3], line, "force_n");
    const double speed = parse_double(f[4], line, "speed_mm_s");
    const long t_index = parse_long(f[5], line, "t_index");

    if (trial_id != cur.trial_id) {
      flush();
      cur = TrialBuilder{};
      cur.trial_id = trial_id;
      cur.shape_id = static_cast<int>(shape_id);
      cur.material = material;
      cur.force_n = force_n;
      cur.speed_mm_s = speed;
    } else if (cur.shape_id != shape_id || cur.material != material ||
               cur.force_n != force_n || cur.speed_mm_s != speed) {
      throw IntegrityError("line " + std::to_string(line) + ": trial " +
                           std::to_string(trial_id) + " changes metadata mid-trial");
    }
    if (t_index != static_cast<long>(cur.ch[0].size()))
      throw IntegrityError("line " + std::to_string(line) + ": t_index " +
                           std::to_string(t_index) + " out of order (expected " +
                           std::to_string(cur.ch[0].size()) + ")");
    for (int c = 0; c < 4; ++c) cur.ch[c].push_back(parse_double(f[6 + c], line, "sample"));
  }
  flush();
  if (ds.trials.empty()) throw SchemaError(path + ": no data rows");
  ds.rebuild_class_index();
  ds.validate();
  return ds;
}

void write_csv(const TactileDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << kCsvHeader << "\n";
  for (const TactileTrial& t : ds.trials) {
    const std::string meta = std::to_string(t.trial_index) + "," +
                             std::to_string(t.shape_id) + "," + material_name(t.material) +
                             "," + shortest_double(t.force_n) + "," +
                             shortest_double(t.speed_mm_s) + ",";
    for (int i = 0; i < t.length(); ++i) {
      out << meta << i;
      for (int c = 0; c < 4; ++c) out << ',' << shortest_double(t.channels[c][i]);
      out << '\n';
    }
  }
  if (!out) throw IoError("write failed for " + path);
}

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw IoError(path + ": truncated file");
  return v;
}

void write_binary(const TactileDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(kMagic, 4);
  put(out, kBinaryVersion);
  put(out, std::uint16_t{0});
  put(out, ds.sample_rate_hz);
  put(out, static_cast<std::uint64_t>(ds.trials.size()));
  for (const TactileTrial& t : ds.trials) {
    put(out, static_cast<std::uint32_t>(t.shape_id));
    put(out, static_cast<std::uint32_t>(t.material));
    put(out, t.force_n);
    put(out, t.speed_mm_s);
    put(out, static_cast<std::uint64_t>(t.trial_index));
    put(out, static_cast<std::uint64_t>(t.length()));
  }
  for (const TactileTrial& t : ds.trials)
    for (int c = 0; c < 4; ++c)
      out.write(reinterpret_cast<const char*>(t.channels[c].data()),
                static_cast<std::streamsize>(sizeof(double)) * t.length());
  if (!out) throw IoError("write failed for " + path);
}

TactileDataset load_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw SchemaError(path + ": not a TACT container (bad magic)");
  const auto version = get<std::uint16_t>(in, path);
  if (version != kBinaryVersion)
    throw SchemaError(path + ": unsupported container version " + std::to_string(version));
  get<std::uint16_t>(in, path);  // reserved
  TactileDataset ds;
  ds.sample_rate_hz = get<double>(in, path);
  const auto count = get<std::uint64_t>(in, path);
  if (count == 0) throw SchemaError(path + ": empty container");
  if (count > (1ull << 32)) throw SchemaError(path + ": implausible trial count");
  ds.trials.resize(count);
  std::vector<std::uint64_t> lengths(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    TactileTrial& t = ds.trials[i];
    t.shape_id = static_cast<int>(get<std::uint32_t>(in, path));
    const auto mat = get<std::uint32_t>(in, path);
    if (mat >= static_cast<std::uint32_t>(kNumMaterials))
      throw LabelError(path + ": material id " + std::to_string(mat) + " out of range");
    t.material = static_cast<Material>(mat);
    t.force_n = get<double>(in, path);
    t.speed_mm_s = get<double>(in, path);
    t.trial_index = static_cast<int>(get<std::uint64_t>(in, path));
    lengths[i] = get<std::uint64_t>(in, path);
    if (lengths[i] > (1ull << 32))
      throw SchemaError(path + ": implausible channel length");
  }
  for (std::uint64_t i = 0; i < count; ++i) {
    TactileTrial& t = ds.trials[i];
    for (int c = 0; c < 4; ++c) {
      t.channels[c].resize(static_cast<long>(lengths[i]));
      in.read(reinterpret_cast<char*>(t.channels[c].data()),
              static_cast<std::streamsize>(sizeof(double) * lengths[i]));
      if (!in) throw IoError(path + ": truncated channel data");
    }
  }
  in.peek();
  if (!in.eof()) throw IntegrityError(path + ": trailing bytes after channel data");
  ds.rebuild_class_index();
  ds.validate();
  return ds;
}

}  // namespace

TactileDataset load_dataset(const std::string& path, FileFormat format) {
  return format == FileFormat::Csv ? load_csv(path) : load_binary(path);
}

void write_dataset(const TactileDataset& dataset, const std::string& path,
                   FileFormat format) {
  dataset.validate();
  if (format == FileFormat::Csv)
    write_csv(dataset, path);
  else
    write_binary(dataset, path);
}

}  // namespace afop
