#pragma once

#include "afop/types.hpp"

#include <string>

namespace afop {

enum class FileFormat { Csv, Binary };

/// ".csv" -> Csv, anything else -> Binary.
FileFormat format_from_extension(const std::string& path);

/// CSV: one row per sample, header
///   trial_id, shape_id, material, force_n, speed_mm_s, t_index, ch1, ch2, ch3, ch4
/// Binary: little-endian "TACT" container (layout documented in README).
/// Throws SchemaError / IntegrityError / LabelError / IoError.
TactileDataset load_dataset(const std::string& path, FileFormat format);
inline TactileDataset load_dataset(const std::string& path) {
  return load_dataset(path, format_from_extension(path));
}

/// Round-trips bit-exactly through either format.
void write_dataset(const TactileDataset& dataset, const std::string& path,
                   FileFormat format);
inline void write_dataset(const TactileDataset& dataset, const std::string& path) {
  write_dataset(dataset, path, format_from_extension(path));
}

}  // namespace afop
