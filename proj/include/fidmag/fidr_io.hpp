#pragma once

#include <filesystem>

#include "fidmag/signalsim.hpp"

namespace fidmag {

/// Binary record: "FIDR", u32 version (1), f64 fs, u32 bit_depth, f64 volts
/// per code, u64 sample count, 3 x u64 segment offsets, then little-endian
/// int16 codes (int32 when bit_depth > 16). Metadata goes to `<path>.json`.
/// Float-mode records (bit_depth 0) cannot be written.
void write_fidr(const std::filesystem::path& path, const PolarimeterRecord& rec);

/// Reads the binary file and, when present, the JSON sidecar.
PolarimeterRecord read_fidr(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& path);

/// Two columns, t (s) and V, t = 0 at the first sample of the record.
void write_record_csv(const std::filesystem::path& path, const PolarimeterRecord& rec);

}  // namespace fidmag
