#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nlflow/grid.hpp"

namespace nlflow::io {

/// Raw P5 contents before normalization.
struct PgmImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::int64_t maxval = 0;
  std::vector<std::int64_t> samples;  // row-major, height x width
};

PgmImage parse_pgm(const std::string& bytes);
std::string encode_pgm(const PgmImage& image);

/// 2D field from a P5 file, samples divided by maxval.
GridField read_pgm(const std::filesystem::path& path);
/// Samples round(v * maxval); maxval 255 or 65535.
void write_pgm(const std::filesystem::path& path, const GridField& field, std::int64_t maxval = 65535);
/// Samples must be 0 or maxval.
SegmentationMask read_pgm_mask(const std::filesystem::path& path);
/// 8-bit, {0, 255}.
void write_pgm_mask(const std::filesystem::path& path, const SegmentationMask& mask);

/// "RVOL", u32 L, M, S (little-endian), then L*M*S little-endian float32, row-major.
/// A file with S = 1 reads back as a 2D field.
GridField parse_rvol(const std::string& bytes);
std::string encode_rvol(const GridField& field);
GridField read_rvol(const std::filesystem::path& path);
void write_rvol(const std::filesystem::path& path, const GridField& field);
/// Values must be exactly 0 or 1.
SegmentationMask read_rvol_mask(const std::filesystem::path& path);
void write_rvol_mask(const std::filesystem::path& path, const SegmentationMask& mask);

/// Dispatch on the extension: .pgm or .rvol.
GridField load_field(const std::filesystem::path& path);
SegmentationMask load_mask(const std::filesystem::path& path);
void save_field(const std::filesystem::path& path, const GridField& field);
void save_mask(const std::filesystem::path& path, const SegmentationMask& mask);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace nlflow::io
