#pragma once

#include <filesystem>
#include <string>

#include "relaxmap/image.hpp"
#include "relaxmap/phantom.hpp"
#include "relaxmap/sampling.hpp"
#include "relaxmap/types.hpp"

namespace relaxmap {

namespace fs = std::filesystem;

// k-space container: text header lines
//
//   RELAXMAP-KSPACE
//   version 1
//   rows <n>  cols <n>  echoes <n>  coils <n>   (one key per line)
//   times <t1> <t2> ...
//   scheme fixed|complementary
//   pattern <i> <file>                         (one per echo, relative path)
//   endianness little
//   payload float32
//   end
//
// followed by rows*cols*echoes*coils*2 little-endian float32 values,
// (re, im) interleaved, planes echo-major then coil, rows then cols. Patterns
// are written beside the container as <stem>.p<k>.pat, one per distinct mask.
inline constexpr int kKSpaceVersion = 1;
inline constexpr int kPatternVersion = 1;
inline constexpr int kImageVersion = 1;

void save_kspace(fs::path const &path, KSpaceData const &data);
auto load_kspace(fs::path const &path) -> KSpaceData;

// Coil maps use the same layout with magic RELAXMAP-COILS, echoes = 1 and no
// times or patterns.
void save_coils(fs::path const &path, CoilSet const &coils);
auto load_coils(fs::path const &path) -> CoilSet;

// Pattern file: header (magic, version, rows, cols, d_min, target_rate,
// calib_radius, seed) and a run-length line "runs <n> <r0> <r1> ...", runs
// alternating unsampled/sampled and starting with unsampled.
void save_pattern(fs::path const &path, SamplingPattern const &pattern);
auto load_pattern(fs::path const &path) -> SamplingPattern;

// Real maps as little-endian float64 after a short text header.
void save_real_image(fs::path const &path, RealImage const &img);
auto load_real_image(fs::path const &path) -> RealImage;

// 8-bit binary PGM, values mapped linearly from [lo, hi] to [0, 255] and
// clipped; non-finite pixels are written as 0.
void export_map_image(RealImage const &img, fs::path const &path, double lo, double hi);
auto map_image_bytes(RealImage const &img, double lo, double hi) -> std::string;

} // namespace relaxmap
