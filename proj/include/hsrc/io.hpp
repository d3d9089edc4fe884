#pragma once

// File formats and dataset splitting.
//
// Field container ("flat-f32"), little-endian throughout:
//   bytes  0..3   magic "HSF1"
//   bytes  4..7   u32 planes (K for fields, bands for cubes)
//   bytes  8..11  u32 height
//   bytes 12..15  u32 width
//   then planes * height * width f32 values, plane-major: value (k, i) at
//   offset 16 + 4 (k n + i), with pixel i row-major.

#include "hsrc/core.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hsrc {

inline constexpr std::array<char, 4> kContainerMagic{'H', 'S', 'F', '1'};

enum class CubeFormat { envi_bsq, flat_f32, csv_matrix };
enum class LabelFormat { pgm, csv };

CubeFormat parse_cube_format(std::string_view name);
LabelFormat parse_label_format(std::string_view name);
std::string to_string(CubeFormat format);

// Format implied by a file extension (.hdr -> envi-bsq, .csv -> csv-matrix,
// anything else -> flat-f32; .csv -> csv labels, anything else -> pgm).
CubeFormat cube_format_for(const std::filesystem::path& path);
LabelFormat label_format_for(const std::filesystem::path& path);

struct Container {
  std::uint32_t planes = 0;
  ImageDims dims;
  std::vector<float> values;
};

void write_container(const std::filesystem::path& path, std::uint32_t planes, ImageDims dims,
                     std::span<const float> values);
Container read_container(const std::filesystem::path& path);

// envi-bsq: `path` is the .hdr file; the raw data sits next to it with the
// .hdr suffix removed (or replaced by .img/.raw/.dat/.bsq). Data types 4 (f32)
// and 2 (i16), either byte order, BSQ interleave only.
// csv-matrix: one row per pixel, one column per band; `dims` gives the image
// shape (default n x 1).
HyperCube load_cube(const std::filesystem::path& path, CubeFormat format,
                    std::optional<ImageDims> dims = std::nullopt);
void save_cube(const HyperCube& cube, const std::filesystem::path& path, CubeFormat format);

// pgm: binary P5 (8 or 16 bit) or ASCII P2 on load, P5 on save.
// csv: height rows of width integers.
LabelMap load_labels(const std::filesystem::path& path, LabelFormat format);
void save_labels(const LabelMap& labels, const std::filesystem::path& path, LabelFormat format);

void save_hidden_field(const HiddenField& field, const std::filesystem::path& path);
// Validated against the simplex with a tolerance that absorbs f32 rounding.
HiddenField load_hidden_field(const std::filesystem::path& path);

void save_labeling(const Labeling& labeling, const std::filesystem::path& path);
Labeling load_labeling(const std::filesystem::path& path, int classes);

// ---------------------------------------------------------------- splits

struct SplitSpec {
  int samples_per_class = 15;
  int validation_samples = 50;
  std::uint64_t seed = 0;
  // Draw validation_samples from every class instead of uniformly overall.
  bool per_class_validation = false;
};

struct Splits {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  std::vector<std::string> warnings;
};

struct DatasetBundle {
  HyperCube cube;
  LabelMap truth;
  Splits splits;
};

// Training pixels are drawn per class without replacement; validation
// pixels uniformly from the remaining labeled pixels; test is the rest.
// Each list is returned in ascending pixel order.
Splits make_splits(const LabelMap& truth, const SplitSpec& spec);

// CSV with header "set,pixel" and rows train/validation/test.
void save_splits(const Splits& splits, const std::filesystem::path& path);
Splits load_splits(const std::filesystem::path& path);

// ---------------------------------------------------------------- images

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

// Fixed palette: index 0 black (unlabeled), 1..K class colors, and
// kRejectedIndex white for rejected pixels in overlays.
inline constexpr std::uint8_t kRejectedIndex = 255;
std::vector<Rgb> label_palette();

void write_pgm(const std::filesystem::path& path, ImageDims dims,
               std::span<const std::uint8_t> gray);
void write_indexed_png(const std::filesystem::path& path, ImageDims dims,
                       std::span<const std::uint8_t> indices, std::span<const Rgb> palette);

struct IndexedImage {
  ImageDims dims;
  std::vector<std::uint8_t> indices;
  std::vector<Rgb> palette;
};
IndexedImage read_indexed_png(const std::filesystem::path& path);

}  // namespace hsrc
