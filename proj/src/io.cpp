#include "hsrc/io.hpp"

#include "hsrc/csv.hpp"
#include "hsrc/error.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace hsrc {

namespace fs = std::filesystem;

namespace {

std::vector<char> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("cannot read " + path.string());
  return bytes;
}

std::ofstream open_out(const fs::path& path, bool binary = true) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::uint32_t get_u32_le(const char* p) {
  std::uint32_t v = 0;
  for (int b = 3; b >= 0; --b) v = (v << 8) | static_cast<unsigned char>(p[b]);
  return v;
}

void put_u32_le(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

float get_f32(const char* p, bool big_endian) {
  std::uint32_t bits = 0;
  if (big_endian) {
    for (int b = 0; b < 4; ++b) bits = (bits << 8) | static_cast<unsigned char>(p[b]);
  } else {
    bits = get_u32_le(p);
  }
  return std::bit_cast<float>(bits);
}

std::int16_t get_i16(const char* p, bool big_endian) {
  const auto lo = static_cast<unsigned char>(p[big_endian ? 1 : 0]);
  const auto hi = static_cast<unsigned char>(p[big_endian ? 0 : 1]);
  return static_cast<std::int16_t>(static_cast<std::uint16_t>(hi << 8 | lo));
}

void append_f32_le(std::string& out, float v) { put_u32_le(out, std::bit_cast<std::uint32_t>(v)); }

void check_finite(std::span<const float> values, const fs::path& path) {
  for (float v : values) {
    if (!std::isfinite(v)) throw FormatError(path.string() + ": non-finite values");
  }
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

// ------------------------------------------------------------------ ENVI

std::map<std::string, std::string> parse_envi_header(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string first;
  std::getline(in, first);
  if (trim(first) != "ENVI") throw FormatError(path.string() + ": missing ENVI signature");
  std::map<std::string, std::string> keys;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = lower(trim(line.substr(0, eq)));
    std::string value = trim(line.substr(eq + 1));
    if (!value.empty() && value.front() == '{') {
      while (value.find('}') == std::string::npos && std::getline(in, line)) value += " " + line;
    }
    keys[key] = value;
  }
  return keys;
}

long envi_int(const std::map<std::string, std::string>& keys, const std::string& key,
              const fs::path& path, std::optional<long> fallback = std::nullopt) {
  const auto it = keys.find(key);
  if (it == keys.end()) {
    if (fallback) return *fallback;
    throw FormatError(path.string() + ": header lacks '" + key + "'");
  }
  return static_cast<long>(parse_integer(it->second));
}

fs::path envi_data_path(const fs::path& header) {
  fs::path stem = header;
  stem.replace_extension();
  if (fs::exists(stem) && !fs::is_directory(stem)) return stem;
  for (const char* ext : {".img", ".raw", ".dat", ".bsq"}) {
    fs::path candidate = stem;
    candidate += ext;
    if (fs::exists(candidate)) return candidate;
  }
  throw IoError("no data file found next to " + header.string());
}

HyperCube load_envi(const fs::path& path) {
  const auto keys = parse_envi_header(path);
  const long samples = envi_int(keys, "samples", path);
  const long lines = envi_int(keys, "lines", path);
  const long bands = envi_int(keys, "bands", path);
  const long type = envi_int(keys, "data type", path);
  const long offset = envi_int(keys, "header offset", path, 0);
  const long order = envi_int(keys, "byte order", path, 0);
  const auto interleave = keys.find("interleave");
  if (interleave == keys.end()) throw FormatError(path.string() + ": header lacks 'interleave'");
  if (lower(interleave->second) != "bsq") {
    throw FormatError(path.string() + ": only BSQ interleave is supported");
  }
  if (samples < 1 || lines < 1 || bands < 1) throw FormatError(path.string() + ": bad dimensions");
  if (type != 4 && type != 2) {
    throw FormatError(path.string() + ": unsupported data type " + std::to_string(type));
  }
  const std::size_t width = type == 4 ? 4 : 2;
  const fs::path data_path = envi_data_path(path);
  const std::vector<char> bytes = read_file(data_path);
  const ImageDims dims{static_cast<int>(lines), static_cast<int>(samples)};
  const std::size_t count = dims.pixels() * static_cast<std::size_t>(bands);
  if (bytes.size() != static_cast<std::size_t>(offset) + count * width) {
    throw FormatError(data_path.string() + ": dimension mismatch, header declares " +
                      std::to_string(lines) + "x" + std::to_string(samples) + "x" +
                      std::to_string(bands) + " but file holds " + std::to_string(bytes.size()) +
                      " bytes");
  }
  std::vector<float> values(count);
  const char* p = bytes.data() + offset;
  const bool big = order == 1;
  for (std::size_t j = 0; j < count; ++j) {
    values[j] = type == 4 ? get_f32(p + 4 * j, big) : static_cast<float>(get_i16(p + 2 * j, big));
  }
  check_finite(values, data_path);
  return HyperCube(dims, static_cast<int>(bands), std::move(values));
}

void save_envi(const HyperCube& cube, const fs::path& path) {
  {
    std::ofstream hdr = open_out(path, false);
    hdr << "ENVI\n"
        << "samples = " << cube.width() << "\n"
        << "lines = " << cube.height() << "\n"
        << "bands = " << cube.bands() << "\n"
        << "header offset = 0\n"
        << "data type = 4\n"
        << "interleave = bsq\n"
        << "byte order = 0\n";
    finish(hdr, path);
  }
  fs::path data_path = path;
  data_path.replace_extension();
  if (data_path == path) data_path += ".img";
  std::string bytes;
  bytes.reserve(cube.data().size() * 4);
  for (float v : cube.data()) append_f32_le(bytes, v);
  std::ofstream out = open_out(data_path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  finish(out, data_path);
}

// ------------------------------------------------------------------ PGM

struct PgmImage {
  ImageDims dims;
  std::vector<int> values;
};

PgmImage read_pgm(const fs::path& path) {
  const std::vector<char> bytes = read_file(path);
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto token = [&] {
    skip_space();
    std::string t;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
      t.push_back(bytes[pos++]);
    }
    if (t.empty()) throw FormatError(path.string() + ": truncated PGM header");
    return t;
  };
  const std::string magic = token();
  if (magic != "P5" && magic != "P2") throw FormatError(path.string() + ": not a PGM file");
  const long width = parse_integer(token());
  const long height = parse_integer(token());
  const long maxval = parse_integer(token());
  if (width < 1 || height < 1 || maxval < 1 || maxval > 65535) {
    throw FormatError(path.string() + ": bad PGM header");
  }
  PgmImage img{{static_cast<int>(height), static_cast<int>(width)}, {}};
  const std::size_t n = img.dims.pixels();
  img.values.resize(n);
  if (magic == "P2") {
    for (std::size_t i = 0; i < n; ++i) img.values[i] = static_cast<int>(parse_integer(token()));
    return img;
  }
  ++pos;  // single whitespace byte after maxval
  const std::size_t bpp = maxval > 255 ? 2 : 1;
  if (bytes.size() < pos + n * bpp) throw FormatError(path.string() + ": truncated PGM data");
  for (std::size_t i = 0; i < n; ++i) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos + i * bpp);
    img.values[i] = bpp == 2 ? (p[0] << 8 | p[1]) : p[0];
  }
  return img;
}

void write_pgm_values(const fs::path& path, ImageDims dims, std::span<const int> values) {
  const int maxval = std::max(1, *std::max_element(values.begin(), values.end()));
  if (maxval > 65535) throw InvalidArgument("label too large for PGM");
  const bool wide = maxval > 255;
  std::ostringstream header;
  header << "P5\n" << dims.width << " " << dims.height << "\n" << (wide ? 65535 : 255) << "\n";
  std::string bytes = header.str();
  for (int v : values) {
    if (wide) bytes.push_back(static_cast<char>((v >> 8) & 0xff));
    bytes.push_back(static_cast<char>(v & 0xff));
  }
  std::ofstream out = open_out(path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  finish(out, path);
}

}  // namespace

// ------------------------------------------------------------------ formats

CubeFormat parse_cube_format(std::string_view name) {
  if (name == "envi-bsq" || name == "envi") return CubeFormat::envi_bsq;
  if (name == "flat-f32") return CubeFormat::flat_f32;
  if (name == "csv-matrix" || name == "csv") return CubeFormat::csv_matrix;
  throw InvalidArgument("unknown cube format '" + std::string(name) + "'");
}

LabelFormat parse_label_format(std::string_view name) {
  if (name == "pgm") return LabelFormat::pgm;
  if (name == "csv") return LabelFormat::csv;
  throw InvalidArgument("unknown label format '" + std::string(name) + "'");
}

std::string to_string(CubeFormat format) {
  switch (format) {
    case CubeFormat::envi_bsq: return "envi-bsq";
    case CubeFormat::flat_f32: return "flat-f32";
    case CubeFormat::csv_matrix: return "csv-matrix";
  }
  return "unknown";
}

CubeFormat cube_format_for(const fs::path& path) {
  const std::string ext = lower(path.extension().string());
  if (ext == ".hdr") return CubeFormat::envi_bsq;
  if (ext == ".csv") return CubeFormat::csv_matrix;
  return CubeFormat::flat_f32;
}

LabelFormat label_format_for(const fs::path& path) {
  return lower(path.extension().string()) == ".csv" ? LabelFormat::csv : LabelFormat::pgm;
}

// ------------------------------------------------------------------ container

void write_container(const fs::path& path, std::uint32_t planes, ImageDims dims,
                     std::span<const float> values) {
  if (values.size() != static_cast<std::size_t>(planes) * dims.pixels()) {
    throw InvalidArgument("container payload size does not match its header");
  }
  std::string bytes(kContainerMagic.begin(), kContainerMagic.end());
  put_u32_le(bytes, planes);
  put_u32_le(bytes, static_cast<std::uint32_t>(dims.height));
  put_u32_le(bytes, static_cast<std::uint32_t>(dims.width));
  bytes.reserve(16 + 4 * values.size());
  for (float v : values) append_f32_le(bytes, v);
  std::ofstream out = open_out(path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  finish(out, path);
}

Container read_container(const fs::path& path) {
  const std::vector<char> bytes = read_file(path);
  if (bytes.size() < 16 || !std::equal(kContainerMagic.begin(), kContainerMagic.end(), bytes.begin())) {
    throw FormatError(path.string() + ": not a flat-f32 container");
  }
  Container c;
  c.planes = get_u32_le(bytes.data() + 4);
  c.dims = ImageDims{static_cast<int>(get_u32_le(bytes.data() + 8)),
                     static_cast<int>(get_u32_le(bytes.data() + 12))};
  const std::size_t count = static_cast<std::size_t>(c.planes) * c.dims.pixels();
  if (bytes.size() != 16 + 4 * count) {
    throw FormatError(path.string() + ": dimension mismatch, header declares " +
                      std::to_string(count) + " values");
  }
  c.values.resize(count);
  for (std::size_t j = 0; j < count; ++j) c.values[j] = get_f32(bytes.data() + 16 + 4 * j, false);
  return c;
}

// ------------------------------------------------------------------ cubes

HyperCube load_cube(const fs::path& path, CubeFormat format, std::optional<ImageDims> dims) {
  switch (format) {
    case CubeFormat::envi_bsq:
      return load_envi(path);
    case CubeFormat::flat_f32: {
      Container c = read_container(path);
      if (c.planes < 1 || c.dims.height < 1 || c.dims.width < 1) {
        throw FormatError(path.string() + ": empty cube");
      }
      if (dims && !(*dims == c.dims)) throw FormatError(path.string() + ": dimension mismatch");
      check_finite(c.values, path);
      return HyperCube(c.dims, static_cast<int>(c.planes), std::move(c.values));
    }
    case CubeFormat::csv_matrix: {
      std::ifstream in(path);
      if (!in) throw IoError("cannot open " + path.string());
      const auto rows = read_csv(in);
      if (rows.empty()) throw FormatError(path.string() + ": empty matrix");
      const std::size_t bands = rows[0].size();
      const ImageDims shape = dims.value_or(ImageDims{static_cast<int>(rows.size()), 1});
      if (rows.size() != shape.pixels()) {
        throw FormatError(path.string() + ": dimension mismatch, " + std::to_string(rows.size()) +
                          " rows for " + std::to_string(shape.pixels()) + " pixels");
      }
      std::vector<float> values(rows.size() * bands);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != bands) throw FormatError(path.string() + ": ragged rows");
        for (std::size_t b = 0; b < bands; ++b) {
          values[b * rows.size() + i] = static_cast<float>(parse_double(rows[i][b]));
        }
      }
      check_finite(values, path);
      return HyperCube(shape, static_cast<int>(bands), std::move(values));
    }
  }
  throw InvalidArgument("unknown cube format");
}

void save_cube(const HyperCube& cube, const fs::path& path, CubeFormat format) {
  switch (format) {
    case CubeFormat::envi_bsq:
      save_envi(cube, path);
      return;
    case CubeFormat::flat_f32:
      write_container(path, static_cast<std::uint32_t>(cube.bands()), cube.dims(), cube.data());
      return;
    case CubeFormat::csv_matrix: {
      std::ofstream out = open_out(path, false);
      for (std::size_t i = 0; i < cube.pixels(); ++i) {
        for (int b = 0; b < cube.bands(); ++b) {
          if (b > 0) out << ',';
          out << format_number(cube.value(b, i));
        }
        out << '\n';
      }
      finish(out, path);
      return;
    }
  }
}

// ------------------------------------------------------------------ labels

LabelMap load_labels(const fs::path& path, LabelFormat format) {
  if (format == LabelFormat::pgm) {
    PgmImage img = read_pgm(path);
    return LabelMap(img.dims, std::move(img.values));
  }
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  const auto rows = read_csv(in);
  if (rows.empty()) throw FormatError(path.string() + ": empty label map");
  const std::size_t width = rows[0].size();
  std::vector<int> labels;
  for (const auto& row : rows) {
    if (row.size() != width) throw FormatError(path.string() + ": ragged rows");
    for (const auto& field : row) {
      const long long v = parse_integer(field);
      if (v < 0) throw FormatError(path.string() + ": negative label " + field);
      labels.push_back(static_cast<int>(v));
    }
  }
  return LabelMap({static_cast<int>(rows.size()), static_cast<int>(width)}, std::move(labels));
}

void save_labels(const LabelMap& labels, const fs::path& path, LabelFormat format) {
  if (format == LabelFormat::pgm) {
    write_pgm_values(path, labels.dims(), labels.labels());
    return;
  }
  std::ofstream out = open_out(path, false);
  const ImageDims d = labels.dims();
  for (int r = 0; r < d.height; ++r) {
    for (int c = 0; c < d.width; ++c) {
      if (c > 0) out << ',';
      out << labels[d.index(r, c)];
    }
    out << '\n';
  }
  finish(out, path);
}

void save_hidden_field(const HiddenField& field, const fs::path& path) {
  const Eigen::MatrixXd& z = field.matrix();
  const std::size_t n = field.pixels();
  std::vector<float> values(static_cast<std::size_t>(z.rows()) * n);
  for (Eigen::Index k = 0; k < z.rows(); ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      values[static_cast<std::size_t>(k) * n + i] =
          static_cast<float>(z(k, static_cast<Eigen::Index>(i)));
    }
  }
  write_container(path, static_cast<std::uint32_t>(z.rows()), field.dims(), values);
}

HiddenField load_hidden_field(const fs::path& path) {
  const Container c = read_container(path);
  if (c.planes < 1) throw FormatError(path.string() + ": field without classes");
  const std::size_t n = c.dims.pixels();
  Eigen::MatrixXd z(static_cast<Eigen::Index>(c.planes), static_cast<Eigen::Index>(n));
  for (std::uint32_t k = 0; k < c.planes; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      z(k, static_cast<Eigen::Index>(i)) = c.values[k * n + i];
    }
  }
  // Each f32 entry carries up to 2^-24 relative rounding.
  const double tolerance = kSimplexTolerance + 1e-7 * static_cast<double>(c.planes);
  try {
    return HiddenField(c.dims, std::move(z), tolerance);
  } catch (const InvalidArgument& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_labeling(const Labeling& labeling, const fs::path& path) {
  write_pgm_values(path, labeling.dims(), labeling.labels());
}

Labeling load_labeling(const fs::path& path, int classes) {
  PgmImage img = read_pgm(path);
  try {
    return Labeling(img.dims, classes, std::move(img.values));
  } catch (const InvalidArgument& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// ------------------------------------------------------------------ splits

Splits make_splits(const LabelMap& truth, const SplitSpec& spec) {
  if (spec.samples_per_class < 1) throw InvalidArgument("samples_per_class must be at least 1");
  if (spec.validation_samples < 0) throw InvalidArgument("validation_samples must be >= 0");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < truth.pixels(); ++i) {
    if (truth[i] != 0) by_class[truth[i]].push_back(i);
  }
  if (by_class.empty()) throw InfeasibleSplit("ground truth has no labeled pixels");

  std::mt19937_64 rng(spec.seed);
  Splits out;
  std::vector<std::size_t> remaining;
  for (auto& [label, pixels] : by_class) {
    std::shuffle(pixels.begin(), pixels.end(), rng);
    const auto want = static_cast<std::size_t>(spec.samples_per_class);
    if (pixels.size() < want) {
      out.warnings.push_back("class " + std::to_string(label) + " has only " +
                             std::to_string(pixels.size()) + " labeled pixels, all used for training");
    }
    const std::size_t take = std::min(want, pixels.size());
    out.train.insert(out.train.end(), pixels.begin(), pixels.begin() + static_cast<long>(take));
    remaining.insert(remaining.end(), pixels.begin() + static_cast<long>(take), pixels.end());
  }

  const auto nval = static_cast<std::size_t>(spec.validation_samples);
  if (spec.per_class_validation) {
    std::map<int, std::vector<std::size_t>> left;
    for (std::size_t i : remaining) left[truth[i]].push_back(i);
    remaining.clear();
    for (auto& [label, pixels] : left) {
      if (pixels.size() < nval) {
        throw InfeasibleSplit("class " + std::to_string(label) + " has " +
                              std::to_string(pixels.size()) +
                              " pixels left, fewer than the requested validation samples");
      }
      std::sort(pixels.begin(), pixels.end());
      std::shuffle(pixels.begin(), pixels.end(), rng);
      out.validation.insert(out.validation.end(), pixels.begin(),
                            pixels.begin() + static_cast<long>(nval));
      remaining.insert(remaining.end(), pixels.begin() + static_cast<long>(nval), pixels.end());
    }
  } else {
    if (remaining.size() < nval) {
      throw InfeasibleSplit("requested " + std::to_string(nval) + " validation samples but only " +
                            std::to_string(remaining.size()) + " labeled pixels remain");
    }
    std::sort(remaining.begin(), remaining.end());
    std::shuffle(remaining.begin(), remaining.end(), rng);
    out.validation.assign(remaining.begin(), remaining.begin() + static_cast<long>(nval));
    remaining.erase(remaining.begin(), remaining.begin() + static_cast<long>(nval));
  }
  out.test = std::move(remaining);
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.validation.begin(), out.validation.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

void save_splits(const Splits& splits, const fs::path& path) {
  std::ofstream out = open_out(path, false);
  CsvWriter csv(out);
  csv.row("set", "pixel");
  for (std::size_t i : splits.train) csv.row("train", i);
  for (std::size_t i : splits.validation) csv.row("validation", i);
  for (std::size_t i : splits.test) csv.row("test", i);
  finish(out, path);
}

Splits load_splits(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  const auto rows = read_csv(in);
  if (rows.empty() || rows[0] != std::vector<std::string>{"set", "pixel"}) {
    throw FormatError(path.string() + ": not a split manifest");
  }
  Splits s;
  for (std::size_t j = 1; j < rows.size(); ++j) {
    if (rows[j].size() != 2) throw FormatError(path.string() + ": malformed row");
    const long long v = parse_integer(rows[j][1]);
    if (v < 0) throw FormatError(path.string() + ": negative pixel index");
    const auto idx = static_cast<std::size_t>(v);
    if (rows[j][0] == "train") {
      s.train.push_back(idx);
    } else if (rows[j][0] == "validation") {
      s.validation.push_back(idx);
    } else if (rows[j][0] == "test") {
      s.test.push_back(idx);
    } else {
      throw FormatError(path.string() + ": unknown set '" + rows[j][0] + "'");
    }
  }
  return s;
}

// ------------------------------------------------------------------ images

std::vector<Rgb> label_palette() {
  static const Rgb base[] = {
      {0, 0, 0},       {230, 25, 75},   {60, 180, 75},   {255, 225, 25},  {0, 130, 200},
      {245, 130, 48},  {145, 30, 180},  {70, 240, 240},  {240, 50, 230},  {210, 245, 60},
      {250, 190, 212}, {0, 128, 128},   {220, 190, 255}, {170, 110, 40},  {255, 250, 200},
      {128, 0, 0},     {170, 255, 195}, {128, 128, 0},   {255, 215, 180}, {0, 0, 128},
      {128, 128, 128},
  };
  std::vector<Rgb> palette(256);
  constexpr std::size_t kBase = sizeof base / sizeof base[0];
  for (std::size_t j = 0; j < 256; ++j) {
    if (j < kBase) {
      palette[j] = base[j];
    } else {
      // Deterministic filler colors for large class counts.
      palette[j] = Rgb{static_cast<std::uint8_t>((j * 67) % 256),
                       static_cast<std::uint8_t>((j * 151) % 256),
                       static_cast<std::uint8_t>((j * 211) % 256)};
    }
  }
  palette[kRejectedIndex] = Rgb{255, 255, 255};
  return palette;
}

void write_pgm(const fs::path& path, ImageDims dims, std::span<const std::uint8_t> gray) {
  if (gray.size() != dims.pixels()) throw InvalidArgument("PGM size mismatch");
  std::ostringstream header;
  header << "P5\n" << dims.width << " " << dims.height << "\n255\n";
  std::string bytes = header.str();
  bytes.append(reinterpret_cast<const char*>(gray.data()), gray.size());
  std::ofstream out = open_out(path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  finish(out, path);
}

namespace {

struct PngFile {
  FILE* fp = nullptr;
  ~PngFile() {
    if (fp != nullptr) std::fclose(fp);
  }
};

[[noreturn]] void png_quiet_error(png_structp png, png_const_charp) { png_longjmp(png, 1); }
void png_quiet_warning(png_structp, png_const_charp) {}

struct PngWriteJob {
  FILE* fp;
  const png_color* colors;
  int color_count;
  ImageDims dims;
  const std::uint8_t* indices;
};

// libpng reports errors by longjmp; these frames hold only trivial locals.
bool png_write_impl(const PngWriteJob& job) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_quiet_error,
                                            png_quiet_warning);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, job.fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(job.dims.width),
               static_cast<png_uint_32>(job.dims.height), 8, PNG_COLOR_TYPE_PALETTE,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_PLTE(png, info, job.colors, job.color_count);
  png_write_info(png, info);
  for (int r = 0; r < job.dims.height; ++r) {
    png_write_row(png, job.indices + job.dims.index(r, 0));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

enum class PngReadStatus { ok, corrupt, not_indexed };

PngReadStatus png_read_impl(FILE* fp, IndexedImage* img) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_quiet_error,
                                           png_quiet_warning);
  if (png == nullptr) return PngReadStatus::corrupt;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return PngReadStatus::corrupt;
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  if (png_get_color_type(png, info) != PNG_COLOR_TYPE_PALETTE || png_get_bit_depth(png, info) != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    return PngReadStatus::not_indexed;
  }
  img->dims = ImageDims{static_cast<int>(png_get_image_height(png, info)),
                        static_cast<int>(png_get_image_width(png, info))};
  png_colorp colors = nullptr;
  int count = 0;
  png_get_PLTE(png, info, &colors, &count);
  img->palette.clear();
  for (int j = 0; j < count; ++j) {
    img->palette.push_back(Rgb{colors[j].red, colors[j].green, colors[j].blue});
  }
  img->indices.resize(img->dims.pixels());
  for (int r = 0; r < img->dims.height; ++r) {
    png_read_row(png, img->indices.data() + img->dims.index(r, 0), nullptr);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return PngReadStatus::ok;
}

}  // namespace

void write_indexed_png(const fs::path& path, ImageDims dims, std::span<const std::uint8_t> indices,
                       std::span<const Rgb> palette) {
  if (indices.size() != dims.pixels()) throw InvalidArgument("PNG size mismatch");
  if (palette.empty() || palette.size() > 256) throw InvalidArgument("palette needs 1..256 colors");
  for (std::uint8_t v : indices) {
    if (v >= palette.size()) throw InvalidArgument("PNG index outside the palette");
  }
  std::vector<png_color> colors(palette.size());
  for (std::size_t j = 0; j < palette.size(); ++j) {
    colors[j] = png_color{palette[j].r, palette[j].g, palette[j].b};
  }
  PngFile file{std::fopen(path.c_str(), "wb")};
  if (file.fp == nullptr) throw IoError("cannot write " + path.string());
  const PngWriteJob job{file.fp, colors.data(), static_cast<int>(colors.size()), dims,
                        indices.data()};
  if (!png_write_impl(job)) throw IoError("PNG encoding failed for " + path.string());
}

IndexedImage read_indexed_png(const fs::path& path) {
  PngFile file{std::fopen(path.c_str(), "rb")};
  if (file.fp == nullptr) throw IoError("cannot open " + path.string());
  IndexedImage img;
  switch (png_read_impl(file.fp, &img)) {
    case PngReadStatus::ok: return img;
    case PngReadStatus::not_indexed: throw FormatError(path.string() + ": not an 8-bit indexed PNG");
    case PngReadStatus::corrupt: break;
  }
  throw FormatError(path.string() + ": invalid PNG");
}

}  // namespace hsrc
