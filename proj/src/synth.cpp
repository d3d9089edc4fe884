#include "hsrc/synth.hpp"

#include "hsrc/error.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace hsrc {

namespace {

constexpr std::uint64_t kMeansSalt = 0x6d65616e73ULL;
constexpr std::uint64_t kLayoutSalt = 0x6c61796f7574ULL;
constexpr std::uint64_t kNoiseSalt = 0x6e6f697365ULL;
constexpr int kMaxLayoutAttempts = 10000;

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t salt, std::uint64_t counter = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32),
                    static_cast<std::uint32_t>(counter)};
  return std::mt19937_64(seq);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

std::vector<int> draw_layout(const SynthSpec& spec, std::mt19937_64& rng) {
  const ImageDims dims{spec.height, spec.width};
  std::vector<int> labels(dims.pixels());
  std::uniform_int_distribution<int> pick(1, spec.classes);
  if (spec.region == RegionKind::blocks) {
    struct Rect {
      int r0, c0, h, w;
    };
    std::vector<Rect> stack{{0, 0, spec.height, spec.width}};
    std::bernoulli_distribution coin(spec.split_probability);
    while (!stack.empty()) {
      const Rect rect = stack.back();
      stack.pop_back();
      const bool rows_longer = rect.h >= rect.w;
      const int side = rows_longer ? rect.h : rect.w;
      bool split = false;
      if (spec.block_min == spec.block_max) {
        split = side > spec.block_max;
      } else if (side > spec.block_max) {
        split = true;
      } else if (side >= 2 * spec.block_min) {
        split = coin(rng);
      }
      if (!split) {
        const int label = pick(rng);
        for (int r = rect.r0; r < rect.r0 + rect.h; ++r) {
          for (int c = rect.c0; c < rect.c0 + rect.w; ++c) labels[dims.index(r, c)] = label;
        }
        continue;
      }
      int cut = spec.block_max;  // regular grid: cut at the pitch
      if (spec.block_min != spec.block_max) {
        const int lo = std::min(spec.block_min, side / 2);
        cut = std::uniform_int_distribution<int>(lo, side - lo)(rng);
      }
      if (rows_longer) {
        stack.push_back({rect.r0 + cut, rect.c0, rect.h - cut, rect.w});
        stack.push_back({rect.r0, rect.c0, cut, rect.w});
      } else {
        stack.push_back({rect.r0, rect.c0 + cut, rect.h, rect.w - cut});
        stack.push_back({rect.r0, rect.c0, rect.h, cut});
      }
    }
  } else {
    std::uniform_real_distribution<double> ur(0.0, spec.height);
    std::uniform_real_distribution<double> uc(0.0, spec.width);
    std::vector<double> sr, sc;
    std::vector<int> sl;
    for (int s = 0; s < spec.voronoi_sites; ++s) {
      sr.push_back(ur(rng));
      sc.push_back(uc(rng));
      sl.push_back(pick(rng));
    }
    for (int r = 0; r < spec.height; ++r) {
      for (int c = 0; c < spec.width; ++c) {
        double best = std::numeric_limits<double>::infinity();
        int label = 1;
        for (std::size_t s = 0; s < sl.size(); ++s) {
          const double dr = r + 0.5 - sr[s];
          const double dc = c + 0.5 - sc[s];
          const double d = dr * dr + dc * dc;
          if (d < best) {
            best = d;
            label = sl[s];
          }
        }
        labels[dims.index(r, c)] = label;
      }
    }
  }
  return labels;
}

bool all_classes_present(const std::vector<int>& labels, int classes) {
  std::vector<bool> seen(static_cast<std::size_t>(classes) + 1, false);
  for (int l : labels) seen[static_cast<std::size_t>(l)] = true;
  for (int k = 1; k <= classes; ++k) {
    if (!seen[static_cast<std::size_t>(k)]) return false;
  }
  return true;
}

}  // namespace

RegionKind parse_region_kind(const std::string& name) {
  if (name == "blocks") return RegionKind::blocks;
  if (name == "voronoi") return RegionKind::voronoi;
  throw InvalidArgument("unknown region kind '" + name + "'");
}

std::string to_string(RegionKind kind) { return kind == RegionKind::blocks ? "blocks" : "voronoi"; }

void SynthSpec::validate() const {
  if (height < 1 || width < 1) throw InvalidArgument("scene must be at least 1 x 1");
  if (classes < 1) throw InvalidArgument("need at least one class");
  if (bands < 1) throw InvalidArgument("need at least one band");
  if (!(noise_sigma > 0.0) || !std::isfinite(noise_sigma)) {
    throw InvalidArgument("noise_sigma must be positive");
  }
  if (region == RegionKind::blocks) {
    if (block_min < 1 || block_max < block_min) {
      throw InvalidArgument("blocks need 1 <= block_min <= block_max");
    }
    if (!(split_probability >= 0.0 && split_probability <= 1.0)) {
      throw InvalidArgument("split_probability must lie in [0, 1]");
    }
  }
  if (region == RegionKind::voronoi && voronoi_sites < 1) {
    throw InvalidArgument("voronoi_sites must be >= 1");
  }
  if (static_cast<std::size_t>(classes) > static_cast<std::size_t>(height) * width) {
    throw InvalidArgument("more classes than pixels");
  }
  if (class_means.size() > 0) {
    if (class_means.rows() != bands || class_means.cols() != classes) {
      throw InvalidArgument("class_means must be bands x classes");
    }
    for (int a = 0; a < classes; ++a) {
      for (int b = a + 1; b < classes; ++b) {
        if (class_means.col(a) == class_means.col(b)) throw InvalidArgument("class means must differ");
      }
    }
  } else {
    if (classes > bands) throw InvalidArgument("generated means need classes <= bands");
    if (!(separation > 0.0)) throw InvalidArgument("separation must be positive");
  }
}

Eigen::MatrixXd make_class_means(int classes, int bands, double separation, std::uint64_t seed) {
  if (classes < 1 || classes > bands) throw InvalidArgument("need 1 <= classes <= bands");
  std::mt19937_64 rng = stream(seed, kMeansSalt);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> level(0.5, 1.5);
  Eigen::MatrixXd g(bands, classes);
  for (Eigen::Index c = 0; c < g.cols(); ++c) {
    for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, c) = normal(rng);
  }
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ() *
                            Eigen::MatrixXd::Identity(bands, classes);
  Eigen::VectorXd base(bands);
  for (Eigen::Index r = 0; r < bands; ++r) base[r] = level(rng);
  return (separation * q).colwise() + base;
}

double bayes_error(int classes, double separation, double sigma) {
  if (classes < 1) throw InvalidArgument("need at least one class");
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  if (classes == 1) return 0.0;
  const double shift = separation / sigma;
  // Composite Simpson on [-12, 12].
  const int steps = 4000;
  const double lo = -12.0, hi = 12.0, h = (hi - lo) / steps;
  double sum = 0.0;
  for (int j = 0; j <= steps; ++j) {
    const double t = lo + j * h;
    const double f = std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi) *
                     std::pow(normal_cdf(t + shift), classes - 1);
    sum += f * (j == 0 || j == steps ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0));
  }
  return 1.0 - sum * h / 3.0;
}

double sigma_for_bayes_error(int classes, double separation, double target_error) {
  if (classes < 2) throw InvalidArgument("need at least two classes");
  const double chance = 1.0 - 1.0 / classes;
  if (!(target_error > 0.0 && target_error < chance)) {
    throw InvalidArgument("target error must lie strictly between 0 and 1 - 1/K");
  }
  double lo = 1e-6 * separation, hi = separation;
  while (bayes_error(classes, separation, hi) < target_error) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (bayes_error(classes, separation, mid) < target_error ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

SynthSpec default_synth_spec(std::uint64_t seed) {
  SynthSpec spec;
  spec.seed = seed;
  spec.noise_sigma = sigma_for_bayes_error(spec.classes, spec.separation, 0.25);
  return spec;
}

SynthScene generate(const SynthSpec& spec) {
  spec.validate();
  const ImageDims dims{spec.height, spec.width};
  const Eigen::MatrixXd means = spec.class_means.size() > 0
                                    ? spec.class_means
                                    : make_class_means(spec.classes, spec.bands, spec.separation,
                                                       spec.seed);
  std::vector<int> labels;
  int attempts = 0;
  do {
    if (attempts == kMaxLayoutAttempts) {
      throw InvalidArgument("layout cannot place every class; use smaller regions");
    }
    std::mt19937_64 rng = stream(spec.seed, kLayoutSalt, static_cast<std::uint64_t>(attempts));
    labels = draw_layout(spec, rng);
    ++attempts;
  } while (!all_classes_present(labels, spec.classes));

  std::mt19937_64 rng = stream(spec.seed, kNoiseSalt);
  std::normal_distribution<double> noise(0.0, spec.noise_sigma);
  const std::size_t n = dims.pixels();
  std::vector<float> data(n * static_cast<std::size_t>(spec.bands));
  for (std::size_t i = 0; i < n; ++i) {
    const int k = labels[i] - 1;
    for (int b = 0; b < spec.bands; ++b) {
      data[static_cast<std::size_t>(b) * n + i] = static_cast<float>(means(b, k) + noise(rng));
    }
  }
  return SynthScene{HyperCube(dims, spec.bands, std::move(data)),
                    LabelMap(dims, std::move(labels), spec.classes), means, attempts};
}

}  // namespace hsrc
