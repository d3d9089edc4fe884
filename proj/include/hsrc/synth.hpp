#pragma once

// Synthetic scenes: piecewise-constant label regions, each pixel spectrum
// the class mean plus i.i.d. N(0, sigma^2) noise per band.
//
// Generated means are m_k = base + a u_k with orthonormal u_k, so every pair
// is a sqrt(2) apart and the Bayes (nearest-mean) pixelwise accuracy is
//   P_c = integral phi(t) Phi(t + a / sigma)^(K-1) dt.

#include "hsrc/core.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>

namespace hsrc {

enum class RegionKind { blocks, voronoi };

RegionKind parse_region_kind(const std::string& name);
std::string to_string(RegionKind kind);

struct SynthSpec {
  int height = 64;
  int width = 64;
  int classes = 4;
  int bands = 20;
  // d x K; generated from `separation` and the seed when left empty.
  Eigen::MatrixXd class_means;
  double separation = 1.0;  // a, the distance of each mean from the common base
  double noise_sigma = 1.0;
  RegionKind region = RegionKind::blocks;
  // blocks: rectangles from recursive random splits. A rectangle is split
  // across its longer side while that side exceeds block_max, and with
  // probability split_probability while it is at least 2 block_min. With
  // block_min == block_max the result is a regular grid of that pitch.
  int block_min = 3;
  int block_max = 16;
  double split_probability = 0.6;
  int voronoi_sites = 12;  // voronoi: number of seed points
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthScene {
  HyperCube cube;
  LabelMap truth;
  Eigen::MatrixXd class_means;
  int layout_attempts = 1;  // layouts drawn until every class was present
};

// Requires classes <= bands.
Eigen::MatrixXd make_class_means(int classes, int bands, double separation, std::uint64_t seed);

// Pixelwise Bayes error for K equiprobable classes with orthonormal-offset
// means at offset a and isotropic noise sigma.
double bayes_error(int classes, double separation, double sigma);

// sigma giving the requested Bayes error, found by bisection.
double sigma_for_bayes_error(int classes, double separation, double target_error);

// Desk-scale default: 64 x 64, K = 4, d = 20, blocks, sigma for 25% Bayes error.
SynthSpec default_synth_spec(std::uint64_t seed = 0);

SynthScene generate(const SynthSpec& spec);

}  // namespace hsrc
