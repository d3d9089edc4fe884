#pragma once

// Domain types shared by the whole pipeline.
//
// Pixel i of an image with dimensions (height, width) is the pixel at
// row i / width, column i % width. Every K x n matrix in the library stores
// pixel i in column i, so a column is one pixel's class vector.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hsrc {

// Lower bound applied to every class probability entering the data term.
inline constexpr double kProbabilityFloor = 1e-10;

// Tolerance on the simplex constraints of a solved hidden field.
inline constexpr double kSimplexTolerance = 1e-7;

struct ImageDims {
  int height = 0;
  int width = 0;

  std::size_t pixels() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(col);
  }
  bool operator==(const ImageDims&) const = default;
};

// A d-band image stored band-sequential: value (b, i) lives at b * n + i.
class HyperCube {
 public:
  HyperCube(ImageDims dims, int bands, std::vector<float> data);

  ImageDims dims() const { return dims_; }
  int height() const { return dims_.height; }
  int width() const { return dims_.width; }
  int bands() const { return bands_; }
  std::size_t pixels() const { return dims_.pixels(); }

  float at(int band, int row, int col) const {
    return data_[static_cast<std::size_t>(band) * pixels() + dims_.index(row, col)];
  }
  float value(int band, std::size_t pixel) const {
    return data_[static_cast<std::size_t>(band) * pixels() + pixel];
  }
  std::span<const float> data() const { return data_; }
  std::span<const float> band(int b) const {
    return std::span<const float>(data_).subspan(static_cast<std::size_t>(b) * pixels(),
                                                 pixels());
  }
  Eigen::VectorXd spectrum(std::size_t pixel) const;

  // Copy of this cube without the listed bands (out-of-range indices throw).
  HyperCube without_bands(std::span<const int> excluded) const;

 private:
  ImageDims dims_;
  int bands_;
  std::vector<float> data_;
};

// Ground truth map. Label 0 marks unlabeled pixels; classes are 1..K.
class LabelMap {
 public:
  // classes < 0 infers K as the largest label present.
  LabelMap(ImageDims dims, std::vector<int> labels, int classes = -1);

  ImageDims dims() const { return dims_; }
  int classes() const { return classes_; }
  std::size_t pixels() const { return labels_.size(); }
  int operator[](std::size_t i) const { return labels_[i]; }
  std::span<const int> labels() const { return labels_; }

  // Pixels carrying a nonzero label, ascending.
  std::vector<std::size_t> labeled_pixels() const;

 private:
  ImageDims dims_;
  int classes_;
  std::vector<int> labels_;
};

// Per-pixel class probabilities, K x n, entries in [kProbabilityFloor, 1],
// columns summing to one.
class ProbabilityField {
 public:
  explicit ProbabilityField(Eigen::MatrixXd probs);

  int classes() const { return static_cast<int>(probs_.rows()); }
  std::size_t pixels() const { return static_cast<std::size_t>(probs_.cols()); }
  const Eigen::MatrixXd& matrix() const { return probs_; }
  auto column(std::size_t i) const { return probs_.col(static_cast<Eigen::Index>(i)); }

 private:
  Eigen::MatrixXd probs_;
};

// Continuous hidden field z, K x n, each column on the probability simplex.
class HiddenField {
 public:
  // Validates nonnegativity and unit column sums within `tolerance`.
  HiddenField(ImageDims dims, Eigen::MatrixXd z, double tolerance = kSimplexTolerance);

  ImageDims dims() const { return dims_; }
  int classes() const { return static_cast<int>(z_.rows()); }
  std::size_t pixels() const { return static_cast<std::size_t>(z_.cols()); }
  const Eigen::MatrixXd& matrix() const { return z_; }
  auto column(std::size_t i) const { return z_.col(static_cast<Eigen::Index>(i)); }

 private:
  ImageDims dims_;
  Eigen::MatrixXd z_;
};

// Hard labeling with every label in 1..K.
class Labeling {
 public:
  Labeling(ImageDims dims, int classes, std::vector<int> labels);

  ImageDims dims() const { return dims_; }
  int classes() const { return classes_; }
  std::size_t pixels() const { return labels_.size(); }
  int operator[](std::size_t i) const { return labels_[i]; }
  std::span<const int> labels() const { return labels_; }

 private:
  ImageDims dims_;
  int classes_;
  std::vector<int> labels_;
};

// Per-pixel confidence of the argmax labeling of a hidden field.
class RejectionField {
 public:
  RejectionField(std::vector<double> confidence, Labeling labeling);

  std::size_t pixels() const { return confidence_.size(); }
  std::span<const double> confidence() const { return confidence_; }
  double confidence(std::size_t i) const { return confidence_[i]; }
  const Labeling& labeling() const { return labeling_; }

 private:
  std::vector<double> confidence_;
  Labeling labeling_;
};

// Reject decisions over all n pixels of an image for one fraction.
struct RejectMask {
  std::vector<std::uint8_t> rejected;  // 1 = rejected, indexed by pixel
  std::size_t evaluated = 0;           // size of the evaluation set
  std::size_t rejected_count = 0;
  double requested = 0.0;

  bool is_rejected(std::size_t i) const { return rejected[i] != 0; }
  double achieved() const {
    return evaluated == 0 ? 0.0
                          : static_cast<double>(rejected_count) / static_cast<double>(evaluated);
  }
};

// Index of the largest entry of each column, 1-based; ties go to the smallest class.
Labeling argmax_labeling(const HiddenField& field);
Labeling argmax_columns(ImageDims dims, const Eigen::MatrixXd& columns);

// max_k z_ik for every pixel together with the argmax labeling.
RejectionField rejection_field(const HiddenField& field);

}  // namespace hsrc
