#include "hsrc/core.hpp"

#include "hsrc/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hsrc {

namespace {

void check_dims(ImageDims dims) {
  if (dims.height < 1 || dims.width < 1) {
    throw InvalidArgument("image dimensions must be positive, got " +
                          std::to_string(dims.height) + "x" + std::to_string(dims.width));
  }
}

}  // namespace

HyperCube::HyperCube(ImageDims dims, int bands, std::vector<float> data)
    : dims_(dims), bands_(bands), data_(std::move(data)) {
  check_dims(dims_);
  if (bands_ < 1) throw InvalidArgument("a cube needs at least one band");
  if (data_.size() != static_cast<std::size_t>(bands_) * pixels()) {
    throw InvalidArgument("cube data holds " + std::to_string(data_.size()) +
                          " values, expected " +
                          std::to_string(static_cast<std::size_t>(bands_) * pixels()));
  }
  for (float v : data_) {
    if (!std::isfinite(v)) throw InvalidArgument("cube contains non-finite values");
  }
}

Eigen::VectorXd HyperCube::spectrum(std::size_t pixel) const {
  Eigen::VectorXd out(bands_);
  for (int b = 0; b < bands_; ++b) out[b] = value(b, pixel);
  return out;
}

HyperCube HyperCube::without_bands(std::span<const int> excluded) const {
  std::vector<bool> drop(static_cast<std::size_t>(bands_), false);
  for (int b : excluded) {
    if (b < 0 || b >= bands_) {
      throw InvalidArgument("band index " + std::to_string(b) + " out of range");
    }
    drop[static_cast<std::size_t>(b)] = true;
  }
  std::vector<float> kept;
  int kept_bands = 0;
  for (int b = 0; b < bands_; ++b) {
    if (drop[static_cast<std::size_t>(b)]) continue;
    auto src = band(b);
    kept.insert(kept.end(), src.begin(), src.end());
    ++kept_bands;
  }
  return HyperCube(dims_, kept_bands, std::move(kept));
}

LabelMap::LabelMap(ImageDims dims, std::vector<int> labels, int classes)
    : dims_(dims), classes_(classes), labels_(std::move(labels)) {
  check_dims(dims_);
  if (labels_.size() != dims_.pixels()) {
    throw InvalidArgument("label map size does not match its dimensions");
  }
  int largest = 0;
  for (int l : labels_) {
    if (l < 0) throw InvalidArgument("negative label " + std::to_string(l));
    largest = std::max(largest, l);
  }
  if (classes_ < 0) {
    classes_ = largest;
  } else if (largest > classes_) {
    throw InvalidArgument("label " + std::to_string(largest) + " exceeds class count " +
                          std::to_string(classes_));
  }
}

std::vector<std::size_t> LabelMap::labeled_pixels() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] != 0) out.push_back(i);
  }
  return out;
}

ProbabilityField::ProbabilityField(Eigen::MatrixXd probs) : probs_(std::move(probs)) {
  if (probs_.rows() < 1 || probs_.cols() < 1) {
    throw InvalidArgument("probability field must be nonempty");
  }
  for (Eigen::Index i = 0; i < probs_.cols(); ++i) {
    double sum = 0.0;
    for (Eigen::Index k = 0; k < probs_.rows(); ++k) {
      const double p = probs_(k, i);
      // Relative slack: a floored entry may carry one rounding error.
      if (!(p >= kProbabilityFloor * (1.0 - 1e-9)) || p > 1.0 + 1e-12) {
        throw InvalidArgument("probability entry out of [floor, 1] at pixel " +
                              std::to_string(i));
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw InvalidArgument("probability column " + std::to_string(i) + " does not sum to 1");
    }
  }
}

HiddenField::HiddenField(ImageDims dims, Eigen::MatrixXd z, double tolerance)
    : dims_(dims), z_(std::move(z)) {
  check_dims(dims_);
  if (z_.rows() < 1 || static_cast<std::size_t>(z_.cols()) != dims_.pixels()) {
    throw InvalidArgument("hidden field shape does not match image dimensions");
  }
  for (Eigen::Index i = 0; i < z_.cols(); ++i) {
    double sum = 0.0;
    for (Eigen::Index k = 0; k < z_.rows(); ++k) {
      const double v = z_(k, i);
      if (!std::isfinite(v) || v < -tolerance) {
        throw InvalidArgument("hidden field entry negative or non-finite at pixel " +
                              std::to_string(i));
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > tolerance) {
      throw InvalidArgument("hidden field column " + std::to_string(i) +
                            " does not sum to 1");
    }
  }
}

Labeling::Labeling(ImageDims dims, int classes, std::vector<int> labels)
    : dims_(dims), classes_(classes), labels_(std::move(labels)) {
  check_dims(dims_);
  if (labels_.size() != dims_.pixels()) {
    throw InvalidArgument("labeling size does not match its dimensions");
  }
  for (int l : labels_) {
    if (l < 1 || l > classes_) {
      throw InvalidArgument("label " + std::to_string(l) + " outside 1.." +
                            std::to_string(classes_));
    }
  }
}

RejectionField::RejectionField(std::vector<double> confidence, Labeling labeling)
    : confidence_(std::move(confidence)), labeling_(std::move(labeling)) {
  if (confidence_.size() != labeling_.pixels()) {
    throw InvalidArgument("rejection field and labeling sizes differ");
  }
}

Labeling argmax_columns(ImageDims dims, const Eigen::MatrixXd& columns) {
  std::vector<int> labels(static_cast<std::size_t>(columns.cols()));
  for (Eigen::Index i = 0; i < columns.cols(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < columns.rows(); ++k) {
      if (columns(k, i) > columns(best, i)) best = k;
    }
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best) + 1;
  }
  return Labeling(dims, static_cast<int>(columns.rows()), std::move(labels));
}

Labeling argmax_labeling(const HiddenField& field) {
  return argmax_columns(field.dims(), field.matrix());
}

RejectionField rejection_field(const HiddenField& field) {
  Labeling labeling = argmax_labeling(field);
  std::vector<double> confidence(field.pixels());
  for (std::size_t i = 0; i < field.pixels(); ++i) {
    confidence[i] = field.matrix()(labeling[i] - 1, static_cast<Eigen::Index>(i));
  }
  return RejectionField(std::move(confidence), std::move(labeling));
}

}  // namespace hsrc
