#pragma once

// Multinomial logistic regression producing the per-pixel probability field.
//
// Inputs are standardized per band with the training mean and population
// standard deviation. The feature map is either the standardized vector
// itself (linear) or radial basis functions centred on the standardized
// training vectors, phi_j(x) = exp(-gamma |x - a_j|^2). A constant 1 is
// appended as bias feature. Scores for classes 1..K-1 are W phi; class K is
// the reference class with score 0.
//
// Training minimizes
//   F(W) = (1/N) sum_i -log p(y_i | x_i; W) + (lambda_w / 2) |W|_F^2
// (the bias column is regularized too, which keeps F strictly convex).

#include "hsrc/core.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hsrc {

enum class FeatureKind { linear, rbf };

FeatureKind parse_feature_kind(const std::string& name);
std::string to_string(FeatureKind kind);

struct FeatureMap {
  FeatureKind kind = FeatureKind::rbf;
  double rbf_gamma = 1.0;
  Eigen::VectorXd mean;     // per-band training mean
  Eigen::VectorXd scale;    // per-band training std (1 where it vanishes)
  Eigen::MatrixXd anchors;  // standardized training vectors, one per column (rbf)

  int input_dim() const { return static_cast<int>(mean.size()); }
  // Feature dimension m, excluding the bias.
  int feature_dim() const;

  // Maps raw spectra (d x n) to features with bias row ((m+1) x n).
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  // Single spectrum into a preallocated (m+1) vector.
  void apply_one(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::VectorXd> out,
                 Eigen::Ref<Eigen::VectorXd> scratch) const;
};

// gamma = 1 / (2 median^2) over the distances between distinct pairs of
// standardized training vectors; 1 when that median is zero.
double median_heuristic_gamma(const Eigen::MatrixXd& standardized);

struct MlrModel {
  int classes = 0;
  FeatureMap features;
  Eigen::MatrixXd weights;  // (K-1) x (m+1), last column is the bias
};

struct MlrParams {
  double lambda_w = 1e-3;
  int max_iter = 100;
  double tol = 1e-6;  // on the Frobenius norm of the gradient of F
  FeatureKind feature = FeatureKind::rbf;
  std::optional<double> rbf_gamma;  // median heuristic when unset
};

struct TrainDiagnostics {
  int iterations = 0;
  std::vector<double> objective_history;  // F at the start and after each iteration
  double gradient_norm = 0.0;
  bool converged = false;
  bool single_class = false;  // every training sample carried the same label
};

struct TrainResult {
  MlrModel model;
  TrainDiagnostics diagnostics;
};

struct TrainingSet {
  Eigen::MatrixXd x;        // d x N raw spectra
  std::vector<int> labels;  // in 1..K
};

TrainingSet training_set(const HyperCube& cube, const LabelMap& truth,
                         std::span<const std::size_t> pixels);

TrainResult train_mlr(const TrainingSet& data, int classes, const MlrParams& params);

// F(W) for features with bias row ((m+1) x N).
double mlr_objective(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& features,
                     std::span<const int> labels, int classes, double lambda_w);

// K x n scores (last row zero) for raw spectra.
Eigen::MatrixXd class_scores(const MlrModel& model, const Eigen::MatrixXd& x);

// Column-wise softmax, floored: p = eps + (1 - K eps) softmax(s), eps the
// probability floor. Invariant to adding a constant to a column.
Eigen::MatrixXd softmax_probabilities(const Eigen::MatrixXd& scores);

ProbabilityField predict_probs(const MlrModel& model, const HyperCube& cube, int threads = 1);
ProbabilityField predict_probs(const MlrModel& model, const Eigen::MatrixXd& x);

// `path` receives the text metadata; weights and anchors go to
// path + ".weights" and path + ".anchors" as flat-f32 containers.
void save_model(const MlrModel& model, const std::filesystem::path& path);
MlrModel load_model(const std::filesystem::path& path);

}  // namespace hsrc
