#include "hsrc/mlr.hpp"

#include "hsrc/error.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <random>

using namespace hsrc;

namespace {

TrainingSet three_class_problem(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.8);
  const double centers[3][2] = {{0.0, 2.0}, {-1.7, -1.0}, {1.7, -1.0}};
  TrainingSet set;
  set.x.resize(2, 30);
  for (int i = 0; i < 30; ++i) {
    const int k = i % 3;
    set.x(0, i) = centers[k][0] + noise(rng);
    set.x(1, i) = centers[k][1] + noise(rng);
    set.labels.push_back(k + 1);
  }
  return set;
}

}  // namespace

TEST_CASE("sign consistency on separated 1-D data") {
  TrainingSet set;
  set.x.resize(1, 2);
  set.x << -1.0, 1.0;
  set.labels = {1, 2};
  MlrParams params;
  params.lambda_w = 0.1;
  params.feature = FeatureKind::linear;
  const TrainResult r = train_mlr(set, 2, params);
  const Eigen::MatrixXd p = predict_probs(r.model, set.x).matrix();
  CHECK(p(1, 1) > 0.5);
  CHECK(p(0, 0) > 0.5);
}

TEST_CASE("mirror-symmetric classes give 1/2 at the mirror point") {
  TrainingSet set;
  set.x.resize(1, 6);
  set.x << -3.0, -2.0, -0.5, 0.5, 2.0, 3.0;
  set.labels = {1, 1, 2, 1, 2, 2};
  for (FeatureKind kind : {FeatureKind::linear, FeatureKind::rbf}) {
    MlrParams params;
    params.feature = kind;
    params.lambda_w = 0.01;
    params.tol = 1e-10;
    const TrainResult r = train_mlr(set, 2, params);
    CHECK(r.diagnostics.converged);
    Eigen::MatrixXd x0(1, 1);
    x0 << 0.0;
    CHECK(std::abs(predict_probs(r.model, x0).matrix()(0, 0) - 0.5) <= 1e-6);
  }
}

TEST_CASE("trained objective matches an independent gradient-descent oracle") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const TrainingSet set = three_class_problem(seed);
    MlrParams params;
    params.feature = FeatureKind::linear;
    params.lambda_w = 0.01;
    params.tol = 1e-9;
    const TrainResult r = train_mlr(set, 3, params);
    CHECK(r.diagnostics.converged);

    // Standardize independently and append the bias.
    Eigen::MatrixXd feats(3, 30);
    for (int b = 0; b < 2; ++b) {
      const double mean = set.x.row(b).mean();
      const double var = (set.x.row(b).array() - mean).square().mean();
      feats.row(b) = (set.x.row(b).array() - mean) / std::sqrt(var);
    }
    feats.row(2).setOnes();
    const double optimum = oracle::mlr_gradient_descent(feats, set.labels, 3, 0.01);
    Eigen::MatrixXd full = Eigen::MatrixXd::Zero(3, 3);
    full.topRows(2) = r.model.weights;
    const double ours = oracle::mlr_loss_full(full, feats, set.labels, 0.01);
    CHECK(ours == doctest::Approx(optimum).epsilon(1e-9).scale(1.0));
    CHECK(std::abs(ours - optimum) <= 1e-4);
    CHECK(ours >= optimum - 1e-9);
    CHECK(std::abs(r.diagnostics.objective_history.back() - ours) < 1e-12);
  }
}

TEST_CASE("objective is non-increasing across iterations") {
  const TrainingSet set = three_class_problem(7);
  for (FeatureKind kind : {FeatureKind::linear, FeatureKind::rbf}) {
    MlrParams params;
    params.feature = kind;
    params.tol = 1e-10;
    const TrainResult r = train_mlr(set, 3, params);
    const auto& h = r.diagnostics.objective_history;
    REQUIRE(h.size() == static_cast<std::size_t>(r.diagnostics.iterations) + 1);
    for (std::size_t j = 1; j < h.size(); ++j) CHECK(h[j] <= h[j - 1]);
  }
}

TEST_CASE("training is deterministic") {
  const TrainingSet set = three_class_problem(11);
  const TrainResult a = train_mlr(set, 3, MlrParams{});
  const TrainResult b = train_mlr(set, 3, MlrParams{});
  CHECK(a.model.weights == b.model.weights);
  CHECK(a.model.features.rbf_gamma == b.model.features.rbf_gamma);
}

TEST_CASE("median heuristic") {
  Eigen::MatrixXd pts(1, 3);
  pts << 0.0, 1.0, 3.0;  // pair distances 1, 2, 3
  CHECK(median_heuristic_gamma(pts) == doctest::Approx(1.0 / 8.0));
  Eigen::MatrixXd same = Eigen::MatrixXd::Zero(2, 4);
  CHECK(median_heuristic_gamma(same) == 1.0);
}

TEST_CASE("zero weights give uniform probabilities") {
  MlrModel model;
  model.classes = 4;
  model.features.kind = FeatureKind::linear;
  model.features.mean = Eigen::VectorXd::Zero(3);
  model.features.scale = Eigen::VectorXd::Ones(3);
  model.weights = Eigen::MatrixXd::Zero(3, 4);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x = Eigen::MatrixXd::NullaryExpr(3, 10, [&] { return normal(rng); });
  const Eigen::MatrixXd p = predict_probs(model, x).matrix();
  CHECK((p.array() - 0.25).abs().maxCoeff() < 1e-15);
}

TEST_CASE("single training pixel predicts its own class") {
  const TrainingSet set = three_class_problem(5);
  const TrainResult r = train_mlr(set, 3, MlrParams{});
  const Eigen::MatrixXd p = predict_probs(r.model, set.x).matrix();
  for (int i = 0; i < 30; ++i) {
    Eigen::Index best = 0;
    p.col(i).maxCoeff(&best);
    CHECK(best + 1 == set.labels[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("probabilities match a direct softmax of the weights") {
  const TrainingSet set = three_class_problem(9);
  MlrParams params;
  params.feature = FeatureKind::linear;
  const TrainResult r = train_mlr(set, 3, params);
  const Eigen::MatrixXd p = predict_probs(r.model, set.x).matrix();
  const FeatureMap& fm = r.model.features;
  for (int i = 0; i < 30; ++i) {
    Eigen::VectorXd f(3);
    f.head(2) = (set.x.col(i) - fm.mean).cwiseQuotient(fm.scale);
    f[2] = 1.0;
    Eigen::VectorXd s(3);
    s.head(2) = r.model.weights * f;
    s[2] = 0.0;
    Eigen::VectorXd e = s.array().exp();
    e /= e.sum();
    CHECK((p.col(i) - e).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("softmax is shift invariant and floored") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal(0.0, 5.0);
  Eigen::MatrixXd s = Eigen::MatrixXd::NullaryExpr(5, 50, [&] { return normal(rng); });
  s(0, 0) = 800.0;  // overflow-prone entry
  const Eigen::MatrixXd base = softmax_probabilities(s);
  Eigen::MatrixXd shifted = s;
  for (Eigen::Index i = 0; i < s.cols(); ++i) shifted.col(i).array() += normal(rng) * 10.0;
  CHECK((softmax_probabilities(shifted) - base).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(base.minCoeff() >= kProbabilityFloor);
  CHECK((base.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  (void)ProbabilityField(base);
}

TEST_CASE("cube prediction is independent of the thread count") {
  std::mt19937_64 rng(4);
  std::normal_distribution<float> normal;
  std::vector<float> data(6 * 7 * 2);
  for (float& v : data) v = normal(rng);
  const HyperCube cube({6, 7}, 2, data);
  const TrainResult r = train_mlr(three_class_problem(1), 3, MlrParams{});
  const Eigen::MatrixXd one = predict_probs(r.model, cube, 1).matrix();
  const Eigen::MatrixXd four = predict_probs(r.model, cube, 4).matrix();
  CHECK(one == four);
}

TEST_CASE("error paths") {
  TrainingSet set = three_class_problem(1);
  CHECK_THROWS_AS((void)train_mlr(set, 2, MlrParams{}), InvalidArgument);
  set.x(0, 0) = std::nan("");
  CHECK_THROWS_AS((void)train_mlr(set, 3, MlrParams{}), InvalidArgument);
  CHECK_THROWS_AS((void)train_mlr(TrainingSet{}, 3, MlrParams{}), InvalidArgument);

  const TrainResult r = train_mlr(three_class_problem(1), 3, MlrParams{});
  const HyperCube wrong({2, 2}, 5, std::vector<float>(20, 0.0f));
  CHECK_THROWS_AS((void)predict_probs(r.model, wrong), InvalidArgument);
}

TEST_CASE("single-class data is accepted and flagged") {
  TrainingSet set = three_class_problem(1);
  std::fill(set.labels.begin(), set.labels.end(), 2);
  const TrainResult r = train_mlr(set, 3, MlrParams{});
  CHECK(r.diagnostics.single_class);
}

TEST_CASE("model persistence round trip") {
  testutil::TempDir dir;
  for (FeatureKind kind : {FeatureKind::linear, FeatureKind::rbf}) {
    MlrParams params;
    params.feature = kind;
    const TrainingSet set = three_class_problem(2);
    const TrainResult r = train_mlr(set, 3, params);
    save_model(r.model, dir / "model.txt");
    const MlrModel back = load_model(dir / "model.txt");
    CHECK(back.classes == 3);
    CHECK(back.features.kind == kind);
    CHECK(back.features.rbf_gamma == r.model.features.rbf_gamma);
    CHECK(back.features.mean == r.model.features.mean);
    CHECK((back.weights - r.model.weights).cwiseAbs().maxCoeff() <=
          1e-6 * (1.0 + r.model.weights.cwiseAbs().maxCoeff()));
    const Eigen::MatrixXd pa = predict_probs(r.model, set.x).matrix();
    const Eigen::MatrixXd pb = predict_probs(back, set.x).matrix();
    CHECK((pa - pb).cwiseAbs().maxCoeff() < 1e-4);
  }
  CHECK_THROWS_AS((void)load_model(dir / "absent.txt"), IoError);
}
