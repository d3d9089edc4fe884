#include "hsrc/mlr.hpp"

#include "hsrc/csv.hpp"
#include "hsrc/error.hpp"
#include "hsrc/io.hpp"
#include "hsrc/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace hsrc {

namespace fs = std::filesystem;

FeatureKind parse_feature_kind(const std::string& name) {
  if (name == "rbf") return FeatureKind::rbf;
  if (name == "linear") return FeatureKind::linear;
  throw InvalidArgument("unknown feature map '" + name + "'");
}

std::string to_string(FeatureKind kind) { return kind == FeatureKind::rbf ? "rbf" : "linear"; }

int FeatureMap::feature_dim() const {
  return kind == FeatureKind::rbf ? static_cast<int>(anchors.cols()) : input_dim();
}

void FeatureMap::apply_one(const Eigen::Ref<const Eigen::VectorXd>& x,
                           Eigen::Ref<Eigen::VectorXd> out,
                           Eigen::Ref<Eigen::VectorXd> scratch) const {
  scratch = (x - mean).cwiseQuotient(scale);
  const int m = feature_dim();
  if (kind == FeatureKind::linear) {
    out.head(m) = scratch;
  } else {
    for (int j = 0; j < m; ++j) out[j] = std::exp(-rbf_gamma * (anchors.col(j) - scratch).squaredNorm());
  }
  out[m] = 1.0;
}

Eigen::MatrixXd FeatureMap::apply(const Eigen::MatrixXd& x) const {
  if (x.rows() != input_dim()) throw InvalidArgument("feature map: band count mismatch");
  Eigen::MatrixXd out(feature_dim() + 1, x.cols());
  Eigen::VectorXd scratch(input_dim());
  for (Eigen::Index i = 0; i < x.cols(); ++i) apply_one(x.col(i), out.col(i), scratch);
  return out;
}

double median_heuristic_gamma(const Eigen::MatrixXd& standardized) {
  std::vector<double> dist;
  const Eigen::Index n = standardized.cols();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      dist.push_back((standardized.col(i) - standardized.col(j)).norm());
    }
  }
  if (dist.empty()) return 1.0;
  std::sort(dist.begin(), dist.end());
  const std::size_t h = dist.size() / 2;
  const double median = dist.size() % 2 == 1 ? dist[h] : 0.5 * (dist[h - 1] + dist[h]);
  if (!(median > 0.0)) return 1.0;
  return 1.0 / (2.0 * median * median);
}

TrainingSet training_set(const HyperCube& cube, const LabelMap& truth,
                         std::span<const std::size_t> pixels) {
  if (!(cube.dims() == truth.dims())) throw InvalidArgument("cube and truth sizes differ");
  TrainingSet set;
  set.x.resize(cube.bands(), static_cast<Eigen::Index>(pixels.size()));
  for (std::size_t j = 0; j < pixels.size(); ++j) {
    const std::size_t i = pixels[j];
    if (i >= cube.pixels()) throw InvalidArgument("training pixel out of range");
    if (truth[i] == 0) throw InvalidArgument("training pixel without a label");
    set.x.col(static_cast<Eigen::Index>(j)) = cube.spectrum(i);
    set.labels.push_back(truth[i]);
  }
  return set;
}

namespace {

// Probabilities of classes 1..K-1 ((K-1) x N) for scores s ((K-1) x N) with
// the reference class fixed at zero; also returns the mean log-loss.
double softmax_reference(const Eigen::MatrixXd& s, std::span<const int> labels, int classes,
                         Eigen::MatrixXd& p) {
  const Eigen::Index n = s.cols();
  p.resize(s.rows(), n);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double top = std::max(0.0, s.rows() > 0 ? s.col(i).maxCoeff() : 0.0);
    double total = std::exp(-top);
    for (Eigen::Index k = 0; k < s.rows(); ++k) {
      p(k, i) = std::exp(s(k, i) - top);
      total += p(k, i);
    }
    p.col(i) /= total;
    const double lse = top + std::log(total);
    const int y = labels[static_cast<std::size_t>(i)];
    loss += lse - (y < classes ? s(y - 1, i) : 0.0);
  }
  return loss / static_cast<double>(n);
}

void check_training_input(const TrainingSet& data, int classes) {
  if (classes < 1) throw InvalidArgument("class count must be at least 1");
  if (data.x.cols() == 0) throw InvalidArgument("no training samples");
  if (static_cast<std::size_t>(data.x.cols()) != data.labels.size()) {
    throw InvalidArgument("sample and label counts differ");
  }
  if (!data.x.allFinite()) throw InvalidArgument("non-finite training features");
  for (int y : data.labels) {
    if (y < 1 || y > classes) throw InvalidArgument("training label outside 1..K");
  }
}

class NewtonSolver {
 public:
  NewtonSolver(const Eigen::MatrixXd& features, std::span<const int> labels, int classes,
               double lambda)
      : phi_(features), labels_(labels), classes_(classes), lambda_(lambda),
        n_(static_cast<double>(features.cols())) {
    const int km = classes - 1;
    y_ = Eigen::MatrixXd::Zero(km, features.cols());
    for (Eigen::Index i = 0; i < features.cols(); ++i) {
      const int y = labels[static_cast<std::size_t>(i)];
      if (y < classes) y_(y - 1, i) = 1.0;
    }
    // Preconditioner from the bound 0.5 (I - 11'/K) (x) Phi Phi' / N on the Hessian.
    Eigen::MatrixXd a = 0.5 * (Eigen::MatrixXd::Identity(km, km) -
                               Eigen::MatrixXd::Constant(km, km, 1.0 / classes));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(a);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ec(phi_ * phi_.transpose());
    ua_ = ea.eigenvectors();
    uc_ = ec.eigenvectors();
    denom_ = (ea.eigenvalues() * ec.eigenvalues().transpose()) / n_;
    denom_.array() += std::max(lambda_, 1e-10);
  }

  double evaluate(const Eigen::MatrixXd& w, Eigen::MatrixXd* p) const {
    Eigen::MatrixXd local;
    Eigen::MatrixXd& probs = p != nullptr ? *p : local;
    const double loss = softmax_reference(w * phi_, labels_, classes_, probs);
    return loss + 0.5 * lambda_ * w.squaredNorm();
  }

  Eigen::MatrixXd gradient(const Eigen::MatrixXd& w, const Eigen::MatrixXd& p) const {
    return (p - y_) * phi_.transpose() / n_ + lambda_ * w;
  }

  Eigen::MatrixXd hessian_times(const Eigen::MatrixXd& p, const Eigen::MatrixXd& v) const {
    Eigen::MatrixXd t = v * phi_;
    for (Eigen::Index i = 0; i < t.cols(); ++i) {
      const double dot = p.col(i).dot(t.col(i));
      t.col(i) = p.col(i).cwiseProduct(t.col(i)) - dot * p.col(i);
    }
    return t * phi_.transpose() / n_ + lambda_ * v;
  }

  Eigen::MatrixXd precondition(const Eigen::MatrixXd& r) const {
    const Eigen::MatrixXd rotated = ua_.transpose() * r * uc_;
    return ua_ * rotated.cwiseQuotient(denom_) * uc_.transpose();
  }

  // Preconditioned conjugate gradients on H d = -g.
  Eigen::MatrixXd newton_direction(const Eigen::MatrixXd& p, const Eigen::MatrixXd& g) const {
    const double gnorm = g.norm();
    const double target = std::min(0.5, std::sqrt(gnorm)) * gnorm;
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(g.rows(), g.cols());
    Eigen::MatrixXd r = -g;
    Eigen::MatrixXd z = precondition(r);
    Eigen::MatrixXd q = z;
    double rz = (r.array() * z.array()).sum();
    const Eigen::Index limit = std::min<Eigen::Index>(g.size(), 500);
    for (Eigen::Index it = 0; it < limit && r.norm() > target; ++it) {
      const Eigen::MatrixXd hq = hessian_times(p, q);
      const double curvature = (q.array() * hq.array()).sum();
      if (!(curvature > 0.0)) break;
      const double alpha = rz / curvature;
      d += alpha * q;
      r -= alpha * hq;
      z = precondition(r);
      const double rz_next = (r.array() * z.array()).sum();
      q = z + (rz_next / rz) * q;
      rz = rz_next;
    }
    if ((d.array() * g.array()).sum() >= 0.0) d = -precondition(g);
    return d;
  }

 private:
  const Eigen::MatrixXd& phi_;
  std::span<const int> labels_;
  int classes_;
  double lambda_;
  double n_;
  Eigen::MatrixXd y_;
  Eigen::MatrixXd ua_, uc_, denom_;
};

}  // namespace

double mlr_objective(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& features,
                     std::span<const int> labels, int classes, double lambda_w) {
  if (weights.rows() != classes - 1 || weights.cols() != features.rows()) {
    throw InvalidArgument("weight matrix shape does not match features");
  }
  if (static_cast<std::size_t>(features.cols()) != labels.size() || labels.empty()) {
    throw InvalidArgument("feature and label counts differ");
  }
  Eigen::MatrixXd p;
  return softmax_reference(weights * features, labels, classes, p) +
         0.5 * lambda_w * weights.squaredNorm();
}

TrainResult train_mlr(const TrainingSet& data, int classes, const MlrParams& params) {
  check_training_input(data, classes);
  if (!(params.lambda_w >= 0.0) || !std::isfinite(params.lambda_w)) {
    throw InvalidArgument("lambda_w must be a finite nonnegative number");
  }
  if (params.max_iter < 0) throw InvalidArgument("max_iter must be >= 0");
  if (!(params.tol > 0.0)) throw InvalidArgument("tol must be positive");

  TrainResult result;
  MlrModel& model = result.model;
  model.classes = classes;
  FeatureMap& fm = model.features;
  fm.kind = params.feature;
  const Eigen::Index n = data.x.cols();
  fm.mean = data.x.rowwise().mean();
  fm.scale = ((data.x.colwise() - fm.mean).array().square().rowwise().sum() / static_cast<double>(n))
                 .sqrt()
                 .matrix();
  for (Eigen::Index b = 0; b < fm.scale.size(); ++b) {
    if (!(fm.scale[b] > 0.0)) fm.scale[b] = 1.0;
  }
  if (fm.kind == FeatureKind::rbf) {
    fm.anchors = (data.x.colwise() - fm.mean).array().colwise() / fm.scale.array();
    fm.rbf_gamma = params.rbf_gamma.value_or(median_heuristic_gamma(fm.anchors));
    if (!(fm.rbf_gamma > 0.0) || !std::isfinite(fm.rbf_gamma)) {
      throw InvalidArgument("rbf gamma must be positive");
    }
  }

  TrainDiagnostics& diag = result.diagnostics;
  diag.single_class = std::all_of(data.labels.begin(), data.labels.end(),
                                  [&](int y) { return y == data.labels.front(); });
  const Eigen::MatrixXd phi = fm.apply(data.x);
  model.weights = Eigen::MatrixXd::Zero(classes - 1, phi.rows());
  if (classes == 1) {
    diag.converged = true;
    diag.objective_history.push_back(0.0);
    return result;
  }

  const NewtonSolver solver(phi, data.labels, classes, params.lambda_w);
  Eigen::MatrixXd& w = model.weights;
  Eigen::MatrixXd p;
  double f = solver.evaluate(w, &p);
  diag.objective_history.push_back(f);
  Eigen::MatrixXd g = solver.gradient(w, p);
  diag.gradient_norm = g.norm();
  Eigen::MatrixXd p_trial;
  while (diag.iterations < params.max_iter && diag.gradient_norm > params.tol) {
    const Eigen::MatrixXd d = solver.newton_direction(p, g);
    const double slope = (d.array() * g.array()).sum();
    double step = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
      const Eigen::MatrixXd trial = w + step * d;
      const double f_trial = solver.evaluate(trial, &p_trial);
      if (f_trial <= f + 1e-4 * step * slope) {
        w = trial;
        f = f_trial;
        std::swap(p, p_trial);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // no decrease representable in floating point
    ++diag.iterations;
    if (f > diag.objective_history.back()) throw Error("training objective increased");
    diag.objective_history.push_back(f);
    g = solver.gradient(w, p);
    diag.gradient_norm = g.norm();
  }
  diag.converged = diag.gradient_norm <= params.tol;
  if (!w.allFinite()) throw Error("training produced non-finite weights");
  return result;
}

namespace {

// One pixel: raw spectrum -> K scores. All paths share this routine so
// batched and per-pixel predictions agree bit for bit.
struct PixelScorer {
  const MlrModel& model;
  Eigen::VectorXd phi, scratch, scores;

  explicit PixelScorer(const MlrModel& m)
      : model(m), phi(m.features.feature_dim() + 1), scratch(m.features.input_dim()),
        scores(m.classes) {}

  void operator()(const Eigen::Ref<const Eigen::VectorXd>& x) {
    model.features.apply_one(x, phi, scratch);
    scores.head(model.classes - 1).noalias() = model.weights * phi;
    scores[model.classes - 1] = 0.0;
  }
};

void check_model(const MlrModel& model) {
  if (model.classes < 1) throw InvalidArgument("model has no classes");
  if (model.weights.rows() != model.classes - 1 ||
      model.weights.cols() != model.features.feature_dim() + 1) {
    throw InvalidArgument("model weights do not match its feature map");
  }
}

void softmax_column(const Eigen::Ref<const Eigen::VectorXd>& s, Eigen::Ref<Eigen::VectorXd> out) {
  const double top = s.maxCoeff();
  out = (s.array() - top).exp().matrix();
  out /= out.sum();
  const double k = static_cast<double>(s.size());
  out = (kProbabilityFloor + (1.0 - k * kProbabilityFloor) * out.array()).matrix();
}

}  // namespace

Eigen::MatrixXd class_scores(const MlrModel& model, const Eigen::MatrixXd& x) {
  check_model(model);
  if (x.rows() != model.features.input_dim()) throw InvalidArgument("band count mismatch");
  Eigen::MatrixXd out(model.classes, x.cols());
  PixelScorer scorer(model);
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    scorer(x.col(i));
    out.col(i) = scorer.scores;
  }
  return out;
}

Eigen::MatrixXd softmax_probabilities(const Eigen::MatrixXd& scores) {
  if (scores.rows() < 1) throw InvalidArgument("softmax needs at least one class");
  if (static_cast<double>(scores.rows()) * kProbabilityFloor >= 1.0) {
    throw InvalidArgument("too many classes for the probability floor");
  }
  Eigen::MatrixXd out(scores.rows(), scores.cols());
  for (Eigen::Index i = 0; i < scores.cols(); ++i) softmax_column(scores.col(i), out.col(i));
  return out;
}

ProbabilityField predict_probs(const MlrModel& model, const Eigen::MatrixXd& x) {
  return ProbabilityField(softmax_probabilities(class_scores(model, x)));
}

ProbabilityField predict_probs(const MlrModel& model, const HyperCube& cube, int threads) {
  check_model(model);
  if (cube.bands() != model.features.input_dim()) {
    throw InvalidArgument("cube has " + std::to_string(cube.bands()) + " bands, model expects " +
                          std::to_string(model.features.input_dim()));
  }
  Eigen::MatrixXd probs(model.classes, static_cast<Eigen::Index>(cube.pixels()));
  parallel_for(cube.pixels(), threads, [&](std::size_t begin, std::size_t end) {
    PixelScorer scorer(model);
    Eigen::VectorXd x(cube.bands());
    for (std::size_t i = begin; i < end; ++i) {
      for (int b = 0; b < cube.bands(); ++b) x[b] = cube.value(b, i);
      scorer(x);
      softmax_column(scorer.scores, probs.col(static_cast<Eigen::Index>(i)));
    }
  });
  return ProbabilityField(std::move(probs));
}

// ------------------------------------------------------------------ persistence

namespace {

std::string join(const Eigen::VectorXd& v) {
  std::string out;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (j > 0) out += ' ';
    out += format_number(v[j]);
  }
  return out;
}

Eigen::VectorXd split_numbers(const std::string& text, Eigen::Index expected, const fs::path& path) {
  std::istringstream in(text);
  std::vector<double> values;
  std::string token;
  while (in >> token) values.push_back(parse_double(token));
  if (static_cast<Eigen::Index>(values.size()) != expected) {
    throw FormatError(path.string() + ": expected " + std::to_string(expected) + " values");
  }
  return Eigen::Map<Eigen::VectorXd>(values.data(), expected);
}

void save_matrix(const Eigen::MatrixXd& m, const fs::path& path) {
  std::vector<float> values(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      values[static_cast<std::size_t>(r * m.cols() + c)] = static_cast<float>(m(r, c));
    }
  }
  write_container(path, 1, ImageDims{static_cast<int>(m.rows()), static_cast<int>(m.cols())}, values);
}

Eigen::MatrixXd load_matrix(const fs::path& path) {
  const Container c = read_container(path);
  if (c.planes != 1) throw FormatError(path.string() + ": expected one plane");
  Eigen::MatrixXd m(c.dims.height, c.dims.width);
  for (int r = 0; r < c.dims.height; ++r) {
    for (int col = 0; col < c.dims.width; ++col) m(r, col) = c.values[c.dims.index(r, col)];
  }
  if (!m.allFinite()) throw FormatError(path.string() + ": non-finite entries");
  return m;
}

fs::path sidecar(const fs::path& path, const std::string& suffix) {
  fs::path p = path;
  p += suffix;
  return p;
}

}  // namespace

void save_model(const MlrModel& model, const fs::path& path) {
  check_model(model);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  const FeatureMap& fm = model.features;
  out << "hsrc-mlr 1\n"
      << "classes = " << model.classes << "\n"
      << "bands = " << fm.input_dim() << "\n"
      << "feature = " << to_string(fm.kind) << "\n"
      << "gamma = " << format_number(fm.rbf_gamma) << "\n"
      << "anchors = " << (fm.kind == FeatureKind::rbf ? fm.anchors.cols() : 0) << "\n"
      << "mean = " << join(fm.mean) << "\n"
      << "scale = " << join(fm.scale) << "\n";
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
  save_matrix(model.weights, sidecar(path, ".weights"));
  if (fm.kind == FeatureKind::rbf) save_matrix(fm.anchors, sidecar(path, ".anchors"));
}

MlrModel load_model(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "hsrc-mlr 1") throw FormatError(path.string() + ": not a model file");
  std::map<std::string, std::string> keys;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    keys[line.substr(0, eq)] = line.substr(eq + 3);
  }
  auto get = [&](const std::string& key) -> const std::string& {
    const auto it = keys.find(key);
    if (it == keys.end()) throw FormatError(path.string() + ": missing '" + key + "'");
    return it->second;
  };
  MlrModel model;
  model.classes = static_cast<int>(parse_integer(get("classes")));
  const auto bands = static_cast<Eigen::Index>(parse_integer(get("bands")));
  FeatureMap& fm = model.features;
  try {
    fm.kind = parse_feature_kind(get("feature"));
  } catch (const InvalidArgument& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  fm.rbf_gamma = parse_double(get("gamma"));
  fm.mean = split_numbers(get("mean"), bands, path);
  fm.scale = split_numbers(get("scale"), bands, path);
  if (fm.kind == FeatureKind::rbf) {
    fm.anchors = load_matrix(sidecar(path, ".anchors"));
    if (fm.anchors.rows() != bands || fm.anchors.cols() != parse_integer(get("anchors"))) {
      throw FormatError(path.string() + ": anchors do not match the metadata");
    }
  }
  model.weights = load_matrix(sidecar(path, ".weights"));
  try {
    check_model(model);
  } catch (const InvalidArgument& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return model;
}

}  // namespace hsrc
