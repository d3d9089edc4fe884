// hsrc: synthetic scenes, MLR training, contextual classification and
// classification with rejection, as composable subcommands.

#include "hsrc/config.hpp"
#include "hsrc/csv.hpp"
#include "hsrc/defaults.hpp"
#include "hsrc/io.hpp"
#include "hsrc/metrics.hpp"
#include "hsrc/mlr.hpp"
#include "hsrc/rejection.hpp"
#include "hsrc/render.hpp"
#include "hsrc/segsalsa.hpp"
#include "hsrc/synth.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>

namespace fs = std::filesystem;
using namespace hsrc;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kBadConfig = 2, kIo = 3, kInfeasible = 4 };

struct Overrides {
  std::string config_file;
  std::optional<long long> seed;
  std::optional<int> threads;
  std::optional<double> lambda_tv;
  std::optional<double> mu;
  std::optional<std::string> fraction;
  std::optional<std::string> grid;
  std::optional<std::string> format;
};

Config build_config(const Overrides& o) {
  Config c;
  if (!o.config_file.empty()) c.load_file(o.config_file);
  if (o.seed) c.set("run.seed", std::to_string(*o.seed));
  if (o.threads) c.set("run.threads", std::to_string(*o.threads));
  if (o.lambda_tv) c.set("segsalsa.lambda_tv", format_number(*o.lambda_tv));
  if (o.mu) c.set("segsalsa.mu", format_number(*o.mu));
  if (o.fraction) c.set("rejection.fraction", *o.fraction);
  if (o.grid) c.set("rejection.grid", *o.grid);
  if (o.format) c.set("run.format", *o.format);
  return c;
}

int threads_of(const Config& c) {
  const long long t = c.get_int("run.threads");
  if (t < 1) throw ConfigError("run.threads must be at least 1");
  return static_cast<int>(t);
}

std::vector<double> grid_of(const Config& c) {
  try {
    return parse_grid(c.get_string("rejection.grid"));
  } catch (const Error& e) {
    throw ConfigError(std::string("rejection.grid: ") + e.what());
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string());
}

std::ofstream open_text(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void close_text(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

HyperCube read_cube(const Config& c, const fs::path& path, const LabelMap* shape) {
  std::optional<ImageDims> dims;
  if (shape != nullptr) dims = shape->dims();
  HyperCube cube = load_cube(path, cube_format_for(path), dims);
  const std::vector<int> excluded = exclude_bands_from(c);
  if (excluded.empty()) return cube;
  try {
    return cube.without_bands(excluded);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("data.exclude_bands: ") + e.what());
  }
}

void check_splits(const Splits& s, const LabelMap& truth) {
  for (const auto* list : {&s.train, &s.validation, &s.test}) {
    for (std::size_t i : *list) {
      if (i >= truth.pixels() || truth[i] == 0) {
        throw FormatError("split manifest lists pixel " + std::to_string(i) +
                          ", which is not a labeled pixel of the truth map");
      }
    }
  }
}

// ------------------------------------------------------------------ synth

int cmd_synth(const Config& c, const fs::path& out) {
  const SynthSpec spec = synth_spec_from(c);
  const CubeFormat format = [&] {
    try {
      return parse_cube_format(c.get_string("run.format"));
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("run.format: ") + e.what());
    }
  }();
  const SynthScene scene = generate(spec);
  ensure_dir(out);
  const char* name = format == CubeFormat::envi_bsq ? "cube.hdr"
                     : format == CubeFormat::csv_matrix ? "cube.csv"
                                                        : "cube.f32";
  save_cube(scene.cube, out / name, format);
  save_labels(scene.truth, out / "truth.pgm", LabelFormat::pgm);
  const fs::path meta_path = out / "synth_meta.txt";
  std::ofstream meta = open_text(meta_path);
  meta << "height = " << spec.height << "\nwidth = " << spec.width << "\nclasses = " << spec.classes
       << "\nbands = " << spec.bands << "\nnoise_sigma = " << format_number(spec.noise_sigma)
       << "\nbayes_error = " << format_number(bayes_error(spec.classes, spec.separation, spec.noise_sigma))
       << "\nregion = " << to_string(spec.region) << "\nseed = " << spec.seed
       << "\nlayout_attempts = " << scene.layout_attempts << "\n";
  close_text(meta, meta_path);
  std::cout << "wrote " << (out / name).string() << " and " << (out / "truth.pgm").string() << "\n";
  return kOk;
}

// ------------------------------------------------------------------ train

int cmd_train(const Config& c, const fs::path& cube_path, const fs::path& truth_path,
              const fs::path& out) {
  const SplitSpec split = split_spec_from(c);
  const MlrParams params = mlr_params_from(c);
  const LabelMap truth = load_labels(truth_path, label_format_for(truth_path));
  const HyperCube cube = read_cube(c, cube_path, &truth);
  if (!(cube.dims() == truth.dims())) throw FormatError("cube and truth map differ in size");
  const Splits splits = make_splits(truth, split);
  for (const std::string& w : splits.warnings) std::cerr << "warning: " << w << "\n";
  const TrainResult result = train_mlr(training_set(cube, truth, splits.train), truth.classes(), params);
  if (result.diagnostics.single_class) {
    std::cerr << "warning: every training sample has the same label\n";
  }
  if (!result.diagnostics.converged) {
    std::cerr << "warning: MLR training stopped before reaching the gradient tolerance\n";
  }
  ensure_dir(out);
  save_model(result.model, out / "model.txt");
  save_splits(splits, out / "splits.csv");
  const fs::path meta_path = out / "train_meta.txt";
  std::ofstream meta = open_text(meta_path);
  meta << "classes = " << truth.classes() << "\nbands = " << cube.bands()
       << "\nexclude_bands = " << c.get_string("data.exclude_bands") << "\ntrain = " << splits.train.size()
       << "\nvalidation = " << splits.validation.size() << "\ntest = " << splits.test.size()
       << "\niterations = " << result.diagnostics.iterations
       << "\nobjective = " << format_number(result.diagnostics.objective_history.back())
       << "\ngradient_norm = " << format_number(result.diagnostics.gradient_norm)
       << "\nconverged = " << (result.diagnostics.converged ? 1 : 0)
       << "\nsingle_class = " << (result.diagnostics.single_class ? 1 : 0)
       << "\nwarnings = " << splits.warnings.size() << "\n";
  close_text(meta, meta_path);
  std::cout << "trained " << truth.classes() << "-class model on " << splits.train.size()
            << " pixels\n";
  return kOk;
}

// ------------------------------------------------------------------ classify

int cmd_classify(const Config& c, const fs::path& cube_path, const fs::path& model_path,
                 const fs::path& out) {
  const VtvParams params = vtv_params_from(c);
  const int threads = threads_of(c);
  const MlrModel model = load_model(model_path);
  const HyperCube cube = read_cube(c, cube_path, nullptr);
  const ProbabilityField probs = predict_probs(model, cube, threads);
  const SegsalsaResult result = segsalsa(probs, cube.dims(), params);
  const SolveDiagnostics& d = result.diagnostics;
  ensure_dir(out);
  save_hidden_field(result.field, out / "hidden_field.f32");
  save_labeling(argmax_labeling(result.field), out / "labeling.pgm");
  save_labeling(argmax_columns(cube.dims(), probs.matrix()), out / "pixelwise_labeling.pgm");
  const fs::path diag_path = out / "diagnostics.csv";
  std::ofstream diag = open_text(diag_path);
  CsvWriter csv(diag);
  csv.row("iteration", "objective", "primal_residual");
  for (int it = 0; it < d.iterations; ++it) {
    csv.row(it + 1, d.objective_history[static_cast<std::size_t>(it)],
            d.primal_residual_history[static_cast<std::size_t>(it)]);
  }
  close_text(diag, diag_path);
  const fs::path meta_path = out / "classify_meta.txt";
  std::ofstream meta = open_text(meta_path);
  meta << "iterations = " << d.iterations << "\nconverged = " << (d.converged ? 1 : 0)
       << "\ninitial_objective = " << format_number(d.initial_objective)
       << "\nfinal_objective = " << format_number(d.final_objective)
       << "\nfinal_primal_residual = "
       << format_number(d.primal_residual_history.empty() ? 0.0 : d.primal_residual_history.back())
       << "\nlambda_tv = " << format_number(params.lambda_tv) << "\nmu = " << format_number(params.mu)
       << "\n";
  close_text(meta, meta_path);
  if (!d.converged) {
    std::cerr << "warning: SegSALSA reached max_iter = " << params.max_iter
              << " before the residual tolerance; the best iterate was kept\n";
  }
  std::cout << "classified " << cube.pixels() << " pixels in " << d.iterations << " iterations\n";
  return kOk;
}

// ------------------------------------------------------------------ sweep / evaluate

struct Evaluation {
  HiddenField field;
  Labeling labeling;
  LabelMap truth;
  Splits splits;
};

Evaluation load_evaluation(const fs::path& field_path, const fs::path& truth_path,
                           const fs::path& splits_path, const std::string& labeling_path) {
  HiddenField field = load_hidden_field(field_path);
  LabelMap truth = load_labels(truth_path, label_format_for(truth_path));
  if (!(field.dims() == truth.dims())) throw FormatError("hidden field and truth map differ in size");
  Labeling labeling = labeling_path.empty() ? argmax_labeling(field)
                                            : load_labeling(labeling_path, field.classes());
  if (!(labeling.dims() == field.dims())) throw FormatError("labeling and field differ in size");
  Splits splits = load_splits(splits_path);
  check_splits(splits, truth);
  if (splits.test.empty()) throw FormatError("split manifest has no test pixels");
  return Evaluation{std::move(field), std::move(labeling), std::move(truth), std::move(splits)};
}

RejectionField field_for(const Evaluation& e) {
  std::vector<double> confidence(e.field.pixels());
  const Eigen::MatrixXd& z = e.field.matrix();
  for (std::size_t i = 0; i < confidence.size(); ++i) {
    confidence[i] = z(e.labeling[i] - 1, static_cast<Eigen::Index>(i));
  }
  return RejectionField(std::move(confidence), e.labeling);
}

const std::vector<std::size_t>& estimation_set(const Evaluation& e, const std::string& which) {
  if (which == "validation") {
    if (e.splits.validation.empty()) {
      throw ConfigError("no validation pixels to estimate r* on; use --estimate-on test");
    }
    return e.splits.validation;
  }
  if (which == "test") return e.splits.test;
  throw ConfigError("rejection.estimate_on must be validation or test");
}

int cmd_sweep(const Config& c, const Evaluation& e, const fs::path& out) {
  const std::vector<double> grid = grid_of(c);
  const std::string which = c.get_string("rejection.estimate_on");
  const RejectionField rf = field_for(e);
  const std::vector<SweepRow> rows = sweep_fractions(rf, e.labeling, e.truth, e.splits.test, grid);
  const OptimalFraction best = estimate_optimal_fraction(rf, e.labeling, e.truth, estimation_set(e, which), grid);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  std::ofstream file = open_text(out);
  write_sweep_csv(rows, file, "r_star_" + which, best.grid_index);
  close_text(file, out);
  std::cout << "r* = " << format_number(best.fraction) << " (" << which << " Q = "
            << format_number(best.quality) << ", test Q = " << format_number(rows[best.grid_index].quality)
            << ")\n";
  return kOk;
}

int cmd_evaluate(const Config& c, const Evaluation& e, const fs::path& out) {
  const RejectionField rf = field_for(e);
  const std::string fraction_text = c.get_string("rejection.fraction");
  double r = 0.0;
  if (fraction_text == "auto") {
    r = estimate_optimal_fraction(rf, e.labeling, e.truth,
                                  estimation_set(e, c.get_string("rejection.estimate_on")), grid_of(c))
            .fraction;
  } else {
    r = c.get_double("rejection.fraction");
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("rejection.fraction must lie in [0, 1]");
  }
  const RejectMask mask = reject_at_fraction(rf, e.splits.test, r);
  const RejectionReport report = full_report(e.labeling, e.truth, mask, e.splits.test);
  ensure_dir(out);
  const fs::path report_path = out / "report.csv";
  std::ofstream file = open_text(report_path);
  write_report_csv(report, file);
  close_text(file, report_path);
  const auto palette = label_palette();
  const ImageDims dims = e.field.dims();
  write_indexed_png(out / "classification.png", dims, labeling_indices(e.labeling), palette);
  write_indexed_png(out / "overlay.png", dims, overlay_indices(e.labeling, mask), palette);
  write_pgm(out / "rejection_field.pgm", dims, rejection_field_gray(rf));
  std::cout << "r = " << format_number(r) << ": rejected " << mask.rejected_count << " of "
            << mask.evaluated << ", A = " << format_number(report.accuracy.value)
            << ", Q = " << format_number(report.quality) << "\n";
  return kOk;
}

std::string defaults_table() {
  std::string out = "Defaults (section.key = value):\n";
  for (const DefaultEntry& d : kDefaults) {
    out += "  " + std::string(d.key) + " = " + (d.value.empty() ? "(unset)" : std::string(d.value)) +
           "\n      " + std::string(d.help) + "\n";
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperspectral classification with context and rejection"};
  app.require_subcommand(1);
  app.fallthrough();
  app.footer(defaults_table());

  Overrides o;
  app.add_option("--config", o.config_file, "key = value configuration file");
  app.add_option("--seed", o.seed, "run.seed");
  app.add_option("--threads", o.threads, "run.threads");
  app.add_option("--lambda-tv", o.lambda_tv, "segsalsa.lambda_tv");
  app.add_option("--mu", o.mu, "segsalsa.mu");
  app.add_option("--fraction", o.fraction, "rejection.fraction (a number or 'auto')");
  app.add_option("--grid", o.grid, "rejection.grid");
  app.add_option("--format", o.format, "run.format");

  fs::path out, cube, truth, model, field, splits;
  std::string labeling, estimate_on;

  auto* synth = app.add_subcommand("synth", "generate a synthetic scene and its ground truth");
  synth->add_option("--out", out, "output directory")->required();

  auto* train = app.add_subcommand("train", "draw splits and train the MLR model");
  train->add_option("--cube", cube, "hyperspectral cube (.f32, .hdr or .csv)")->required();
  train->add_option("--truth", truth, "ground-truth labels (.pgm or .csv)")->required();
  train->add_option("--out", out, "output directory")->required();

  auto* classify = app.add_subcommand("classify", "MLR probabilities and the SegSALSA hidden field");
  classify->add_option("--cube", cube, "hyperspectral cube")->required();
  classify->add_option("--model", model, "model.txt written by train")->required();
  classify->add_option("--out", out, "output directory")->required();

  auto* sweep = app.add_subcommand("sweep", "accuracy and quality over a grid of rejected fractions");
  auto* evaluate = app.add_subcommand("evaluate", "report and maps at one rejected fraction");
  for (auto* sub : {sweep, evaluate}) {
    sub->add_option("--field", field, "hidden_field.f32 written by classify")->required();
    sub->add_option("--truth", truth, "ground-truth labels")->required();
    sub->add_option("--splits", splits, "splits.csv written by train")->required();
    sub->add_option("--labeling", labeling, "labeling (default: argmax of the field)");
    sub->add_option("--estimate-on", estimate_on, "rejection.estimate_on: validation or test");
  }
  sweep->add_option("--out", out, "output CSV file")->required();
  evaluate->add_option("--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadConfig;
  }

  try {
    Config config = build_config(o);
    if (!estimate_on.empty()) config.set("rejection.estimate_on", estimate_on);
    if (synth->parsed()) return cmd_synth(config, out);
    if (train->parsed()) return cmd_train(config, cube, truth, out);
    if (classify->parsed()) return cmd_classify(config, cube, model, out);
    if (sweep->parsed()) return cmd_sweep(config, load_evaluation(field, truth, splits, labeling), out);
    if (evaluate->parsed()) {
      return cmd_evaluate(config, load_evaluation(field, truth, splits, labeling), out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kBadConfig;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kBadConfig;
  } catch (const InfeasibleSplit& e) {
    std::cerr << "infeasible split: " << e.what() << "\n";
    return kInfeasible;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const FormatError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
