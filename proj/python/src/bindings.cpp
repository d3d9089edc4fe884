#include "hsrc/core.hpp"
#include "hsrc/error.hpp"
#include "hsrc/io.hpp"
#include "hsrc/metrics.hpp"
#include "hsrc/mlr.hpp"
#include "hsrc/prox.hpp"
#include "hsrc/rejection.hpp"
#include "hsrc/segsalsa.hpp"
#include "hsrc/synth.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>

namespace py = pybind11;
using namespace hsrc;

// Array conventions on the Python side:
//   cube        float32 (bands, height, width)
//   truth       int     (height, width), 0 = unlabeled
//   fields      float64 (K, height, width)
//   labeling    int     (height, width), labels 1..K
//   pixel lists int     flat row-major indices

namespace {

using F32Array = py::array_t<float, py::array::c_style | py::array::forcecast>;
using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using I32Array = py::array_t<int, py::array::c_style | py::array::forcecast>;

ImageDims dims_2d(const py::buffer_info& info, const char* what) {
  if (info.ndim != 2) throw InvalidArgument(std::string(what) + " must be 2-D (height, width)");
  return ImageDims{static_cast<int>(info.shape[0]), static_cast<int>(info.shape[1])};
}

HyperCube to_cube(const F32Array& a) {
  const py::buffer_info info = a.request();
  if (info.ndim != 3) throw InvalidArgument("cube must be 3-D (bands, height, width)");
  const auto* ptr = static_cast<const float*>(info.ptr);
  return HyperCube(ImageDims{static_cast<int>(info.shape[1]), static_cast<int>(info.shape[2])},
                   static_cast<int>(info.shape[0]), std::vector<float>(ptr, ptr + a.size()));
}

F32Array from_cube(const HyperCube& cube) {
  F32Array out({cube.bands(), cube.height(), cube.width()});
  std::copy(cube.data().begin(), cube.data().end(), out.mutable_data());
  return out;
}

LabelMap to_labels(const I32Array& a, int classes = -1) {
  const ImageDims dims = dims_2d(a.request(), "truth");
  return LabelMap(dims, std::vector<int>(a.data(), a.data() + a.size()), classes);
}

I32Array from_ints(ImageDims dims, std::span<const int> values) {
  I32Array out({dims.height, dims.width});
  std::copy(values.begin(), values.end(), out.mutable_data());
  return out;
}

// (K, H, W) row-major is exactly the K x n column-major Eigen layout transposed.
Eigen::MatrixXd to_matrix(const F64Array& a, ImageDims* dims) {
  const py::buffer_info info = a.request();
  if (info.ndim != 3) throw InvalidArgument("field must be 3-D (classes, height, width)");
  *dims = ImageDims{static_cast<int>(info.shape[1]), static_cast<int>(info.shape[2])};
  const auto k = static_cast<Eigen::Index>(info.shape[0]);
  const auto n = static_cast<Eigen::Index>(dims->pixels());
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  return Eigen::Map<const RowMajor>(a.data(), k, n);
}

F64Array from_matrix(const Eigen::MatrixXd& m, ImageDims dims) {
  F64Array out({static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(dims.height),
                static_cast<py::ssize_t>(dims.width)});
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<RowMajor>(out.mutable_data(), m.rows(), m.cols()) = m;
  return out;
}

HiddenField to_hidden(const F64Array& a) {
  ImageDims dims;
  Eigen::MatrixXd z = to_matrix(a, &dims);
  return HiddenField(dims, std::move(z));
}

Labeling to_labeling(const I32Array& a, int classes) {
  const ImageDims dims = dims_2d(a.request(), "labeling");
  return Labeling(dims, classes, std::vector<int>(a.data(), a.data() + a.size()));
}

std::vector<std::size_t> to_pixels(const std::vector<long long>& v) {
  std::vector<std::size_t> out;
  out.reserve(v.size());
  for (long long i : v) {
    if (i < 0) throw InvalidArgument("pixel indices must be nonnegative");
    out.push_back(static_cast<std::size_t>(i));
  }
  return out;
}

RejectionField to_rejection(const F64Array& confidence, const I32Array& labeling, int classes) {
  const ImageDims dims = dims_2d(confidence.request(), "confidence");
  const Labeling l = to_labeling(labeling, classes);
  if (!(l.dims() == dims)) throw InvalidArgument("confidence and labeling shapes differ");
  return RejectionField(std::vector<double>(confidence.data(), confidence.data() + confidence.size()),
                        l);
}

RejectMask to_mask(const py::array_t<bool, py::array::c_style | py::array::forcecast>& rejected,
                   const std::vector<std::size_t>& eval) {
  RejectMask mask;
  mask.rejected.assign(rejected.data(), rejected.data() + rejected.size());
  mask.evaluated = eval.size();
  for (std::size_t i : eval) {
    if (i >= mask.rejected.size()) throw InvalidArgument("pixel index out of range");
    mask.rejected_count += mask.rejected[i];
  }
  return mask;
}

py::dict solve_diagnostics(const SolveDiagnostics& d) {
  py::dict out;
  out["iterations"] = d.iterations;
  out["converged"] = d.converged;
  out["initial_objective"] = d.initial_objective;
  out["final_objective"] = d.final_objective;
  out["objective_history"] = d.objective_history;
  out["primal_residual_history"] = d.primal_residual_history;
  return out;
}

py::dict accuracy_dict(const Accuracy& a) {
  py::dict out;
  out["value"] = a.value;
  out["defined"] = a.defined;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Robust hyperspectral classification: MLR, SegSALSA and confidence-based rejection";

  // Translators run newest first, so subclasses are registered after their base.
  const auto base = py::register_exception<Error>(m, "HsrcError", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<InfeasibleSplit>(m, "InfeasibleSplit", base.ptr());

  m.attr("PROBABILITY_FLOOR") = kProbabilityFloor;

  // Proximal building blocks.
  m.def("prox_data", &prox_data, py::arg("v"), py::arg("p"), py::arg("mu"),
        "Prox of -ln(p^T z) / mu at v.");
  m.def("project_simplex", &project_simplex, py::arg("v"));
  m.def("group_soft_threshold", &group_soft_threshold, py::arg("a"), py::arg("threshold"));

  // Synthetic scenes.
  m.def("bayes_error", &bayes_error, py::arg("classes"), py::arg("separation"), py::arg("sigma"));
  m.def("sigma_for_bayes_error", &sigma_for_bayes_error, py::arg("classes"), py::arg("separation"),
        py::arg("target_error"));
  m.def(
      "synth",
      [](int height, int width, int classes, int bands, double separation, double bayes_error_target,
         std::optional<double> noise_sigma, const std::string& region, int block_min, int block_max,
         double split_probability, int voronoi_sites, std::uint64_t seed) {
        SynthSpec spec;
        spec.height = height;
        spec.width = width;
        spec.classes = classes;
        spec.bands = bands;
        spec.separation = separation;
        spec.noise_sigma = noise_sigma ? *noise_sigma
                                       : sigma_for_bayes_error(classes, separation, bayes_error_target);
        spec.region = parse_region_kind(region);
        spec.block_min = block_min;
        spec.block_max = block_max;
        spec.split_probability = split_probability;
        spec.voronoi_sites = voronoi_sites;
        spec.seed = seed;
        const SynthScene scene = generate(spec);
        py::dict out;
        out["cube"] = from_cube(scene.cube);
        out["truth"] = from_ints(scene.truth.dims(), scene.truth.labels());
        out["class_means"] = scene.class_means;
        out["noise_sigma"] = spec.noise_sigma;
        return out;
      },
      py::arg("height") = 64, py::arg("width") = 64, py::arg("classes") = 4, py::arg("bands") = 20,
      py::arg("separation") = 1.0, py::arg("bayes_error") = 0.25, py::arg("noise_sigma") = py::none(),
      py::arg("region") = "blocks", py::arg("block_min") = 3, py::arg("block_max") = 16,
      py::arg("split_probability") = 0.6, py::arg("voronoi_sites") = 12, py::arg("seed") = 0,
      "Piecewise-constant Gaussian scene; returns dict(cube, truth, class_means, noise_sigma).");

  // Splits.
  m.def(
      "make_splits",
      [](const I32Array& truth, int samples_per_class, int validation_samples, std::uint64_t seed,
         bool per_class_validation) {
        SplitSpec spec{samples_per_class, validation_samples, seed, per_class_validation};
        const Splits s = make_splits(to_labels(truth), spec);
        py::dict out;
        out["train"] = s.train;
        out["validation"] = s.validation;
        out["test"] = s.test;
        out["warnings"] = s.warnings;
        return out;
      },
      py::arg("truth"), py::arg("samples_per_class") = 15, py::arg("validation_samples") = 50,
      py::arg("seed") = 0, py::arg("per_class_validation") = false);

  // MLR.
  py::class_<MlrModel>(m, "MlrModel")
      .def_readonly("classes", &MlrModel::classes)
      .def_readonly("weights", &MlrModel::weights)
      .def_property_readonly("bands", [](const MlrModel& model) { return model.features.input_dim(); })
      .def_property_readonly("feature",
                             [](const MlrModel& model) { return to_string(model.features.kind); })
      .def_property_readonly("rbf_gamma", [](const MlrModel& model) { return model.features.rbf_gamma; })
      .def("save", [](const MlrModel& model, const std::filesystem::path& p) { save_model(model, p); })
      .def_static("load", &load_model, py::arg("path"));

  m.def(
      "train_mlr",
      [](const F32Array& cube, const I32Array& truth, const std::vector<long long>& pixels,
         double lambda_w, const std::string& feature, std::optional<double> rbf_gamma, int max_iter,
         double tol) {
        const LabelMap labels = to_labels(truth);
        MlrParams params;
        params.lambda_w = lambda_w;
        params.feature = parse_feature_kind(feature);
        params.rbf_gamma = rbf_gamma;
        params.max_iter = max_iter;
        params.tol = tol;
        const std::vector<std::size_t> px = to_pixels(pixels);
        TrainResult result = train_mlr(training_set(to_cube(cube), labels, px), labels.classes(), params);
        py::dict diag;
        diag["iterations"] = result.diagnostics.iterations;
        diag["converged"] = result.diagnostics.converged;
        diag["gradient_norm"] = result.diagnostics.gradient_norm;
        diag["objective_history"] = result.diagnostics.objective_history;
        diag["single_class"] = result.diagnostics.single_class;
        return py::make_tuple(std::move(result.model), diag);
      },
      py::arg("cube"), py::arg("truth"), py::arg("pixels"), py::arg("lambda_w") = 1e-3,
      py::arg("feature") = "rbf", py::arg("rbf_gamma") = py::none(), py::arg("max_iter") = 100,
      py::arg("tol") = 1e-6, "Returns (model, diagnostics).");

  m.def(
      "predict_probs",
      [](const MlrModel& model, const F32Array& cube, int threads) {
        const HyperCube c = to_cube(cube);
        return from_matrix(predict_probs(model, c, threads).matrix(), c.dims());
      },
      py::arg("model"), py::arg("cube"), py::arg("threads") = 1, "(K, height, width) probabilities.");

  // SegSALSA.
  m.def(
      "segsalsa",
      [](const F64Array& probs, double lambda_tv, double mu, int max_iter, double tol_primal,
         int threads, std::optional<F64Array> initial) {
        ImageDims dims;
        const ProbabilityField p(to_matrix(probs, &dims));
        VtvParams params;
        params.lambda_tv = lambda_tv;
        params.mu = mu;
        params.max_iter = max_iter;
        params.tol_primal = tol_primal;
        params.threads = threads;
        SegsalsaResult result = [&] {
          py::gil_scoped_release release;
          if (!initial) return segsalsa(p, dims, params);
          ImageDims init_dims;
          const Eigen::MatrixXd z0 = to_matrix(*initial, &init_dims);
          if (!(init_dims == dims)) throw InvalidArgument("initial field shape differs");
          return segsalsa(p, dims, params, z0);
        }();
        return py::make_tuple(from_matrix(result.field.matrix(), dims),
                              solve_diagnostics(result.diagnostics));
      },
      py::arg("probs"), py::arg("lambda_tv") = 2.0, py::arg("mu") = 1.0, py::arg("max_iter") = 200,
      py::arg("tol_primal") = 1e-4, py::arg("threads") = 1, py::arg("initial") = py::none(),
      "Returns (hidden_field, diagnostics).");
  m.def(
      "segsalsa_objective",
      [](const F64Array& probs, const F64Array& field, double lambda_tv) {
        ImageDims dims, zdims;
        const ProbabilityField p(to_matrix(probs, &dims));
        const Eigen::MatrixXd z = to_matrix(field, &zdims);
        if (!(dims == zdims)) throw InvalidArgument("field shapes differ");
        return segsalsa_objective(p, dims, z, lambda_tv);
      },
      py::arg("probs"), py::arg("field"), py::arg("lambda_tv") = 2.0);

  m.def(
      "argmax_labeling",
      [](const F64Array& field) {
        ImageDims dims;
        const Eigen::MatrixXd z = to_matrix(field, &dims);
        const Labeling l = argmax_columns(dims, z);
        return from_ints(dims, l.labels());
      },
      py::arg("field"), "Labels 1..K; ties go to the lower class.");

  // Rejection.
  m.def(
      "rejection_field",
      [](const F64Array& field) {
        const HiddenField z = to_hidden(field);
        const RejectionField rf = rejection_field(z);
        F64Array conf({z.dims().height, z.dims().width});
        std::copy(rf.confidence().begin(), rf.confidence().end(), conf.mutable_data());
        return py::make_tuple(conf, from_ints(z.dims(), rf.labeling().labels()));
      },
      py::arg("field"), "Returns (confidence, labeling).");
  m.def("rejection_count", &rejection_count, py::arg("r"), py::arg("m"));
  m.def(
      "reject_at_fraction",
      [](const F64Array& confidence, const I32Array& labeling, int classes,
         const std::vector<long long>& eval, double r) {
        const RejectionField rf = to_rejection(confidence, labeling, classes);
        const std::vector<std::size_t> px = to_pixels(eval);
        const RejectMask mask = reject_at_fraction(rf, px, r);
        py::array_t<bool> out({rf.labeling().dims().height, rf.labeling().dims().width});
        std::copy(mask.rejected.begin(), mask.rejected.end(), out.mutable_data());
        return out;
      },
      py::arg("confidence"), py::arg("labeling"), py::arg("classes"), py::arg("eval"), py::arg("r"),
      "Boolean (height, width) mask of the floor(r m) least confident pixels of eval.");

  m.def("default_grid", &default_grid);
  m.def("parse_grid", &parse_grid, py::arg("text"));
  m.def(
      "sweep",
      [](const F64Array& field, const I32Array& truth, const std::vector<long long>& eval,
         std::optional<std::vector<double>> grid) {
        const HiddenField z = to_hidden(field);
        const RejectionField rf = rejection_field(z);
        const std::vector<double> g = grid ? *grid : default_grid();
        const std::vector<std::size_t> px = to_pixels(eval);
        const auto rows = sweep_fractions(rf, rf.labeling(), to_labels(truth, z.classes()), px, g);
        py::dict out;
        std::vector<double> requested, achieved, accuracy, quality;
        std::vector<bool> defined;
        for (const SweepRow& row : rows) {
          requested.push_back(row.requested);
          achieved.push_back(row.achieved);
          accuracy.push_back(row.accuracy.value);
          defined.push_back(row.accuracy.defined);
          quality.push_back(row.quality);
        }
        out["r_requested"] = requested;
        out["r_achieved"] = achieved;
        out["A"] = accuracy;
        out["A_defined"] = defined;
        out["Q"] = quality;
        return out;
      },
      py::arg("field"), py::arg("truth"), py::arg("eval"), py::arg("grid") = py::none(),
      "Rejection sweep of the argmax labeling; dict of equal-length lists.");
  m.def(
      "estimate_optimal_fraction",
      [](const F64Array& field, const I32Array& truth, const std::vector<long long>& validation,
         std::optional<std::vector<double>> grid) {
        const HiddenField z = to_hidden(field);
        const RejectionField rf = rejection_field(z);
        const std::vector<double> g = grid ? *grid : default_grid();
        const std::vector<std::size_t> px = to_pixels(validation);
        const OptimalFraction best =
            estimate_optimal_fraction(rf, rf.labeling(), to_labels(truth, z.classes()), px, g);
        py::dict out;
        out["fraction"] = best.fraction;
        out["quality"] = best.quality;
        out["grid_index"] = best.grid_index;
        return out;
      },
      py::arg("field"), py::arg("truth"), py::arg("validation"), py::arg("grid") = py::none());

  // Metrics over an explicit rejection mask.
  m.def(
      "nonrejected_accuracy",
      [](const I32Array& labeling, const I32Array& truth, const py::array_t<bool, py::array::c_style | py::array::forcecast>& rejected,
         const std::vector<long long>& eval) {
        const LabelMap t = to_labels(truth);
        const std::vector<std::size_t> px = to_pixels(eval);
        return accuracy_dict(nonrejected_accuracy(to_labeling(labeling, t.classes()), t,
                                                  to_mask(rejected, px), px));
      },
      py::arg("labeling"), py::arg("truth"), py::arg("rejected"), py::arg("eval"),
      "dict(value, defined); value is 1 when every pixel is rejected.");
  m.def(
      "classification_quality",
      [](const I32Array& labeling, const I32Array& truth, const py::array_t<bool, py::array::c_style | py::array::forcecast>& rejected,
         const std::vector<long long>& eval) {
        const LabelMap t = to_labels(truth);
        const std::vector<std::size_t> px = to_pixels(eval);
        return classification_quality(to_labeling(labeling, t.classes()), t, to_mask(rejected, px), px);
      },
      py::arg("labeling"), py::arg("truth"), py::arg("rejected"), py::arg("eval"));
}
