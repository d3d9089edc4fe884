#pragma once

// Every configurable default in one table. Keys are "section.name"; the
// same keys are accepted in config files (under [section] headers) and
// mirrored by command-line flags where one exists.

#include <array>
#include <string_view>

namespace hsrc {

struct DefaultEntry {
  std::string_view key;
  std::string_view value;  // empty: unset unless given
  std::string_view help;
};

inline constexpr std::array kDefaults{
    DefaultEntry{"run.seed", "0", "seed for scene generation and sampling"},
    DefaultEntry{"run.threads", "1", "worker threads for prediction and the solver"},
    DefaultEntry{"run.format", "flat-f32", "cube format written by synth: flat-f32, envi-bsq, csv-matrix"},

    DefaultEntry{"data.exclude_bands", "", "0-based band indices dropped on load, e.g. 103-107,149-162,219"},

    DefaultEntry{"synth.height", "64", "scene rows"},
    DefaultEntry{"synth.width", "64", "scene columns"},
    DefaultEntry{"synth.classes", "4", "number of classes K"},
    DefaultEntry{"synth.bands", "20", "spectral bands d"},
    DefaultEntry{"synth.separation", "1", "distance of each class mean from the common base"},
    DefaultEntry{"synth.bayes_error", "0.25", "target pixelwise Bayes error used to set sigma"},
    DefaultEntry{"synth.noise_sigma", "", "noise std; overrides synth.bayes_error when set"},
    DefaultEntry{"synth.region", "blocks", "region layout: blocks or voronoi"},
    DefaultEntry{"synth.block_min", "3", "blocks: smallest side produced by a split"},
    DefaultEntry{"synth.block_max", "16", "blocks: longest side left unsplit"},
    DefaultEntry{"synth.split_probability", "0.6", "blocks: chance of splitting a splittable block"},
    DefaultEntry{"synth.voronoi_sites", "12", "voronoi: number of sites"},

    DefaultEntry{"split.samples_per_class", "15", "training pixels drawn per class"},
    DefaultEntry{"split.validation_samples", "50", "validation pixels drawn from the remainder"},
    DefaultEntry{"split.per_class_validation", "false", "draw validation_samples from every class"},

    DefaultEntry{"mlr.feature", "rbf", "feature map: rbf or linear"},
    DefaultEntry{"mlr.rbf_gamma", "", "RBF width; median heuristic when unset"},
    DefaultEntry{"mlr.lambda_w", "0.001", "weight regularization"},
    DefaultEntry{"mlr.max_iter", "100", "Newton iterations"},
    DefaultEntry{"mlr.tol", "1e-6", "gradient-norm stopping tolerance"},

    DefaultEntry{"segsalsa.lambda_tv", "2", "weight of the vector total variation prior"},
    DefaultEntry{"segsalsa.mu", "1", "augmented Lagrangian penalty"},
    DefaultEntry{"segsalsa.max_iter", "200", "ADMM iterations"},
    DefaultEntry{"segsalsa.tol_primal", "1e-4", "relative primal residual tolerance"},

    DefaultEntry{"rejection.grid", "0:0.5:0.01", "rejected fractions swept: start:stop:step or a list"},
    DefaultEntry{"rejection.estimate_on", "validation", "set used to pick r*: validation or test"},
    DefaultEntry{"rejection.fraction", "0", "fraction rejected by evaluate, or 'auto' for r* on validation"},
};

}  // namespace hsrc
