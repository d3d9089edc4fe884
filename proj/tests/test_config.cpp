#include "hsrc/config.hpp"
#include "hsrc/defaults.hpp"

#include <doctest.h>

#include <sstream>

using namespace hsrc;

namespace {

Config from_text(const std::string& text) {
  Config c;
  std::istringstream in(text);
  c.load(in);
  return c;
}

}  // namespace

TEST_CASE("defaults table populates every key") {
  const Config c;
  CHECK(c.values().size() == kDefaults.size());
  CHECK(c.get_double("segsalsa.lambda_tv") == 2.0);
  CHECK(c.get_int("split.samples_per_class") == 15);
  CHECK_FALSE(c.has("mlr.rbf_gamma"));
  CHECK_FALSE(c.get_optional_double("mlr.rbf_gamma").has_value());
}

TEST_CASE("sections, dotted keys, comments and quotes") {
  const Config c = from_text(
      "# header\n"
      "[segsalsa]\n"
      "lambda_tv = 1.5   # weaker prior\n"
      "mlr.feature = \"linear\"\n"
      "\n"
      "[synth]\n"
      "height=32\n");
  CHECK(c.get_double("segsalsa.lambda_tv") == 1.5);
  CHECK(c.get_string("mlr.feature") == "linear");
  CHECK(c.get_int("synth.height") == 32);
  CHECK(mlr_params_from(c).feature == FeatureKind::linear);
}

TEST_CASE("later sources override earlier ones") {
  Config c = from_text("segsalsa.mu = 0.5\n");
  c.set("segsalsa.mu", "3");
  CHECK(vtv_params_from(c).mu == 3.0);
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(from_text("[segsalsa]\nlamda_tv = 1\n"), ConfigError);
  CHECK_THROWS_AS(from_text("[segsalsa\n"), ConfigError);
  CHECK_THROWS_AS(from_text("just words\n"), ConfigError);
  Config c;
  CHECK_THROWS_AS(c.set("nope", "1"), ConfigError);
  c.set("segsalsa.mu", "abc");
  CHECK_THROWS_AS(vtv_params_from(c), ConfigError);
  c.set("segsalsa.mu", "-1");
  CHECK_THROWS_AS(vtv_params_from(c), ConfigError);
  c.set("split.per_class_validation", "maybe");
  CHECK_THROWS_AS(split_spec_from(c), ConfigError);
  c.set("synth.region", "hexagons");
  CHECK_THROWS_AS(synth_spec_from(c), ConfigError);
  CHECK_THROWS_AS(c.load_file("/nonexistent/config.toml"), ConfigError);
}

TEST_CASE("typed views") {
  Config c;
  c.set("synth.noise_sigma", "0.3");
  c.set("run.seed", "9");
  const SynthSpec s = synth_spec_from(c);
  CHECK(s.noise_sigma == 0.3);
  CHECK(s.seed == 9u);
  c.set("synth.noise_sigma", "");
  CHECK(synth_spec_from(c).noise_sigma == doctest::Approx(sigma_for_bayes_error(4, 1.0, 0.25)));
  c.set("mlr.rbf_gamma", "0.25");
  CHECK(mlr_params_from(c).rbf_gamma == 0.25);
}

TEST_CASE("band exclusion lists") {
  Config c;
  CHECK(exclude_bands_from(c).empty());
  c.set("data.exclude_bands", "5, 1-3,2 ,9-9");
  CHECK(exclude_bands_from(c) == std::vector<int>{1, 2, 3, 5, 9});
  c.set("data.exclude_bands", "4-2");
  CHECK_THROWS_AS(exclude_bands_from(c), ConfigError);
  c.set("data.exclude_bands", "x");
  CHECK_THROWS_AS(exclude_bands_from(c), ConfigError);
}
