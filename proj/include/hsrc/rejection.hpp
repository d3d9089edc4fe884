#pragma once

// Rejection driven by the rejection field: evaluation pixels are ordered by
// ascending confidence (ties by ascending pixel index) and the lowest
// floor(r * |eval|) are rejected. The ordering is computed from the field
// alone, so any fraction can be applied without touching the solver.

#include "hsrc/core.hpp"
#include "hsrc/metrics.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hsrc {

// Evaluation pixels sorted by ascending confidence, ties by pixel index.
std::vector<std::size_t> confidence_order(const RejectionField& field,
                                          std::span<const std::size_t> eval);

// Number of pixels rejected at fraction r of m pixels: floor(r m), with a
// 1e-9 guard so decimal fractions such as 0.29 * 100 are not rounded down.
std::size_t rejection_count(double r, std::size_t m);

RejectMask reject_at_fraction(const RejectionField& field, std::span<const std::size_t> eval,
                              double r);

struct SweepRow {
  double requested = 0.0;
  double achieved = 0.0;
  Accuracy accuracy;
  double quality = 0.0;
};

// {0, 0.01, ..., 0.50}.
std::vector<double> default_grid();

// Parses "a:b:step" or a comma-separated list of fractions.
std::vector<double> parse_grid(const std::string& text);

std::vector<SweepRow> sweep_fractions(const RejectionField& field, const Labeling& labeling,
                                      const LabelMap& truth, std::span<const std::size_t> eval,
                                      std::span<const double> grid);

struct OptimalFraction {
  double fraction = 0.0;  // requested grid value
  double quality = 0.0;
  std::size_t grid_index = 0;
};

// argmax of Q over the grid on `validation`; ties go to the smallest fraction.
OptimalFraction estimate_optimal_fraction(const RejectionField& field, const Labeling& labeling,
                                          const LabelMap& truth,
                                          std::span<const std::size_t> validation,
                                          std::span<const double> grid);

// Columns r_requested,r_achieved,A,Q,A_defined and, when flag_column is set,
// a last column of that name holding 1 on the flagged row.
void write_sweep_csv(std::span<const SweepRow> rows, std::ostream& out,
                     const std::optional<std::string>& flag_column = std::nullopt,
                     std::size_t flagged_row = 0);

}  // namespace hsrc
