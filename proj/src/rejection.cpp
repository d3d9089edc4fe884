#include "hsrc/rejection.hpp"

#include "hsrc/csv.hpp"
#include "hsrc/error.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace hsrc {

namespace {

void check_fraction(double r) {
  if (!(r >= 0.0 && r <= 1.0)) throw InvalidArgument("fraction must lie in [0, 1]");
}

void check_grid(std::span<const double> grid) {
  if (grid.empty()) throw InvalidArgument("empty fraction grid");
  for (std::size_t j = 0; j < grid.size(); ++j) {
    check_fraction(grid[j]);
    if (j > 0 && grid[j] < grid[j - 1]) throw InvalidArgument("fraction grid must be sorted");
  }
}

}  // namespace

std::vector<std::size_t> confidence_order(const RejectionField& field,
                                          std::span<const std::size_t> eval) {
  std::vector<std::size_t> order(eval.begin(), eval.end());
  for (std::size_t i : order) {
    if (i >= field.pixels()) throw InvalidArgument("evaluation index out of range");
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ca = field.confidence(a);
    const double cb = field.confidence(b);
    return ca < cb || (ca == cb && a < b);
  });
  if (std::adjacent_find(order.begin(), order.end()) != order.end()) {
    throw InvalidArgument("evaluation indices must be distinct");
  }
  return order;
}

std::size_t rejection_count(double r, std::size_t m) {
  check_fraction(r);
  const double scaled = r * static_cast<double>(m);
  const auto count = static_cast<std::size_t>(std::floor(scaled + 1e-9 * std::max(1.0, scaled)));
  return std::min(count, m);
}

namespace {

RejectMask mask_from_order(const std::vector<std::size_t>& order, std::size_t pixels, double r) {
  RejectMask mask;
  mask.rejected.assign(pixels, 0);
  mask.evaluated = order.size();
  mask.requested = r;
  mask.rejected_count = rejection_count(r, order.size());
  for (std::size_t j = 0; j < mask.rejected_count; ++j) mask.rejected[order[j]] = 1;
  return mask;
}

}  // namespace

RejectMask reject_at_fraction(const RejectionField& field, std::span<const std::size_t> eval,
                              double r) {
  check_fraction(r);
  return mask_from_order(confidence_order(field, eval), field.pixels(), r);
}

std::vector<double> default_grid() {
  std::vector<double> grid;
  for (int j = 0; j <= 50; ++j) grid.push_back(j / 100.0);
  return grid;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  if (text.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(parse_double(item));
    if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) {
      throw InvalidArgument("grid range must be start:stop:step with step > 0");
    }
    const auto steps = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
    for (long j = 0; j <= steps; ++j) grid.push_back(parts[0] + static_cast<double>(j) * parts[2]);
  } else {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) grid.push_back(parse_double(item));
  }
  check_grid(grid);
  return grid;
}

std::vector<SweepRow> sweep_fractions(const RejectionField& field, const Labeling& labeling,
                                      const LabelMap& truth, std::span<const std::size_t> eval,
                                      std::span<const double> grid) {
  check_grid(grid);
  // Unlabeled pixels are not part of any evaluation.
  std::vector<std::size_t> labeled;
  for (std::size_t i : eval) {
    if (i < truth.pixels() && truth[i] != 0) labeled.push_back(i);
  }
  if (labeled.empty()) throw InvalidArgument("empty evaluation set");
  const std::vector<std::size_t> order = confidence_order(field, labeled);
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (double r : grid) {
    const RejectMask mask = mask_from_order(order, field.pixels(), r);
    const DecisionCounts counts = count_decisions(labeling, truth, mask, labeled);
    rows.push_back(SweepRow{r, mask.achieved(), nonrejected_accuracy(counts),
                            classification_quality(counts)});
  }
  return rows;
}

OptimalFraction estimate_optimal_fraction(const RejectionField& field, const Labeling& labeling,
                                          const LabelMap& truth,
                                          std::span<const std::size_t> validation,
                                          std::span<const double> grid) {
  if (validation.empty()) throw InvalidArgument("empty validation set");
  const std::vector<SweepRow> rows = sweep_fractions(field, labeling, truth, validation, grid);
  OptimalFraction best{rows[0].requested, rows[0].quality, 0};
  for (std::size_t j = 1; j < rows.size(); ++j) {
    if (rows[j].quality > best.quality) best = OptimalFraction{rows[j].requested, rows[j].quality, j};
  }
  return best;
}

void write_sweep_csv(std::span<const SweepRow> rows, std::ostream& out,
                     const std::optional<std::string>& flag_column, std::size_t flagged_row) {
  CsvWriter csv(out);
  if (flag_column) {
    csv.row("r_requested", "r_achieved", "A", "Q", "A_defined", *flag_column);
  } else {
    csv.row("r_requested", "r_achieved", "A", "Q", "A_defined");
  }
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const SweepRow& r = rows[j];
    const int defined = r.accuracy.defined ? 1 : 0;
    if (flag_column) {
      csv.row(r.requested, r.achieved, r.accuracy.value, r.quality, defined,
              j == flagged_row ? 1 : 0);
    } else {
      csv.row(r.requested, r.achieved, r.accuracy.value, r.quality, defined);
    }
  }
}

}  // namespace hsrc
