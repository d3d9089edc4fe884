#pragma once

// Performance measures for classification with rejection. With S the
// evaluation set, R the rejected pixels and C the correctly classified ones:
//
//   nonrejected accuracy  A = |C n ~R| / |~R|
//   classification quality Q = (|C n ~R| + |~C n R|) / |S|
//   rejected fraction     r = |R| / |S|
//
// Pixels whose ground truth is 0 (unlabeled) are skipped wherever they
// appear in an evaluation set.

#include "hsrc/core.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace hsrc {

// Set sizes behind every measure.
struct DecisionCounts {
  std::size_t correct_kept = 0;
  std::size_t wrong_kept = 0;
  std::size_t correct_rejected = 0;
  std::size_t wrong_rejected = 0;

  std::size_t total() const { return correct_kept + wrong_kept + correct_rejected + wrong_rejected; }
  std::size_t kept() const { return correct_kept + wrong_kept; }
  std::size_t rejected() const { return correct_rejected + wrong_rejected; }
};

// A over an empty kept set is reported as 1 with defined = false.
struct Accuracy {
  double value = 1.0;
  bool defined = false;
};

DecisionCounts count_decisions(const Labeling& labeling, const LabelMap& truth,
                               const RejectMask& mask, std::span<const std::size_t> eval);

Accuracy nonrejected_accuracy(const DecisionCounts& counts);
double classification_quality(const DecisionCounts& counts);

Accuracy nonrejected_accuracy(const Labeling& labeling, const LabelMap& truth,
                              const RejectMask& mask, std::span<const std::size_t> eval);
double classification_quality(const Labeling& labeling, const LabelMap& truth,
                              const RejectMask& mask, std::span<const std::size_t> eval);

struct ClassReport {
  int label = 0;
  double overall_accuracy = 0.0;  // accuracy ignoring rejection
  Accuracy accuracy;
  double quality = 0.0;
  double rejected_fraction = 0.0;
  std::size_t count = 0;
};

struct RejectionReport {
  Accuracy accuracy;
  double quality = 0.0;
  double rejected_fraction = 0.0;
  double overall_accuracy_no_reject = 0.0;
  std::size_t count = 0;
  // One row per class present in the evaluation set, ascending label.
  std::vector<ClassReport> per_class;
};

RejectionReport full_report(const Labeling& labeling, const LabelMap& truth,
                            const RejectMask& mask, std::span<const std::size_t> eval);

// Columns class,OA,A,Q,r,n,A_defined; one row per class then an "all" row.
void write_report_csv(const RejectionReport& report, std::ostream& out);

}  // namespace hsrc
