#include "hsrc/metrics.hpp"

#include "hsrc/csv.hpp"
#include "hsrc/error.hpp"

#include <map>
#include <ostream>

namespace hsrc {

namespace {

void check_inputs(const Labeling& labeling, const LabelMap& truth, const RejectMask& mask) {
  if (labeling.pixels() != truth.pixels() || mask.rejected.size() != truth.pixels()) {
    throw InvalidArgument("labeling, truth and mask must cover the same pixels");
  }
}

double ratio(std::size_t num, std::size_t den) {
  return static_cast<double>(num) / static_cast<double>(den);
}

void tally(DecisionCounts& c, bool correct, bool rejected) {
  if (rejected) {
    ++(correct ? c.correct_rejected : c.wrong_rejected);
  } else {
    ++(correct ? c.correct_kept : c.wrong_kept);
  }
}

}  // namespace

DecisionCounts count_decisions(const Labeling& labeling, const LabelMap& truth,
                               const RejectMask& mask, std::span<const std::size_t> eval) {
  check_inputs(labeling, truth, mask);
  DecisionCounts c;
  for (std::size_t i : eval) {
    if (i >= truth.pixels()) throw InvalidArgument("evaluation index out of range");
    if (truth[i] == 0) continue;
    tally(c, labeling[i] == truth[i], mask.is_rejected(i));
  }
  return c;
}

Accuracy nonrejected_accuracy(const DecisionCounts& counts) {
  if (counts.kept() == 0) return Accuracy{1.0, false};
  return Accuracy{ratio(counts.correct_kept, counts.kept()), true};
}

double classification_quality(const DecisionCounts& counts) {
  if (counts.total() == 0) throw InvalidArgument("empty evaluation set");
  return ratio(counts.correct_kept + counts.wrong_rejected, counts.total());
}

Accuracy nonrejected_accuracy(const Labeling& labeling, const LabelMap& truth,
                              const RejectMask& mask, std::span<const std::size_t> eval) {
  const DecisionCounts c = count_decisions(labeling, truth, mask, eval);
  if (c.total() == 0) throw InvalidArgument("empty evaluation set");
  return nonrejected_accuracy(c);
}

double classification_quality(const Labeling& labeling, const LabelMap& truth,
                              const RejectMask& mask, std::span<const std::size_t> eval) {
  return classification_quality(count_decisions(labeling, truth, mask, eval));
}

RejectionReport full_report(const Labeling& labeling, const LabelMap& truth,
                            const RejectMask& mask, std::span<const std::size_t> eval) {
  check_inputs(labeling, truth, mask);
  DecisionCounts all;
  std::map<int, DecisionCounts> by_class;
  for (std::size_t i : eval) {
    if (i >= truth.pixels()) throw InvalidArgument("evaluation index out of range");
    const int t = truth[i];
    if (t == 0) continue;
    const bool correct = labeling[i] == t;
    const bool rejected = mask.is_rejected(i);
    tally(all, correct, rejected);
    tally(by_class[t], correct, rejected);
  }
  if (all.total() == 0) throw InvalidArgument("empty evaluation set");

  RejectionReport report;
  report.accuracy = nonrejected_accuracy(all);
  report.quality = classification_quality(all);
  report.rejected_fraction = ratio(all.rejected(), all.total());
  report.overall_accuracy_no_reject =
      ratio(all.correct_kept + all.correct_rejected, all.total());
  report.count = all.total();
  for (const auto& [label, c] : by_class) {
    ClassReport row;
    row.label = label;
    row.overall_accuracy = ratio(c.correct_kept + c.correct_rejected, c.total());
    row.accuracy = nonrejected_accuracy(c);
    row.quality = classification_quality(c);
    row.rejected_fraction = ratio(c.rejected(), c.total());
    row.count = c.total();
    report.per_class.push_back(row);
  }
  return report;
}

void write_report_csv(const RejectionReport& report, std::ostream& out) {
  CsvWriter csv(out);
  csv.row("class", "OA", "A", "Q", "r", "n", "A_defined");
  for (const ClassReport& c : report.per_class) {
    csv.row(c.label, c.overall_accuracy, c.accuracy.value, c.quality, c.rejected_fraction,
            c.count, c.accuracy.defined ? 1 : 0);
  }
  csv.row("all", report.overall_accuracy_no_reject, report.accuracy.value, report.quality,
          report.rejected_fraction, report.count, report.accuracy.defined ? 1 : 0);
}

}  // namespace hsrc
