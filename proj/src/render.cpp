#include "hsrc/render.hpp"

#include "hsrc/error.hpp"
#include "hsrc/io.hpp"

#include <algorithm>
#include <cmath>

namespace hsrc {

std::vector<std::uint8_t> labeling_indices(const Labeling& labeling) {
  std::vector<std::uint8_t> out(labeling.pixels());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(std::min(labeling[i], static_cast<int>(kRejectedIndex) - 1));
  }
  return out;
}

std::vector<std::uint8_t> overlay_indices(const Labeling& labeling, const RejectMask& mask) {
  if (mask.rejected.size() != labeling.pixels()) throw InvalidArgument("mask size mismatch");
  std::vector<std::uint8_t> out = labeling_indices(labeling);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (mask.is_rejected(i)) out[i] = kRejectedIndex;
  }
  return out;
}

std::vector<std::uint8_t> rejection_field_gray(const RejectionField& field) {
  const auto c = field.confidence();
  std::vector<std::uint8_t> out(c.size(), 255);
  if (c.empty()) return out;
  const auto [lo, hi] = std::minmax_element(c.begin(), c.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < c.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(std::lround(255.0 * (c[i] - *lo) / range));
  }
  return out;
}

}  // namespace hsrc
