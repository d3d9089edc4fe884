#pragma once

// Image renderings of labelings, rejection masks and rejection fields.

#include "hsrc/core.hpp"

#include <cstdint>
#include <vector>

namespace hsrc {

// Palette indices equal to the labels (1..K); labels above 254 are clamped.
std::vector<std::uint8_t> labeling_indices(const Labeling& labeling);

// As labeling_indices with every rejected pixel set to kRejectedIndex.
std::vector<std::uint8_t> overlay_indices(const Labeling& labeling, const RejectMask& mask);

// Confidence mapped linearly so the minimum becomes 0 and the maximum 255:
// g = round(255 (c - min) / (max - min)). A constant field maps to 255.
std::vector<std::uint8_t> rejection_field_gray(const RejectionField& field);

}  // namespace hsrc
