#pragma once

// Quick internal consistency suite behind `morphoqg selftest`, and the
// small fixtures it is built from.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "morphoqg/codec.hpp"
#include "morphoqg/grad_check.hpp"
#include "morphoqg/morphology.hpp"

namespace morphoqg {

/// True iff no Trans action is first or directly follows another Trans.
bool trans_adjacency_ok(std::span<const TargetAction> actions);

/// Central-difference check of the full teacher-forced loss for a 3-token
/// source and 4-action target (copy, trans, quest, copy) at d_h = `hidden`,
/// in 64-bit, with parameters drawn from U(-0.5, 0.5).
GradCheckReport check_model_gradients(std::uint64_t seed, std::size_t hidden = 8,
                                      double tolerance = 1e-4);

/// Largest |sum_w P(w) - 1| of the mixed output distribution over `trials`
/// random models, sources and decoder inputs.
double max_mixture_deviation(std::size_t trials, std::uint64_t seed);

struct SelftestCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SelftestReport {
  std::vector<SelftestCheck> checks;
  bool passed() const;
};

/// Gradient check, codec round trip on a toy corpus, action-sequence
/// validation on random sequences and mixture normalization. One line per
/// check goes to `log`.
SelftestReport run_selftest(const Morphology& morph, std::uint64_t seed, std::ostream& log);

}  // namespace morphoqg
