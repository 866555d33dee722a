#pragma once

#include <span>

#include "fprobe/probes.hpp"
#include "fprobe/rng.hpp"

namespace fprobe::detail {

struct RunOutcome {
  std::vector<std::size_t> predictions;
  bool converged = true;
  double gradient_norm = 0.0;
  std::size_t degenerate_points = 0;
};

/// Trains a circular probe on standardized training features.
CircularProbe fit_circular(const RowMatrix& x, std::span<const std::size_t> labels,
                           std::size_t n_classes, const ProbeConfig& config,
                           SplitMix64& rng);

RowMatrix softmax_rows(const RowMatrix& logits);

}  // namespace fprobe::detail
