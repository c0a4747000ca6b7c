#pragma once

#include <span>
#include <vector>

#include "semgest/nd/tape.hpp"

namespace semgest::contrastive {

// D[i][j] = ||f_t(i) - f_g(j)||_2 for B x d inputs.
nd::Var distance_matrix(nd::Var text_features, nd::Var gesture_features);
// Host-side version, row-major.
std::vector<double> distance_matrix(const nd::Tensor& text_features,
                                    const nd::Tensor& gesture_features);

struct ContrastiveTerms {
  nd::Var total;     // (positive + negative) / B
  nd::Var positive;  // 0.5 * sum over positive pairs of D^2
  nd::Var negative;  // 0.5 * sum over negative pairs of max(0, m - D)^2
};

// Margin contrastive loss over all B^2 pairs, normalized by B. `positives`
// is the B x B 0/1 matrix.
ContrastiveTerms contrastive_loss(const nd::Tensor& positives, nd::Var distances, double margin = 20.0);

// Mean over the batch of the per-sample mean squared coordinate error.
nd::Var reconstruction_loss(std::span<const nd::Var> reconstructed, std::span<const nd::Var> targets);

nd::Var total_loss(nd::Var attention, nd::Var reconstruction, nd::Var contrastive,
                   double alpha = 10.0, double beta = 2.0);

}  // namespace semgest::contrastive
