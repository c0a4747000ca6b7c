#include "semgest/contrastive/losses.hpp"

#include <cmath>

#include "semgest/error.hpp"

namespace semgest::contrastive {

using nd::Tensor;
using nd::Var;

nd::Var distance_matrix(Var text_features, Var gesture_features) {
  const Tensor& t = text_features.value();
  const Tensor& g = gesture_features.value();
  if (t.rank() != 2 || t.shape() != g.shape()) {
    throw ShapeError("distance_matrix: text " + nd::shape_string(t.shape()) + " vs gesture " +
                     nd::shape_string(g.shape()));
  }
  return nd::sqrt(nd::sq_dist(text_features, gesture_features));
}

std::vector<double> distance_matrix(const Tensor& t, const Tensor& g) {
  if (t.rank() != 2 || t.shape() != g.shape()) {
    throw ShapeError("distance_matrix: text " + nd::shape_string(t.shape()) + " vs gesture " +
                     nd::shape_string(g.shape()));
  }
  const std::size_t b = t.rows(), d = t.cols();
  std::vector<double> out(b * b);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = t.at(i, k) - g.at(j, k);
        s += diff * diff;
      }
      out[i * b + j] = std::sqrt(s);
    }
  }
  return out;
}

ContrastiveTerms contrastive_loss(const Tensor& positives, Var distances, double margin) {
  const Tensor d = distances.value();  // copy: recording constants below may move tape storage
  if (d.rank() != 2 || d.rows() != d.cols() || positives.shape() != d.shape()) {
    throw ShapeError("contrastive_loss: need matching square P and D, got " +
                     nd::shape_string(positives.shape()) + " and " + nd::shape_string(d.shape()));
  }
  if (!(margin >= 0.0)) throw ValidationError("contrastive_loss: margin must be non-negative");
  std::vector<double> neg(positives.size());
  for (std::size_t i = 0; i < neg.size(); ++i) {
    if (positives[i] != 0.0 && positives[i] != 1.0) {
      throw ValidationError("contrastive_loss: P must be 0/1");
    }
    neg[i] = 1.0 - positives[i];
  }
  nd::Tape& tape = *distances.tape;
  Var p = tape.constant(positives);
  Var n = tape.constant(Tensor(d.shape(), std::move(neg)));
  Var positive = nd::scale(nd::sum(nd::square(p * distances)), 0.5);
  // The hinge is evaluated on (1 - P) * D and then masked, so positive
  // pairs add nothing to this term.
  Var hinge = nd::max0(nd::add_const(nd::scale(n * distances, -1.0), margin));
  Var negative = nd::scale(nd::sum(n * nd::square(hinge)), 0.5);
  Var total = nd::scale(positive + negative, 1.0 / static_cast<double>(d.rows()));
  return {total, positive, negative};
}

Var reconstruction_loss(std::span<const Var> reconstructed, std::span<const Var> targets) {
  if (reconstructed.empty() || reconstructed.size() != targets.size()) {
    throw ShapeError("reconstruction_loss: need equally many non-zero reconstructions and targets");
  }
  std::vector<Var> per_sample;
  for (std::size_t i = 0; i < reconstructed.size(); ++i) {
    if (reconstructed[i].shape() != targets[i].shape()) {
      throw ShapeError("reconstruction_loss: sample " + std::to_string(i) + " has shape " +
                       nd::shape_string(reconstructed[i].shape()) + " vs target " +
                       nd::shape_string(targets[i].shape()));
    }
    per_sample.push_back(nd::mean(nd::square(reconstructed[i] - targets[i])));
  }
  return nd::mean(nd::concat(per_sample));
}

Var total_loss(Var attention, Var reconstruction, Var contrastive, double alpha, double beta) {
  return attention + nd::scale(reconstruction, alpha) + nd::scale(contrastive, beta);
}

}  // namespace semgest::contrastive
