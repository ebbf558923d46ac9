#pragma once

#include <Eigen/Core>
#include <string>
#include <utility>
#include <vector>

#include "protonet/hog.hpp"
#include "protonet/net.hpp"

namespace protonet {

// Fixed output embeddings: column c is the unit-norm HOG embedding of class
// c's prototype image.
struct PrototypeSet {
  std::vector<std::string> class_ids;
  Eigen::MatrixXf matrix;  // k x C
  HogConfig hog_config;
  std::vector<std::string> source_refs;

  int dimension() const { return int(matrix.rows()); }
  int num_classes() const { return int(matrix.cols()); }
  void validate() const;

  // Column subset / reordering by class id.
  PrototypeSet select(const std::vector<std::string>& ids) const;
};

struct BuildResult {
  PrototypeSet set;
  // One entry per near-duplicate pair (cosine > 0.999): classes remain
  // usable but are close to indistinguishable in the embedding space.
  std::vector<std::string> warnings;
};

BuildResult build_prototype_set(
    const std::vector<std::pair<std::string, Image>>& prototype_images,
    const HogConfig& config,
    const std::vector<std::string>& source_refs = {});

// z_c = <column_c, v>; no bias.
Eigen::VectorXf prototype_logits(const PrototypeSet& set,
                                 const Eigen::VectorXf& v);

// Replaces the network head with the given prototype columns; every learned
// parameter is untouched. Works for unseen classes, supersets, reorderings.
template <typename T>
void swap_head(Network<T>& net, const PrototypeSet& set) {
  set.validate();
  const Shape penult = net.penultimate_shape();
  if (penult.size() != set.dimension())
    throw Error("k-mismatch",
                "prototype dimension " + std::to_string(set.dimension()) +
                    " vs penultimate width " + std::to_string(penult.size()));
  net.layers.back() = std::make_unique<FixedHeadLayer<T>>(
      penult, set.matrix.template cast<T>());
}

struct Classification {
  int class_index = -1;
  Eigen::VectorXf probabilities;
};

// Eq.-(2)-style inference: forward, softmax, argmax (ties -> lowest index).
template <typename T>
Classification classify(Network<T>& net, const Image& image) {
  ForwardResult<T> fw = net.forward(image, /*training=*/false);
  VectorX<T> probs = softmax(fw.logits);
  int best = 0;
  for (int c = 1; c < probs.size(); ++c)
    if (probs[c] > probs[best]) best = c;
  return {best, probs.template cast<float>()};
}

}  // namespace protonet
