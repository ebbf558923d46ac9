#include "protonet/proto.hpp"

#include <cmath>
#include <set>

namespace protonet {

void PrototypeSet::validate() const {
  if (class_ids.empty() || matrix.cols() == 0)
    throw Error("invalid-prototype-set", "no prototype columns");
  if (int(class_ids.size()) != int(matrix.cols()))
    throw Error("invalid-prototype-set", "class count != column count");
  std::set<std::string> seen(class_ids.begin(), class_ids.end());
  if (seen.size() != class_ids.size())
    throw Error("duplicate-class-id", "class ids must be unique");
  if (matrix.rows() != hog_dimension(hog_config))
    throw Error("invalid-prototype-set", "row count != hog dimension");
  for (int c = 0; c < matrix.cols(); ++c)
    if (std::abs(matrix.col(c).norm() - 1.0f) > 1e-6f)
      throw Error("invalid-prototype-set",
                  "column " + class_ids[c] + " is not unit norm");
}

PrototypeSet PrototypeSet::select(const std::vector<std::string>& ids) const {
  PrototypeSet out;
  out.hog_config = hog_config;
  out.matrix.resize(matrix.rows(), Eigen::Index(ids.size()));
  for (size_t i = 0; i < ids.size(); ++i) {
    auto it = std::find(class_ids.begin(), class_ids.end(), ids[i]);
    if (it == class_ids.end())
      throw Error("coverage-mismatch", "no prototype for class " + ids[i]);
    const auto idx = std::distance(class_ids.begin(), it);
    out.matrix.col(Eigen::Index(i)) = matrix.col(idx);
    out.class_ids.push_back(ids[i]);
    out.source_refs.push_back(size_t(idx) < source_refs.size()
                                  ? source_refs[size_t(idx)]
                                  : std::string());
  }
  return out;
}

BuildResult build_prototype_set(
    const std::vector<std::pair<std::string, Image>>& prototype_images,
    const HogConfig& config, const std::vector<std::string>& source_refs) {
  if (prototype_images.empty())
    throw Error("invalid-prototype-set", "need at least one prototype");
  BuildResult result;
  PrototypeSet& set = result.set;
  set.hog_config = config;
  const int k = hog_dimension(config);
  set.matrix.resize(k, Eigen::Index(prototype_images.size()));
  for (size_t i = 0; i < prototype_images.size(); ++i) {
    const auto& [id, image] = prototype_images[i];
    if (std::find(set.class_ids.begin(), set.class_ids.end(), id) !=
        set.class_ids.end())
      throw Error("duplicate-class-id", id);
    set.matrix.col(Eigen::Index(i)) =
        hog_embed_prototype(image, config).cast<float>();
    set.class_ids.push_back(id);
    set.source_refs.push_back(i < source_refs.size() ? source_refs[i]
                                                     : std::string());
  }
  for (int a = 0; a < set.matrix.cols(); ++a)
    for (int b = a + 1; b < set.matrix.cols(); ++b) {
      const float cosine = set.matrix.col(a).dot(set.matrix.col(b));
      if (cosine > 0.999f)
        result.warnings.push_back("near-duplicate prototypes: " +
                                  set.class_ids[size_t(a)] + " and " +
                                  set.class_ids[size_t(b)] + " (cosine " +
                                  std::to_string(cosine) + ")");
    }
  return result;
}

Eigen::VectorXf prototype_logits(const PrototypeSet& set,
                                 const Eigen::VectorXf& v) {
  if (v.size() != set.matrix.rows())
    throw Error("dimension-mismatch",
                "activation length " + std::to_string(v.size()) +
                    " vs prototype dimension " +
                    std::to_string(set.matrix.rows()));
  return set.matrix.transpose() * v;
}

}  // namespace protonet
