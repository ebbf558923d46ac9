#include <cmath>
#include <random>

#include "doctest.h"
#include "protonet/data.hpp"
#include "protonet/proto.hpp"

using namespace protonet;

namespace {

HogConfig tiny_hog() {
  HogConfig cfg;
  cfg.resize_side = 20;
  cfg.cell_size = 5;
  cfg.num_bins = 8;
  return cfg;
}

std::vector<std::pair<std::string, Image>> glyphs(int n, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.num_classes = n;
  cfg.template_seed = seed;
  cfg.prototype_side = 40;
  return generate_templates(cfg);
}

Network<float> embedding_net(int k, int num_inputs, std::uint64_t seed,
                             const PrototypeSet& set) {
  std::mt19937_64 rng(seed);
  Network<float> net;
  net.input_shape = Shape{1, num_inputs, 1};  // matches a 1 x n image
  net.layers.push_back(
      std::make_unique<FullyConnectedLayer<float>>(net.input_shape, k, rng));
  net.layers.push_back(std::make_unique<FixedHeadLayer<float>>(
      Shape{1, 1, k}, set.matrix));
  return net;
}

Image vector_image(const Eigen::VectorXf& v) {
  Plane p(1, int(v.size()));
  for (int i = 0; i < v.size(); ++i) p(0, i) = v[i];
  return Image(p);
}

}  // namespace

TEST_CASE("build: distinct glyph templates give unit columns") {
  const HogConfig cfg = tiny_hog();
  const BuildResult r = build_prototype_set(glyphs(3, 41), cfg);
  r.set.validate();
  CHECK(r.set.num_classes() == 3);
  CHECK(r.set.dimension() == hog_dimension(cfg));
  for (int c = 0; c < 3; ++c)
    CHECK(std::abs(r.set.matrix.col(c).norm() - 1.0f) < 1e-6f);
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b)
      CHECK(r.set.matrix.col(a).dot(r.set.matrix.col(b)) < 0.999f);
  CHECK(r.warnings.empty());
}

TEST_CASE("build: constant template is degenerate") {
  std::vector<std::pair<std::string, Image>> protos;
  protos.emplace_back("flat", Image(Plane::Constant(30, 30, 0.5f)));
  CHECK_THROWS_WITH_AS(build_prototype_set(protos, tiny_hog()),
                       doctest::Contains("degenerate-prototype"), Error);
}

TEST_CASE("build: duplicate ids rejected, near-duplicates warned") {
  auto g = glyphs(2, 42);
  auto dup = g;
  dup[1].first = dup[0].first;
  CHECK_THROWS_WITH_AS(build_prototype_set(dup, tiny_hog()),
                       doctest::Contains("duplicate-class-id"), Error);

  auto twin = g;
  twin[1].second = twin[0].second;  // identical image, different id
  const BuildResult r = build_prototype_set(twin, tiny_hog());
  CHECK(r.warnings.size() == 1);
}

TEST_CASE("build: permuted input gives permuted columns") {
  auto g = glyphs(3, 43);
  const BuildResult a = build_prototype_set(g, tiny_hog());
  std::swap(g[0], g[2]);
  const BuildResult b = build_prototype_set(g, tiny_hog());
  CHECK(b.set.class_ids[0] == a.set.class_ids[2]);
  CHECK(b.set.matrix.col(0) == a.set.matrix.col(2));
  CHECK(b.set.matrix.col(2) == a.set.matrix.col(0));
  CHECK(b.set.matrix.col(1) == a.set.matrix.col(1));
}

TEST_CASE("logits: hand-computed dot products") {
  PrototypeSet set;
  set.class_ids = {"a", "b", "c"};
  set.hog_config = tiny_hog();
  const float r = std::sqrt(0.5f);
  set.matrix.resize(2, 3);
  set.matrix << 1, 0, r, 0, 1, r;

  Eigen::VectorXf zero = Eigen::VectorXf::Zero(2);
  CHECK(prototype_logits(set, zero).cwiseAbs().maxCoeff() == 0.0f);

  Eigen::VectorXf v(2);
  v << 0.6f, 0.8f;
  const Eigen::VectorXf z = prototype_logits(set, v);
  CHECK(z[0] == doctest::Approx(0.6).epsilon(1e-6));
  CHECK(z[1] == doctest::Approx(0.8).epsilon(1e-6));
  CHECK(z[2] == doctest::Approx(0.98995).epsilon(1e-4));

  // v equal to a column wins under equal norms
  Eigen::VectorXf v2 = set.matrix.col(1);
  const Eigen::VectorXf z2 = prototype_logits(set, v2);
  int best = 0;
  for (int c = 1; c < 3; ++c)
    if (z2[c] > z2[best]) best = c;
  CHECK(best == 1);

  Eigen::VectorXf bad(3);
  CHECK_THROWS_WITH_AS(prototype_logits(set, bad),
                       doctest::Contains("dimension-mismatch"), Error);
}

TEST_CASE("swap: identical set preserves predictions; permutation permutes") {
  const HogConfig cfg = tiny_hog();
  const PrototypeSet set = build_prototype_set(glyphs(4, 44), cfg).set;
  const int k = set.dimension();
  Network<float> net = embedding_net(k, 10, 99, set);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  std::vector<Image> inputs;
  for (int i = 0; i < 20; ++i) {
    Eigen::VectorXf v(10);
    for (int j = 0; j < 10; ++j) v[j] = unit(rng);
    inputs.push_back(vector_image(v));
  }

  Network<float> same = net;
  swap_head(same, set);
  for (const Image& img : inputs)
    CHECK(net.forward(img).logits == same.forward(img).logits);

  const std::vector<std::string> perm = {set.class_ids[2], set.class_ids[0],
                                         set.class_ids[3], set.class_ids[1]};
  Network<float> permuted = net;
  swap_head(permuted, set.select(perm));
  for (const Image& img : inputs) {
    const Eigen::VectorXf a = net.forward(img).logits;
    const Eigen::VectorXf b = permuted.forward(img).logits;
    CHECK(b[0] == a[2]);
    CHECK(b[1] == a[0]);
    CHECK(b[2] == a[3]);
    CHECK(b[3] == a[1]);
    // permutation equivariance of classification
    const int pa = classify(net, img).class_index;
    const int pb = classify(permuted, img).class_index;
    CHECK(perm[size_t(pb)] == set.class_ids[size_t(pa)]);
  }
}

TEST_CASE("swap: superset keeps pairwise logit differences") {
  const HogConfig cfg = tiny_hog();
  const PrototypeSet all = build_prototype_set(glyphs(5, 45), cfg).set;
  const std::vector<std::string> base_ids(all.class_ids.begin(),
                                          all.class_ids.begin() + 3);
  const PrototypeSet base = all.select(base_ids);

  Network<float> net = embedding_net(all.dimension(), 8, 123, base);
  Network<float> super = net;
  swap_head(super, all);

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  for (int i = 0; i < 10; ++i) {
    Eigen::VectorXf v(8);
    for (int j = 0; j < 8; ++j) v[j] = unit(rng);
    const Image img = vector_image(v);
    const Eigen::VectorXf za = net.forward(img).logits;
    const Eigen::VectorXf zb = super.forward(img).logits;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        CHECK(za[a] - za[b] == doctest::Approx(zb[a] - zb[b]).epsilon(1e-6));
  }
}

TEST_CASE("swap: k mismatch rejected") {
  const HogConfig cfg = tiny_hog();
  const PrototypeSet set = build_prototype_set(glyphs(2, 46), cfg).set;
  Network<float> net = embedding_net(set.dimension(), 6, 9, set);

  HogConfig other = cfg;
  other.num_bins = 4;  // different k
  const PrototypeSet incompatible =
      build_prototype_set(glyphs(2, 47), other).set;
  CHECK_THROWS_WITH_AS(swap_head(net, incompatible),
                       doctest::Contains("k-mismatch"), Error);
}

TEST_CASE("classify: single-class set always returns it with probability 1") {
  const HogConfig cfg = tiny_hog();
  const PrototypeSet one =
      build_prototype_set(glyphs(1, 48), cfg).set;
  Network<float> net = embedding_net(one.dimension(), 5, 3, one);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  Eigen::VectorXf v(5);
  for (int j = 0; j < 5; ++j) v[j] = unit(rng);
  const Classification c = classify(net, vector_image(v));
  CHECK(c.class_index == 0);
  CHECK(c.probabilities[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("ranking equivalence: logits order cosine order, identically") {
  const HogConfig cfg = tiny_hog();
  const PrototypeSet set = build_prototype_set(glyphs(5, 49), cfg).set;
  Network<float> net = embedding_net(set.dimension(), 12, 55, set);

  std::mt19937_64 rng(10);
  std::uniform_real_distribution<float> unit(-1.0f, 1.0f);
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXf v(12);
    for (int j = 0; j < 12; ++j) v[j] = unit(rng);
    const Image img = vector_image(v);
    const ForwardResult<float> fw = net.forward(img);
    const Eigen::VectorXf psi = fw.penultimate;
    const float norm = psi.norm();

    std::vector<int> by_logit(5), by_cosine(5);
    std::iota(by_logit.begin(), by_logit.end(), 0);
    by_cosine = by_logit;
    std::stable_sort(by_logit.begin(), by_logit.end(), [&](int a, int b) {
      return fw.logits[a] > fw.logits[b];
    });
    std::stable_sort(by_cosine.begin(), by_cosine.end(), [&](int a, int b) {
      return set.matrix.col(a).dot(psi) / norm >
             set.matrix.col(b).dot(psi) / norm;
    });
    CHECK(by_logit == by_cosine);
    CHECK(classify(net, img).class_index == by_cosine[0]);
  }
}
