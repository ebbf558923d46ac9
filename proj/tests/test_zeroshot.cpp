#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "protonet/model.hpp"
#include "protonet/zeroshot.hpp"

using namespace protonet;

namespace {

// Naive recomputation of the ConSE definition, kept independent of
// conse_predict: softmax, top-T by probability (ties -> lowest index),
// probability-weighted convex combination, nearest unseen prototype by
// cosine (ties -> lowest index).
int conse_oracle(const Eigen::VectorXf& logits, const Eigen::MatrixXf& seen,
                 const Eigen::MatrixXf& unseen, int top_t) {
  const int cs = int(seen.cols());
  std::vector<double> p(size_t(cs), 0.0);
  double mx = logits[0];
  for (int c = 1; c < cs; ++c) mx = std::max(mx, double(logits[c]));
  double sum = 0;
  for (int c = 0; c < cs; ++c) {
    p[size_t(c)] = std::exp(double(logits[c]) - mx);
    sum += p[size_t(c)];
  }
  for (double& v : p) v /= sum;

  std::vector<int> picked;
  std::vector<bool> used(size_t(cs), false);
  for (int t = 0; t < top_t; ++t) {
    int best = -1;
    for (int c = 0; c < cs; ++c)
      if (!used[size_t(c)] && (best < 0 || p[size_t(c)] > p[size_t(best)]))
        best = c;
    used[size_t(best)] = true;
    picked.push_back(best);
  }

  std::vector<double> e(size_t(seen.rows()), 0.0);
  double wsum = 0;
  for (int c : picked) {
    for (int i = 0; i < seen.rows(); ++i)
      e[size_t(i)] += p[size_t(c)] * double(seen(i, c));
    wsum += p[size_t(c)];
  }
  for (double& v : e) v /= wsum;

  double enorm = 0;
  for (double v : e) enorm += v * v;
  enorm = std::sqrt(enorm);

  int best_u = 0;
  double best_cos = -2;
  for (int u = 0; u < unseen.cols(); ++u) {
    double dot = 0, un = 0;
    for (int i = 0; i < unseen.rows(); ++i) {
      dot += double(unseen(i, u)) * e[size_t(i)];
      un += double(unseen(i, u)) * double(unseen(i, u));
    }
    const double cosine = dot / (enorm * std::sqrt(un));
    if (cosine > best_cos) {
      best_cos = cosine;
      best_u = u;
    }
  }
  return best_u;
}

Eigen::MatrixXf random_unit_columns(int k, int c, std::mt19937_64& rng) {
  std::normal_distribution<float> normal(0.0f, 1.0f);
  Eigen::MatrixXf m(k, c);
  for (int j = 0; j < c; ++j) {
    for (int i = 0; i < k; ++i) m(i, j) = std::abs(normal(rng));
    m.col(j) /= m.col(j).norm();
  }
  return m;
}

PrototypeSet fake_set(const Eigen::MatrixXf& m, const std::string& prefix) {
  PrototypeSet set;
  set.matrix = m;
  for (int c = 0; c < m.cols(); ++c)
    set.class_ids.push_back(prefix + std::to_string(c));
  return set;
}

// A "network" whose input image is the penultimate vector itself.
Network<float> passthrough_net(const Eigen::MatrixXf& head_columns) {
  Network<float> net;
  const int k = int(head_columns.rows());
  net.input_shape = Shape{1, k, 1};
  net.layers.push_back(std::make_unique<FixedHeadLayer<float>>(
      net.input_shape, head_columns));
  return net;
}

Image vector_image(const Eigen::VectorXf& v) {
  Plane p(1, int(v.size()));
  for (int i = 0; i < v.size(); ++i) p(0, i) = v[i];
  return Image(p);
}

}  // namespace

TEST_CASE("make_splits: paper presets and reproducibility") {
  std::vector<std::string> ids43, ids10;
  for (int i = 0; i < 43; ++i) ids43.push_back("t" + std::to_string(i));
  for (int i = 0; i < 10; ++i) ids10.push_back("l" + std::to_string(i));

  const auto s43 = make_splits(ids43, 10, 10, 2024);
  CHECK(s43.size() == 10);
  for (const ClassSplit& s : s43) {
    CHECK(s.seen.size() == 33);
    CHECK(s.unseen.size() == 10);
    for (const auto& u : s.unseen)
      CHECK(std::find(s.seen.begin(), s.seen.end(), u) == s.seen.end());
  }

  const auto s10 = make_splits(ids10, 3, 10, 2024);
  for (const ClassSplit& s : s10) {
    CHECK(s.seen.size() == 7);
    CHECK(s.unseen.size() == 3);
  }

  const auto again = make_splits(ids43, 10, 10, 2024);
  for (size_t i = 0; i < again.size(); ++i) {
    CHECK(again[i].seen == s43[i].seen);
    CHECK(again[i].unseen == s43[i].unseen);
  }

  CHECK_THROWS_WITH_AS(make_splits(ids10, 10, 5, 1),
                       doctest::Contains("invalid-count"), Error);
  CHECK_THROWS_AS(make_splits(ids10, 0, 5, 1), Error);
}

TEST_CASE("conse_predict: T=1 degenerates to nearest prototype of the top class") {
  std::mt19937_64 rng(50);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 4 + int(rng() % 8);
    const int cs = 2 + int(rng() % 5);
    const int cu = 1 + int(rng() % 4);
    const Eigen::MatrixXf seen = random_unit_columns(k, cs, rng);
    const Eigen::MatrixXf unseen = random_unit_columns(k, cu, rng);
    Network<float> net = passthrough_net(seen);
    Eigen::VectorXf v = Eigen::VectorXf::Random(k).cwiseAbs();

    const int got = conse_predict(net, fake_set(seen, "s"),
                                  fake_set(unseen, "u"), vector_image(v),
                                  ConseConfig{.top_t = 1});
    // top seen class, then its nearest unseen prototype by cosine
    Eigen::VectorXf z = seen.transpose() * v;
    int top = 0;
    for (int c = 1; c < cs; ++c)
      if (z[c] > z[top]) top = c;
    int want = 0;
    float best = -2;
    for (int u = 0; u < cu; ++u) {
      const float cosine = unseen.col(u).dot(seen.col(top));
      if (cosine > best) {
        best = cosine;
        want = u;
      }
    }
    CHECK(got == want);
  }
}

TEST_CASE("conse_predict: uniform softmax with T=|C_s| uses the mean embedding") {
  std::mt19937_64 rng(51);
  const Eigen::MatrixXf seen = random_unit_columns(6, 4, rng);
  const Eigen::MatrixXf unseen = random_unit_columns(6, 3, rng);
  Network<float> net = passthrough_net(seen);
  const Eigen::VectorXf zero = Eigen::VectorXf::Zero(6);  // uniform softmax

  const int got = conse_predict(net, fake_set(seen, "s"), fake_set(unseen, "u"),
                                vector_image(zero), ConseConfig{});
  const Eigen::VectorXf mean = seen.rowwise().mean();
  int want = 0;
  float best = -2;
  for (int u = 0; u < 3; ++u) {
    const float cosine = unseen.col(u).dot(mean) / (mean.norm());
    if (cosine > best) {
      best = cosine;
      want = u;
    }
  }
  CHECK(got == want);
}

TEST_CASE("conse_predict: hand-worked k=2 example") {
  Eigen::MatrixXf seen(2, 3);
  const float r = std::sqrt(0.5f);
  seen << 1, 0, r, 0, 1, r;
  Eigen::MatrixXf unseen(2, 2);
  unseen << 1, 0, 0, 1;
  // logits chosen so softmax = (0.5, 0.3, 0.2)
  Eigen::VectorXf z(3);
  z << std::log(0.5f), std::log(0.3f), std::log(0.2f);
  // passthrough with identity head of dimension 3 reproduces the logits
  Network<float> net = passthrough_net(Eigen::MatrixXf::Identity(3, 3));
  const int got = conse_predict(net, fake_set(seen, "s"), fake_set(unseen, "u"),
                                vector_image(z), ConseConfig{.top_t = 2});
  // e = (0.5*(1,0) + 0.3*(0,1)) / 0.8 = (0.625, 0.375): nearest is (1,0)
  CHECK(got == 0);
}

TEST_CASE("conse_predict: brute-force oracle equivalence, 1000 instances") {
  std::mt19937_64 rng(52);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 2 + int(rng() % 15);   // <= 16
    const int cs = 2 + int(rng() % 7);   // <= 8
    const int cu = 1 + int(rng() % 4);   // <= 4
    const int top_t = 1 + int(rng() % cs);
    const Eigen::MatrixXf seen = random_unit_columns(k, cs, rng);
    const Eigen::MatrixXf unseen = random_unit_columns(k, cu, rng);
    Network<float> net = passthrough_net(seen);
    const Eigen::VectorXf v = Eigen::VectorXf::Random(k).cwiseAbs();

    const int got = conse_predict(net, fake_set(seen, "s"),
                                  fake_set(unseen, "u"), vector_image(v),
                                  ConseConfig{.top_t = top_t});
    const Eigen::VectorXf logits = seen.transpose() * v;
    CHECK(got == conse_oracle(logits, seen, unseen, top_t));
  }
}

TEST_CASE("conse_predict: T out of range") {
  std::mt19937_64 rng(53);
  const Eigen::MatrixXf seen = random_unit_columns(4, 3, rng);
  Network<float> net = passthrough_net(seen);
  const Eigen::VectorXf v = Eigen::VectorXf::Ones(4);
  CHECK_THROWS_WITH_AS(
      conse_predict(net, fake_set(seen, "s"), fake_set(seen, "u"),
                    vector_image(v), ConseConfig{.top_t = 4}),
      doctest::Contains("invalid-config"), Error);
}

TEST_CASE("paired permutation p-value properties") {
  CHECK(paired_permutation_pvalue({0, 0, 0, 0, 0}) == 1.0);
  const double p = paired_permutation_pvalue({0.1, 0.1, 0.1, 0.1, 0.1});
  CHECK(p > 0.0);
  CHECK(p < 0.1);  // only the two all-same sign assignments reach the mean
  const double mixed = paired_permutation_pvalue({0.1, -0.1, 0.05, -0.05});
  CHECK(mixed >= 0.0);
  CHECK(mixed <= 1.0);
}

namespace {

struct TinyWorld {
  SynthConfig synth;
  HogConfig hog;
  SyntheticData data;
  PrototypeSet prototypes;
  NetworkPreset preset;

  TinyWorld() {
    synth.num_classes = 6;
    synth.samples_per_class = 10;
    synth.image_side = 16;
    synth.prototype_side = 40;
    synth.template_seed = 3;
    hog.resize_side = 20;
    hog.cell_size = 10;
    hog.num_bins = 4;  // k = 16
    data = build_synthetic(synth, 21);
    prototypes = build_prototype_set(data.templates, hog).set;

    preset.name = "tiny";
    preset.input = Shape{16, 16, 1};
    preset.hog = hog;
    using L = NetworkPreset::LayerDef;
    preset.layers = {L{.kind = "conv", .maps = 4, .kernel = 5},
                     L{.kind = "act"},
                     L{.kind = "maxpool", .window = 2},
                     L{.kind = "fc", .out = 16},
                     L{.kind = "act"}};
  }

  NetworkFactory factory() const {
    return [this](const PrototypeSet& seen) {
      return build_network(preset, seen, 77);
    };
  }
};

}  // namespace

TEST_CASE("evaluate_unseen: label space and error paths") {
  TinyWorld w;
  const auto splits = make_splits(w.data.dataset.class_ids, 2, 1, 9);
  const PrototypeSet unseen = w.prototypes.select(splits[0].unseen);
  Network<float> net = w.factory()(w.prototypes.select(splits[0].seen));

  std::vector<int> unseen_indices, mixed_indices;
  for (size_t i = 0; i < w.data.dataset.samples.size(); ++i) {
    const auto& cid =
        w.data.dataset.class_ids[size_t(w.data.dataset.samples[i].label)];
    const bool in_cu = std::find(splits[0].unseen.begin(),
                                 splits[0].unseen.end(),
                                 cid) != splits[0].unseen.end();
    if (in_cu)
      unseen_indices.push_back(int(i));
    else if (mixed_indices.empty())
      mixed_indices.push_back(int(i));  // one seen-class sample
  }

  const EvalReport report =
      evaluate_unseen(net, unseen, w.data.dataset.samples, unseen_indices,
                      w.data.dataset.class_ids);
  CHECK(report.label_space == splits[0].unseen);
  CHECK(report.overall_accuracy >= 0.0);
  CHECK(report.overall_accuracy <= 1.0);
  CHECK(report.confusion.sum() == int(unseen_indices.size()));
  // every prediction lies inside C_u by construction of the confusion matrix
  CHECK(report.confusion.rows() == 2);
  CHECK(report.confusion.cols() == 2);

  mixed_indices.push_back(unseen_indices[0]);
  CHECK_THROWS_WITH_AS(
      evaluate_unseen(net, unseen, w.data.dataset.samples, mixed_indices,
                      w.data.dataset.class_ids),
      doctest::Contains("label-outside-Cu"), Error);

  CHECK_THROWS_WITH_AS(
      evaluate_unseen(net, PrototypeSet{}, w.data.dataset.samples,
                      unseen_indices, w.data.dataset.class_ids),
      doctest::Contains("coverage-mismatch"), Error);
}

TEST_CASE("run_zero_shot_comparison: structure and single-class C_u") {
  TinyWorld w;
  TrainSchedule sched;
  sched.epochs = 2;
  sched.seed = 5;

  // single unseen class: both methods can only emit that label
  std::vector<ClassSplit> one;
  {
    ClassSplit s;
    s.unseen = {w.data.dataset.class_ids[0]};
    for (size_t i = 1; i < w.data.dataset.class_ids.size(); ++i)
      s.seen.push_back(w.data.dataset.class_ids[i]);
    one.push_back(s);
  }
  const ComparisonSummary single = run_zero_shot_comparison(
      w.data.dataset, w.prototypes, one, w.factory(), sched, ConseConfig{});
  REQUIRE(single.trials.size() == 1);
  CHECK(single.trials[0].proposed_accuracy == 1.0);
  CHECK(single.trials[0].conse_accuracy == 1.0);
  CHECK(single.p_value == 1.0);

  const auto splits = make_splits(w.data.dataset.class_ids, 2, 2, 13);
  const ComparisonSummary summary = run_zero_shot_comparison(
      w.data.dataset, w.prototypes, splits, w.factory(), sched, ConseConfig{});
  CHECK(summary.trials.size() == 2);
  CHECK(summary.p_value >= 0.0);
  CHECK(summary.p_value <= 1.0);
  for (const TrialResult& t : summary.trials) {
    CHECK(t.proposed_accuracy >= 0.0);
    CHECK(t.proposed_accuracy <= 1.0);
    CHECK(t.conse_accuracy >= 0.0);
    CHECK(t.conse_accuracy <= 1.0);
  }
}

TEST_CASE("tradeoff_curve: single checkpoint, chance-level at random init") {
  TinyWorld w;
  const auto splits = make_splits(w.data.dataset.class_ids, 3, 1, 31);
  const PrototypeSet seen = w.prototypes.select(splits[0].seen);
  const PrototypeSet unseen = w.prototypes.select(splits[0].unseen);

  Network<float> net = w.factory()(seen);  // untrained

  std::vector<Sample> relabeled;  // seen-class samples relabeled to C_s order
  std::vector<int> seen_test, unseen_test;
  for (const Sample& s : w.data.dataset.samples) {
    const auto& cid = w.data.dataset.class_ids[size_t(s.label)];
    (void)cid;
  }
  for (size_t i = 0; i < w.data.dataset.samples.size(); ++i) {
    const auto& cid =
        w.data.dataset.class_ids[size_t(w.data.dataset.samples[i].label)];
    if (std::find(splits[0].unseen.begin(), splits[0].unseen.end(), cid) !=
        splits[0].unseen.end())
      unseen_test.push_back(int(i));
    else
      seen_test.push_back(int(i));
  }

  const auto curve =
      tradeoff_curve({net}, seen, unseen, w.data.dataset.samples, seen_test,
                     unseen_test, w.data.dataset.class_ids);
  REQUIRE(curve.size() == 1);
  // balanced classes: even a random net scores near chance (1/3)
  const double chance = 1.0 / 3.0;
  const double sigma_seen =
      std::sqrt(chance * (1 - chance) / double(seen_test.size()));
  const double sigma_unseen =
      std::sqrt(chance * (1 - chance) / double(unseen_test.size()));
  CHECK(std::abs(curve[0].seen_accuracy - chance) <= 3 * sigma_seen + 1e-9);
  CHECK(std::abs(curve[0].unseen_accuracy - chance) <= 3 * sigma_unseen + 1e-9);
}
