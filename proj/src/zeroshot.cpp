#include "protonet/zeroshot.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace protonet {

namespace {

int find_class(const std::vector<std::string>& ids, const std::string& id) {
  auto it = std::find(ids.begin(), ids.end(), id);
  return it == ids.end() ? -1 : int(std::distance(ids.begin(), it));
}

}  // namespace

std::vector<ClassSplit> make_splits(const std::vector<std::string>& class_ids,
                                    int num_unseen, int num_trials,
                                    std::uint64_t master_seed) {
  if (num_unseen <= 0 || num_unseen >= int(class_ids.size()))
    throw Error("invalid-count",
                "need 0 < num_unseen < " + std::to_string(class_ids.size()));
  if (num_trials < 1) throw Error("invalid-count", "num_trials must be >= 1");

  std::vector<ClassSplit> splits;
  for (int t = 0; t < num_trials; ++t) {
    const std::uint64_t seed = mix_seed(master_seed, std::uint64_t(t));
    std::mt19937_64 rng(seed);
    std::vector<int> order(class_ids.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<bool> is_unseen(class_ids.size(), false);
    for (int i = 0; i < num_unseen; ++i) is_unseen[size_t(order[size_t(i)])] = true;
    ClassSplit split;
    split.seed = seed;
    for (size_t c = 0; c < class_ids.size(); ++c)
      (is_unseen[c] ? split.unseen : split.seen).push_back(class_ids[c]);
    splits.push_back(std::move(split));
  }
  return splits;
}

EvalReport evaluate_unseen(Network<float> net,
                           const PrototypeSet& prototypes_unseen,
                           const std::vector<Sample>& samples,
                           const std::vector<int>& indices,
                           const std::vector<std::string>& dataset_class_ids) {
  if (prototypes_unseen.class_ids.empty())
    throw Error("coverage-mismatch", "no unseen prototypes supplied");
  swap_head(net, prototypes_unseen);

  EvalReport report;
  report.label_space = prototypes_unseen.class_ids;
  const int cu = prototypes_unseen.num_classes();
  report.confusion = Eigen::MatrixXi::Zero(cu, cu);
  std::map<std::string, int> correct, total;

  for (int idx : indices) {
    const Sample& s = samples[size_t(idx)];
    const std::string& cid = dataset_class_ids[size_t(s.label)];
    const int truth = find_class(prototypes_unseen.class_ids, cid);
    if (truth < 0)
      throw Error("label-outside-Cu", "sample labeled " + cid +
                                          " is not an unseen class");
    const Classification cls = classify(net, s.image);
    report.confusion(truth, cls.class_index) += 1;
    ++total[cid];
    if (cls.class_index == truth) ++correct[cid];
  }

  int correct_sum = 0, total_sum = 0;
  for (const auto& [cid, n] : total) {
    report.per_class_accuracy[cid] = double(correct[cid]) / double(n);
    correct_sum += correct[cid];
    total_sum += n;
  }
  report.overall_accuracy =
      total_sum == 0 ? 0.0 : double(correct_sum) / double(total_sum);
  return report;
}

int conse_predict(Network<float>& net_seen, const PrototypeSet& prototypes_seen,
                  const PrototypeSet& prototypes_unseen, const Image& image,
                  const ConseConfig& config) {
  const int cs = prototypes_seen.num_classes();
  const int top_t = config.top_t == 0 ? cs : config.top_t;
  if (top_t < 1 || top_t > cs)
    throw Error("invalid-config",
                "conse top_t must be in [1, " + std::to_string(cs) + "]");
  const Classification cls = classify(net_seen, image);
  if (cls.probabilities.size() != cs)
    throw Error("coverage-mismatch",
                "network output arity does not match seen prototypes");

  std::vector<int> order(static_cast<size_t>(cs), 0);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return cls.probabilities[a] > cls.probabilities[b];
  });

  Eigen::VectorXf combo = Eigen::VectorXf::Zero(prototypes_seen.dimension());
  float weight_sum = 0;
  for (int t = 0; t < top_t; ++t) {
    const int c = order[size_t(t)];
    combo += cls.probabilities[c] * prototypes_seen.matrix.col(c);
    weight_sum += cls.probabilities[c];
  }
  combo /= weight_sum;

  const float norm = combo.norm();
  int best = 0;
  float best_cos = -2;
  for (int u = 0; u < prototypes_unseen.num_classes(); ++u) {
    const float cosine = prototypes_unseen.matrix.col(u).dot(combo) / norm;
    if (cosine > best_cos) {
      best_cos = cosine;
      best = u;
    }
  }
  return best;
}

double paired_permutation_pvalue(const std::vector<double>& differences,
                                 int resamples, std::uint64_t seed) {
  if (differences.empty()) return 1.0;
  const double observed = std::abs(
      std::accumulate(differences.begin(), differences.end(), 0.0) /
      double(differences.size()));
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution flip(0.5);
  int at_least = 0;
  for (int r = 0; r < resamples; ++r) {
    double sum = 0;
    for (double d : differences) sum += flip(rng) ? d : -d;
    if (std::abs(sum / double(differences.size())) >= observed - 1e-12)
      ++at_least;
  }
  return double(at_least + 1) / double(resamples + 1);
}

ComparisonSummary run_zero_shot_comparison(
    const Dataset& dataset, const PrototypeSet& prototypes_all,
    const std::vector<ClassSplit>& splits, const NetworkFactory& factory,
    const TrainSchedule& schedule, const ConseConfig& conse) {
  ComparisonSummary summary;

  for (size_t trial = 0; trial < splits.size(); ++trial) {
    const ClassSplit& split = splits[trial];
    const PrototypeSet protos_seen = prototypes_all.select(split.seen);
    const PrototypeSet protos_unseen = prototypes_all.select(split.unseen);

    // seen-class training view with labels remapped to C_s order
    std::vector<int> seen_label(dataset.class_ids.size(), -1);
    for (size_t i = 0; i < split.seen.size(); ++i) {
      const int c = find_class(dataset.class_ids, split.seen[i]);
      if (c < 0) throw Error("coverage-mismatch", "seen class not in dataset");
      seen_label[size_t(c)] = int(i);
    }
    std::vector<Sample> seen_samples;
    std::vector<int> seen_train, seen_val;
    auto add_part = [&](const std::vector<int>& src, std::vector<int>& dst) {
      for (int idx : src) {
        const Sample& s = dataset.samples[size_t(idx)];
        if (seen_label[size_t(s.label)] < 0) continue;
        dst.push_back(int(seen_samples.size()));
        seen_samples.push_back(Sample{s.image, seen_label[size_t(s.label)]});
      }
    };
    add_part(dataset.train_idx, seen_train);
    add_part(dataset.val_idx, seen_val);

    Network<float> net = factory(protos_seen);
    TrainSchedule trial_schedule = schedule;
    trial_schedule.seed = mix_seed(schedule.seed, trial);
    trial_schedule.keep_snapshots = false;
    train(net, seen_samples, seen_train, seen_val, trial_schedule);

    // every sample of an unseen class is test material
    std::vector<int> unseen_indices;
    for (size_t i = 0; i < dataset.samples.size(); ++i)
      if (find_class(split.unseen,
                     dataset.class_ids[size_t(dataset.samples[i].label)]) >= 0)
        unseen_indices.push_back(int(i));

    TrialResult result;
    result.split = split;
    result.proposed_accuracy =
        evaluate_unseen(net, protos_unseen, dataset.samples, unseen_indices,
                        dataset.class_ids)
            .overall_accuracy;

    int conse_correct = 0;
    for (int idx : unseen_indices) {
      const Sample& s = dataset.samples[size_t(idx)];
      const int pred = conse_predict(net, protos_seen, protos_unseen, s.image,
                                     conse);
      const int truth = find_class(protos_unseen.class_ids,
                                   dataset.class_ids[size_t(s.label)]);
      if (pred == truth) ++conse_correct;
    }
    result.conse_accuracy = unseen_indices.empty()
                                ? 0.0
                                : double(conse_correct) /
                                      double(unseen_indices.size());
    summary.trials.push_back(std::move(result));
  }

  std::vector<double> diffs;
  for (const TrialResult& t : summary.trials) {
    summary.proposed_mean += t.proposed_accuracy;
    summary.conse_mean += t.conse_accuracy;
    diffs.push_back(t.proposed_accuracy - t.conse_accuracy);
  }
  if (!summary.trials.empty()) {
    summary.proposed_mean /= double(summary.trials.size());
    summary.conse_mean /= double(summary.trials.size());
  }
  summary.p_value = paired_permutation_pvalue(diffs);
  return summary;
}

std::vector<TradeoffPoint> tradeoff_curve(
    const std::vector<Network<float>>& checkpoints,
    const PrototypeSet& prototypes_seen, const PrototypeSet& prototypes_unseen,
    const std::vector<Sample>& samples, const std::vector<int>& seen_test,
    const std::vector<int>& unseen_test,
    const std::vector<std::string>& dataset_class_ids) {
  std::vector<TradeoffPoint> curve;
  for (size_t i = 0; i < checkpoints.size(); ++i) {
    TradeoffPoint pt;
    pt.checkpoint_id = "epoch_" + std::to_string(i);

    Network<float> net = checkpoints[i];
    int correct = 0;
    for (int idx : seen_test) {
      const Sample& s = samples[size_t(idx)];
      const int truth = find_class(prototypes_seen.class_ids,
                                   dataset_class_ids[size_t(s.label)]);
      if (truth < 0)
        throw Error("label-outside-Cs", "seen test sample not in C_s");
      if (classify(net, s.image).class_index == truth) ++correct;
    }
    pt.seen_accuracy =
        seen_test.empty() ? 0.0 : double(correct) / double(seen_test.size());
    pt.unseen_accuracy =
        evaluate_unseen(checkpoints[i], prototypes_unseen, samples,
                        unseen_test, dataset_class_ids)
            .overall_accuracy;
    curve.push_back(std::move(pt));
  }
  return curve;
}

}  // namespace protonet
