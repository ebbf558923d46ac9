#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "protonet/data.hpp"
#include "protonet/proto.hpp"
#include "protonet/train.hpp"

namespace protonet {

struct ClassSplit {
  std::vector<std::string> seen;    // C_s
  std::vector<std::string> unseen;  // C_u
  std::uint64_t seed = 0;
};

struct ConseConfig {
  int top_t = 0;  // 0: use |C_s|, the paper's default
};

struct EvalReport {
  std::map<std::string, double> per_class_accuracy;
  double overall_accuracy = 0;
  Eigen::MatrixXi confusion;  // row: true class, col: predicted, in
                              // label_space order
  std::vector<std::string> label_space;
  std::uint64_t trial_seed = 0;
  std::string checkpoint_id;
};

// num_trials seeded draws of num_unseen classes without replacement; both
// lists keep the input class order.
std::vector<ClassSplit> make_splits(const std::vector<std::string>& class_ids,
                                    int num_unseen, int num_trials,
                                    std::uint64_t master_seed);

// Swaps the head to the unseen prototypes and classifies the given samples.
// Sample labels index dataset_class_ids; every sample must belong to C_u.
EvalReport evaluate_unseen(Network<float> net,
                           const PrototypeSet& prototypes_unseen,
                           const std::vector<Sample>& samples,
                           const std::vector<int>& indices,
                           const std::vector<std::string>& dataset_class_ids);

// ConSE: convex combination of the top-T seen-class embeddings weighted by
// the seen-class softmax, then nearest unseen prototype by cosine.
// Returns an index into prototypes_unseen.class_ids.
int conse_predict(Network<float>& net_seen, const PrototypeSet& prototypes_seen,
                  const PrototypeSet& prototypes_unseen, const Image& image,
                  const ConseConfig& config);

struct TrialResult {
  ClassSplit split;
  double proposed_accuracy = 0;
  double conse_accuracy = 0;
};

struct ComparisonSummary {
  std::vector<TrialResult> trials;
  double proposed_mean = 0;
  double conse_mean = 0;
  double p_value = 1.0;  // paired sign-flip permutation test, 10000 resamples
};

// Builds a fresh prototype-head network for a given seen-class prototype
// set (k inferred from the set).
using NetworkFactory =
    std::function<Network<float>(const PrototypeSet& seen_prototypes)>;

// Per split: train the prototype-head model on C_s, evaluate it on C_u via
// head swap, evaluate ConSE from the same seen-class softmax on the same
// samples, then aggregate with a paired permutation test.
ComparisonSummary run_zero_shot_comparison(
    const Dataset& dataset, const PrototypeSet& prototypes_all,
    const std::vector<ClassSplit>& splits, const NetworkFactory& factory,
    const TrainSchedule& schedule, const ConseConfig& conse);

// Two-sided sign-flip test on paired differences; p = 1 when all zero.
double paired_permutation_pvalue(const std::vector<double>& differences,
                                 int resamples = 10000,
                                 std::uint64_t seed = 12345);

struct TradeoffPoint {
  std::string checkpoint_id;
  double seen_accuracy = 0;
  double unseen_accuracy = 0;
};

// Seen accuracy with the C_s head vs unseen accuracy after swapping to C_u,
// per training checkpoint.
std::vector<TradeoffPoint> tradeoff_curve(
    const std::vector<Network<float>>& checkpoints,
    const PrototypeSet& prototypes_seen, const PrototypeSet& prototypes_unseen,
    const std::vector<Sample>& samples, const std::vector<int>& seen_test,
    const std::vector<int>& unseen_test,
    const std::vector<std::string>& dataset_class_ids);

}  // namespace protonet
