#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "protonet/net.hpp"

namespace protonet {

struct Sample {
  Image image;
  int label = -1;  // index into the active class list
};

struct TrainSchedule {
  int epochs = 30;
  int batch_size = 16;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::uint64_t seed = 1;
  bool keep_snapshots = false;  // one network copy per epoch
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0;
  double val_accuracy = 0;
};

template <typename T>
struct TrainResult {
  std::vector<EpochMetrics> epochs;
  std::vector<Network<T>> snapshots;
};

// Fraction of samples at the given indices whose argmax prediction matches
// the label. Inference mode.
template <typename T>
double evaluate_accuracy(Network<T>& net, const std::vector<Tensor<T>>& inputs,
                         const std::vector<Sample>& samples,
                         const std::vector<int>& indices) {
  if (indices.empty()) return 0.0;
  int correct = 0;
  for (int idx : indices) {
    const VectorX<T>& z = net.forward(inputs[size_t(idx)], false).logits;
    int best = 0;
    for (int c = 1; c < z.size(); ++c)
      if (z[c] > z[best]) best = c;
    if (best == samples[size_t(idx)].label) ++correct;
  }
  return double(correct) / double(indices.size());
}

// Mini-batch SGD with momentum over a seeded shuffle. Deterministic for a
// fixed seed: samples are visited and gradients accumulated in shuffled
// sample order, serially.
template <typename T>
TrainResult<T> train(Network<T>& net, const std::vector<Sample>& samples,
                     const std::vector<int>& train_indices,
                     const std::vector<int>& val_indices,
                     const TrainSchedule& schedule) {
  if (train_indices.empty()) throw Error("empty-dataset", "no training samples");
  const int num_classes = net.num_classes();
  for (int idx : train_indices)
    if (samples[size_t(idx)].label < 0 ||
        samples[size_t(idx)].label >= num_classes)
      throw Error("invalid-argument", "training label out of range");

  std::vector<Tensor<T>> inputs;
  inputs.reserve(samples.size());
  for (const Sample& s : samples)
    inputs.push_back(tensor_from_image<T>(s.image));

  std::mt19937_64 shuffle_rng(schedule.seed);
  net.rng.seed(schedule.seed ^ 0x9e3779b97f4a7c15ULL);  // dropout stream

  TrainResult<T> result;
  std::vector<int> order = train_indices;
  for (int epoch = 0; epoch < schedule.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0;
    for (size_t start = 0; start < order.size();
         start += size_t(schedule.batch_size)) {
      const size_t end =
          std::min(order.size(), start + size_t(schedule.batch_size));
      const T inv_batch = T(1) / T(end - start);
      net.zero_grad();
      for (size_t i = start; i < end; ++i) {
        const Sample& s = samples[size_t(order[i])];
        ForwardResult<T> fw = net.forward(inputs[size_t(order[i])], true);
        VectorX<T> probs = softmax(fw.logits);
        loss_sum += double(nll_loss(probs, s.label));
        VectorX<T> dz = probs;  // d loss / d logits = s(z) - one_hot(y)
        dz[s.label] -= T(1);
        net.backward(dz * inv_batch);
      }
      net.sgd_step(T(schedule.learning_rate), T(schedule.momentum));
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = loss_sum / double(order.size());
    m.val_accuracy = evaluate_accuracy(net, inputs, samples, val_indices);
    result.epochs.push_back(m);
    if (schedule.keep_snapshots) result.snapshots.push_back(net);
  }
  return result;
}

}  // namespace protonet
