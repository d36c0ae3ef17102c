#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rescnn/embeddings.hpp"
#include "rescnn/model.hpp"

namespace rescnn {

struct TrainConfig {
  std::size_t batch_size = 64;
  double learning_rate = 0.001;
  std::size_t epochs = 1;
  std::uint64_t seed = 1;
  // Evaluate every k steps (0: only at the end of each epoch).
  std::size_t eval_every = 0;
  // Fraction of the training instances held out for validation loss.
  double holdout_fraction = 0.0;

  void validate() const;
};

struct StepRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double loss = 0.0;
};

struct EvalRecord {
  std::size_t step = 0;
  std::vector<std::pair<std::string, double>> metrics;
};

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<EvalRecord> evals;

  // step,epoch,loss
  void write_csv(std::ostream& out) const;
};

using EvalCallback =
    std::function<std::vector<std::pair<std::string, double>>(Model& model, std::size_t step)>;

// Permutation of [0, n) for one epoch, seeded from (seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch);

// Mini-batch Adam over epochs * ceil(N / B) steps; the last partial batch of
// an epoch is kept. Each step minimises the mean cross-entropy of the batch
// with dropout in train mode. Throws NumericalError naming the step on a
// non-finite loss.
TrainLog train(Model& model, std::span<const EncodedInstance> data, const TrainConfig& cfg,
               const EvalCallback& on_eval = {});

// Mean cross-entropy in test mode; parameters are not touched.
double loss_on(Model& model, std::span<const EncodedInstance> data);
// Fraction of instances whose argmax logit equals the label (test mode).
double accuracy_on(Model& model, std::span<const EncodedInstance> data);

// FNV-1a over the raw bytes of every parameter, in parameter order.
std::uint64_t parameter_checksum(Model& model);

}  // namespace rescnn
