#include "rescnn/training.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <ostream>

#include "rescnn/adam.hpp"
#include "rescnn/checkpoint.hpp"
#include "rescnn/errors.hpp"
#include "rescnn/random.hpp"

namespace rescnn {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    throw ConfigError("holdout fraction must lie in [0, 1)");
  }
}

void TrainLog::write_csv(std::ostream& out) const {
  out << "step,epoch,loss\n";
  for (const auto& s : steps) out << s.step << ',' << s.epoch << ',' << format_double(s.loss) << '\n';
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(mix_seed(seed, epoch));
  shuffle(std::span<std::size_t>(order), rng);
  return order;
}

TrainLog train(Model& model, std::span<const EncodedInstance> data, const TrainConfig& cfg,
               const EvalCallback& on_eval) {
  cfg.validate();
  if (data.empty()) throw DataError("train: empty training corpus");

  std::vector<EncodedInstance> fit;
  std::vector<EncodedInstance> holdout;
  if (cfg.holdout_fraction > 0.0) {
    const auto order = epoch_order(data.size(), mix_seed(cfg.seed, fnv1a("holdout")), 0);
    const auto held = static_cast<std::size_t>(std::floor(cfg.holdout_fraction * static_cast<double>(data.size())));
    for (std::size_t i = 0; i < order.size(); ++i) {
      (i < held ? holdout : fit).push_back(data[order[i]]);
    }
    if (fit.empty()) throw DataError("train: holdout leaves no training data");
  } else {
    fit.assign(data.begin(), data.end());
  }

  auto evaluate = [&](std::size_t step) {
    EvalRecord rec{step, {}};
    if (!holdout.empty()) rec.metrics.emplace_back("holdout_loss", loss_on(model, holdout));
    if (on_eval) {
      for (auto& m : on_eval(model, step)) rec.metrics.push_back(std::move(m));
    }
    return rec;
  };
  const bool evaluating = !holdout.empty() || static_cast<bool>(on_eval);

  const auto params = model.parameter_tensors();
  AdamState adam;
  Rng dropout_rng(mix_seed(cfg.seed, fnv1a("dropout")));
  TrainLog log;
  std::size_t step = 0;
  std::vector<EncodedInstance> batch;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = epoch_order(fit.size(), cfg.seed, epoch);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(fit[order[i]]);

      model.zero_grad();
      double loss_value = 0.0;
      try {
        Graph graph;
        const auto logits = model.forward(graph, batch, Mode::Train, &dropout_rng);
        std::vector<Var> losses;
        losses.reserve(logits.size());
        for (std::size_t i = 0; i < logits.size(); ++i) {
          losses.push_back(softmax_cross_entropy(logits[i], batch[i].label));
        }
        Var loss = mean(losses);
        loss_value = loss.value().item();
        graph.backward(loss);
      } catch (const NumericalError& e) {
        throw NumericalError("train: non-finite value at step " + std::to_string(step + 1) +
                             " (" + e.what() + ")");
      }
      if (!std::isfinite(loss_value)) {
        throw NumericalError("train: non-finite loss at step " + std::to_string(step + 1));
      }
      model.mask_frozen_gradients();
      adam_step(params, adam, cfg.learning_rate);
      ++step;
      log.steps.push_back({step, epoch, loss_value});
      if (evaluating && cfg.eval_every > 0 && step % cfg.eval_every == 0) log.evals.push_back(evaluate(step));
    }
    if (evaluating && cfg.eval_every == 0) log.evals.push_back(evaluate(step));
  }
  return log;
}

double loss_on(Model& model, std::span<const EncodedInstance> data) {
  if (data.empty()) return 0.0;
  double total = 0.0;
  for (const auto& inst : data) {
    Graph graph;
    Var logits = model.forward(graph, std::span(&inst, 1), Mode::Test, nullptr)[0];
    total += softmax_cross_entropy(logits, inst.label).value().item();
  }
  return total / static_cast<double>(data.size());
}

double accuracy_on(Model& model, std::span<const EncodedInstance> data) {
  if (data.empty()) return 0.0;
  const Tensor logits = model.logits(data);
  const std::size_t k = logits.dim(1);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j) {
      if (logits.at(i, j) > logits.at(i, best)) best = j;
    }
    correct += best == data[i].label;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

std::uint64_t parameter_checksum(Model& model) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : model.parameters()) {
    for (double v : p.tensor->data()) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xffu;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

}  // namespace rescnn
