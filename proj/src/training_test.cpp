#include "rescnn/training.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "rescnn/errors.hpp"

namespace rescnn {
namespace {

struct Toy {
  EmbeddingConfig emb;
  Vocabulary vocab;
  std::vector<EncodedInstance> data;
};

Toy toy(std::size_t count, std::size_t relations) {
  Toy t;
  t.emb.word_dim = 4;
  t.emb.position_dim = 2;
  t.emb.max_length = 6;
  for (int i = 0; i < 10; ++i) t.vocab.add("w" + std::to_string(i));
  Rng rng(3);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<std::string> tokens;
    for (int k = 0; k < 5; ++k) tokens.push_back("w" + std::to_string(uniform_index(rng, 10)));
    t.data.push_back(encode_instance(tokens, 0, 4, i % relations, {"a" + std::to_string(i), "b"},
                                     t.vocab, t.emb));
  }
  return t;
}

Model toy_model(const Toy& t, Variant v, std::size_t layers, std::size_t relations, std::uint64_t seed = 1) {
  Rng rng(seed);
  return Model(make_model_config(v, layers, relations, 3, 4, t.emb), seed,
               random_word_table(t.vocab, t.emb.word_dim, rng));
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  EXPECT_EQ(cfg.batch_size, 64u);
  EXPECT_EQ(cfg.learning_rate, 0.001);
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.batch_size = 1;
  cfg.learning_rate = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(EpochOrder, PermutationPerEpoch) {
  const auto a = epoch_order(20, 5, 0), b = epoch_order(20, 5, 0), c = epoch_order(20, 5, 1);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(sorted[i], i);
}

TEST(Train, StepCountIsCeiling) {
  Toy t = toy(10, 3);
  Model m = toy_model(t, Variant::Cnn, 1, 3);
  TrainConfig cfg;
  EXPECT_EQ(train(m, t.data, cfg).steps.size(), 1u);
  Toy u = toy(130, 3);
  Model m2 = toy_model(u, Variant::Cnn, 1, 3);
  cfg.epochs = 2;
  const auto log = train(m2, u.data, cfg);
  ASSERT_EQ(log.steps.size(), 6u);
  for (std::size_t i = 0; i < log.steps.size(); ++i) {
    EXPECT_EQ(log.steps[i].step, i + 1);
    EXPECT_EQ(log.steps[i].epoch, i / 3);
    EXPECT_TRUE(std::isfinite(log.steps[i].loss));
  }
}

TEST(Train, EmptyCorpusIsError) {
  Toy t = toy(1, 2);
  Model m = toy_model(t, Variant::Cnn, 1, 2);
  EXPECT_THROW(train(m, std::span<const EncodedInstance>{}, {}), DataError);
}

TEST(Train, MemorisesSingleInstance) {
  Toy t = toy(1, 3);
  t.data[0].label = 2;
  Model m = toy_model(t, Variant::ResCnnX, 3, 3);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.learning_rate = 0.01;
  const auto log = train(m, t.data, cfg);
  ASSERT_EQ(log.steps.size(), 200u);
  EXPECT_LT(log.steps.back().loss, 0.01);
  EXPECT_LT(loss_on(m, t.data), 0.01);
}

TEST(Train, LossDecreasesOnFixedBatch) {
  Toy t = toy(8, 3);
  // Dropout off so every step sees the same objective.
  Rng rng(1);
  Model m(make_model_config(Variant::Cnn, 1, 3, 3, 4, t.emb, 1.0), 1, random_word_table(t.vocab, 4, rng));
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.batch_size = 8;
  const double start = loss_on(m, t.data);
  const auto log = train(m, t.data, cfg);
  EXPECT_NEAR(log.steps.front().loss, start, 1e-12);
  EXPECT_LT(loss_on(m, t.data), start);
  EXPECT_LT(log.steps.back().loss, log.steps.front().loss);
}

TEST(Train, BitIdenticalReruns) {
  Toy t = toy(40, 3);
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.epochs = 3;
  cfg.seed = 9;
  Model a = toy_model(t, Variant::ResCnnX, 5, 3, 2), b = toy_model(t, Variant::ResCnnX, 5, 3, 2);
  const auto la = train(a, t.data, cfg), lb = train(b, t.data, cfg);
  ASSERT_EQ(la.steps.size(), lb.steps.size());
  for (std::size_t i = 0; i < la.steps.size(); ++i) EXPECT_EQ(la.steps[i].loss, lb.steps[i].loss);
  EXPECT_EQ(parameter_checksum(a), parameter_checksum(b));
  cfg.seed = 10;
  Model c = toy_model(t, Variant::ResCnnX, 5, 3, 2);
  train(c, t.data, cfg);
  EXPECT_NE(parameter_checksum(a), parameter_checksum(c));
}

TEST(Train, PadRowStaysZero) {
  Toy t = toy(30, 3);
  Model m = toy_model(t, Variant::Cnn, 1, 3);
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.epochs = 5;
  cfg.learning_rate = 0.05;
  train(m, t.data, cfg);
  for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(m.word_table().at(kPadId, c), 0.0);
  // Some other row must have moved.
  Rng rng(1);
  const Tensor fresh = random_word_table(t.vocab, 4, rng);
  EXPECT_FALSE(fresh == m.word_table());
}

TEST(Train, HoldoutAndEvalCallback) {
  Toy t = toy(50, 3);
  Model m = toy_model(t, Variant::Cnn, 1, 3);
  TrainConfig cfg;
  cfg.batch_size = 10;
  cfg.epochs = 2;
  cfg.holdout_fraction = 0.2;
  cfg.eval_every = 2;
  std::size_t calls = 0;
  const auto log = train(m, t.data, cfg, [&](Model&, std::size_t) {
    ++calls;
    return std::vector<std::pair<std::string, double>>{{"x", 1.0}};
  });
  EXPECT_EQ(log.steps.size(), 8u);  // 40 training instances
  ASSERT_EQ(log.evals.size(), 4u);
  EXPECT_EQ(calls, 4u);
  EXPECT_EQ(log.evals[0].metrics[0].first, "holdout_loss");
  EXPECT_EQ(log.evals[0].step, 2u);
}

TEST(LossOn, ZeroHeadGivesLogK) {
  Toy t = toy(7, 4);
  Model m = toy_model(t, Variant::CnnX, 3, 4);
  m.dense_layers().back().weight.fill(0.0);
  m.dense_layers().back().bias.fill(0.0);
  EXPECT_NEAR(loss_on(m, t.data), std::log(4.0), 1e-15);
}

TEST(LossOn, HandOracle) {
  Toy t = toy(2, 3);
  Model m = toy_model(t, Variant::Cnn, 1, 3);
  const std::uint64_t before = parameter_checksum(m);
  double expected = 0.0;
  for (const auto& inst : t.data) expected -= std::log(m.predict_proba(inst)[inst.label]);
  expected /= 2.0;
  const double got = loss_on(m, t.data);
  EXPECT_NEAR(got, expected, 1e-12);
  EXPECT_GE(got, 0.0);
  EXPECT_EQ(parameter_checksum(m), before);
}

TEST(TrainLog, Csv) {
  TrainLog log;
  log.steps.push_back({1, 0, 0.5});
  log.steps.push_back({2, 1, 0.25});
  std::ostringstream out;
  log.write_csv(out);
  EXPECT_EQ(out.str(), "step,epoch,loss\n1,0,0.5\n2,1,0.25\n");
}

}  // namespace
}  // namespace rescnn
