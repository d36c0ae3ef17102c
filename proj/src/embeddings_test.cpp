#include "rescnn/embeddings.hpp"

#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <vector>

#include "rescnn/errors.hpp"
#include "rescnn/graph.hpp"

namespace rescnn {
namespace {

TEST(Vocabulary, ReservedIds) {
  Vocabulary v;
  EXPECT_EQ(v.size(), 2u);
  EXPECT_EQ(v.id("<pad>"), kPadId);
  EXPECT_EQ(v.id("<unk>"), kUnkId);
  EXPECT_EQ(v.add("cat"), 2u);
  EXPECT_EQ(v.add("cat"), 2u);
  EXPECT_EQ(v.id("dog"), kUnkId);
  EXPECT_FALSE(v.contains("dog"));
  EXPECT_EQ(v.token(2), "cat");
}

TEST(LoadEmbeddings, CountsAndShape) {
  std::ostringstream text;
  for (const char* w : {"a", "b", "c"}) {
    text << w;
    for (int i = 0; i < 50; ++i) text << ' ' << (i + 1) * 0.01;
    text << '\n';
  }
  std::istringstream in(text.str());
  const auto loaded = load_embeddings(in, 50);
  EXPECT_EQ(loaded.vocab.size(), 5u);
  EXPECT_EQ(loaded.table.shape(), (Shape{5, 50}));
}

TEST(LoadEmbeddings, PadZeroUnkMean) {
  std::istringstream in("2 2\nx 1 2\ny 3 -4\n");
  const auto loaded = load_embeddings(in);
  EXPECT_EQ(loaded.table.at(kPadId, 0), 0.0);
  EXPECT_EQ(loaded.table.at(kPadId, 1), 0.0);
  EXPECT_EQ(loaded.table.at(kUnkId, 0), 2.0);
  EXPECT_EQ(loaded.table.at(kUnkId, 1), -1.0);
  EXPECT_EQ(loaded.table.at(loaded.vocab.id("y"), 1), -4.0);
}

TEST(LoadEmbeddings, DimensionMismatchNamesLine) {
  std::ostringstream text;
  text << "good";
  for (int i = 0; i < 50; ++i) text << " 0.1";
  text << "\nshort";
  for (int i = 0; i < 49; ++i) text << " 0.1";
  text << '\n';
  std::istringstream in(text.str());
  try {
    load_embeddings(in, 50);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(LoadEmbeddings, DuplicateAndMalformed) {
  std::istringstream dup("a 1 2\na 3 4\n");
  EXPECT_THROW(load_embeddings(dup), ParseError);
  std::istringstream bad("a 1 x2\n");
  EXPECT_THROW(load_embeddings(bad), ParseError);
}

TEST(RelativePosition, EntityExample) {
  // "Steve_Jobs is the founder of Apple ."
  const EmbeddingConfig cfg;
  EXPECT_EQ(clipped_distance(3, 0, cfg), 3);
  EXPECT_EQ(clipped_distance(3, 5, cfg), -2);
}

TEST(RelativePosition, Clipping) {
  const EmbeddingConfig cfg;
  EXPECT_EQ(clipped_distance(45, 0, cfg), 30);
  EXPECT_EQ(relative_position(45, 0, cfg), 60u);
  EXPECT_EQ(relative_position(0, 45, cfg), 0u);
  EXPECT_EQ(relative_position(7, 7, cfg), 30u);
  EXPECT_EQ(relative_position(30, 0, cfg), 60u);
  EXPECT_EQ(relative_position(31, 0, cfg), 60u);
  EXPECT_EQ(relative_position(0, 30, cfg), 0u);
  EXPECT_EQ(relative_position(0, 31, cfg), 0u);
  EXPECT_EQ(relative_position(29, 0, cfg), 59u);
}

TEST(RelativePosition, RangeAndIdempotence) {
  const EmbeddingConfig cfg;
  EXPECT_EQ(cfg.position_vocab(), 61u);
  for (int i = 0; i < 120; ++i) {
    for (int e = 0; e < 120; e += 7) {
      const int d = clipped_distance(i, e, cfg);
      EXPECT_LT(relative_position(i, e, cfg), cfg.position_vocab());
      EXPECT_EQ(clipped_distance(d, 0, cfg), d);
    }
  }
}

TEST(EmbeddingConfig, Validation) {
  EmbeddingConfig cfg;
  EXPECT_EQ(cfg.input_dim(), 60u);
  cfg.word_dim = 4;
  cfg.position_dim = 1;
  EXPECT_EQ(cfg.input_dim(), 6u);
  cfg.min_distance = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Encode, PadsToLength) {
  Vocabulary v;
  const std::vector<std::string> tokens{"Steve_Jobs", "is", "the", "founder", "of", "Apple"};
  for (const auto& t : tokens) v.add(t);
  const EmbeddingConfig cfg;
  const auto inst = encode_instance(tokens, 0, 5, 1, {"A", "B"}, v, cfg);
  ASSERT_EQ(inst.token_ids.size(), 100u);
  ASSERT_EQ(inst.pos1_ids.size(), 100u);
  ASSERT_EQ(inst.pos2_ids.size(), 100u);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(inst.token_ids[i], v.id(tokens[i]));
  for (std::size_t i = 6; i < 100; ++i) EXPECT_EQ(inst.token_ids[i], kPadId);
  EXPECT_EQ(inst.pos1_ids[3], 33u);
  EXPECT_EQ(inst.pos2_ids[3], 28u);
  EXPECT_EQ(inst.original_length, 6u);
}

TEST(Encode, RejectsEntityPastTruncation) {
  Vocabulary v;
  std::vector<std::string> tokens(120, "w");
  const EmbeddingConfig cfg;
  EXPECT_THROW(encode_instance(tokens, 3, 110, 0, {"A", "B"}, v, cfg), DataError);
  EXPECT_THROW(encode_instance(tokens, 3, 120, 0, {"A", "B"}, v, cfg), DataError);
  const auto ok = encode_instance(tokens, 3, 99, 0, {"A", "B"}, v, cfg);
  EXPECT_EQ(ok.token_ids.size(), 100u);
}

TEST(Encode, UnknownTokensBecomeUnk) {
  Vocabulary v;
  const std::vector<std::string> tokens{"p", "q", "r"};
  EmbeddingConfig cfg;
  cfg.max_length = 3;
  const auto inst = encode_instance(tokens, 0, 2, 0, {"A", "B"}, v, cfg);
  for (std::size_t id : inst.token_ids) EXPECT_EQ(id, kUnkId);
}

TEST(Embed, ShapeAndDeterminism) {
  Vocabulary v;
  v.add("x");
  v.add("y");
  EmbeddingConfig cfg;
  cfg.word_dim = 4;
  cfg.position_dim = 1;
  cfg.max_length = 5;
  Rng rng(1);
  Tensor word = random_word_table(v, 4, rng);
  Tensor p1({cfg.position_vocab(), 1}, 0.5), p2({cfg.position_vocab(), 1}, -0.5);
  const std::vector<std::string> tokens{"x", "y", "x"};
  const auto a = encode_instance(tokens, 0, 2, 0, {"A", "B"}, v, cfg);
  const auto b = encode_instance(tokens, 0, 2, 0, {"A", "B"}, v, cfg);
  Graph g;
  const Tensor& ea = embed(a, g.leaf(word), g.leaf(p1), g.leaf(p2)).value();
  const Tensor& eb = embed(b, g.leaf(word), g.leaf(p1), g.leaf(p2)).value();
  EXPECT_EQ(ea.shape(), (Shape{5, 6}));
  EXPECT_EQ(ea, eb);
  EXPECT_EQ(ea.at(0, 4), 0.5);
  EXPECT_EQ(ea.at(0, 5), -0.5);
  for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(ea.at(4, c), 0.0);  // PAD row
}

TEST(RandomWordTable, PadRowZeroAndRange) {
  Vocabulary v;
  for (int i = 0; i < 20; ++i) v.add("t" + std::to_string(i));
  Rng rng(3);
  const Tensor t = random_word_table(v, 8, rng);
  for (std::size_t c = 0; c < 8; ++c) EXPECT_EQ(t.at(kPadId, c), 0.0);
  for (double x : t.data()) {
    EXPECT_GE(x, -0.25);
    EXPECT_LE(x, 0.25);
  }
}

}  // namespace
}  // namespace rescnn
