#include "rescnn/dataset.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "rescnn/errors.hpp"

namespace rescnn {
namespace {

CorpusInstance make(std::string e1, std::string e2, std::string rel) {
  return {{e1, "x", e2}, 0, 2, e1, e2, std::move(rel)};
}

TEST(Schema, NaAlwaysFirst) {
  const RelationSchema s({"b", "a"});
  EXPECT_EQ(s.size(), 3u);
  EXPECT_EQ(s.id("NA"), 0u);
  EXPECT_EQ(s.id("b"), 1u);
  EXPECT_THROW(RelationSchema({"a", "NA"}), SchemaError);
  EXPECT_THROW(RelationSchema({"a", "a"}), SchemaError);
  EXPECT_THROW(s.id("zzz"), SchemaError);
}

TEST(Schema, InferSortsLabels) {
  const std::vector<CorpusInstance> c{make("A", "B", "z"), make("C", "D", "NA"), make("E", "F", "m")};
  EXPECT_EQ(RelationSchema::infer(c).labels(), (std::vector<std::string>{"NA", "m", "z"}));
}

TEST(LoadCorpus, TwoLines) {
  std::istringstream in(
      R"({"tokens":["a","b","c"],"e1_idx":0,"e2_idx":2,"e1_id":"A","e2_id":"C","relation":"r"})"
      "\n\n"
      R"({"tokens":["d","e"],"e1_idx":1,"e2_idx":0,"e1_id":"E","e2_id":"D","relation":"NA"})"
      "\n");
  const auto c = load_corpus(in);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].tokens, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(c[1].e1_idx, 1u);
}

TEST(LoadCorpus, EntityIndexAtLengthIsDataError) {
  std::istringstream in(
      R"({"tokens":["a","b"],"e1_idx":0,"e2_idx":1,"e1_id":"A","e2_id":"B","relation":"r"})"
      "\n"
      R"({"tokens":["a","b"],"e1_idx":2,"e2_idx":1,"e1_id":"A","e2_id":"B","relation":"r"})"
      "\n");
  try {
    load_corpus(in);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(LoadCorpus, MalformedAndMissingFields) {
  std::istringstream bad("{not json}\n");
  EXPECT_THROW(load_corpus(bad), ParseError);
  std::istringstream missing(R"({"tokens":["a"],"e1_idx":0,"e2_idx":0,"e1_id":"A","e2_id":"B"})");
  EXPECT_THROW(load_corpus(missing), ParseError);
  std::istringstream negative(
      R"({"tokens":["a"],"e1_idx":-1,"e2_idx":0,"e1_id":"A","e2_id":"B","relation":"r"})");
  EXPECT_THROW(load_corpus(negative), ParseError);
}

TEST(LoadCorpus, UnknownLabelsAreListed) {
  const RelationSchema schema({"founderOf"});
  std::istringstream in(
      R"({"tokens":["a","b"],"e1_idx":0,"e2_idx":1,"e1_id":"A","e2_id":"B","relation":"bornInCity"})"
      "\n"
      R"({"tokens":["a","b"],"e1_idx":0,"e2_idx":1,"e1_id":"A","e2_id":"B","relation":"diedIn"})"
      "\n");
  try {
    load_corpus(in, &schema);
    FAIL();
  } catch (const SchemaError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("bornInCity"), std::string::npos);
    EXPECT_NE(msg.find("diedIn"), std::string::npos);
  }
}

TEST(LoadCorpus, EmptyInputIsEmptyList) {
  std::istringstream in("");
  EXPECT_TRUE(load_corpus(in).empty());
}

TEST(LoadCorpus, RoundTrip) {
  SynthConfig cfg;
  cfg.train_instances = 50;
  cfg.test_instances = 10;
  const auto corpus = synth_generate(cfg);
  std::ostringstream out;
  write_corpus(out, corpus.train);
  std::istringstream in(out.str());
  EXPECT_EQ(load_corpus(in, &corpus.schema), corpus.train);
}

TEST(Relations, RoundTrip) {
  const RelationSchema s({"x", "y"});
  std::ostringstream out;
  write_relations(out, s);
  std::istringstream in(out.str());
  EXPECT_EQ(read_relations(in), s);
}

TEST(GoldFacts, SetSemantics) {
  const RelationSchema schema({"r", "s", "t"});
  const std::vector<CorpusInstance> dup{make("A", "B", "r"), make("A", "B", "r")};
  EXPECT_EQ(gold_facts(dup, schema).size(), 1u);
  const std::vector<CorpusInstance> na{make("A", "B", "NA"), make("C", "D", "NA")};
  EXPECT_TRUE(gold_facts(na, schema).empty());
  std::vector<CorpusInstance> three{make("A", "B", "r"), make("A", "B", "s"), make("C", "D", "t"),
                                    make("C", "D", "NA")};
  EXPECT_EQ(gold_facts(three, schema).size(), 3u);
  std::reverse(three.begin(), three.end());
  EXPECT_EQ(gold_facts(three, schema), gold_facts(std::vector<CorpusInstance>(three.rbegin(), three.rend()), schema));
}

TEST(EncodeCorpus, CountsRejections) {
  const RelationSchema schema({"r"});
  std::vector<CorpusInstance> c{make("A", "B", "r")};
  CorpusInstance longer;
  longer.tokens.assign(12, "w");
  longer.e1_idx = 0;
  longer.e2_idx = 11;
  longer.e1_id = "C";
  longer.e2_id = "D";
  longer.relation = "NA";
  c.push_back(longer);
  Vocabulary v;
  EmbeddingConfig cfg;
  cfg.max_length = 10;
  const auto enc = encode_corpus(c, schema, v, cfg);
  EXPECT_EQ(enc.instances.size(), 1u);
  EXPECT_EQ(enc.rejected, 1u);
  EXPECT_EQ(enc.source, (std::vector<std::size_t>{0}));
}

std::map<std::string, std::size_t> trigger_relation(const CorpusInstance& inst) {
  std::map<std::string, std::size_t> found;
  for (const auto& tok : inst.tokens) {
    if (tok.starts_with("trig")) found[tok] = std::stoul(tok.substr(4, tok.find('_') - 4));
  }
  return found;
}

TEST(Synth, CleanLabelsMatchTriggers) {
  SynthConfig cfg;
  cfg.noise = 0.0;
  const auto corpus = synth_generate(cfg);
  for (const auto* split : {&corpus.train, &corpus.test}) {
    for (const auto& inst : *split) {
      const auto found = trigger_relation(inst);
      if (inst.relation == "NA") {
        EXPECT_TRUE(found.empty());
      } else {
        ASSERT_EQ(found.size(), 1u);
        EXPECT_EQ(relation_name(found.begin()->second), inst.relation);
      }
    }
  }
}

TEST(Synth, FlipRateWithinThreeStandardErrors) {
  SynthConfig cfg;
  cfg.noise = 0.3;
  cfg.train_instances = 10000;
  cfg.test_instances = 10;
  const auto corpus = synth_generate(cfg);
  std::size_t positives = 0, flipped = 0;
  for (const auto& inst : corpus.train) {
    const auto found = trigger_relation(inst);
    if (found.empty()) {
      EXPECT_EQ(inst.relation, "NA");  // noise never touches NA
      continue;
    }
    EXPECT_NE(inst.relation, "NA");  // noise never produces NA
    ++positives;
    if (relation_name(found.begin()->second) != inst.relation) ++flipped;
  }
  const double rate = static_cast<double>(flipped) / positives;
  const double se = std::sqrt(0.3 * 0.7 / positives);
  EXPECT_LE(std::abs(rate - 0.3), 3.0 * se) << "rate " << rate << " over " << positives;
  for (const auto& inst : corpus.test) {
    const auto found = trigger_relation(inst);
    if (!found.empty()) {
      EXPECT_EQ(relation_name(found.begin()->second), inst.relation);
    }
  }
}

TEST(Synth, SameSeedSameCorpus) {
  SynthConfig cfg;
  cfg.noise = 0.2;
  cfg.seed = 42;
  const auto a = synth_generate(cfg), b = synth_generate(cfg);
  std::ostringstream sa, sb;
  write_corpus(sa, a.train);
  write_corpus(sa, a.test);
  write_corpus(sb, b.train);
  write_corpus(sb, b.test);
  EXPECT_EQ(sa.str(), sb.str());
  cfg.seed = 43;
  std::ostringstream sc;
  write_corpus(sc, synth_generate(cfg).train);
  EXPECT_NE(sc.str().substr(0, 200), sa.str().substr(0, 200));
}

TEST(Synth, GoldMatchesTestCorpus) {
  const auto corpus = synth_generate({});
  EXPECT_EQ(corpus.gold, gold_facts(corpus.test, corpus.schema));
  EXPECT_EQ(corpus.schema.size(), 5u);
  EXPECT_EQ(corpus.train.size(), 1000u);
  EXPECT_EQ(corpus.test.size(), 200u);
}

TEST(Synth, InvalidRates) {
  SynthConfig cfg;
  cfg.noise = 1.0;
  EXPECT_THROW(synth_generate(cfg), ConfigError);
  cfg.noise = 0.0;
  cfg.train_instances = 0;
  EXPECT_THROW(synth_generate(cfg), ConfigError);
}

}  // namespace
}  // namespace rescnn
