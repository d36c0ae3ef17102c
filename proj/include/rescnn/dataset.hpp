#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rescnn/embeddings.hpp"

namespace rescnn {

struct CorpusInstance {
  std::vector<std::string> tokens;
  std::size_t e1_idx = 0;
  std::size_t e2_idx = 0;
  std::string e1_id;
  std::string e2_id;
  std::string relation;

  friend bool operator==(const CorpusInstance&, const CorpusInstance&) = default;
};

// Ordered relation labels; "NA" is always id 0.
class RelationSchema {
 public:
  static constexpr std::string_view kNa = "NA";

  RelationSchema() : RelationSchema(std::vector<std::string>{}) {}
  // Prepends NA when absent. Throws SchemaError on duplicates or when NA
  // appears anywhere but the front.
  explicit RelationSchema(std::vector<std::string> labels);

  // NA followed by the remaining labels of `corpus` in sorted order.
  static RelationSchema infer(std::span<const CorpusInstance> corpus);

  bool contains(std::string_view label) const;
  // Throws SchemaError for unknown labels.
  std::size_t id(std::string_view label) const;
  const std::string& label(std::size_t id) const { return labels_.at(id); }
  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  friend bool operator==(const RelationSchema& a, const RelationSchema& b) {
    return a.labels_ == b.labels_;
  }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> ids_;
};

// One JSON object per line with fields tokens, e1_idx, e2_idx, e1_id, e2_id,
// relation. Blank lines are skipped. With a schema, labels outside it raise
// a SchemaError naming every offender.
std::vector<CorpusInstance> load_corpus(std::istream& in, const RelationSchema* schema = nullptr);
void write_corpus(std::ostream& out, std::span<const CorpusInstance> corpus);

struct Fact {
  std::string e1_id;
  std::string e2_id;
  std::size_t relation = 0;

  friend auto operator<=>(const Fact&, const Fact&) = default;
};

using FactSet = std::set<Fact>;

// One label per line; NA is implied when absent.
RelationSchema read_relations(std::istream& in);
void write_relations(std::ostream& out, const RelationSchema& schema);

// Distinct non-NA (e1, e2, relation) triples.
FactSet gold_facts(std::span<const CorpusInstance> corpus, const RelationSchema& schema);
void write_gold_csv(std::ostream& out, const FactSet& facts, const RelationSchema& schema);

struct EncodedCorpus {
  std::vector<EncodedInstance> instances;
  // Index into the source corpus for each encoded instance.
  std::vector<std::size_t> source;
  std::size_t rejected = 0;
};

// Encodes every instance; those whose entities fall past the padded length
// are skipped and counted.
EncodedCorpus encode_corpus(std::span<const CorpusInstance> corpus, const RelationSchema& schema,
                            const Vocabulary& vocab, const EmbeddingConfig& cfg);

// ---- Synthetic distant-supervision corpora ---------------------------------

struct SynthConfig {
  std::size_t relations = 4;  // non-NA relations; the schema has relations + 1 labels
  std::size_t vocab_size = 200;
  std::size_t triggers_per_relation = 3;
  std::size_t min_length = 8;
  std::size_t max_length = 20;
  double noise = 0.0;  // label-flip probability for non-NA training sentences
  double na_fraction = 0.2;
  std::size_t train_instances = 1000;
  std::size_t test_instances = 200;
  std::size_t max_support = 2;  // sentences per entity pair, uniform in [1, max_support]
  std::uint64_t seed = 1;

  void validate() const;
};

struct SynthCorpus {
  RelationSchema schema;
  std::vector<CorpusInstance> train;
  std::vector<CorpusInstance> test;
  FactSet gold;
};

std::string relation_name(std::size_t relation);
std::string trigger_token(std::size_t relation, std::size_t k);
std::string filler_token(std::size_t k);

// Each non-NA sentence holds one trigger of its true relation; NA sentences
// hold none. Training labels of non-NA sentences are flipped to another
// non-NA relation with probability `noise`; test labels stay clean and
// define the gold facts.
SynthCorpus synth_generate(const SynthConfig& cfg);

}  // namespace rescnn
