#include "rescnn/dataset.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "rescnn/errors.hpp"
#include "rescnn/random.hpp"

namespace rescnn {

using nlohmann::json;

RelationSchema::RelationSchema(std::vector<std::string> labels) {
  if (labels.empty() || labels.front() != kNa) labels.insert(labels.begin(), std::string(kNa));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i > 0 && labels[i] == kNa) throw SchemaError("schema: NA must be the first label");
    if (!ids_.emplace(labels[i], i).second) {
      throw SchemaError("schema: duplicate label '" + labels[i] + "'");
    }
  }
  labels_ = std::move(labels);
}

RelationSchema RelationSchema::infer(std::span<const CorpusInstance> corpus) {
  std::set<std::string> seen;
  for (const auto& inst : corpus) {
    if (inst.relation != kNa) seen.insert(inst.relation);
  }
  return RelationSchema(std::vector<std::string>(seen.begin(), seen.end()));
}

bool RelationSchema::contains(std::string_view label) const {
  return ids_.contains(std::string(label));
}

std::size_t RelationSchema::id(std::string_view label) const {
  auto it = ids_.find(std::string(label));
  if (it == ids_.end()) throw SchemaError("unknown relation label '" + std::string(label) + "'");
  return it->second;
}

namespace {

template <typename T>
T field(const json& obj, const char* name, std::size_t line_no) {
  auto it = obj.find(name);
  if (it == obj.end()) throw ParseError(std::string("missing field '") + name + "'", line_no);
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string("field '") + name + "' has the wrong type", line_no);
  }
}

std::size_t index_field(const json& obj, const char* name, std::size_t line_no) {
  auto it = obj.find(name);
  if (it == obj.end()) throw ParseError(std::string("missing field '") + name + "'", line_no);
  if (!it->is_number_unsigned()) {
    throw ParseError(std::string("field '") + name + "' must be a non-negative integer", line_no);
  }
  return it->get<std::size_t>();
}

}  // namespace

std::vector<CorpusInstance> load_corpus(std::istream& in, const RelationSchema* schema) {
  std::vector<CorpusInstance> corpus;
  std::set<std::string> unknown;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    if (!obj.is_object()) throw ParseError("expected a JSON object", line_no);

    CorpusInstance inst;
    inst.tokens = field<std::vector<std::string>>(obj, "tokens", line_no);
    inst.e1_idx = index_field(obj, "e1_idx", line_no);
    inst.e2_idx = index_field(obj, "e2_idx", line_no);
    inst.e1_id = field<std::string>(obj, "e1_id", line_no);
    inst.e2_id = field<std::string>(obj, "e2_id", line_no);
    inst.relation = field<std::string>(obj, "relation", line_no);

    if (inst.tokens.empty()) throw DataError("line " + std::to_string(line_no) + ": empty token list");
    for (std::size_t idx : {inst.e1_idx, inst.e2_idx}) {
      if (idx >= inst.tokens.size()) {
        throw DataError("line " + std::to_string(line_no) + ": entity index " +
                        std::to_string(idx) + " outside sentence of " +
                        std::to_string(inst.tokens.size()) + " tokens");
      }
    }
    if (schema && !schema->contains(inst.relation)) unknown.insert(inst.relation);
    corpus.push_back(std::move(inst));
  }
  if (!unknown.empty()) {
    std::string names;
    for (const auto& u : unknown) names += (names.empty() ? "" : ", ") + u;
    throw SchemaError("relations not in schema: " + names);
  }
  return corpus;
}

void write_corpus(std::ostream& out, std::span<const CorpusInstance> corpus) {
  for (const auto& inst : corpus) {
    json obj = {{"tokens", inst.tokens},   {"e1_idx", inst.e1_idx}, {"e2_idx", inst.e2_idx},
                {"e1_id", inst.e1_id},     {"e2_id", inst.e2_id},   {"relation", inst.relation}};
    out << obj.dump() << '\n';
  }
}

RelationSchema read_relations(std::istream& in) {
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) labels.push_back(line);
  }
  return RelationSchema(std::move(labels));
}

void write_relations(std::ostream& out, const RelationSchema& schema) {
  for (const auto& label : schema.labels()) out << label << '\n';
}

FactSet gold_facts(std::span<const CorpusInstance> corpus, const RelationSchema& schema) {
  FactSet facts;
  for (const auto& inst : corpus) {
    const std::size_t rel = schema.id(inst.relation);
    if (rel != 0) facts.insert(Fact{inst.e1_id, inst.e2_id, rel});
  }
  return facts;
}

void write_gold_csv(std::ostream& out, const FactSet& facts, const RelationSchema& schema) {
  out << "e1_id,e2_id,relation\n";
  for (const auto& f : facts) out << f.e1_id << ',' << f.e2_id << ',' << schema.label(f.relation) << '\n';
}

EncodedCorpus encode_corpus(std::span<const CorpusInstance> corpus, const RelationSchema& schema,
                            const Vocabulary& vocab, const EmbeddingConfig& cfg) {
  EncodedCorpus out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& inst = corpus[i];
    if (inst.e1_idx >= cfg.max_length || inst.e2_idx >= cfg.max_length) {
      ++out.rejected;
      continue;
    }
    out.instances.push_back(encode_instance(inst.tokens, inst.e1_idx, inst.e2_idx,
                                            schema.id(inst.relation), {inst.e1_id, inst.e2_id},
                                            vocab, cfg));
    out.source.push_back(i);
  }
  return out;
}

// ---- Synthetic corpora -----------------------------------------------------

void SynthConfig::validate() const {
  if (relations < 1) throw ConfigError("synth: need at least one relation");
  if (vocab_size < 1) throw ConfigError("synth: filler vocabulary must be nonempty");
  if (triggers_per_relation < 1) throw ConfigError("synth: need at least one trigger per relation");
  if (min_length < 3 || max_length < min_length) {
    throw ConfigError("synth: sentence length range must satisfy 3 <= min <= max");
  }
  if (!(noise >= 0.0 && noise < 1.0)) throw ConfigError("synth: noise rate must lie in [0, 1)");
  if (!(na_fraction >= 0.0 && na_fraction < 1.0)) {
    throw ConfigError("synth: NA fraction must lie in [0, 1)");
  }
  if (train_instances < 1 || test_instances < 1) throw ConfigError("synth: instance counts must be positive");
  if (max_support < 1) throw ConfigError("synth: max support must be >= 1");
}

std::string relation_name(std::size_t relation) { return "rel" + std::to_string(relation); }

std::string trigger_token(std::size_t relation, std::size_t k) {
  return "trig" + std::to_string(relation) + "_" + std::to_string(k);
}

std::string filler_token(std::size_t k) { return "w" + std::to_string(k); }

namespace {

struct SplitGenerator {
  const SynthConfig& cfg;
  Rng rng;
  std::size_t& next_entity;

  CorpusInstance sentence(const std::string& e1, const std::string& e2, std::size_t relation) {
    const std::size_t len = cfg.min_length + uniform_index(rng, cfg.max_length - cfg.min_length + 1);
    CorpusInstance inst;
    inst.tokens.resize(len);
    for (auto& tok : inst.tokens) tok = filler_token(uniform_index(rng, cfg.vocab_size));
    // Three distinct slots: e1, e2, trigger.
    std::vector<std::size_t> slots(len);
    for (std::size_t i = 0; i < len; ++i) slots[i] = i;
    for (std::size_t i = 0; i < 3; ++i) std::swap(slots[i], slots[i + uniform_index(rng, len - i)]);
    inst.e1_idx = slots[0];
    inst.e2_idx = slots[1];
    inst.e1_id = e1;
    inst.e2_id = e2;
    inst.tokens[inst.e1_idx] = e1;
    inst.tokens[inst.e2_idx] = e2;
    if (relation != 0) {
      inst.tokens[slots[2]] = trigger_token(relation, uniform_index(rng, cfg.triggers_per_relation));
    }
    inst.relation = relation == 0 ? std::string(RelationSchema::kNa) : relation_name(relation);
    return inst;
  }

  std::vector<CorpusInstance> generate(std::size_t count, bool noisy) {
    std::vector<CorpusInstance> out;
    out.reserve(count);
    while (out.size() < count) {
      const std::size_t relation =
          bernoulli(rng, cfg.na_fraction) ? 0 : 1 + uniform_index(rng, cfg.relations);
      const std::size_t support = 1 + uniform_index(rng, cfg.max_support);
      const std::string e1 = "E" + std::to_string(next_entity++);
      const std::string e2 = "E" + std::to_string(next_entity++);
      for (std::size_t s = 0; s < support && out.size() < count; ++s) {
        CorpusInstance inst = sentence(e1, e2, relation);
        if (noisy && relation != 0 && cfg.relations > 1 && bernoulli(rng, cfg.noise)) {
          // Uniform over the other non-NA relations.
          std::size_t flipped = 1 + uniform_index(rng, cfg.relations - 1);
          if (flipped >= relation) ++flipped;
          inst.relation = relation_name(flipped);
        }
        out.push_back(std::move(inst));
      }
    }
    return out;
  }
};

}  // namespace

SynthCorpus synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  std::vector<std::string> labels;
  for (std::size_t r = 1; r <= cfg.relations; ++r) labels.push_back(relation_name(r));

  SynthCorpus corpus{RelationSchema(std::move(labels)), {}, {}, {}};
  std::size_t next_entity = 0;
  SplitGenerator train_gen{cfg, Rng(mix_seed(cfg.seed, fnv1a("synth/train"))), next_entity};
  corpus.train = train_gen.generate(cfg.train_instances, true);
  SplitGenerator test_gen{cfg, Rng(mix_seed(cfg.seed, fnv1a("synth/test"))), next_entity};
  corpus.test = test_gen.generate(cfg.test_instances, false);
  corpus.gold = gold_facts(corpus.test, corpus.schema);
  return corpus;
}

}  // namespace rescnn
