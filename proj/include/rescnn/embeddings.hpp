#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rescnn/graph.hpp"
#include "rescnn/random.hpp"
#include "rescnn/tensor.hpp"

namespace rescnn {

inline constexpr std::size_t kPadId = 0;
inline constexpr std::size_t kUnkId = 1;

// Token <-> id map with PAD = 0 and UNK = 1 always present.
class Vocabulary {
 public:
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();

  // Returns the id of `token`, inserting it if new.
  std::size_t add(std::string_view token);
  bool contains(std::string_view token) const;
  // UNK for tokens not in the vocabulary.
  std::size_t id(std::string_view token) const;
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> ids_;
};

struct EmbeddingConfig {
  std::size_t word_dim = 50;
  std::size_t position_dim = 5;
  int min_distance = -30;
  int max_distance = 30;
  std::size_t max_length = 100;

  void validate() const;
  // d = d_w + 2 d_p
  std::size_t input_dim() const noexcept { return word_dim + 2 * position_dim; }
  // Rows in each position table: e_max - e_min + 1.
  std::size_t position_vocab() const noexcept {
    return static_cast<std::size_t>(max_distance - min_distance + 1);
  }
};

struct LoadedEmbeddings {
  Vocabulary vocab;
  Tensor table;  // vocab.size() x dim
};

// Reads `token v1 ... vd` lines (optional leading `count dim` header).
// Rows are aligned with vocabulary ids; the PAD row is zero and the UNK row
// is the mean of all loaded vectors. When `expected_dim` is set every line
// must carry exactly that many values.
LoadedEmbeddings load_embeddings(std::istream& in, std::optional<std::size_t> expected_dim = {});

// Uniform in [-0.25, 0.25] with a zero PAD row, for corpora without
// pretrained vectors.
Tensor random_word_table(const Vocabulary& vocab, std::size_t dim, Rng& rng);

// clamp(token - entity, e_min, e_max)
int clipped_distance(std::ptrdiff_t token, std::ptrdiff_t entity, const EmbeddingConfig& cfg);
// clipped distance shifted into [0, e_max - e_min]
std::size_t relative_position(std::ptrdiff_t token, std::ptrdiff_t entity, const EmbeddingConfig& cfg);

using PairKey = std::pair<std::string, std::string>;

struct EncodedInstance {
  std::vector<std::size_t> token_ids;
  std::vector<std::size_t> pos1_ids;
  std::vector<std::size_t> pos2_ids;
  std::size_t label = 0;
  PairKey pair_key;
  std::size_t original_length = 0;
};

// Truncates or PAD-fills to cfg.max_length. Throws DataError when an entity
// index is outside the sentence or falls beyond the truncation point.
EncodedInstance encode_instance(std::span<const std::string> tokens, std::size_t e1_index,
                                std::size_t e2_index, std::size_t label, PairKey pair_key,
                                const Vocabulary& vocab, const EmbeddingConfig& cfg);

// n x (d_w + 2 d_p): row i is [word_i ; pos1_i ; pos2_i].
Var embed(const EncodedInstance& instance, Var word_table, Var pos1_table, Var pos2_table);

}  // namespace rescnn
