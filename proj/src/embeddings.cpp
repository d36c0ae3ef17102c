#include "rescnn/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <istream>
#include <sstream>

#include "rescnn/errors.hpp"

namespace rescnn {

Vocabulary::Vocabulary() {
  add(kPadToken);
  add(kUnkToken);
}

std::size_t Vocabulary::add(std::string_view token) {
  std::string key(token);
  if (auto it = ids_.find(key); it != ids_.end()) return it->second;
  const std::size_t id = tokens_.size();
  tokens_.push_back(key);
  ids_.emplace(std::move(key), id);
  return id;
}

bool Vocabulary::contains(std::string_view token) const { return ids_.contains(std::string(token)); }

std::size_t Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnkId : it->second;
}

void EmbeddingConfig::validate() const {
  if (word_dim < 1) throw ConfigError("word dimension must be >= 1");
  if (position_dim < 1) throw ConfigError("position dimension must be >= 1");
  if (!(min_distance < 0 && max_distance > 0)) {
    throw ConfigError("position bounds must satisfy e_min < 0 < e_max, got [" +
                      std::to_string(min_distance) + ", " + std::to_string(max_distance) + "]");
  }
  if (max_length < 1) throw ConfigError("padded length must be >= 1");
}

namespace {

bool parse_size(std::string_view s, std::size_t& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

}  // namespace

LoadedEmbeddings load_embeddings(std::istream& in, std::optional<std::size_t> expected_dim) {
  Vocabulary vocab;
  std::vector<double> rows;
  std::optional<std::size_t> dim = expected_dim;
  std::string line;
  std::size_t line_no = 0;
  bool first_content = true;

  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (first_content) {
      first_content = false;
      std::size_t count = 0, header_dim = 0;
      if (fields.size() == 2 && parse_size(fields[0], count) && parse_size(fields[1], header_dim)) {
        if (dim && *dim != header_dim) {
          throw ParseError("header declares dimension " + std::to_string(header_dim) +
                           ", expected " + std::to_string(*dim), line_no);
        }
        dim = header_dim;
        continue;
      }
    }
    const std::size_t values = fields.size() - 1;
    if (!dim) dim = values;
    if (values != *dim || values == 0) {
      throw ParseError("expected " + std::to_string(*dim) + " values for token '" +
                       std::string(fields[0]) + "', found " + std::to_string(values), line_no);
    }
    if (vocab.contains(fields[0])) {
      throw ParseError("duplicate token '" + std::string(fields[0]) + "'", line_no);
    }
    vocab.add(fields[0]);
    for (std::size_t k = 1; k < fields.size(); ++k) {
      // strtod accepts the usual float spellings including exponents.
      const std::string text(fields[k]);
      char* end = nullptr;
      const double v = std::strtod(text.c_str(), &end);
      if (end != text.c_str() + text.size()) {
        throw ParseError("malformed number '" + text + "'", line_no);
      }
      rows.push_back(v);
    }
  }

  const std::size_t d = dim.value_or(0);
  if (d == 0) throw ParseError("no embedding vectors found", line_no);
  const std::size_t loaded = vocab.size() - 2;
  Tensor table(Shape{vocab.size(), d});
  for (std::size_t r = 0; r < loaded; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      const double v = rows[r * d + c];
      table.at(r + 2, c) = v;
      table.at(kUnkId, c) += v;
    }
  }
  if (loaded > 0) {
    for (std::size_t c = 0; c < d; ++c) table.at(kUnkId, c) /= static_cast<double>(loaded);
  }
  return {std::move(vocab), std::move(table)};
}

Tensor random_word_table(const Vocabulary& vocab, std::size_t dim, Rng& rng) {
  Tensor table(Shape{vocab.size(), dim});
  for (std::size_t r = 0; r < vocab.size(); ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      const double v = uniform_real(rng, -0.25, 0.25);
      table.at(r, c) = r == kPadId ? 0.0 : v;
    }
  }
  return table;
}

int clipped_distance(std::ptrdiff_t token, std::ptrdiff_t entity, const EmbeddingConfig& cfg) {
  const std::ptrdiff_t d = token - entity;
  return static_cast<int>(std::clamp<std::ptrdiff_t>(d, cfg.min_distance, cfg.max_distance));
}

std::size_t relative_position(std::ptrdiff_t token, std::ptrdiff_t entity,
                              const EmbeddingConfig& cfg) {
  return static_cast<std::size_t>(clipped_distance(token, entity, cfg) - cfg.min_distance);
}

EncodedInstance encode_instance(std::span<const std::string> tokens, std::size_t e1_index,
                                std::size_t e2_index, std::size_t label, PairKey pair_key,
                                const Vocabulary& vocab, const EmbeddingConfig& cfg) {
  if (tokens.empty()) throw DataError("encode: empty sentence");
  for (std::size_t e : {e1_index, e2_index}) {
    if (e >= tokens.size()) {
      throw DataError("encode: entity index " + std::to_string(e) + " outside sentence of " +
                      std::to_string(tokens.size()) + " tokens");
    }
    if (e >= cfg.max_length) {
      throw DataError("encode: entity index " + std::to_string(e) +
                      " falls beyond padded length " + std::to_string(cfg.max_length));
    }
  }
  const std::size_t n = cfg.max_length;
  EncodedInstance out;
  out.label = label;
  out.pair_key = std::move(pair_key);
  out.original_length = tokens.size();
  out.token_ids.assign(n, kPadId);
  out.pos1_ids.resize(n);
  out.pos2_ids.resize(n);
  const std::size_t kept = std::min(n, tokens.size());
  for (std::size_t i = 0; i < kept; ++i) out.token_ids[i] = vocab.id(tokens[i]);
  for (std::size_t i = 0; i < n; ++i) {
    const auto pos = static_cast<std::ptrdiff_t>(i);
    out.pos1_ids[i] = relative_position(pos, static_cast<std::ptrdiff_t>(e1_index), cfg);
    out.pos2_ids[i] = relative_position(pos, static_cast<std::ptrdiff_t>(e2_index), cfg);
  }
  return out;
}

Var embed(const EncodedInstance& instance, Var word_table, Var pos1_table, Var pos2_table) {
  const std::size_t n = instance.token_ids.size();
  if (instance.pos1_ids.size() != n || instance.pos2_ids.size() != n) {
    throw ShapeError("embed: id sequences of unequal length");
  }
  const Var parts[] = {lookup(word_table, instance.token_ids), lookup(pos1_table, instance.pos1_ids),
                       lookup(pos2_table, instance.pos2_ids)};
  return concat_columns(parts);
}

}  // namespace rescnn
