#include "rescnn/checkpoint.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>

#include "rescnn/errors.hpp"

namespace rescnn {

void KeyValues::add(std::string key, std::string value) {
  entries_.emplace_back(std::move(key), std::move(value));
}

bool KeyValues::contains(std::string_view key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return true;
  }
  return false;
}

const std::string& KeyValues::get(std::string_view key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  throw DataError("manifest: missing key '" + std::string(key) + "'");
}

std::vector<std::string> KeyValues::get_all(std::string_view key) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_) {
    if (k == key) out.push_back(v);
  }
  return out;
}

void KeyValues::write(std::ostream& out) const {
  for (const auto& [k, v] : entries_) out << k << '=' << v << '\n';
}

KeyValues KeyValues::read(std::istream& in) {
  KeyValues kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) throw ParseError("expected key=value", line_no);
    kv.add(line.substr(0, eq), line.substr(eq + 1));
  }
  return kv;
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw DataError("malformed number '" + std::string(s) + "'");
  }
  return v;
}

namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> bytes{};
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(bytes.data(), bytes.size());
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (in.gcount() != 8) throw DataError("checkpoint: truncated tensor blob");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

std::size_t parse_size(const std::string& s) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw DataError("malformed integer '" + s + "'");
  return v;
}

int parse_int(const std::string& s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw DataError("malformed integer '" + s + "'");
  return v;
}

constexpr std::uint64_t kMaxNameLength = 1 << 16;
constexpr std::uint64_t kMaxRank = 16;

}  // namespace

void write_tensor_blob(std::ostream& out, std::span<const NamedTensor> tensors) {
  for (const auto& [name, tensor] : tensors) {
    put_u64(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u64(out, tensor->rank());
    for (std::size_t d : tensor->shape()) put_u64(out, d);
    for (double v : tensor->data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
}

std::vector<std::pair<std::string, Tensor>> read_tensor_blob(std::istream& in) {
  std::vector<std::pair<std::string, Tensor>> out;
  while (in.peek() != std::char_traits<char>::eof()) {
    const std::uint64_t name_len = get_u64(in);
    if (name_len > kMaxNameLength) throw DataError("checkpoint: implausible tensor name length");
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    if (static_cast<std::uint64_t>(in.gcount()) != name_len) throw DataError("checkpoint: truncated tensor name");
    const std::uint64_t rank = get_u64(in);
    if (rank > kMaxRank) throw DataError("checkpoint: implausible rank for '" + name + "'");
    Shape shape(rank);
    for (auto& d : shape) d = get_u64(in);
    std::vector<double> values(shape_size(shape));
    for (double& v : values) v = std::bit_cast<double>(get_u64(in));
    out.emplace_back(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  return out;
}

std::filesystem::path manifest_path_for(const std::filesystem::path& bin_path) {
  auto p = bin_path;
  return p.replace_extension(".manifest");
}

std::filesystem::path vocab_path_for(const std::filesystem::path& bin_path) {
  auto p = bin_path;
  return p.replace_extension(".vocab");
}

KeyValues model_config_entries(const ModelConfig& cfg) {
  KeyValues kv;
  kv.add("variant", std::string(variant_name(cfg.variant)));
  kv.add("conv_layers", std::to_string(cfg.conv_layers));
  kv.add("window", std::to_string(cfg.window));
  kv.add("filters", std::to_string(cfg.filters));
  std::string widths;
  for (std::size_t w : cfg.fc_widths) widths += (widths.empty() ? "" : ",") + std::to_string(w);
  kv.add("fc_widths", widths);
  kv.add("keep_prob", format_double(cfg.keep_prob));
  kv.add("relations", std::to_string(cfg.relations));
  kv.add("word_dim", std::to_string(cfg.embedding.word_dim));
  kv.add("position_dim", std::to_string(cfg.embedding.position_dim));
  kv.add("min_distance", std::to_string(cfg.embedding.min_distance));
  kv.add("max_distance", std::to_string(cfg.embedding.max_distance));
  kv.add("max_length", std::to_string(cfg.embedding.max_length));
  return kv;
}

ModelConfig model_config_from(const KeyValues& kv) {
  ModelConfig cfg;
  const auto variant = parse_variant(kv.get("variant"));
  if (!variant) throw DataError("manifest: unknown variant '" + kv.get("variant") + "'");
  cfg.variant = *variant;
  cfg.conv_layers = parse_size(kv.get("conv_layers"));
  cfg.window = parse_size(kv.get("window"));
  cfg.filters = parse_size(kv.get("filters"));
  cfg.fc_widths.clear();
  const std::string& widths = kv.get("fc_widths");
  std::size_t start = 0;
  while (start <= widths.size()) {
    const auto comma = widths.find(',', start);
    const auto end = comma == std::string::npos ? widths.size() : comma;
    cfg.fc_widths.push_back(parse_size(widths.substr(start, end - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  cfg.keep_prob = parse_double(kv.get("keep_prob"));
  cfg.relations = parse_size(kv.get("relations"));
  cfg.embedding.word_dim = parse_size(kv.get("word_dim"));
  cfg.embedding.position_dim = parse_size(kv.get("position_dim"));
  cfg.embedding.min_distance = parse_int(kv.get("min_distance"));
  cfg.embedding.max_distance = parse_int(kv.get("max_distance"));
  cfg.embedding.max_length = parse_size(kv.get("max_length"));
  return cfg;
}

void save_checkpoint(const std::filesystem::path& bin_path, Model& model,
                     const RelationSchema& schema, const Vocabulary& vocab) {
  const auto params = model.parameters();
  KeyValues kv = model_config_entries(model.config());
  kv.add("seed", std::to_string(model.seed()));
  for (const auto& label : schema.labels()) kv.add("label", label);
  kv.add("vocab_size", std::to_string(vocab.size()));
  for (const auto& p : params) kv.add("param", p.name);

  std::ofstream manifest(manifest_path_for(bin_path), std::ios::binary);
  if (!manifest) throw DataError("cannot write " + manifest_path_for(bin_path).string());
  kv.write(manifest);

  std::ofstream vocab_out(vocab_path_for(bin_path), std::ios::binary);
  if (!vocab_out) throw DataError("cannot write " + vocab_path_for(bin_path).string());
  for (const auto& tok : vocab.tokens()) vocab_out << tok << '\n';

  std::ofstream blob(bin_path, std::ios::binary);
  if (!blob) throw DataError("cannot write " + bin_path.string());
  write_tensor_blob(blob, params);
  if (!blob) throw DataError("write failed for " + bin_path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& bin_path) {
  std::ifstream manifest(manifest_path_for(bin_path), std::ios::binary);
  if (!manifest) throw DataError("checkpoint manifest not found: " + manifest_path_for(bin_path).string());
  const KeyValues kv = KeyValues::read(manifest);

  std::ifstream vocab_in(vocab_path_for(bin_path), std::ios::binary);
  if (!vocab_in) throw DataError("checkpoint vocabulary not found: " + vocab_path_for(bin_path).string());
  Vocabulary vocab;
  std::string line;
  std::size_t id = 0;
  while (std::getline(vocab_in, line)) {
    if (vocab.add(line) != id) throw DataError("checkpoint vocabulary: duplicate or reserved token '" + line + "'");
    ++id;
  }
  if (vocab.size() != parse_size(kv.get("vocab_size"))) {
    throw DataError("checkpoint vocabulary size disagrees with manifest");
  }

  std::ifstream blob_in(bin_path, std::ios::binary);
  if (!blob_in) throw DataError("checkpoint not found: " + bin_path.string());
  auto blob = read_tensor_blob(blob_in);

  const ModelConfig cfg = model_config_from(kv);
  const std::uint64_t seed = std::stoull(kv.get("seed"));
  Model model(cfg, seed, Tensor(Shape{vocab.size(), cfg.embedding.word_dim}));
  const auto params = model.parameters();
  const auto names = kv.get_all("param");
  if (names.size() != params.size() || blob.size() != params.size()) {
    throw DataError("checkpoint: parameter count disagrees with configuration");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (names[i] != params[i].name || blob[i].first != params[i].name) {
      throw DataError("checkpoint: expected parameter '" + params[i].name + "', found '" +
                      blob[i].first + "'");
    }
    if (blob[i].second.shape() != params[i].tensor->shape()) {
      throw DataError("checkpoint: parameter '" + params[i].name + "' has shape " +
                      shape_string(blob[i].second.shape()) + ", expected " +
                      shape_string(params[i].tensor->shape()));
    }
    auto src = blob[i].second.data();
    std::copy(src.begin(), src.end(), params[i].tensor->data().begin());
  }
  RelationSchema schema(kv.get_all("label"));
  if (schema.size() != cfg.relations) throw DataError("checkpoint: label count disagrees with configuration");
  return {std::move(model), std::move(schema), std::move(vocab)};
}

}  // namespace rescnn
