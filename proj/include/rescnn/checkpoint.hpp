#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rescnn/dataset.hpp"
#include "rescnn/embeddings.hpp"
#include "rescnn/model.hpp"

namespace rescnn {

// Ordered key=value text lines. Keys may repeat.
class KeyValues {
 public:
  void add(std::string key, std::string value);
  bool contains(std::string_view key) const;
  // Throws DataError when the key is missing.
  const std::string& get(std::string_view key) const;
  std::vector<std::string> get_all(std::string_view key) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

  void write(std::ostream& out) const;
  static KeyValues read(std::istream& in);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

// Shortest decimal text that parses back to the identical double.
std::string format_double(double v);
double parse_double(std::string_view s);

// Binary records: name length (u64), name bytes, rank (u64), dims (u64
// each), values (f64 each). All integers and floats little-endian.
void write_tensor_blob(std::ostream& out, std::span<const NamedTensor> tensors);
std::vector<std::pair<std::string, Tensor>> read_tensor_blob(std::istream& in);

// A checkpoint is three sibling files: `<stem>.bin` (tensor blob),
// `<stem>.manifest` (config, seed, labels, parameter order) and
// `<stem>.vocab` (one token per line in id order).
std::filesystem::path manifest_path_for(const std::filesystem::path& bin_path);
std::filesystem::path vocab_path_for(const std::filesystem::path& bin_path);

void save_checkpoint(const std::filesystem::path& bin_path, Model& model,
                     const RelationSchema& schema, const Vocabulary& vocab);

struct LoadedCheckpoint {
  Model model;
  RelationSchema schema;
  Vocabulary vocab;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& bin_path);

KeyValues model_config_entries(const ModelConfig& cfg);
ModelConfig model_config_from(const KeyValues& kv);

}  // namespace rescnn
