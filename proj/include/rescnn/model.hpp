#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rescnn/embeddings.hpp"
#include "rescnn/gradcheck.hpp"
#include "rescnn/graph.hpp"

namespace rescnn {

enum class Variant { CnnB, Cnn, CnnX, ResCnnX };

std::string_view variant_name(Variant v);
// Accepts cnn_b, cnn, cnn_x, rescnn_x.
std::optional<Variant> parse_variant(std::string_view name);

struct ModelConfig {
  Variant variant = Variant::ResCnnX;
  std::size_t conv_layers = 9;  // 1 initial + 2 per residual block
  std::size_t window = 3;
  std::size_t filters = 128;
  // Hidden widths followed by the relation count. cnn_b has a single entry.
  std::vector<std::size_t> fc_widths;
  double keep_prob = 0.5;
  std::size_t relations = 53;
  EmbeddingConfig embedding;

  std::size_t num_blocks() const noexcept { return conv_layers / 2; }
  bool has_shortcut() const noexcept { return variant == Variant::ResCnnX; }
  // Throws ConfigError naming the first violated rule.
  void validate() const;
};

// Config with fc_widths filled in: {K} for cnn_b, {m, m, K} otherwise.
ModelConfig make_model_config(Variant variant, std::size_t conv_layers, std::size_t relations,
                              std::size_t window, std::size_t filters,
                              const EmbeddingConfig& embedding, double keep_prob = 0.5);

// Closed-form parameter count, word table included.
std::size_t parameter_count(const ModelConfig& cfg, std::size_t vocab_size);

struct ConvLayer {
  Tensor kernel;  // window x in_ch x out_ch
  Tensor bias;    // out_ch
};

struct ResidualBlock {
  ConvLayer first;
  ConvLayer second;
};

struct DenseLayer {
  Tensor weight;  // in x out
  Tensor bias;    // out
};

// Embedding tables, convolution stack and fully connected head of one
// CNN-B / CNN / CNN-x / ResCNN-x network.
class Model {
 public:
  // Glorot-uniform kernels and dense weights, zero biases, position tables
  // uniform in [-0.25, 0.25]. Every parameter draws from its own stream keyed
  // by (seed, name), so models of different depth built from the same seed
  // share all parameters they have in common.
  Model(const ModelConfig& cfg, std::uint64_t seed, Tensor word_table);

  const ModelConfig& config() const noexcept { return cfg_; }
  std::uint64_t seed() const noexcept { return seed_; }

  // Stable order: word, pos1, pos2, conv0, blocks, fc layers.
  std::vector<NamedTensor> parameters();
  std::vector<Tensor*> parameter_tensors();
  std::size_t parameter_count() const;

  Tensor& word_table() noexcept { return word_table_; }
  Tensor& pos1_table() noexcept { return pos1_table_; }
  Tensor& pos2_table() noexcept { return pos2_table_; }
  ConvLayer& initial_conv() noexcept { return conv0_; }
  std::vector<ResidualBlock>& blocks() noexcept { return blocks_; }
  std::vector<DenseLayer>& dense_layers() noexcept { return fc_; }

  // Per-instance logits (K values each). Train mode needs `rng` for the
  // dropout mask; test mode never touches it.
  std::vector<Var> forward(Graph& graph, std::span<const EncodedInstance> batch, Mode mode,
                           Rng* rng);
  // batch x K logits, test mode.
  Tensor logits(std::span<const EncodedInstance> batch);
  std::vector<double> predict_proba(const EncodedInstance& instance);

  void zero_grad();
  // The PAD word row is frozen: clear its gradient before an update.
  void mask_frozen_gradients();

 private:
  Var forward_one(Graph& graph, const EncodedInstance& instance, Mode mode, Rng* rng);

  ModelConfig cfg_;
  std::uint64_t seed_;
  Tensor word_table_;
  Tensor pos1_table_;
  Tensor pos2_table_;
  ConvLayer conv0_;
  std::vector<ResidualBlock> blocks_;
  std::vector<DenseLayer> fc_;
};

}  // namespace rescnn
