#include "rescnn/model.hpp"

#include <cmath>

#include "rescnn/errors.hpp"

namespace rescnn {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::CnnB: return "cnn_b";
    case Variant::Cnn: return "cnn";
    case Variant::CnnX: return "cnn_x";
    case Variant::ResCnnX: return "rescnn_x";
  }
  return "unknown";
}

std::optional<Variant> parse_variant(std::string_view name) {
  if (name == "cnn_b") return Variant::CnnB;
  if (name == "cnn") return Variant::Cnn;
  if (name == "cnn_x") return Variant::CnnX;
  if (name == "rescnn_x") return Variant::ResCnnX;
  return std::nullopt;
}

void ModelConfig::validate() const {
  embedding.validate();
  if (conv_layers < 1 || conv_layers % 2 == 0) {
    throw ConfigError("conv_layers must be odd (1 initial + 2 per block), got " +
                      std::to_string(conv_layers));
  }
  if ((variant == Variant::CnnB || variant == Variant::Cnn) && conv_layers != 1) {
    throw ConfigError(std::string(variant_name(variant)) + " has exactly one convolutional layer");
  }
  if (variant == Variant::ResCnnX && num_blocks() < 1) {
    throw ConfigError("rescnn_x needs at least one residual block (conv_layers >= 3)");
  }
  if (window < 1) throw ConfigError("window size must be >= 1");
  if (window > embedding.max_length) {
    throw ConfigError("window size " + std::to_string(window) + " exceeds padded length " +
                      std::to_string(embedding.max_length));
  }
  if (filters < 1) throw ConfigError("filter count must be >= 1");
  if (relations < 2) throw ConfigError("need at least two relation labels (NA + one)");
  const std::size_t expected_fc = variant == Variant::CnnB ? 1 : 3;
  if (fc_widths.size() != expected_fc) {
    throw ConfigError(std::string(variant_name(variant)) + " expects " +
                      std::to_string(expected_fc) + " fully connected layers, got " +
                      std::to_string(fc_widths.size()));
  }
  if (fc_widths.back() != relations) {
    throw ConfigError("final fully connected width " + std::to_string(fc_widths.back()) +
                      " must equal the relation count " + std::to_string(relations));
  }
  for (std::size_t w : fc_widths) {
    if (w < 1) throw ConfigError("fully connected widths must be positive");
  }
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) throw ConfigError("keep probability must lie in (0, 1]");
}

ModelConfig make_model_config(Variant variant, std::size_t conv_layers, std::size_t relations,
                              std::size_t window, std::size_t filters,
                              const EmbeddingConfig& embedding, double keep_prob) {
  ModelConfig cfg;
  cfg.variant = variant;
  cfg.conv_layers = conv_layers;
  cfg.relations = relations;
  cfg.window = window;
  cfg.filters = filters;
  cfg.embedding = embedding;
  cfg.keep_prob = keep_prob;
  if (variant == Variant::CnnB) {
    cfg.fc_widths = {relations};
  } else {
    cfg.fc_widths = {filters, filters, relations};
  }
  return cfg;
}

std::size_t parameter_count(const ModelConfig& cfg, std::size_t vocab_size) {
  const std::size_t h = cfg.window, m = cfg.filters, d = cfg.embedding.input_dim();
  std::size_t count = vocab_size * cfg.embedding.word_dim +
                      2 * cfg.embedding.position_vocab() * cfg.embedding.position_dim;
  count += h * d * m + m;
  count += cfg.num_blocks() * 2 * (h * m * m + m);
  std::size_t in = m;
  for (std::size_t out : cfg.fc_widths) {
    count += in * out + out;
    in = out;
  }
  return count;
}

namespace {

Rng param_rng(std::uint64_t seed, std::string_view name) { return Rng(mix_seed(seed, fnv1a(name))); }

// Dense: fan_in = in, fan_out = out. Conv kernel (width x in x out):
// fan_in = width * in, fan_out = width * out.
Tensor glorot(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = uniform_real(rng, -limit, limit);
  return t;
}

ConvLayer make_conv(std::size_t width, std::size_t in, std::size_t out, std::uint64_t seed,
                    const std::string& name) {
  return ConvLayer{glorot(Shape{width, in, out}, width * in, width * out, param_rng(seed, name + ".kernel")),
                   Tensor(Shape{out})};
}

Tensor uniform_table(std::size_t rows, std::size_t cols, Rng rng) {
  Tensor t(Shape{rows, cols});
  for (double& v : t.data()) v = uniform_real(rng, -0.25, 0.25);
  return t;
}

}  // namespace

Model::Model(const ModelConfig& cfg, std::uint64_t seed, Tensor word_table)
    : cfg_(cfg), seed_(seed), word_table_(std::move(word_table)) {
  cfg_.validate();
  if (word_table_.rank() != 2 || word_table_.dim(1) != cfg_.embedding.word_dim ||
      word_table_.dim(0) < 2) {
    throw ShapeError("model: word table " + shape_string(word_table_.shape()) +
                     " does not match word dimension " + std::to_string(cfg_.embedding.word_dim));
  }
  const auto& emb = cfg_.embedding;
  pos1_table_ = uniform_table(emb.position_vocab(), emb.position_dim, param_rng(seed, "pos1"));
  pos2_table_ = uniform_table(emb.position_vocab(), emb.position_dim, param_rng(seed, "pos2"));
  conv0_ = make_conv(cfg_.window, emb.input_dim(), cfg_.filters, seed, "conv0");
  for (std::size_t b = 0; b < cfg_.num_blocks(); ++b) {
    const std::string prefix = "block" + std::to_string(b);
    blocks_.push_back(ResidualBlock{
        make_conv(cfg_.window, cfg_.filters, cfg_.filters, seed, prefix + ".conv1"),
        make_conv(cfg_.window, cfg_.filters, cfg_.filters, seed, prefix + ".conv2")});
  }
  std::size_t in = cfg_.filters;
  for (std::size_t i = 0; i < cfg_.fc_widths.size(); ++i) {
    const std::size_t out = cfg_.fc_widths[i];
    fc_.push_back(DenseLayer{
        glorot(Shape{in, out}, in, out, param_rng(seed, "fc" + std::to_string(i) + ".weight")),
        Tensor(Shape{out})});
    in = out;
  }
  for (Tensor* p : parameter_tensors()) p->set_requires_grad(true);
}

std::vector<NamedTensor> Model::parameters() {
  std::vector<NamedTensor> out{{"word", &word_table_}, {"pos1", &pos1_table_}, {"pos2", &pos2_table_},
                               {"conv0.kernel", &conv0_.kernel}, {"conv0.bias", &conv0_.bias}};
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const std::string prefix = "block" + std::to_string(b);
    out.push_back({prefix + ".conv1.kernel", &blocks_[b].first.kernel});
    out.push_back({prefix + ".conv1.bias", &blocks_[b].first.bias});
    out.push_back({prefix + ".conv2.kernel", &blocks_[b].second.kernel});
    out.push_back({prefix + ".conv2.bias", &blocks_[b].second.bias});
  }
  for (std::size_t i = 0; i < fc_.size(); ++i) {
    const std::string prefix = "fc" + std::to_string(i);
    out.push_back({prefix + ".weight", &fc_[i].weight});
    out.push_back({prefix + ".bias", &fc_[i].bias});
  }
  return out;
}

std::vector<Tensor*> Model::parameter_tensors() {
  std::vector<Tensor*> out;
  for (auto& p : parameters()) out.push_back(p.tensor);
  return out;
}

std::size_t Model::parameter_count() const {
  std::size_t total = word_table_.size() + pos1_table_.size() + pos2_table_.size() +
                      conv0_.kernel.size() + conv0_.bias.size();
  for (const auto& b : blocks_) {
    total += b.first.kernel.size() + b.first.bias.size() + b.second.kernel.size() + b.second.bias.size();
  }
  for (const auto& layer : fc_) total += layer.weight.size() + layer.bias.size();
  return total;
}

Var Model::forward_one(Graph& graph, const EncodedInstance& instance, Mode mode, Rng* rng) {
  if (instance.token_ids.size() != cfg_.embedding.max_length) {
    throw ShapeError("forward: instance has " + std::to_string(instance.token_ids.size()) +
                     " slots, model expects " + std::to_string(cfg_.embedding.max_length));
  }
  if (instance.label >= cfg_.relations) {
    throw IndexError("forward: label " + std::to_string(instance.label) + " outside " +
                     std::to_string(cfg_.relations) + " relations");
  }
  Var x = embed(instance, graph.leaf(word_table_), graph.leaf(pos1_table_), graph.leaf(pos2_table_));
  Var c = relu(conv1d(x, graph.leaf(conv0_.kernel), graph.leaf(conv0_.bias), Padding::Valid));
  for (auto& block : blocks_) {
    Var inner = relu(conv1d(c, graph.leaf(block.first.kernel), graph.leaf(block.first.bias),
                            Padding::Same));
    Var outer = relu(conv1d(inner, graph.leaf(block.second.kernel),
                            graph.leaf(block.second.bias), Padding::Same));
    c = cfg_.has_shortcut() ? add(c, outer) : outer;
  }
  Var z = max_over_time(c);
  for (std::size_t i = 0; i + 1 < fc_.size(); ++i) {
    z = relu(affine(z, graph.leaf(fc_[i].weight), graph.leaf(fc_[i].bias)));
  }
  z = dropout(z, cfg_.keep_prob, mode, rng);
  return affine(z, graph.leaf(fc_.back().weight), graph.leaf(fc_.back().bias));
}

std::vector<Var> Model::forward(Graph& graph, std::span<const EncodedInstance> batch, Mode mode,
                                Rng* rng) {
  std::vector<Var> out;
  out.reserve(batch.size());
  for (const auto& inst : batch) out.push_back(forward_one(graph, inst, mode, rng));
  return out;
}

Tensor Model::logits(std::span<const EncodedInstance> batch) {
  const std::size_t k = cfg_.relations;
  Tensor out(Shape{batch.size(), k});
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Graph graph;
    Var y = forward_one(graph, batch[i], Mode::Test, nullptr);
    for (std::size_t j = 0; j < k; ++j) out.at(i, j) = y.value()[j];
  }
  return out;
}

std::vector<double> Model::predict_proba(const EncodedInstance& instance) {
  Graph graph;
  Var y = forward_one(graph, instance, Mode::Test, nullptr);
  return softmax(y.value().data());
}

void Model::zero_grad() {
  for (Tensor* p : parameter_tensors()) p->zero_grad();
}

void Model::mask_frozen_gradients() {
  if (!word_table_.has_grad()) return;
  auto g = word_table_.grad_buffer();
  for (std::size_t c = 0; c < cfg_.embedding.word_dim; ++c) g[kPadId * cfg_.embedding.word_dim + c] = 0.0;
}

}  // namespace rescnn
