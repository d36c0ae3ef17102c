#include "rescnn/diagnostics.hpp"

#include <string>
#include <vector>

#include "rescnn/embeddings.hpp"
#include "rescnn/random.hpp"

namespace rescnn {

ModelConfig toy_model_config(Variant variant, std::size_t conv_layers) {
  EmbeddingConfig emb;
  emb.word_dim = 4;
  emb.position_dim = 2;
  emb.max_length = 7;
  return make_model_config(variant, conv_layers, 3, 3, 3, emb, 0.5);
}

GradcheckReport gradcheck_toy_model(const ToyGradcheck& options) {
  const ModelConfig cfg = toy_model_config(options.variant, options.conv_layers);
  Rng rng(mix_seed(options.seed, fnv1a("gradcheck")));

  Vocabulary vocab;
  for (int i = 0; i < 6; ++i) vocab.add("tok" + std::to_string(i));
  Model model(cfg, options.seed, random_word_table(vocab, cfg.embedding.word_dim, rng));
  // Nonzero biases so their gradients are not evaluated at a special point.
  for (auto& p : model.parameters()) {
    if (p.name.ends_with(".bias")) {
      for (double& v : p.tensor->data()) v = uniform_real(rng, -0.1, 0.1);
    }
  }

  const std::vector<std::vector<std::string>> sentences = {
      {"tok0", "tok3", "tok2", "tok5", "tok1"},
      {"tok4", "tok1", "oov", "tok2", "tok0", "tok3", "tok5"}};
  std::vector<EncodedInstance> batch;
  batch.push_back(encode_instance(sentences[0], 0, 3, 1, {"a", "b"}, vocab, cfg.embedding));
  batch.push_back(encode_instance(sentences[1], 5, 1, 2, {"c", "d"}, vocab, cfg.embedding));

  LossBuilder build = [&](Graph& graph) {
    const auto logits = model.forward(graph, batch, Mode::Test, nullptr);
    std::vector<Var> losses;
    for (std::size_t i = 0; i < logits.size(); ++i) {
      losses.push_back(softmax_cross_entropy(logits[i], batch[i].label));
    }
    return mean(losses);
  };
  const auto params = model.parameters();
  return finite_diff_check(params, build, options.eps, options.instrument);
}

}  // namespace rescnn
