#pragma once

#include <cstdint>

#include "rescnn/gradcheck.hpp"
#include "rescnn/model.hpp"

namespace rescnn {

// Toy network for end-to-end gradient checks: n=7, d_w=4, d_p=2, h=3, m=3,
// K=3, two random instances, test-mode forward (deterministic dropout
// scaling), mean cross-entropy loss.
struct ToyGradcheck {
  Variant variant = Variant::ResCnnX;
  std::size_t conv_layers = 9;
  std::uint64_t seed = 7;
  double eps = 1e-5;
  GraphInstrument instrument;
};

ModelConfig toy_model_config(Variant variant, std::size_t conv_layers);

GradcheckReport gradcheck_toy_model(const ToyGradcheck& options);

}  // namespace rescnn
