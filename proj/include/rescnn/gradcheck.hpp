#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rescnn/graph.hpp"

namespace rescnn {

struct NamedTensor {
  std::string name;
  Tensor* tensor = nullptr;
};

// Builds a scalar loss over the given parameters inside `graph`. Must be
// deterministic: it is invoked once for the analytic pass and twice per
// coordinate for the numeric pass.
using LossBuilder = std::function<Var(Graph& graph)>;

// Optional hook run on the analytic graph between forward and backward.
using GraphInstrument = std::function<void(Graph& graph)>;

struct ParameterCheck {
  std::string name;
  std::size_t coordinates = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

struct GradcheckReport {
  std::vector<ParameterCheck> parameters;
  double max_rel_error = 0.0;

  bool passed(double tolerance) const { return max_rel_error < tolerance; }
};

// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

// Central differences (f(p + eps) - f(p - eps)) / 2 eps for every coordinate
// of every listed parameter, compared against the reverse-mode gradient.
// Parameter values are restored before returning; their grad slots hold the
// analytic gradient afterwards.
GradcheckReport finite_diff_check(std::span<const NamedTensor> params, const LossBuilder& build,
                                  double eps, const GraphInstrument& instrument = {});

}  // namespace rescnn
