#include "rescnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace rescnn {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

namespace {

double evaluate(const LossBuilder& build) {
  Graph graph;
  return build(graph).value().item();
}

}  // namespace

GradcheckReport finite_diff_check(std::span<const NamedTensor> params, const LossBuilder& build,
                                  double eps, const GraphInstrument& instrument) {
  for (const NamedTensor& p : params) {
    p.tensor->set_requires_grad(true);
    p.tensor->zero_grad();
  }
  {
    Graph graph;
    Var loss = build(graph);
    if (instrument) instrument(graph);
    graph.backward(loss);
  }

  GradcheckReport report;
  for (const NamedTensor& p : params) {
    ParameterCheck check{p.name, p.tensor->size(), 0.0, 0.0};
    const std::vector<double> analytic(p.tensor->grad().begin(), p.tensor->grad().end());
    auto values = p.tensor->data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double up = evaluate(build);
      values[i] = saved - eps;
      const double down = evaluate(build);
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      check.max_rel_error = std::max(check.max_rel_error, relative_error(analytic[i], numeric));
      check.max_abs_error = std::max(check.max_abs_error, std::abs(analytic[i] - numeric));
    }
    report.max_rel_error = std::max(report.max_rel_error, check.max_rel_error);
    report.parameters.push_back(std::move(check));
  }
  return report;
}

}  // namespace rescnn
