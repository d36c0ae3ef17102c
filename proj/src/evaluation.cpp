#include "rescnn/evaluation.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <tuple>

#include "rescnn/checkpoint.hpp"
#include "rescnn/errors.hpp"

namespace rescnn {

std::vector<RankedPrediction> rank_predictions(std::span<const EncodedInstance> instances,
                                               const Tensor& probabilities) {
  if (probabilities.rank() != 2 || probabilities.dim(0) != instances.size()) {
    throw ShapeError("rank_predictions: probabilities " + shape_string(probabilities.shape()) +
                     " do not match " + std::to_string(instances.size()) + " instances");
  }
  const std::size_t k = probabilities.dim(1);
  std::map<std::pair<PairKey, std::size_t>, RankedPrediction> best;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    for (std::size_t r = 1; r < k; ++r) {
      const double score = probabilities.at(i, r);
      auto key = std::make_pair(instances[i].pair_key, r);
      auto it = best.find(key);
      if (it == best.end()) {
        best.emplace(std::move(key), RankedPrediction{instances[i].pair_key, r, score, i});
      } else if (score > it->second.score) {
        it->second.score = score;
        it->second.source_instance = i;
      }
    }
  }
  std::vector<RankedPrediction> ranked;
  ranked.reserve(best.size());
  for (auto& [key, pred] : best) ranked.push_back(std::move(pred));
  std::sort(ranked.begin(), ranked.end(), [](const RankedPrediction& a, const RankedPrediction& b) {
    if (a.score != b.score) return a.score > b.score;
    return std::tie(a.pair, a.relation) < std::tie(b.pair, b.relation);
  });
  return ranked;
}

std::vector<RankedPrediction> collect_predictions(Model& model,
                                                  std::span<const EncodedInstance> instances) {
  const std::size_t k = model.config().relations;
  Tensor probs(Shape{instances.size(), k});
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto p = model.predict_proba(instances[i]);
    for (std::size_t r = 0; r < k; ++r) probs.at(i, r) = p[r];
  }
  return rank_predictions(instances, probs);
}

bool is_hit(const RankedPrediction& p, const FactSet& gold) {
  return gold.contains(Fact{p.pair.first, p.pair.second, p.relation});
}

std::vector<PrPoint> pr_curve(std::span<const RankedPrediction> ranked, const FactSet& gold) {
  if (gold.empty()) throw DataError("pr_curve: empty gold fact set, recall undefined");
  std::vector<PrPoint> points;
  points.reserve(ranked.size());
  std::size_t hits = 0;
  const auto total = static_cast<double>(gold.size());
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    hits += is_hit(ranked[k], gold);
    points.push_back({static_cast<double>(hits) / static_cast<double>(k + 1),
                      static_cast<double>(hits) / total, ranked[k].score});
  }
  return points;
}

PrecisionAtN precision_at_n(std::span<const RankedPrediction> ranked, const FactSet& gold,
                            std::span<const std::size_t> ns) {
  PrecisionAtN out;
  double sum = 0.0;
  for (std::size_t n : ns) {
    if (n == 0) throw ConfigError("precision_at_n: N must be positive");
    const std::size_t used = std::min(n, ranked.size());
    std::size_t hits = 0;
    for (std::size_t k = 0; k < used; ++k) hits += is_hit(ranked[k], gold);
    const double precision = used == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(used);
    out.values.push_back({n, precision, n > ranked.size()});
    sum += precision;
  }
  out.mean = ns.empty() ? 0.0 : sum / static_cast<double>(ns.size());
  return out;
}

EvalReport evaluate_ranking(std::span<const RankedPrediction> ranked, const FactSet& gold,
                            std::span<const std::size_t> ns) {
  EvalReport report;
  report.pr_points = pr_curve(ranked, gold);
  report.p_at = precision_at_n(ranked, gold, ns);
  report.gold_count = gold.size();
  report.prediction_count = ranked.size();
  return report;
}

void write_pr_csv(std::ostream& out, const EvalReport& report) {
  out << "precision,recall,threshold\n";
  for (const auto& p : report.pr_points) {
    out << format_double(p.precision) << ',' << format_double(p.recall) << ','
        << format_double(p.threshold) << '\n';
  }
}

void write_pan_csv(std::ostream& out, const EvalReport& report) {
  out << "N,precision\n";
  for (const auto& v : report.p_at.values) out << v.n << ',' << format_double(v.precision) << '\n';
  out << "mean," << format_double(report.p_at.mean) << '\n';
}

}  // namespace rescnn
