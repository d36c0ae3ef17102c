#pragma once

// Brute-force reference for ranked-list metrics: every point is recomputed
// from scratch over the prefix, with no running counters.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rescnn/evaluation.hpp"
#include "rescnn/random.hpp"

namespace rescnn::oracle {

inline std::size_t prefix_hits(std::span<const RankedPrediction> ranked, const FactSet& gold, std::size_t k) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const Fact f{ranked[i].pair.first, ranked[i].pair.second, ranked[i].relation};
    for (const Fact& g : gold) {
      if (g.e1_id == f.e1_id && g.e2_id == f.e2_id && g.relation == f.relation) {
        ++hits;
        break;
      }
    }
  }
  return hits;
}

inline std::vector<PrPoint> pr_curve(std::span<const RankedPrediction> ranked, const FactSet& gold) {
  std::vector<PrPoint> out;
  for (std::size_t k = 1; k <= ranked.size(); ++k) {
    const double hits = static_cast<double>(prefix_hits(ranked, gold, k));
    out.push_back({hits / static_cast<double>(k), hits / static_cast<double>(gold.size()), ranked[k - 1].score});
  }
  return out;
}

inline double precision_at(std::span<const RankedPrediction> ranked, const FactSet& gold, std::size_t n) {
  const std::size_t k = n < ranked.size() ? n : ranked.size();
  if (k == 0) return 0.0;
  return static_cast<double>(prefix_hits(ranked, gold, k)) / static_cast<double>(k);
}

struct RandomCase {
  std::vector<RankedPrediction> ranked;
  FactSet gold;
};

// Ranked list of up to `max_items` distinct candidates over a small pair and
// relation space, with roughly a third of the candidates in gold plus some
// gold facts that are never predicted.
inline RandomCase random_case(Rng& rng, std::size_t max_items) {
  RandomCase c;
  const std::size_t items = 1 + uniform_index(rng, max_items);
  const std::size_t relations = 1 + uniform_index(rng, 6);
  double score = 1.0;
  for (std::size_t i = 0; i < items; ++i) {
    RankedPrediction p;
    p.pair = {"P" + std::to_string(i), "Q" + std::to_string(uniform_index(rng, 5))};
    p.relation = 1 + uniform_index(rng, relations);
    if (!bernoulli(rng, 0.2)) score *= uniform_real(rng, 0.9, 1.0);
    p.score = score;
    p.source_instance = i;
    if (bernoulli(rng, 0.35)) c.gold.insert({p.pair.first, p.pair.second, p.relation});
    c.ranked.push_back(std::move(p));
  }
  const std::size_t missing = 1 + uniform_index(rng, 5);
  for (std::size_t i = 0; i < missing; ++i) c.gold.insert({"X" + std::to_string(i), "Y", 1});
  return c;
}

}  // namespace rescnn::oracle
