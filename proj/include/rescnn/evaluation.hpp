#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "rescnn/dataset.hpp"
#include "rescnn/embeddings.hpp"
#include "rescnn/model.hpp"

namespace rescnn {

struct RankedPrediction {
  PairKey pair;
  std::size_t relation = 0;  // never NA
  double score = 0.0;
  std::size_t source_instance = 0;
};

// Candidates from per-instance relation probabilities (rows align with
// `instances`, columns are relation ids). One candidate per (pair, non-NA
// relation), scored by the max over supporting instances, sorted by score
// descending then pair then relation.
std::vector<RankedPrediction> rank_predictions(std::span<const EncodedInstance> instances,
                                               const Tensor& probabilities);

// rank_predictions over the model's test-mode softmax outputs.
std::vector<RankedPrediction> collect_predictions(Model& model,
                                                  std::span<const EncodedInstance> instances);

bool is_hit(const RankedPrediction& p, const FactSet& gold);

struct PrPoint {
  double precision = 0.0;
  double recall = 0.0;
  double threshold = 0.0;
};

// One point per rank: after k items, precision = hits / k and recall =
// hits / |gold|. Throws DataError on an empty gold set.
std::vector<PrPoint> pr_curve(std::span<const RankedPrediction> ranked, const FactSet& gold);

struct PrecisionAt {
  std::size_t n = 0;
  double precision = 0.0;
  bool truncated = false;  // fewer than n predictions; precision uses them all
};

struct PrecisionAtN {
  std::vector<PrecisionAt> values;
  double mean = 0.0;
};

// Throws ConfigError for N == 0.
PrecisionAtN precision_at_n(std::span<const RankedPrediction> ranked, const FactSet& gold,
                            std::span<const std::size_t> ns);

struct EvalReport {
  std::vector<PrPoint> pr_points;
  PrecisionAtN p_at;
  std::size_t gold_count = 0;
  std::size_t prediction_count = 0;
};

EvalReport evaluate_ranking(std::span<const RankedPrediction> ranked, const FactSet& gold,
                            std::span<const std::size_t> ns);

// precision,recall,threshold
void write_pr_csv(std::ostream& out, const EvalReport& report);
// N,precision with a final `mean` row
void write_pan_csv(std::ostream& out, const EvalReport& report);

}  // namespace rescnn
