#pragma once

#include <string>
#include <vector>

#include "texloc/geometry.hpp"
#include "texloc/textons.hpp"

namespace texloc {

/// The map dataset: N (histogram, position) pairs. Entry order is preserved
/// and acts as the rank tie-breaker; the set is immutable after fit().
struct TrainingSet {
  struct Entry {
    TextonHistogram histogram;
    Vec2 position;
  };
  std::vector<Entry> entries;

  int size() const { return static_cast<int>(entries.size()); }
  int histogram_size() const { return entries.empty() ? 0 : entries.front().histogram.size(); }
};

/// k nearest training entries, ascending histogram distance.
struct Prediction {
  struct Ranked {
    Vec2 position;
    double distance = 0.0;
    int training_index = 0;
  };
  std::vector<Ranked> ranked;

  std::vector<Vec2> positions() const {
    std::vector<Vec2> out;
    out.reserve(ranked.size());
    for (const auto& r : ranked) out.push_back(r.position);
    return out;
  }
};

/// Rank-dependent 2x2 covariances of the k-NN error, sigmas[j] for rank j+1.
struct MeasurementCovariances {
  std::vector<Cov2> sigmas;

  int k() const { return static_cast<int>(sigmas.size()); }
};

/// Validates and stores the (histogram, position) pairs.
TrainingSet fit(std::vector<TrainingSet::Entry> pairs);

/// Exact linear-scan k-NN by Euclidean histogram distance. Ties break by
/// training index.
Prediction predict(const TrainingSet& ts, const TextonHistogram& query, int k);

/// Sample covariance (N-1 denominator) of ground_truth - prediction at each
/// rank. The variance is taken about its own mean, so a constant prediction
/// bias yields a zero matrix.
MeasurementCovariances estimate_measurement_covariances(const std::vector<Vec2>& ground_truth,
                                                        const std::vector<Prediction>& predictions);

double histogram_distance(const TextonHistogram& a, const TextonHistogram& b);

/// Dataset CSV with header `x,y,h_0,...,h_{T-1}`; lines starting with '#'
/// are metadata and skipped on read.
void save_dataset(const TrainingSet& ts, const std::string& path,
                  const std::string& command_line = "");
TrainingSet load_dataset(const std::string& path);

}  // namespace texloc
