#include "texloc/knn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace texloc {

double histogram_distance(const TextonHistogram& a, const TextonHistogram& b) {
  if (a.bins.size() != b.bins.size())
    throw std::invalid_argument("histogram_distance: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.bins.size(); ++i) {
    const double d = a.bins[i] - b.bins[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

TrainingSet fit(std::vector<TrainingSet::Entry> pairs) {
  if (pairs.empty()) throw std::invalid_argument("fit: empty training set");
  const std::size_t dim = pairs.front().histogram.bins.size();
  if (dim == 0) throw std::invalid_argument("fit: zero-length histogram");
  for (const auto& e : pairs) {
    if (e.histogram.bins.size() != dim)
      throw std::invalid_argument("fit: inconsistent histogram lengths");
    if (!e.position.finite()) throw std::invalid_argument("fit: non-finite position");
  }
  TrainingSet ts;
  ts.entries = std::move(pairs);
  return ts;
}

Prediction predict(const TrainingSet& ts, const TextonHistogram& query, int k) {
  const int n = ts.size();
  if (n == 0) throw std::invalid_argument("predict: empty training set");
  if (k < 1 || k > n) throw std::invalid_argument("predict: k out of range [1, N]");
  if (query.bins.size() != static_cast<std::size_t>(ts.histogram_size()))
    throw std::invalid_argument("predict: query length does not match training set");

  std::vector<std::pair<double, int>> scored(static_cast<std::size_t>(n));
  const std::size_t dim = query.bins.size();
  for (int i = 0; i < n; ++i) {
    const double* h = ts.entries[i].histogram.bins.data();
    double acc = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = query.bins[d] - h[d];
      acc += diff * diff;
    }
    scored[i] = {acc, i};
  }
  // (distance, index) pairs order ties by training index.
  std::partial_sort(scored.begin(), scored.begin() + k, scored.end());

  Prediction pred;
  pred.ranked.reserve(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    const auto& [d2, idx] = scored[j];
    pred.ranked.push_back({ts.entries[idx].position, std::sqrt(d2), idx});
  }
  return pred;
}

MeasurementCovariances estimate_measurement_covariances(
    const std::vector<Vec2>& ground_truth, const std::vector<Prediction>& predictions) {
  const std::size_t n = ground_truth.size();
  if (n != predictions.size())
    throw std::invalid_argument("estimate_measurement_covariances: length mismatch");
  if (n < 2)
    throw std::invalid_argument("estimate_measurement_covariances: need at least 2 samples");
  const std::size_t k = predictions.front().ranked.size();
  for (const auto& p : predictions)
    if (p.ranked.size() != k)
      throw std::invalid_argument("estimate_measurement_covariances: inconsistent k");

  MeasurementCovariances out;
  out.sigmas.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    Vec2 mean;
    for (std::size_t t = 0; t < n; ++t) mean += ground_truth[t] - predictions[t].ranked[j].position;
    mean = mean * (1.0 / static_cast<double>(n));
    Cov2 cov;
    for (std::size_t t = 0; t < n; ++t) {
      const Vec2 d = (ground_truth[t] - predictions[t].ranked[j].position) - mean;
      cov.xx += d.x * d.x;
      cov.xy += d.x * d.y;
      cov.yy += d.y * d.y;
    }
    out.sigmas[j] = cov * (1.0 / static_cast<double>(n - 1));
  }
  return out;
}

void save_dataset(const TrainingSet& ts, const std::string& path,
                  const std::string& command_line) {
  if (ts.size() == 0) throw std::invalid_argument("save_dataset: empty training set");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_dataset: cannot open " + path);
  out << "# schema=texloc.dataset/1\n";
  if (!command_line.empty()) out << "# cmd=" << command_line << "\n";
  out << "x,y";
  for (int b = 0; b < ts.histogram_size(); ++b) out << ",h_" << b;
  out << "\n";
  out.precision(17);
  for (const auto& e : ts.entries) {
    out << e.position.x << "," << e.position.y;
    for (double v : e.histogram.bins) out << "," << v;
    out << "\n";
  }
  if (!out) throw std::runtime_error("save_dataset: write failed for " + path);
}

TrainingSet load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path);
  std::string line;
  bool header_seen = false;
  std::vector<TrainingSet::Entry> entries;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line.rfind("x,y", 0) != 0)
        throw std::runtime_error("load_dataset: missing x,y header in " + path);
      header_seen = true;
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(ss, cell, ',')) values.push_back(std::stod(cell));
    if (values.size() < 3) throw std::runtime_error("load_dataset: malformed row in " + path);
    TrainingSet::Entry e;
    e.position = {values[0], values[1]};
    e.histogram.bins.assign(values.begin() + 2, values.end());
    entries.push_back(std::move(e));
  }
  return fit(std::move(entries));
}

}  // namespace texloc
