#include "texloc/mapeval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

namespace texloc {

double cosine_similarity(const TextonHistogram& a, const TextonHistogram& b) {
  if (a.bins.size() != b.bins.size())
    throw std::invalid_argument("cosine_similarity: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.bins.size(); ++i) {
    dot += a.bins[i] * b.bins[i];
    na += a.bins[i] * a.bins[i];
    nb += b.bins[i] * b.bins[i];
  }
  if (na == 0.0 || nb == 0.0)
    throw std::invalid_argument("cosine_similarity: zero-norm histogram");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double ideal_similarity(const Vec2& pos_i, const Vec2& pos_j, const LossParams& params) {
  params.validate();
  const double dx = pos_i.x - pos_j.x;
  const double dy = pos_i.y - pos_j.y;
  return std::exp(-0.5 * dx * dx / (params.sigma_x * params.sigma_x)) *
         std::exp(-0.5 * dy * dy / (params.sigma_y * params.sigma_y));
}

double local_loss(const TrainingSet& ds, int i, const LossParams& params) {
  const int n = ds.size();
  if (i < 0 || i >= n) throw std::invalid_argument("local_loss: index out of range");
  params.validate();
  const auto& hi = ds.entries[i].histogram;
  const auto& pi = ds.entries[i].position;
  double acc = 0.0;
  for (int j = 0; j < n; ++j) {
    acc += cosine_similarity(hi, ds.entries[j].histogram) -
           ideal_similarity(pi, ds.entries[j].position, params);
  }
  return acc / static_cast<double>(n);
}

double global_loss(const TrainingSet& ds, const LossParams& params) {
  const int n = ds.size();
  if (n == 0) throw std::invalid_argument("global_loss: empty dataset");
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += local_loss(ds, i, params);
  return acc / static_cast<double>(n);
}

LossField loss_map(const TrainingSet& ds, const ArenaBounds& bounds, double cell_size,
                   double smoothing_sigma, const LossParams& params) {
  if (ds.size() == 0) throw std::invalid_argument("loss_map: empty dataset");
  if (!(cell_size > 0.0)) throw std::invalid_argument("loss_map: cell_size must be positive");
  if (!(smoothing_sigma > 0.0))
    throw std::invalid_argument("loss_map: smoothing_sigma must be positive");
  bounds.validate();

  LossField field;
  field.bounds = bounds;
  field.cell_size = cell_size;
  field.nx = static_cast<int>(std::ceil(bounds.width() / cell_size));
  field.ny = static_cast<int>(std::ceil(bounds.height() / cell_size));
  field.local_losses.resize(static_cast<std::size_t>(ds.size()));
  for (int i = 0; i < ds.size(); ++i) field.local_losses[i] = local_loss(ds, i, params);

  // Kernel truncated at 3 sigma; cells beyond it from every sample are
  // no-data.
  const double cutoff2 = 9.0 * smoothing_sigma * smoothing_sigma;
  const double inv_two_sigma2 = 0.5 / (smoothing_sigma * smoothing_sigma);
  field.grid.assign(static_cast<std::size_t>(field.nx) * field.ny,
                    std::numeric_limits<double>::quiet_NaN());
  for (int cy = 0; cy < field.ny; ++cy) {
    for (int cx = 0; cx < field.nx; ++cx) {
      const Vec2 c = field.cell_center(cx, cy);
      double mass = 0.0, acc = 0.0;
      for (int i = 0; i < ds.size(); ++i) {
        const Vec2 d = ds.entries[i].position - c;
        const double d2 = d.x * d.x + d.y * d.y;
        if (d2 > cutoff2) continue;
        const double w = std::exp(-d2 * inv_two_sigma2);
        mass += w;
        acc += w * field.local_losses[i];
      }
      if (mass > 0.0) field.grid[static_cast<std::size_t>(cy) * field.nx + cx] = acc / mass;
    }
  }
  return field;
}

void save_loss_field(const LossField& field, const LossParams& params,
                     const std::string& csv_path, const std::string& json_path,
                     const std::string& pgm_path, const std::string& command_line) {
  {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("save_loss_field: cannot open " + csv_path);
    out << "# schema=texloc.lossgrid/1\n";
    if (!command_line.empty()) out << "# cmd=" << command_line << "\n";
    out.precision(17);
    for (int cy = 0; cy < field.ny; ++cy) {
      for (int cx = 0; cx < field.nx; ++cx) {
        if (cx) out << ",";
        const double v = field.at(cx, cy);
        if (!std::isnan(v)) out << v;
      }
      out << "\n";
    }
  }
  {
    nlohmann::json j;
    j["schema"] = "texloc.lossgrid-meta/1";
    if (!command_line.empty()) j["cmd"] = command_line;
    j["bounds"] = {{"x_min", field.bounds.x_min},
                   {"x_max", field.bounds.x_max},
                   {"y_min", field.bounds.y_min},
                   {"y_max", field.bounds.y_max}};
    j["cell_size"] = field.cell_size;
    j["nx"] = field.nx;
    j["ny"] = field.ny;
    j["sigma_x"] = params.sigma_x;
    j["sigma_y"] = params.sigma_y;
    std::ofstream out(json_path);
    if (!out) throw std::runtime_error("save_loss_field: cannot open " + json_path);
    out << j.dump(2) << "\n";
  }
  {
    // Heatmap: data cells map to 1..255 over the observed range, no-data to 0.
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : field.grid)
      if (!std::isnan(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    const double span = (hi > lo) ? (hi - lo) : 1.0;
    std::ofstream out(pgm_path, std::ios::binary);
    if (!out) throw std::runtime_error("save_loss_field: cannot open " + pgm_path);
    out << "P5\n" << field.nx << " " << field.ny << "\n255\n";
    for (int cy = 0; cy < field.ny; ++cy)
      for (int cx = 0; cx < field.nx; ++cx) {
        const double v = field.at(cx, cy);
        std::uint8_t px = 0;
        if (!std::isnan(v))
          px = static_cast<std::uint8_t>(1 + std::lround(254.0 * (v - lo) / span));
        out.put(static_cast<char>(px));
      }
  }
}

}  // namespace texloc
