#pragma once

#include <string>
#include <vector>

#include "texloc/geometry.hpp"
#include "texloc/knn.hpp"

namespace texloc {

/// Widths of the region over which histograms are expected to stay similar.
struct LossParams {
  double sigma_x = 1.0;
  double sigma_y = 1.0;

  void validate() const {
    if (!(sigma_x > 0.0) || !(sigma_y > 0.0))
      throw std::invalid_argument("LossParams: sigmas must be positive");
  }
};

/// Per-sample losses plus a smoothed grid over the arena. Cells without any
/// kernel mass hold NaN (no data).
struct LossField {
  std::vector<double> local_losses;
  std::vector<double> grid;  ///< row-major, ny rows of nx cells
  int nx = 0;
  int ny = 0;
  double cell_size = 0.0;
  ArenaBounds bounds;

  double at(int cx, int cy) const { return grid[static_cast<std::size_t>(cy) * nx + cx]; }
  Vec2 cell_center(int cx, int cy) const {
    return {bounds.x_min + (cx + 0.5) * cell_size, bounds.y_min + (cy + 0.5) * cell_size};
  }
};

/// Cosine similarity of two histograms; within [0, 1] for non-negative bins.
double cosine_similarity(const TextonHistogram& a, const TextonHistogram& b);

/// Ideal similarity of two positions: product of non-normalized 1-D
/// Gaussians per axis. 1 iff the positions coincide.
double ideal_similarity(const Vec2& pos_i, const Vec2& pos_j, const LossParams& params);

/// Mean over j of actual minus ideal similarity for sample i; in [-1, 1].
double local_loss(const TrainingSet& ds, int i, const LossParams& params);

/// Mean of all local losses; lower is better, negative means the texture
/// varies more than the ideal pattern requires.
double global_loss(const TrainingSet& ds, const LossParams& params);

/// Gaussian-kernel-weighted average of the local losses on a regular grid.
LossField loss_map(const TrainingSet& ds, const ArenaBounds& bounds, double cell_size,
                   double smoothing_sigma, const LossParams& params);

/// Grid CSV (one row per y-cell, NaN cells empty) + JSON sidecar + PGM
/// heatmap for quick viewing.
void save_loss_field(const LossField& field, const LossParams& params,
                     const std::string& csv_path, const std::string& json_path,
                     const std::string& pgm_path, const std::string& command_line = "");

}  // namespace texloc
