#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "texloc/image.hpp"
#include "texloc/rng.hpp"

namespace texloc {

/// Flat patch vector: Y block, then U, then V, each row-major.
/// Length is always 3 * patch_width * patch_height.
using Patch = std::vector<double>;

/// Learned prototype patches (cluster centers). Values are convex
/// combinations of input patches and therefore stay in [0, 255].
struct TextonDictionary {
  int patch_width = 6;
  int patch_height = 6;
  std::vector<Patch> textons;

  int size() const { return static_cast<int>(textons.size()); }
  int patch_dim() const { return 3 * patch_width * patch_height; }
  void validate() const;
};

/// Normalized T-bin relative-frequency vector; the feature vector of one
/// image.
struct TextonHistogram {
  std::vector<double> bins;

  int size() const { return static_cast<int>(bins.size()); }
};

/// Patch positions come either from the complete top-left grid or from n
/// uniform draws over it (with replacement).
struct SamplingMode {
  bool full = true;
  int n_samples = 0;

  static SamplingMode full_sampling() { return {true, 0}; }
  static SamplingMode random_sampling(int n) { return {false, n}; }
};

/// Every valid top-left patch position, row-major.
/// Exactly (width - pw + 1) * (height - ph + 1) entries.
std::vector<std::pair<int, int>> full_patch_positions(int width, int height, int patch_width,
                                                      int patch_height);

/// n positions drawn uniformly with replacement from the valid grid.
std::vector<std::pair<int, int>> sample_patch_positions(int width, int height, int patch_width,
                                                        int patch_height, int n, Rng& rng);

/// Flat [Y | U | V] vector for the patch with top-left corner (x, y).
Patch extract_patch(const ImageYuv& img, int x, int y, int patch_width, int patch_height);

/// Index of the texton with minimal Euclidean distance to the patch; ties
/// break toward the lowest index.
int nearest_texton(const TextonDictionary& dict, const Patch& patch);

/// Histogram of nearest-texton assignments over the sampled patch positions,
/// normalized to sum 1.
TextonHistogram extract_histogram(const ImageYuv& img, const TextonDictionary& dict,
                                  const SamplingMode& mode, Rng& rng);

/// Training schedule of the 1-D ring Kohonen network. Learning rate and
/// neighborhood radius decay linearly over all update steps; with the radius
/// at zero the updates degrade to online k-means.
struct KohonenSchedule {
  int epochs = 10;
  double lr_start = 0.5;
  double lr_end = 0.01;
  double radius_start = -1.0;  ///< < 0 means T / 2
  double radius_end = 0.0;
};

/// Learns a dictionary by clustering patches sampled from the images with a
/// Kohonen network. Units initialize from randomly sampled input patches.
/// Deterministic for a fixed rng state.
TextonDictionary train_dictionary(const std::vector<ImageYuv>& images, int n_textons,
                                  int patches_per_image, const KohonenSchedule& schedule,
                                  Rng& rng, int patch_width = 6, int patch_height = 6);

/// JSON dictionary file:
/// { "patch_width", "patch_height", "channels": 3, "textons": [[...], ...] }
void save_dictionary(const TextonDictionary& dict, const std::string& path,
                     const std::string& command_line = "");
TextonDictionary load_dictionary(const std::string& path);

}  // namespace texloc
