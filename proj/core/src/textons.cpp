#include "texloc/textons.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace texloc {

namespace {

void check_patch_fits(int width, int height, int pw, int ph) {
  if (pw <= 0 || ph <= 0) throw std::invalid_argument("patch size must be positive");
  if (width < pw || height < ph)
    throw std::invalid_argument("patch larger than image (" + std::to_string(width) + "x" +
                                std::to_string(height) + " vs " + std::to_string(pw) + "x" +
                                std::to_string(ph) + ")");
}

}  // namespace

void TextonDictionary::validate() const {
  if (patch_width <= 0 || patch_height <= 0)
    throw std::invalid_argument("TextonDictionary: non-positive patch size");
  if (textons.empty()) throw std::invalid_argument("TextonDictionary: needs at least one texton");
  const std::size_t dim = static_cast<std::size_t>(patch_dim());
  for (const auto& t : textons) {
    if (t.size() != dim) throw std::invalid_argument("TextonDictionary: texton length mismatch");
    for (double v : t)
      if (!(v >= 0.0 && v <= 255.0))
        throw std::invalid_argument("TextonDictionary: texton value outside [0, 255]");
  }
}

std::vector<std::pair<int, int>> full_patch_positions(int width, int height, int patch_width,
                                                      int patch_height) {
  check_patch_fits(width, height, patch_width, patch_height);
  const int nx = width - patch_width + 1;
  const int ny = height - patch_height + 1;
  std::vector<std::pair<int, int>> positions;
  positions.reserve(static_cast<std::size_t>(nx) * ny);
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) positions.emplace_back(x, y);
  return positions;
}

std::vector<std::pair<int, int>> sample_patch_positions(int width, int height, int patch_width,
                                                        int patch_height, int n, Rng& rng) {
  check_patch_fits(width, height, patch_width, patch_height);
  if (n < 1) throw std::invalid_argument("sample_patch_positions: n must be >= 1");
  std::uniform_int_distribution<int> dx(0, width - patch_width);
  std::uniform_int_distribution<int> dy(0, height - patch_height);
  std::vector<std::pair<int, int>> positions(static_cast<std::size_t>(n));
  for (auto& p : positions) {
    p.first = dx(rng);
    p.second = dy(rng);
  }
  return positions;
}

Patch extract_patch(const ImageYuv& img, int x, int y, int patch_width, int patch_height) {
  check_patch_fits(img.width, img.height, patch_width, patch_height);
  if (x < 0 || y < 0 || x + patch_width > img.width || y + patch_height > img.height)
    throw std::invalid_argument("extract_patch: position out of bounds");
  Patch p(static_cast<std::size_t>(3) * patch_width * patch_height);
  std::size_t i = 0;
  for (int r = 0; r < patch_height; ++r)
    for (int c = 0; c < patch_width; ++c) p[i++] = img.y_at(x + c, y + r);
  for (int r = 0; r < patch_height; ++r)
    for (int c = 0; c < patch_width; ++c) p[i++] = img.u_at(x + c, y + r);
  for (int r = 0; r < patch_height; ++r)
    for (int c = 0; c < patch_width; ++c) p[i++] = img.v_at(x + c, y + r);
  return p;
}

namespace {

double squared_distance(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

/// Flattened float copy of the dictionary for the per-patch assignment loop.
struct AssignmentKernel {
  int count;
  int dim;
  std::vector<float> flat;
  std::vector<float> norm2;

  explicit AssignmentKernel(const TextonDictionary& dict)
      : count(dict.size()), dim(dict.patch_dim()) {
    flat.resize(static_cast<std::size_t>(count) * dim);
    norm2.resize(count);
    for (int t = 0; t < count; ++t) {
      float n2 = 0.0f;
      for (int i = 0; i < dim; ++i) {
        const float v = static_cast<float>(dict.textons[t][i]);
        flat[static_cast<std::size_t>(t) * dim + i] = v;
        n2 += v * v;
      }
      norm2[t] = n2;
    }
  }

  // argmin_t ||p - t||^2 = argmin_t (||t||^2 - 2 p.t); ascending scan keeps
  // the lowest index on ties.
  int nearest(const float* patch) const {
    int best = 0;
    float best_score = std::numeric_limits<float>::infinity();
    for (int t = 0; t < count; ++t) {
      const float* tex = flat.data() + static_cast<std::size_t>(t) * dim;
      float dot = 0.0f;
      for (int i = 0; i < dim; ++i) dot += patch[i] * tex[i];
      const float score = norm2[t] - 2.0f * dot;
      if (score < best_score) {
        best_score = score;
        best = t;
      }
    }
    return best;
  }
};

void extract_patch_floats(const ImageYuv& img, int x, int y, int pw, int ph, float* out) {
  std::size_t i = 0;
  for (int r = 0; r < ph; ++r) {
    const std::uint8_t* row = img.y_plane.data() + img.index(x, y + r);
    for (int c = 0; c < pw; ++c) out[i++] = row[c];
  }
  for (int r = 0; r < ph; ++r) {
    const std::uint8_t* row = img.u_plane.data() + img.index(x, y + r);
    for (int c = 0; c < pw; ++c) out[i++] = row[c];
  }
  for (int r = 0; r < ph; ++r) {
    const std::uint8_t* row = img.v_plane.data() + img.index(x, y + r);
    for (int c = 0; c < pw; ++c) out[i++] = row[c];
  }
}

void count_full_rows(const ImageYuv& img, const AssignmentKernel& kernel, int pw, int ph,
                     int row_begin, int row_end, std::vector<std::int64_t>& counts) {
  std::vector<float> patch(static_cast<std::size_t>(kernel.dim));
  const int nx = img.width - pw + 1;
  for (int y = row_begin; y < row_end; ++y)
    for (int x = 0; x < nx; ++x) {
      extract_patch_floats(img, x, y, pw, ph, patch.data());
      ++counts[kernel.nearest(patch.data())];
    }
}

}  // namespace

int nearest_texton(const TextonDictionary& dict, const Patch& patch) {
  dict.validate();
  if (patch.size() != static_cast<std::size_t>(dict.patch_dim()))
    throw std::invalid_argument("nearest_texton: patch length does not match dictionary");
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int t = 0; t < dict.size(); ++t) {
    const double d = squared_distance(patch.data(), dict.textons[t].data(), patch.size());
    if (d < best_d) {
      best_d = d;
      best = t;
    }
  }
  return best;
}

TextonHistogram extract_histogram(const ImageYuv& img, const TextonDictionary& dict,
                                  const SamplingMode& mode, Rng& rng) {
  img.validate();
  dict.validate();
  const int pw = dict.patch_width;
  const int ph = dict.patch_height;
  check_patch_fits(img.width, img.height, pw, ph);

  const AssignmentKernel kernel(dict);
  std::vector<std::int64_t> counts(static_cast<std::size_t>(dict.size()), 0);
  std::int64_t total = 0;

  if (mode.full) {
    const int ny = img.height - ph + 1;
    const int nx = img.width - pw + 1;
    total = static_cast<std::int64_t>(nx) * ny;
    const unsigned hw = std::thread::hardware_concurrency();
    const int n_threads = static_cast<int>(std::clamp(hw, 1u, 8u));
    if (n_threads > 1 && total > 50000) {
      std::vector<std::vector<std::int64_t>> partial(
          n_threads, std::vector<std::int64_t>(counts.size(), 0));
      std::vector<std::thread> workers;
      const int rows_per = (ny + n_threads - 1) / n_threads;
      for (int w = 0; w < n_threads; ++w) {
        const int begin = w * rows_per;
        const int end = std::min(ny, begin + rows_per);
        if (begin >= end) break;
        workers.emplace_back(count_full_rows, std::cref(img), std::cref(kernel), pw, ph, begin,
                             end, std::ref(partial[w]));
      }
      for (auto& t : workers) t.join();
      for (const auto& p : partial)
        for (std::size_t b = 0; b < counts.size(); ++b) counts[b] += p[b];
    } else {
      count_full_rows(img, kernel, pw, ph, 0, ny, counts);
    }
  } else {
    if (mode.n_samples < 1)
      throw std::invalid_argument("extract_histogram: random mode needs n_samples >= 1");
    const auto positions = sample_patch_positions(img.width, img.height, pw, ph, mode.n_samples, rng);
    std::vector<float> patch(static_cast<std::size_t>(kernel.dim));
    for (const auto& [x, y] : positions) {
      extract_patch_floats(img, x, y, pw, ph, patch.data());
      ++counts[kernel.nearest(patch.data())];
    }
    total = mode.n_samples;
  }

  TextonHistogram hist;
  hist.bins.resize(counts.size());
  for (std::size_t b = 0; b < counts.size(); ++b)
    hist.bins[b] = static_cast<double>(counts[b]) / static_cast<double>(total);
  return hist;
}

TextonDictionary train_dictionary(const std::vector<ImageYuv>& images, int n_textons,
                                  int patches_per_image, const KohonenSchedule& schedule,
                                  Rng& rng, int patch_width, int patch_height) {
  if (images.empty()) throw std::invalid_argument("train_dictionary: no images");
  if (n_textons < 1) throw std::invalid_argument("train_dictionary: need at least one texton");
  if (patches_per_image < 1)
    throw std::invalid_argument("train_dictionary: patches_per_image must be >= 1");
  if (schedule.epochs < 1) throw std::invalid_argument("train_dictionary: epochs must be >= 1");

  const std::size_t dim = static_cast<std::size_t>(3) * patch_width * patch_height;
  std::vector<Patch> patches;
  patches.reserve(static_cast<std::size_t>(images.size()) * patches_per_image);
  for (const auto& img : images) {
    img.validate();
    const auto positions = sample_patch_positions(img.width, img.height, patch_width,
                                                  patch_height, patches_per_image, rng);
    for (const auto& [x, y] : positions)
      patches.push_back(extract_patch(img, x, y, patch_width, patch_height));
  }
  const std::size_t n_patches = patches.size();

  // Units start at randomly sampled input patches (distinct indices when
  // the pool allows it).
  std::vector<std::size_t> init_idx(n_patches);
  std::iota(init_idx.begin(), init_idx.end(), std::size_t{0});
  std::shuffle(init_idx.begin(), init_idx.end(), rng);
  std::vector<Patch> units(static_cast<std::size_t>(n_textons));
  for (int t = 0; t < n_textons; ++t)
    units[t] = patches[init_idx[static_cast<std::size_t>(t) % n_patches]];

  const double radius_start =
      schedule.radius_start < 0.0 ? static_cast<double>(n_textons) / 2.0 : schedule.radius_start;
  const long total_steps = static_cast<long>(schedule.epochs) * static_cast<long>(n_patches);
  long step = 0;

  std::vector<std::size_t> order(n_patches);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < schedule.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (const std::size_t pi : order) {
      const double frac =
          total_steps > 1 ? static_cast<double>(step) / static_cast<double>(total_steps - 1) : 0.0;
      const double lr = schedule.lr_start + (schedule.lr_end - schedule.lr_start) * frac;
      const double radius = radius_start + (schedule.radius_end - radius_start) * frac;
      const Patch& p = patches[pi];

      int bmu = 0;
      double best = std::numeric_limits<double>::infinity();
      for (int t = 0; t < n_textons; ++t) {
        const double d = squared_distance(p.data(), units[t].data(), dim);
        if (d < best) {
          best = d;
          bmu = t;
        }
      }

      for (int t = 0; t < n_textons; ++t) {
        const int lin = std::abs(t - bmu);
        const int ring = std::min(lin, n_textons - lin);
        double h;
        if (ring == 0) {
          h = 1.0;
        } else if (radius <= 0.0) {
          continue;
        } else {
          h = std::exp(-0.5 * (ring * ring) / (radius * radius));
          if (h < 1e-4) continue;
        }
        const double eta = lr * h;
        double* u = units[t].data();
        for (std::size_t i = 0; i < dim; ++i) u[i] += eta * (p[i] - u[i]);
      }
      ++step;
    }
  }

  TextonDictionary dict;
  dict.patch_width = patch_width;
  dict.patch_height = patch_height;
  dict.textons = std::move(units);
  dict.validate();
  return dict;
}

void save_dictionary(const TextonDictionary& dict, const std::string& path,
                     const std::string& command_line) {
  dict.validate();
  nlohmann::json j;
  j["schema"] = "texloc.dictionary/1";
  if (!command_line.empty()) j["cmd"] = command_line;
  j["patch_width"] = dict.patch_width;
  j["patch_height"] = dict.patch_height;
  j["channels"] = 3;
  j["textons"] = dict.textons;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_dictionary: cannot open " + path);
  out << j.dump(2) << "\n";
}

TextonDictionary load_dictionary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_dictionary: cannot open " + path);
  nlohmann::json j;
  in >> j;
  TextonDictionary dict;
  dict.patch_width = j.at("patch_width").get<int>();
  dict.patch_height = j.at("patch_height").get<int>();
  if (j.at("channels").get<int>() != 3)
    throw std::runtime_error("load_dictionary: expected 3 channels");
  dict.textons = j.at("textons").get<std::vector<Patch>>();
  dict.validate();
  return dict;
}

}  // namespace texloc
