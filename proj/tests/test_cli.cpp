#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "texloc/image.hpp"
#include "texloc/knn.hpp"
#include "texloc/textons.hpp"

namespace fs = std::filesystem;
using namespace texloc;

namespace {

std::string cli() {
  const char* path = std::getenv("TEXLOC_CLI");
  REQUIRE_MESSAGE(path != nullptr, "TEXLOC_CLI must point at the texloc binary");
  return path;
}

const fs::path& work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "texloc_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args, const std::string& stdout_file = "") {
  std::string cmd = cli() + " " + args;
  if (!stdout_file.empty()) cmd += " > " + stdout_file;
  cmd += " 2>> " + (work_dir() / "stderr.log").string();
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> row;
    while (std::getline(ss, cell, ',')) row.push_back(cell);
    rows.push_back(std::move(row));
  }
  return rows;
}

// Small shared pipeline artifacts: floor, dictionary, dataset, trajectory.
struct CliFixture {
  fs::path dir = work_dir();
  std::string cam = " --cam-width 48 --cam-height 36 --footprint 0.3 ";
  fs::path floor = dir / "floor";
  fs::path dict = dir / "dict.json";
  fs::path dataset = dir / "dataset.csv";
  fs::path traj = dir / "traj.csv";

  CliFixture() {
    REQUIRE(run("gen-floor --size 1.2x1.2 --mpp 0.01 --seed 1 --wavelength 0.4 --out " +
                floor.string()) == 0);
    REQUIRE(run("train-dict --floor " + floor.string() +
                " --textons 4 --images 4 --patches-per-image 100 --epochs 2 --seed 5" + cam +
                "--out " + dict.string()) == 0);
    REQUIRE(run("build-dataset --floor " + floor.string() + " --dict " + dict.string() +
                " --frames 12 --traj-kind waypoints --speed 0.05 --seed 2" + cam + "--out " +
                dataset.string() + " --traj-out " + traj.string()) == 0);
  }
};

const CliFixture& fixture() {
  static CliFixture f;
  return f;
}

}  // namespace

TEST_CASE("gen-floor") {
  const fs::path dir = work_dir();
  SUBCASE("deterministic outputs") {
    const fs::path a = dir / "floor_a", b = dir / "floor_b";
    REQUIRE(run("gen-floor --size 0.8x0.6 --mpp 0.01 --seed 9 --out " + a.string()) == 0);
    REQUIRE(run("gen-floor --size 0.8x0.6 --mpp 0.01 --seed 9 --out " + b.string()) == 0);
    CHECK(fs::exists(a / "floor.ppm"));
    CHECK(fs::exists(a / "floor.json"));
    CHECK(slurp(a / "floor.ppm") == slurp(b / "floor.ppm"));
  }
  SUBCASE("invalid size fails with a validation exit code") {
    CHECK(run("gen-floor --size 0x5 --out " + (dir / "floor_bad").string()) == 4);
  }
  SUBCASE("zero richness gives a constant image") {
    const fs::path out = dir / "floor_flat";
    REQUIRE(run("gen-floor --size 0.5x0.5 --mpp 0.01 --richness 0 --out " + out.string()) == 0);
    const ImageYuv img = read_ppm((out / "floor.ppm").string());
    for (std::size_t i = 0; i < img.pixel_count(); ++i) CHECK(img.y_plane[i] == img.y_plane[0]);
  }
}

TEST_CASE("train-dict") {
  const CliFixture& f = fixture();
  SUBCASE("produces the requested dictionary") {
    const TextonDictionary dict = load_dictionary(f.dict.string());
    CHECK(dict.size() == 4);
    CHECK(dict.patch_dim() == 108);
  }
  SUBCASE("same seed reproduces the file byte for byte") {
    const fs::path again = work_dir() / "dict_again.json";
    REQUIRE(run("train-dict --floor " + f.floor.string() +
                " --textons 4 --images 4 --patches-per-image 100 --epochs 2 --seed 5" + f.cam +
                "--out " + again.string()) == 0);
    // Outputs embed the command line; compare the texton payload instead.
    const TextonDictionary a = load_dictionary(f.dict.string());
    const TextonDictionary b = load_dictionary(again.string());
    REQUIRE(a.size() == b.size());
    for (int t = 0; t < a.size(); ++t) CHECK(a.textons[t] == b.textons[t]);
  }
  SUBCASE("single-texton dictionary is valid") {
    const fs::path out = work_dir() / "dict_one.json";
    REQUIRE(run("train-dict --floor " + f.floor.string() +
                " --textons 1 --images 2 --patches-per-image 50 --epochs 1 --seed 3" + f.cam +
                "--out " + out.string()) == 0);
    CHECK(load_dictionary(out.string()).size() == 1);
  }
}

TEST_CASE("build-dataset and eval-map") {
  const CliFixture& f = fixture();
  SUBCASE("dataset matches the survey length") {
    const TrainingSet ts = load_dataset(f.dataset.string());
    CHECK(ts.size() == 12);
    CHECK(ts.histogram_size() == 4);
  }
  SUBCASE("eval-map prints the global loss as the final stdout line") {
    const fs::path out_txt = work_dir() / "eval_out.txt";
    REQUIRE(run("eval-map --dataset " + f.dataset.string() + " --sigma-x 0.3 --sigma-y 0.3" +
                " --cell 0.1 --smooth 0.2 --out " + (work_dir() / "lossmap").string(),
                out_txt.string()) == 0);
    std::ifstream in(out_txt);
    std::string line, last;
    while (std::getline(in, line))
      if (!line.empty()) last = line;
    const double loss = std::stod(last);
    CHECK(std::abs(loss) <= 1.0);
    CHECK(fs::exists(work_dir() / "lossmap" / "loss.csv"));
    CHECK(fs::exists(work_dir() / "lossmap" / "loss.pgm"));
  }
  SUBCASE("single-row dataset evaluates to zero") {
    const fs::path one = work_dir() / "dataset_one.csv";
    TrainingSet ts;
    ts.entries.push_back({TextonHistogram{{0.25, 0.25, 0.25, 0.25}}, {0.5, 0.5}});
    save_dataset(ts, one.string(), "test");
    const fs::path out_txt = work_dir() / "eval_one.txt";
    REQUIRE(run("eval-map --dataset " + one.string() + " --cell 0.1 --smooth 0.2 --out " +
                (work_dir() / "lossmap_one").string(),
                out_txt.string()) == 0);
    std::ifstream in(out_txt);
    std::string line, last;
    while (std::getline(in, line))
      if (!line.empty()) last = line;
    CHECK(std::stod(last) == 0.0);
  }
}

TEST_CASE("localize") {
  const CliFixture& f = fixture();
  SUBCASE("memorization run has rank-1 distance zero everywhere") {
    const fs::path out = work_dir() / "run_memo";
    REQUIRE(run("localize --floor " + f.floor.string() + " --dict " + f.dict.string() +
                " --dataset " + f.dataset.string() + " --traj " + f.traj.string() +
                " --samples 0 --k 1 --particles 10 --calib-frames 10 --seed 7" + f.cam +
                "--out " + out.string()) == 0);
    const auto rows = csv_rows(out / "frames.csv");
    REQUIRE(rows.size() == 13);  // header + 12 frames
    const auto& header = rows[0];
    int d1_col = -1;
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == "d1") d1_col = static_cast<int>(c);
    REQUIRE(d1_col >= 0);
    for (std::size_t r = 1; r < rows.size(); ++r) CHECK(std::stod(rows[r][d1_col]) == 0.0);
    CHECK(fs::exists(out / "summary.csv"));
  }
  SUBCASE("missing input file exits with the io code") {
    CHECK(run("localize --floor " + f.floor.string() + " --dict " +
              (work_dir() / "missing.json").string() + " --dataset " + f.dataset.string()) == 2);
  }
  SUBCASE("dictionary/dataset mismatch exits with the compatibility code") {
    const fs::path other_dict = work_dir() / "dict3.json";
    REQUIRE(run("train-dict --floor " + f.floor.string() +
                " --textons 3 --images 2 --patches-per-image 50 --epochs 1 --seed 4" + f.cam +
                "--out " + other_dict.string()) == 0);
    CHECK(run("localize --floor " + f.floor.string() + " --dict " + other_dict.string() +
              " --dataset " + f.dataset.string() + " --frames 3 --calib-frames 10" + f.cam) == 3);
  }
}

TEST_CASE("benchmark") {
  const CliFixture& f = fixture();
  const fs::path out = work_dir() / "bench.csv";
  REQUIRE(run("benchmark --floor " + f.floor.string() + " --dict " + f.dict.string() +
              " --dataset " + f.dataset.string() +
              " --axis samples --values 16,1024 --seeds 2 --frames 10 --samples 64" +
              " --k 2 --particles 10 --calib-frames 10 --seed 8" + f.cam + "--out " +
              out.string()) == 0);
  const auto rows = csv_rows(out);
  REQUIRE(rows.size() == 3);  // header + 2 values
  const auto& header = rows[0];
  int hz_col = -1, value_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "loop_hz") hz_col = static_cast<int>(c);
    if (header[c] == "value") value_col = static_cast<int>(c);
  }
  REQUIRE(hz_col >= 0);
  CHECK(std::stod(rows[1][value_col]) == 16.0);
  CHECK(std::stod(rows[2][value_col]) == 1024.0);
  CHECK(std::stod(rows[1][hz_col]) > std::stod(rows[2][hz_col]));
}

TEST_CASE("landing") {
  const CliFixture& f = fixture();
  const fs::path out = work_dir() / "landing.csv";
  REQUIRE(run("landing --floor " + f.floor.string() + " --dict " + f.dict.string() +
              " --dataset " + f.dataset.string() +
              " --trials 1 --radius 0.4 --theta 0.5 --budget 25 --samples 64 --k 2" +
              " --particles 10 --calib-frames 10 --seed 6" + f.cam + "--out " + out.string()) ==
          0);
  const auto rows = csv_rows(out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].size() == rows[0].size());
}
