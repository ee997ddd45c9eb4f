#include "pssl/batch.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pssl/error.hpp"

using namespace pssl;

namespace {

config::ExperimentConfig tiny(const std::string& out) {
  auto cfg = config::parse_config(R"({
    "seeds": [1, 2, 3],
    "phases": {"initial_stereo": 5, "learning": 10, "test": 10},
    "kohonen_iterations": 3000,
    "warmup_frames": 40,
    "bootstrap_iters": 1000,
    "heatmap_bins": 8
  })");
  cfg.output_dir = out;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("batch") {

TEST_CASE("describe uses the sample standard deviation") {
  const auto s = batch::describe({2, 4, 4, 4, 5, 5, 7, 9});
  CHECK(s.mean == 5.0);
  CHECK(s.sd == doctest::Approx(std::sqrt(32.0 / 7.0)));
  CHECK(batch::describe({3}).sd == 0.0);
}

TEST_CASE("summary shape, recomputable aggregates and artifacts") {
  const auto dir = std::filesystem::temp_directory_path() / "pssl_batch_shape";
  std::filesystem::remove_all(dir);
  const auto cfg = tiny(dir.string());
  const auto s = batch::run_batch(cfg);

  REQUIRE(s.aggregates.size() == 4);  // three schemes plus the stereo diagnostic
  CHECK(s.aggregates.back().scheme == "pure_stereo");
  CHECK(s.pairwise.size() == 3);
  CHECK(s.rows.size() == 12);
  for (const auto& p : s.pairwise) {
    CHECK(p.p_value > 0.0);
    CHECK(p.p_value <= 1.0);
  }
  for (const auto& agg : s.aggregates) {
    std::vector<double> ovr;
    for (const auto& r : s.rows)
      if (r.scheme == agg.scheme) ovr.push_back(r.overrides_test);
    const auto again = batch::describe(ovr);
    CHECK(agg.runs == 3);
    CHECK(agg.overrides_test.mean == again.mean);
    CHECK(agg.overrides_test.sd == again.sd);
  }
  for (const auto& r : s.rows) {
    REQUIRE(r.turns_stereo_baseline);
    if (r.scheme == "pure_stereo") CHECK(*r.turns_stereo_baseline == r.turns_test);
  }

  CHECK(std::filesystem::exists(dir / "summary.json"));
  CHECK(std::filesystem::exists(dir / "heatmaps" / "dagger_turning.pgm"));
  CHECK(std::filesystem::exists(dir / "runs" / "training_wheels" / "seed_2.csv"));
  CHECK(std::filesystem::exists(dir / "dictionaries" / "shared.json"));
  CHECK_FALSE(std::filesystem::exists(dir / "dictionaries" / "seed_3.json"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("per-seed dictionaries when no shared seed is given") {
  const auto dir = std::filesystem::temp_directory_path() / "pssl_batch_perseed";
  std::filesystem::remove_all(dir);
  auto cfg = tiny(dir.string());
  cfg.dictionary_seed.reset();
  cfg.seeds = {4, 5};
  cfg.include_stereo_baseline = false;
  const auto s = batch::run_batch(cfg);
  CHECK(s.rows.size() == 6);
  CHECK(std::filesystem::exists(dir / "dictionaries" / "seed_4.json"));
  CHECK(std::filesystem::exists(dir / "dictionaries" / "seed_5.json"));
  CHECK_FALSE(std::filesystem::exists(dir / "dictionaries" / "shared.json"));
  CHECK(slurp(dir / "summary.json").find("\"dictionary_seed\": null") != std::string::npos);
  for (const auto& r : s.rows) CHECK_FALSE(r.turns_stereo_baseline);
  std::filesystem::remove_all(dir);
}

TEST_CASE("summary JSON is byte-identical across reruns and worker counts") {
  const auto dir_a = std::filesystem::temp_directory_path() / "pssl_batch_a";
  const auto dir_b = std::filesystem::temp_directory_path() / "pssl_batch_b";
  auto a = tiny(dir_a.string());
  auto b = tiny(dir_b.string());
  b.workers = 3;
  batch::run_batch(a);
  batch::run_batch(b);
  const auto ja = slurp(dir_a / "summary.json");
  CHECK_FALSE(ja.empty());
  CHECK(ja == slurp(dir_b / "summary.json"));
  CHECK(slurp(dir_a / "heatmaps" / "cold_turkey_forward.csv") ==
        slurp(dir_b / "heatmaps" / "cold_turkey_forward.csv"));
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}

TEST_CASE("invalid configuration fails before any run") {
  auto cfg = tiny((std::filesystem::temp_directory_path() / "pssl_batch_bad").string());
  cfg.sim.fps = -1;
  CHECK_THROWS_WITH_AS(batch::run_batch(cfg), doctest::Contains("fps"), Error);
  CHECK_FALSE(std::filesystem::exists(cfg.output_dir));
}

}  // TEST_SUITE
