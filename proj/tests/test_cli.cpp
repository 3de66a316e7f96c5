#include <gtest/gtest.h>

#include <algorithm>

#include <json.hpp>

#include "cli_pipeline.hpp"

using namespace bookrel;
using cli::dispatch;

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(dispatch({"frobnicate"}), 2);
  EXPECT_EQ(dispatch({}), 2);
  test::TempDir dir;
  EXPECT_EQ(dispatch({"synthesize", "--out", (dir / "s").string()}), 2);
  EXPECT_EQ(dispatch({"sweep", "--bogus-flag"}), 2);
  EXPECT_EQ(dispatch({"sweep", "--fractions", "0,2", "--out", (dir / "x").string()}), 2);
}

TEST(Cli, BadInputFileExitsOne) {
  test::TempDir dir;
  test::write_file(dir / "model.bin", "not a model");
  std::filesystem::create_directories(dir / "feat");
  EXPECT_EQ(dispatch({"evaluate", "--model", (dir / "model.bin").string(), "--features",
                      (dir / "feat").string(), "--out", (dir / "e").string()}),
            1);
}

TEST(Cli, PipelineIsDeterministic) {
  test::TempDir dir;
  for (const auto& step : test::small_pipeline(dir.path())) {
    auto args = step.args;
    ASSERT_EQ(dispatch(args), 0) << step.name;
    const auto first = test::snapshot(dir.path());
    ASSERT_EQ(dispatch(args), 0) << step.name;
    EXPECT_EQ(test::snapshot(dir.path()), first) << step.name;
  }
  EXPECT_TRUE(std::filesystem::exists(dir / "demo/run-manifest.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "model/model.bin.run.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "eval/metrics.tsv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "sweep/sweep.csv"));

  const auto manifest = nlohmann::json::parse(test::read_file(dir / "sweep/run-manifest.json"));
  EXPECT_EQ(manifest["command"], "sweep");
  EXPECT_FALSE(manifest.contains("wall_time_seconds"));
  const auto overlaps = test::read_file(dir / "overlaps.tsv");
  EXPECT_EQ(overlaps.rfind("rank\tground_truth\tleft_id\tright_id\tconfidence\n", 0), 0u);
  EXPECT_EQ(std::count(overlaps.begin(), overlaps.end(), '\n'), 6);
}

TEST(Cli, ThreadCountDoesNotChangeOutputs) {
  test::TempDir one, four;
  for (auto* d : {&one, &four}) {
    for (const auto& step : test::small_pipeline(d->path())) {
      if (step.name == "sweep" || step.name == "surface-overlaps") continue;
      auto args = step.args;
      args.push_back("--threads");
      args.push_back(d == &one ? "1" : "4");
      ASSERT_EQ(dispatch(args), 0) << step.name;
    }
  }
  // Manifests record the thread count and paths; everything else must match.
  auto a = test::snapshot(one / "feat"), b = test::snapshot(four / "feat");
  a.erase("run-manifest.json");
  b.erase("run-manifest.json");
  EXPECT_EQ(a, b);
  EXPECT_EQ(test::read_file(one / "model/model.bin"), test::read_file(four / "model/model.bin"));
}
