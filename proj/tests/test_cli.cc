// Copyright 2026 The Crossplan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(CROSSPLAN_CLI) + " " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("crossplan_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string base() const {
    return "--out " + dir_.string() +
           " --set aux_records=60 --set train_records=40 --set val_records=12 --set test_records=12";
  }
  fs::path dir_;
};

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("gen --no-such-flag").code, 1);
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("gen --set no_such_key=1 --out " + dir_.string()).code, 1);
  EXPECT_EQ(run("gen --set seed").code, 1);
}

TEST_F(Cli, GenAnalyzeBuildDictRetrieve) {
  ASSERT_EQ(run(base() + " gen").code, 0);
  EXPECT_TRUE(fs::exists(dir_ / "corpora" / "primary_train.jsonl"));
  EXPECT_TRUE(fs::exists(dir_ / "config.txt"));
  ASSERT_EQ(run(base() + " analyze").code, 0);
  for (const char* f : {"maneuver_distribution.tsv", "transition_matrix.tsv", "transition_summary.tsv"}) {
    EXPECT_TRUE(fs::exists(dir_ / "analysis" / f)) << f;
  }
  ASSERT_EQ(run(base() + " build-dict").code, 0);
  const std::string first = slurp(dir_ / "dictionary.dict");
  ASSERT_FALSE(first.empty());
  ASSERT_EQ(run(base() + " build-dict").code, 0);
  EXPECT_EQ(slurp(dir_ / "dictionary.dict"), first);

  const Result r = run(base() + " retrieve --index 3 --k 5");
  ASSERT_EQ(r.code, 0);
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc["k"], 5);
  EXPECT_EQ(doc["ranked"].size(), 5u);
  EXPECT_EQ(run(base() + " retrieve --index 100000").code, 1);
}

TEST_F(Cli, AnalyzeExplicitCorpora) {
  ASSERT_EQ(run(base() + " gen").code, 0);
  const fs::path a = dir_ / "corpora" / "aux_a.jsonl";
  ASSERT_EQ(run(base() + " analyze --corpus " + a.string()).code, 0);
  const std::string table = slurp(dir_ / "analysis" / "maneuver_distribution.tsv");
  EXPECT_NE(table.find("aux_a"), std::string::npos);
  EXPECT_EQ(table.find("aux_b"), std::string::npos);
  EXPECT_EQ(run(base() + " analyze --corpus " + (dir_ / "missing.jsonl").string()).code, 1);
}

TEST_F(Cli, PhaseOrderFailures) {
  ASSERT_EQ(run(base() + " gen").code, 0);
  EXPECT_EQ(run(base() + " train-main").code, 1);
  EXPECT_EQ(run(base() + " eval").code, 1);
  EXPECT_EQ(run(base() + " train-hftdn --no-gftm --no-s2d").code, 1);
}

TEST_F(Cli, StagewiseBaseline) {
  const std::string b = base() +
                        " --set model_dim=8 --set head_hidden=16 --set hftdn_hidden=8 --set future_stride=8"
                        " --set main_epochs=1 --set hftdn_epochs=1";
  ASSERT_EQ(run(b + " gen").code, 0);
  ASSERT_EQ(run(b + " build-dict").code, 0);
  ASSERT_EQ(run(b + " train-main --no-gftm --no-s2d").code, 0);
  ASSERT_EQ(run(b + " train-hftdn --no-gftm --no-s2d").code, 0);
  const Result r = run(b + " eval --no-gftm --no-s2d --hftdn");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("ade\tfde\tyaw_mae\tplan_loss\trecords\n", 0), 0u) << r.out;
}

}  // namespace
