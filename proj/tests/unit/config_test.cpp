// Copyright 2026 The ReOT Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "reot/config.hpp"

#include <gtest/gtest.h>

#include "reot/errors.hpp"
#include "support/fixtures.hpp"

namespace reot {
namespace {

std::size_t ErrorLine(const std::string& text) {
  try {
    ParseConfig(text, "run.conf");
  } catch (const ParseError& e) {
    return e.line();
  }
  ADD_FAILURE() << "no error for:\n" << text;
  return 999;
}

TEST(TaskConfigTest, ScenarioDefaults) {
  const TaskConfig osda = TaskConfig::Defaults(Scenario::kOsda);
  EXPECT_EQ(osda.eta1, 1.0);
  EXPECT_EQ(osda.eta2, 1.0);
  const TaskConfig pda = TaskConfig::Defaults(Scenario::kPda);
  EXPECT_EQ(pda.scenario, Scenario::kPda);
  EXPECT_EQ(pda.eta1, 0.3);
  EXPECT_EQ(pda.eta2, 3.5);
  EXPECT_EQ(pda.epochs, 200);
  EXPECT_EQ(pda.momentum, 0.9);
  EXPECT_EQ(pda.grad_clip, 5.0);
}

TEST(TaskConfigTest, ValidateRejectsBadValues) {
  auto bad = [](auto mutate) {
    TaskConfig c;
    mutate(c);
    EXPECT_THROW(c.Validate(), InvalidArgument);
  };
  bad([](TaskConfig& c) { c.lambda = 0.0; });
  bad([](TaskConfig& c) { c.beta2 = -1.0; });
  bad([](TaskConfig& c) { c.eta1 = -0.1; });
  bad([](TaskConfig& c) { c.epochs = -1; });
  bad([](TaskConfig& c) { c.lr = 0.0; });
  bad([](TaskConfig& c) { c.momentum = 1.0; });
  bad([](TaskConfig& c) { c.hidden = 0; });
  TaskConfig ok;
  EXPECT_NO_THROW(ok.Validate());
}

TEST(ParseConfigTest, ReadsKeysCommentsAndQuotes) {
  const TaskConfig c = ParseConfig(
      "# comment\n"
      "scenario = \"pda\"\n"
      "\n"
      "ot.lambda = 0.2   # trailing\n"
      "train.epochs=7\n"
      "seed = 42\n",
      "mem");
  EXPECT_EQ(c.scenario, Scenario::kPda);
  EXPECT_EQ(c.lambda, 0.2);
  EXPECT_EQ(c.epochs, 7);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.eta1, 0.3);
  EXPECT_EQ(c.eta2, 3.5);
}

TEST(ParseConfigTest, ExplicitWeightsWinOverScenarioRegardlessOfOrder) {
  const TaskConfig c = ParseConfig("loss.eta1 = 2\nscenario = pda\n", "mem");
  EXPECT_EQ(c.eta1, 2.0);
  EXPECT_EQ(c.eta2, 3.5);
}

TEST(ParseConfigTest, ErrorsReportLineNumbers) {
  EXPECT_EQ(ErrorLine("seed = 1\nno equals here\n"), 2u);
  EXPECT_EQ(ErrorLine("seed = 1\n\nbogus.key = 3\n"), 3u);
  EXPECT_EQ(ErrorLine("ot.lambda = abc\n"), 1u);
  EXPECT_EQ(ErrorLine("seed = 1\nseed = 2\n"), 2u);
  EXPECT_EQ(ErrorLine("scenario = both\n"), 1u);
  EXPECT_EQ(ErrorLine("train.epochs =\n"), 1u);
  // Parses fine, fails validation.
  EXPECT_EQ(ErrorLine("ot.lambda = -1\n"), 0u);
}

TEST(ParseConfigTest, TextRoundTrip) {
  TaskConfig c = TaskConfig::Defaults(Scenario::kPda);
  c.lambda = 0.1234567890123;
  c.seed = 99;
  c.k_shared = 4;
  const TaskConfig back = ParseConfig(ConfigToText(c), "mem");
  EXPECT_EQ(ConfigToText(back), ConfigToText(c));
  EXPECT_EQ(back.lambda, c.lambda);
}

TEST(ParseConfigTest, EveryKeyIsAccepted) {
  const std::string text = ConfigToText(TaskConfig{});
  for (const std::string& key : ConfigKeys()) {
    EXPECT_NE(text.find(key + " = "), std::string::npos) << key;
  }
}

TEST(LoadConfigTest, MissingFileIsParseError) {
  testing::TempDir dir("config");
  EXPECT_THROW(LoadConfig(dir.File("absent.conf")), ParseError);
  testing::WriteFile(dir.File("a.conf"), "train.lr = 0.5\n");
  EXPECT_EQ(LoadConfig(dir.File("a.conf")).lr, 0.5);
}

}  // namespace
}  // namespace reot
