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

#ifndef REOT_TESTS_SUPPORT_FIXTURES_HPP_
#define REOT_TESTS_SUPPORT_FIXTURES_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "reot/data_gen.hpp"
#include "reot/trainer.hpp"

namespace reot::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string File(const std::string& name) const;

 private:
  std::filesystem::path path_;
};

std::string ReadFile(const std::string& path);
void WriteFile(const std::string& path, const std::string& text);

// Small default-shaped task for fast trainer tests.
SyntheticTask SmallTask(Scenario scenario, std::uint64_t seed,
                        int n_per_class = 12);

// Short run configuration for the given scenario.
TaskConfig ShortConfig(Scenario scenario, int epochs, int pretrain_epochs = 20);

}  // namespace reot::testing

#endif  // REOT_TESTS_SUPPORT_FIXTURES_HPP_
