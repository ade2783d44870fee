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

#ifndef REOT_CONFIG_HPP_
#define REOT_CONFIG_HPP_

#include <string>
#include <vector>

#include "reot/trainer.hpp"

namespace reot {

// Flat `key = value` text format with dotted keys. `#` starts a comment;
// string values may be quoted. Keys:
//   scenario, seed, ot.lambda, ot.beta2, ot.max_iterations, ot.tolerance,
//   loss.eta1, loss.eta2, train.epochs, train.pretrain_epochs, train.lr,
//   train.momentum, train.grad_clip, model.hidden, model.feature,
//   task.k_shared
//
// `scenario` resets the loss weights to that scenario's defaults unless the
// file also sets them, regardless of key order.
TaskConfig ParseConfig(const std::string& text, const std::string& source,
                       TaskConfig base = {});
TaskConfig LoadConfig(const std::string& path, TaskConfig base = {});

// Applies one `key=value` override with the same rules as a config line.
void ApplyConfigValue(TaskConfig* config, const std::string& key,
                      const std::string& value);

const std::vector<std::string>& ConfigKeys();
std::string ConfigToText(const TaskConfig& config);

}  // namespace reot

#endif  // REOT_CONFIG_HPP_
