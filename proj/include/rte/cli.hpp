// Copyright 2026 The rte-snn Authors
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

#ifndef RTE_CLI_HPP_
#define RTE_CLI_HPP_

#include <ostream>

#include "rte/config.hpp"

namespace rte {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kConfig = 1;
inline constexpr int kIo = 2;
inline constexpr int kContract = 3;
}  // namespace exit_code

// Entry point of the rte_snn tool. Commands: train, eval, transfer-matrix,
// loss-surface. Progress goes to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

// Command bodies, for callers that already hold a RunConfig. Each writes
// <out>/<command>.config next to its artifacts.
void command_train(const RunConfig& cfg, std::ostream& log);
void command_eval(const RunConfig& cfg, std::ostream& log);
void command_transfer_matrix(const RunConfig& cfg, std::ostream& log);
void command_loss_surface(const RunConfig& cfg, std::ostream& log);

}  // namespace rte

#endif  // RTE_CLI_HPP_
