/* Copyright 2026 The prefixsim Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <string>

#include "prefixsim/router/simulator.h"
#include "prefixsim/workload/workload.h"

namespace prefixsim::metrics {

// Full run configuration: the five config-file sections.
struct RunSpec {
  router::SimulationConfig sim;
  workload::WorkloadConfig workload;
};

// Parses a JSON config document. Errors are ConfigError with either a
// "line L, column C" position (syntax) or the dotted field path (schema).
RunSpec parse_config(const std::string& text);
RunSpec load_config_file(const std::string& path);

// Canonical JSON rendering of every resolved parameter. Parsing the output
// yields an equal RunSpec.
std::string config_to_json(const RunSpec& spec, int indent = 1);

std::string read_file(const std::string& path);
// Writes via a temporary file and rename so readers never see partial files.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace prefixsim::metrics
