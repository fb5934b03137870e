/*
 * Copyright 2026 The procf Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Serves a rule oracle over the stdio prediction protocol, as an external
// black box for `procf ... --predictor-cmd`.
//
//   procf_oracle_server --log log.csv --schema schema.json --oracle oracle.json

#include <iostream>
#include <memory>
#include <string>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "procf/cli.h"
#include "procf/encoding.h"
#include "procf/errors.h"
#include "procf/event_log.h"
#include "procf/predictor.h"

int main(int argc, char** argv) {
  procf::ConfigureLogging();
  CLI::App app{"Rule-oracle prediction server", "procf_oracle_server"};
  std::string log_path, schema_path, oracle_path;
  app.add_option("--log", log_path, "Event log CSV the layout is built from")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--schema", schema_path, "Schema JSON")->required()->check(CLI::ExistingFile);
  app.add_option("--oracle", oracle_path, "Rule-oracle JSON")
      ->required()
      ->check(CLI::ExistingFile);
  CLI11_PARSE(app, argc, argv);

  try {
    const procf::LogSchema schema = procf::LogSchema::Load(schema_path);
    const procf::EventLog log = procf::LoadLog(log_path, schema);
    auto layout =
        std::make_shared<procf::FeatureLayout>(procf::FeatureLayout::FromLog(log));
    procf::RuleOracle oracle = procf::RuleOracle::Load(oracle_path);
    return procf::ServeProtocol(oracle, layout, std::cin, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "procf_oracle_server: " << e.what() << "\n";
    return procf::kExitInputError;
  }
}
