/*
 * Copyright 2026 RCE Contributors.
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
#ifndef RCE_MODEL_IO_HPP
#define RCE_MODEL_IO_HPP

#include <string>

#include "json.hpp"
#include "rce/model.hpp"

namespace rce {

/**
 * Versioned JSON model format (see docs/model-format.md). Schema errors
 * throw ModelError naming the offending field path.
 */
TrainedModel model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const TrainedModel& model);

/** Loads a model file; I/O failures and schema errors throw ModelError. */
TrainedModel load_model(const std::string& path);
void save_model(const TrainedModel& model, const std::string& path);

}  // namespace rce

#endif  // RCE_MODEL_IO_HPP
