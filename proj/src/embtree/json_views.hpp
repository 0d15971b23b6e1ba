/*
 * Copyright 2026 The embtree Authors.
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

#pragma once

#include <string_view>

#include "embtree/analysis.hpp"
#include "embtree/tree.hpp"
#include "json.hpp"

namespace embtree {

nlohmann::json ReportJson(const ConsistencyReport& report);
nlohmann::json ColdStartJson(const EmbeddingTree& tree, const ColdStartResult& result);

// Tree structure for the tree view: no entity lists, no means.
nlohmann::json TopologyJson(const EmbeddingTree& tree);

// Parses a flat JSON object of feature name -> string or number.
FeatureAssignment ParseAssignment(std::string_view text);

}  // namespace embtree
