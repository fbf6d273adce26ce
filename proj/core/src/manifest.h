// Copyright 2026-present the latesearch project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Manifest helpers shared by the on-disk index formats.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace latesearch::detail {

/// Reads and parses dir/manifest.json. Missing or unparsable manifests throw
/// BadManifest; a version other than `expected_version` throws
/// UnsupportedVersion; a type other than `expected_type` throws BadManifest.
nlohmann::json
LoadManifest(const std::filesystem::path& dir, std::string_view expected_type, int expected_version);

/// Reads dir/name and verifies it against manifest["files"][name]. A missing
/// file throws BadManifest, a mismatch ChecksumMismatch.
std::string
ReadChecked(const std::filesystem::path& dir, const nlohmann::json& manifest, const std::string& name);

/// Writes the named payloads and a manifest listing their checksums.
void
WriteWithManifest(const std::filesystem::path& dir,
                  nlohmann::json manifest,
                  const std::vector<std::pair<std::string, std::string>>& files);

}  // namespace latesearch::detail
