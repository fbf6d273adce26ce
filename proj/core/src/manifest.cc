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

#include "manifest.h"

#include "file_util.h"
#include "latesearch/status.h"

namespace latesearch::detail {

nlohmann::json
LoadManifest(const std::filesystem::path& dir, std::string_view expected_type, int expected_version) {
    const auto path = dir / "manifest.json";
    if (!std::filesystem::exists(path)) {
        Throw(ErrorCode::kBadManifest, "missing " + path.string());
    }
    nlohmann::json m;
    try {
        m = nlohmann::json::parse(ReadFile(path));
    } catch (const nlohmann::json::exception& e) {
        Throw(ErrorCode::kBadManifest, std::string("unparsable manifest: ") + e.what());
    }
    if (!m.is_object() || !m.contains("version") || !m["version"].is_number_integer() ||
        !m.contains("type") || !m["type"].is_string() || !m.contains("files") || !m["files"].is_object()) {
        Throw(ErrorCode::kBadManifest, "manifest lacks version/type/files");
    }
    if (m["type"].get<std::string>() != expected_type) {
        Throw(ErrorCode::kBadManifest,
              "index type '" + m["type"].get<std::string>() + "', expected '" + std::string(expected_type) + "'");
    }
    if (m["version"].get<int>() != expected_version) {
        Throw(ErrorCode::kUnsupportedVersion, "manifest version " + std::to_string(m["version"].get<int>()));
    }
    return m;
}

std::string
ReadChecked(const std::filesystem::path& dir, const nlohmann::json& manifest, const std::string& name) {
    const auto& files = manifest["files"];
    if (!files.contains(name)) {
        Throw(ErrorCode::kBadManifest, "manifest does not list " + name);
    }
    const auto path = dir / name;
    if (!std::filesystem::exists(path)) {
        Throw(ErrorCode::kBadManifest, "missing index file " + name);
    }
    auto bytes = ReadFile(path);
    if (ChecksumString(bytes) != files[name].get<std::string>()) {
        Throw(ErrorCode::kChecksumMismatch, name + " does not match its manifest checksum");
    }
    return bytes;
}

void
WriteWithManifest(const std::filesystem::path& dir,
                  nlohmann::json manifest,
                  const std::vector<std::pair<std::string, std::string>>& files) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        Throw(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
    }
    auto checksums = nlohmann::json::object();
    for (const auto& [name, bytes] : files) {
        WriteFile(dir / name, bytes);
        checksums[name] = ChecksumString(bytes);
    }
    manifest["files"] = std::move(checksums);
    WriteFile(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace latesearch::detail
