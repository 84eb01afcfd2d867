// Copyright 2026 The burstpar Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace burstpar {

const char* tool_version();

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);
/// Throws kIo when the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);

struct ManifestFile {
  std::string role;  // e.g. "graph", "plan", "trace"
  std::string path;
  std::string sha256;
};

ManifestFile hashed_file(const std::string& role, const std::filesystem::path& path);

/// Written next to every command's primary output as <out>.manifest.json.
/// Wall time lives only here so outputs stay byte-identical across runs.
struct RunManifest {
  std::string command;
  std::vector<std::string> args;  // command line after the program name
  std::vector<ManifestFile> inputs;
  std::vector<ManifestFile> outputs;
  nlohmann::json params = nlohmann::json::object();
  std::string tool_version;
  double wall_time_s = 0.0;
};

nlohmann::json manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& doc);
void save_manifest(const RunManifest& m, const std::filesystem::path& path);
RunManifest load_manifest(const std::filesystem::path& path);

std::filesystem::path manifest_path_for(const std::filesystem::path& out);

/// Human-readable description of every file whose content no longer matches
/// its recorded hash; empty when all match.
std::vector<std::string> verify_files(const std::vector<ManifestFile>& files);

}  // namespace burstpar
