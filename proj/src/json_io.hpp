// Copyright 2026 The burstpar Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "burstpar/error.hpp"

namespace burstpar::detail {

template <typename T>
T field(const nlohmann::json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw Error(ErrorKind::kParse,
                where + ": missing field '" + std::string(key) + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, where + ": field '" + std::string(key) +
                                       "' has the wrong type (" + e.what() +
                                       ")");
  }
}

inline nlohmann::json read_json_file(const std::filesystem::path& path,
                                     const std::string& what) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + what + " file " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::kIo, "failed writing " + path.string());
}

}  // namespace burstpar::detail
