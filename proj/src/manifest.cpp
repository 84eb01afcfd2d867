// Copyright 2026 The burstpar Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "burstpar/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <memory>

#include <openssl/evp.h>

#include "burstpar/error.hpp"
#include "json_io.hpp"

namespace burstpar {

using nlohmann::json;

const char* tool_version() { return BURSTPAR_VERSION; }

namespace {

using MdCtx = std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)>;

MdCtx new_sha256() {
  MdCtx ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::kIo, "cannot initialise SHA-256");
  }
  return ctx;
}

std::string finish(EVP_MD_CTX* ctx) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx, md, &len) != 1) throw Error(ErrorKind::kIo, "SHA-256 failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  MdCtx ctx = new_sha256();
  EVP_DigestUpdate(ctx.get(), data.data(), data.size());
  return finish(ctx.get());
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  MdCtx ctx = new_sha256();
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  if (in.bad()) throw Error(ErrorKind::kIo, "failed reading " + path.string());
  return finish(ctx.get());
}

ManifestFile hashed_file(const std::string& role, const std::filesystem::path& path) {
  return {role, path.string(), sha256_file(path)};
}

namespace {

json files_json(const std::vector<ManifestFile>& files) {
  json out = json::array();
  for (const ManifestFile& f : files) {
    out.push_back({{"role", f.role}, {"path", f.path}, {"sha256", f.sha256}});
  }
  return out;
}

std::vector<ManifestFile> files_from(const json& doc, const char* key) {
  std::vector<ManifestFile> out;
  json arr = detail::field<json>(doc, key, "manifest");
  if (!arr.is_array()) throw Error(ErrorKind::kParse, std::string("manifest: '") + key + "' must be an array");
  for (const json& f : arr) {
    out.push_back({detail::field<std::string>(f, "role", "manifest file"),
                   detail::field<std::string>(f, "path", "manifest file"),
                   detail::field<std::string>(f, "sha256", "manifest file")});
  }
  return out;
}

}  // namespace

json manifest_to_json(const RunManifest& m) {
  return {{"command", m.command},
          {"args", m.args},
          {"inputs", files_json(m.inputs)},
          {"outputs", files_json(m.outputs)},
          {"params", m.params},
          {"tool_version", m.tool_version},
          {"wall_time_s", m.wall_time_s}};
}

RunManifest manifest_from_json(const json& doc) {
  RunManifest m;
  m.command = detail::field<std::string>(doc, "command", "manifest");
  m.args = detail::field<std::vector<std::string>>(doc, "args", "manifest");
  m.inputs = files_from(doc, "inputs");
  m.outputs = files_from(doc, "outputs");
  m.params = detail::field<json>(doc, "params", "manifest");
  m.tool_version = detail::field<std::string>(doc, "tool_version", "manifest");
  m.wall_time_s = detail::field<double>(doc, "wall_time_s", "manifest");
  return m;
}

void save_manifest(const RunManifest& m, const std::filesystem::path& path) {
  detail::write_text_file(path, manifest_to_json(m).dump(2) + "\n");
}

RunManifest load_manifest(const std::filesystem::path& path) {
  return manifest_from_json(detail::read_json_file(path, "manifest"));
}

std::filesystem::path manifest_path_for(const std::filesystem::path& out) {
  return std::filesystem::path(out.string() + ".manifest.json");
}

std::vector<std::string> verify_files(const std::vector<ManifestFile>& files) {
  std::vector<std::string> bad;
  for (const ManifestFile& f : files) {
    std::string now;
    try {
      now = sha256_file(f.path);
    } catch (const Error&) {
      bad.push_back(f.role + " " + f.path + ": missing");
      continue;
    }
    if (now != f.sha256) bad.push_back(f.role + " " + f.path + ": hash mismatch");
  }
  return bad;
}

}  // namespace burstpar
