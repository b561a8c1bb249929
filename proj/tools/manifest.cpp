#include "manifest.hpp"

#include <array>
#include <fstream>
#include <memory>

#include <openssl/evp.h>

#include "hwmor/errors.hpp"

namespace hwmor::cli {

namespace {

using DigestContext = std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)>;

DigestContext new_context() {
  DigestContext ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    fail(ErrorCode::IoError, "cannot initialise SHA-256");
  return ctx;
}

std::string finish(EVP_MD_CTX* ctx) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx, digest.data(), &len) != 1) fail(ErrorCode::IoError, "SHA-256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

}  // namespace

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  auto ctx = new_context();
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return finish(ctx.get());
}

std::string sha256_text(const std::string& text) {
  auto ctx = new_context();
  EVP_DigestUpdate(ctx.get(), text.data(), text.size());
  return finish(ctx.get());
}

void RunManifest::add_input(const std::filesystem::path& path) { inputs[path.string()] = sha256_file(path); }

void RunManifest::add_artifact(const std::filesystem::path& path) { artifacts[path.string()] = sha256_file(path); }

nlohmann::json RunManifest::to_json() const {
  return {{"tool_version", tool_version}, {"command", command}, {"config_hash", config_hash}, {"seed", seed},
          {"inputs", inputs},             {"artifacts", artifacts}, {"timings", timings}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  m.tool_version = j.at("tool_version").get<std::string>();
  m.command = j.at("command").get<std::string>();
  m.config_hash = j.at("config_hash").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
  m.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
  m.timings = j.at("timings").get<std::map<std::string, double>>();
  return m;
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
  for (const auto& [file, hash] : manifest.artifacts)
    if (!std::filesystem::exists(file)) fail(ErrorCode::IoError, "manifest references missing artifact " + file);
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << manifest.to_json().dump(2) << '\n';
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return RunManifest::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, path.string() + ": malformed manifest: " + e.what());
  }
}

std::vector<std::string> stale_entries(const RunManifest& manifest) {
  std::vector<std::string> stale;
  for (const auto* group : {&manifest.inputs, &manifest.artifacts})
    for (const auto& [file, hash] : *group)
      if (!std::filesystem::exists(file) || sha256_file(file) != hash) stale.push_back(file);
  return stale;
}

std::filesystem::path manifest_path_for(const std::filesystem::path& artifact) {
  return std::filesystem::path(artifact.string() + ".manifest.json");
}

}  // namespace hwmor::cli
