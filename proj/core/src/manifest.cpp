#include "pcmc/manifest.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pcmc/errors.hpp"

namespace pcmc {

namespace {

std::string fnv1a_hex(const char* data, std::size_t len) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001B3ull;
  }
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

}  // namespace

std::string text_digest(const std::string& text) { return fnv1a_hex(text.data(), text.size()); }

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for digest");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return text_digest(bytes);
}

void Manifest::write(const std::filesystem::path& path) const {
  nlohmann::ordered_json o;
  o["command"] = command;
  o["seed"] = seed;
  o["config"] = nlohmann::ordered_json::parse(resolved_config_json);
  o["config_hash"] = config_hash();
  nlohmann::ordered_json digests = nlohmann::ordered_json::object();
  for (const auto& [name, digest] : input_digests) digests[name] = digest;
  o["input_digests"] = std::move(digests);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << o.dump(2) << "\n";
}

Manifest Manifest::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  nlohmann::ordered_json o;
  try {
    in >> o;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("manifest: invalid JSON: " + std::string(e.what()));
  }
  Manifest m;
  m.command = o.at("command").get<std::string>();
  m.seed = o.at("seed").get<std::uint64_t>();
  m.resolved_config_json = o.at("config").dump();
  if (o.contains("input_digests")) {
    for (const auto& [name, digest] : o.at("input_digests").items()) {
      m.input_digests[name] = digest.get<std::string>();
    }
  }
  return m;
}

}  // namespace pcmc
