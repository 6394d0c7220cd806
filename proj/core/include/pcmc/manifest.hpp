#ifndef PCMC_MANIFEST_HPP
#define PCMC_MANIFEST_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace pcmc {

// FNV-1a over a file's bytes, as a hex string.
std::string file_digest(const std::filesystem::path& path);
std::string text_digest(const std::string& text);

// Every CLI command leaves a manifest next to its outputs: the command, the
// fully resolved configuration, the seed, and digests of the input files.
// Re-running the command from the manifest reproduces the outputs.
struct Manifest {
  std::string command;
  std::string resolved_config_json;  // serialized JSON object
  std::uint64_t seed = 0;
  std::map<std::string, std::string> input_digests;

  std::string config_hash() const { return text_digest(resolved_config_json); }
  void write(const std::filesystem::path& path) const;
  static Manifest read(const std::filesystem::path& path);
};

}  // namespace pcmc

#endif
