#ifndef PCMC_SESSION_HPP
#define PCMC_SESSION_HPP

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "pcmc/schema.hpp"

namespace pcmc {

// Feature values of one individual or alternative, stored by kind in schema
// field order: numeric values for the numeric fields, level strings for the
// categorical fields.
struct FeatureTuple {
  std::vector<double> numeric;
  std::vector<std::string> categorical;
};

// One choice observation: who chose, what was offered, what was chosen.
struct Session {
  FeatureTuple individual;
  std::vector<FeatureTuple> alternatives;
  std::size_t chosen_index = 0;
};

using Dataset = std::vector<Session>;

// Checks tuple arity/kinds against the schema and chosen_index range.
void validate_session(const Session& session, const FeatureSchema& schema);

// JSONL: one object per line,
//   {"individual": {...}, "alternatives": [{...}, ...], "choice": k}
// with categorical values as strings and numeric values as finite doubles.
Dataset load_sessions_jsonl(const std::filesystem::path& path, const FeatureSchema& schema);
void save_sessions_jsonl(const Dataset& data, const FeatureSchema& schema,
                         const std::filesystem::path& path);

std::string session_to_json_line(const Session& session, const FeatureSchema& schema);
Session session_from_json_line(const std::string& line, const FeatureSchema& schema);

}  // namespace pcmc

#endif
