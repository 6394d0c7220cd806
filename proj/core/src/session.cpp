#include "pcmc/session.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "pcmc/errors.hpp"

namespace pcmc {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json tuple_to_json(const FeatureTuple& t, const std::vector<FieldSpec>& fields) {
  ordered_json o = ordered_json::object();
  std::size_t ni = 0, ci = 0;
  for (const FieldSpec& f : fields) {
    if (f.kind == FieldKind::numeric) {
      o[f.name] = t.numeric.at(ni++);
    } else {
      o[f.name] = t.categorical.at(ci++);
    }
  }
  return o;
}

FeatureTuple tuple_from_json(const ordered_json& o, const std::vector<FieldSpec>& fields,
                             const std::string& what) {
  if (!o.is_object()) throw ValidationError("session: " + what + " must be an object");
  FeatureTuple t;
  for (const FieldSpec& f : fields) {
    if (!o.contains(f.name)) {
      throw ValidationError("session: " + what + " is missing field '" + f.name + "'");
    }
    const auto& v = o.at(f.name);
    if (f.kind == FieldKind::numeric) {
      if (!v.is_number()) {
        throw ValidationError("session: field '" + f.name + "' must be numeric");
      }
      const double x = v.get<double>();
      if (!std::isfinite(x)) {
        throw ValidationError("session: field '" + f.name + "' is not finite");
      }
      t.numeric.push_back(x);
    } else {
      if (!v.is_string()) {
        throw ValidationError("session: field '" + f.name + "' must be a string level");
      }
      t.categorical.push_back(v.get<std::string>());
    }
  }
  return t;
}

void validate_tuple(const FeatureTuple& t, const std::vector<FieldSpec>& fields,
                    const std::string& what) {
  std::size_t need_num = 0, need_cat = 0;
  for (const FieldSpec& f : fields) {
    (f.kind == FieldKind::numeric ? need_num : need_cat) += 1;
  }
  if (t.numeric.size() != need_num || t.categorical.size() != need_cat) {
    throw ValidationError("session: " + what + " does not conform to the schema (" +
                          std::to_string(t.numeric.size()) + " numeric, " +
                          std::to_string(t.categorical.size()) + " categorical)");
  }
  for (double x : t.numeric) {
    if (!std::isfinite(x)) throw ValidationError("session: non-finite numeric in " + what);
  }
}

}  // namespace

void validate_session(const Session& session, const FeatureSchema& schema) {
  if (session.alternatives.empty()) {
    throw ValidationError("session: empty choice set");
  }
  if (session.chosen_index >= session.alternatives.size()) {
    throw ValidationError("session: chosen index " + std::to_string(session.chosen_index) +
                          " out of range for " + std::to_string(session.alternatives.size()) +
                          " alternatives");
  }
  validate_tuple(session.individual, schema.individual_fields, "individual");
  for (const FeatureTuple& alt : session.alternatives) {
    validate_tuple(alt, schema.alternative_fields, "alternative");
  }
}

std::string session_to_json_line(const Session& session, const FeatureSchema& schema) {
  ordered_json o;
  o["individual"] = tuple_to_json(session.individual, schema.individual_fields);
  ordered_json alts = ordered_json::array();
  for (const FeatureTuple& a : session.alternatives) {
    alts.push_back(tuple_to_json(a, schema.alternative_fields));
  }
  o["alternatives"] = std::move(alts);
  o["choice"] = session.chosen_index;
  return o.dump();
}

Session session_from_json_line(const std::string& line, const FeatureSchema& schema) {
  ordered_json o;
  try {
    o = ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("session: invalid JSON: ") + e.what());
  }
  Session s;
  s.individual = tuple_from_json(o.at("individual"), schema.individual_fields, "individual");
  if (!o.contains("alternatives") || !o["alternatives"].is_array()) {
    throw ValidationError("session: missing alternatives array");
  }
  for (const auto& a : o["alternatives"]) {
    s.alternatives.push_back(tuple_from_json(a, schema.alternative_fields, "alternative"));
  }
  if (!o.contains("choice") || !o["choice"].is_number_integer()) {
    throw ValidationError("session: missing integer choice");
  }
  const long long k = o["choice"].get<long long>();
  if (k < 0) throw ValidationError("session: negative choice index");
  s.chosen_index = static_cast<std::size_t>(k);
  validate_session(s, schema);
  return s;
}

Dataset load_sessions_jsonl(const std::filesystem::path& path, const FeatureSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open sessions file " + path.string());
  Dataset data;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      data.push_back(session_from_json_line(line, schema));
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return data;
}

void save_sessions_jsonl(const Dataset& data, const FeatureSchema& schema,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write sessions file " + path.string());
  for (const Session& s : data) {
    out << session_to_json_line(s, schema) << "\n";
  }
}

}  // namespace pcmc
