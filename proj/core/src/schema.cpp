#include "pcmc/schema.hpp"

#include <fstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "pcmc/errors.hpp"

namespace pcmc {

namespace {

using ordered_json = nlohmann::ordered_json;

void check_unique_names(const std::vector<FieldSpec>& fields, const std::string& side) {
  std::unordered_set<std::string> seen;
  for (const FieldSpec& f : fields) {
    if (f.name.empty()) throw ValidationError("schema: empty field name in " + side);
    if (!seen.insert(f.name).second) {
      throw ValidationError("schema: duplicate field name '" + f.name + "' in " + side);
    }
    if (f.kind == FieldKind::categorical && f.cardinality < 1) {
      throw ValidationError("schema: categorical field '" + f.name +
                            "' must have cardinality >= 1");
    }
  }
}

ordered_json fields_to_json(const std::vector<FieldSpec>& fields) {
  ordered_json arr = ordered_json::array();
  for (const FieldSpec& f : fields) {
    ordered_json o;
    o["name"] = f.name;
    if (f.kind == FieldKind::categorical) {
      o["kind"] = "categorical";
      o["cardinality"] = f.cardinality;
    } else {
      o["kind"] = "numeric";
      o["range"] = {f.range_lo, f.range_hi};
    }
    arr.push_back(std::move(o));
  }
  return arr;
}

std::vector<FieldSpec> fields_from_json(const ordered_json& arr, const std::string& side) {
  std::vector<FieldSpec> fields;
  if (!arr.is_array()) throw ValidationError("schema: " + side + " must be an array");
  for (const auto& o : arr) {
    FieldSpec f;
    f.name = o.at("name").get<std::string>();
    const std::string kind = o.at("kind").get<std::string>();
    if (kind == "categorical") {
      f.kind = FieldKind::categorical;
      f.cardinality = o.at("cardinality").get<std::size_t>();
    } else if (kind == "numeric") {
      f.kind = FieldKind::numeric;
      if (o.contains("range")) {
        f.range_lo = o["range"].at(0).get<double>();
        f.range_hi = o["range"].at(1).get<double>();
      }
    } else {
      throw ValidationError("schema: unknown field kind '" + kind + "'");
    }
    fields.push_back(std::move(f));
  }
  return fields;
}

}  // namespace

void FeatureSchema::validate() const {
  check_unique_names(individual_fields, "individual_fields");
  check_unique_names(alternative_fields, "alternative_fields");
}

std::size_t FeatureSchema::num_individual_numeric() const {
  std::size_t n = 0;
  for (const auto& f : individual_fields) n += f.kind == FieldKind::numeric;
  return n;
}
std::size_t FeatureSchema::num_individual_categorical() const {
  return individual_fields.size() - num_individual_numeric();
}
std::size_t FeatureSchema::num_alternative_numeric() const {
  std::size_t n = 0;
  for (const auto& f : alternative_fields) n += f.kind == FieldKind::numeric;
  return n;
}
std::size_t FeatureSchema::num_alternative_categorical() const {
  return alternative_fields.size() - num_alternative_numeric();
}

std::string schema_to_json(const FeatureSchema& schema) {
  ordered_json o;
  o["individual_fields"] = fields_to_json(schema.individual_fields);
  o["alternative_fields"] = fields_to_json(schema.alternative_fields);
  return o.dump(2);
}

FeatureSchema schema_from_json(const std::string& text) {
  ordered_json o;
  try {
    o = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("schema: invalid JSON: ") + e.what());
  }
  FeatureSchema s;
  try {
    s.individual_fields = fields_from_json(o.at("individual_fields"), "individual_fields");
    s.alternative_fields = fields_from_json(o.at("alternative_fields"), "alternative_fields");
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("schema: ") + e.what());
  }
  s.validate();
  return s;
}

FeatureSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schema file " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return schema_from_json(text);
}

void save_schema(const FeatureSchema& schema, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write schema file " + path.string());
  out << schema_to_json(schema) << "\n";
}

}  // namespace pcmc
