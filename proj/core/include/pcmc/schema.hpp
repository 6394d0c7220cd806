#ifndef PCMC_SCHEMA_HPP
#define PCMC_SCHEMA_HPP

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace pcmc {

enum class FieldKind { numeric, categorical };

struct FieldSpec {
  std::string name;
  FieldKind kind = FieldKind::numeric;
  std::size_t cardinality = 0;  // categorical only
  double range_lo = 0.0;        // numeric only
  double range_hi = 0.0;
};

// Declaration of the feature spaces for individuals and alternatives.
struct FeatureSchema {
  std::vector<FieldSpec> individual_fields;
  std::vector<FieldSpec> alternative_fields;

  // Field names unique within each list; categorical cardinality >= 1.
  void validate() const;

  std::size_t num_individual_numeric() const;
  std::size_t num_individual_categorical() const;
  std::size_t num_alternative_numeric() const;
  std::size_t num_alternative_categorical() const;
};

FeatureSchema load_schema(const std::filesystem::path& path);
void save_schema(const FeatureSchema& schema, const std::filesystem::path& path);

std::string schema_to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json(const std::string& text);

}  // namespace pcmc

#endif
