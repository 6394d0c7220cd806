#ifndef PCMC_ENCODER_HPP
#define PCMC_ENCODER_HPP

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "pcmc/schema.hpp"
#include "pcmc/session.hpp"

namespace pcmc {

struct NumericStats {
  double mean = 0.0;
  double stddev = 1.0;  // constant fields keep 1.0 so standardization is a shift
};

// Level-to-row mapping for one categorical field. Rows run over the levels
// seen at fit time (sorted for determinism); the reserved out-of-vocabulary
// row sits at index `cardinality`, so embedding tables hold cardinality + 1
// rows regardless of how many levels the data actually contained.
struct FieldVocab {
  std::vector<std::string> levels;
  std::unordered_map<std::string, std::size_t> index;

  std::size_t lookup(const std::string& level, std::size_t oov_row) const {
    const auto it = index.find(level);
    return it == index.end() ? oov_row : it->second;
  }
};

// Fitted preprocessing for one side (individual or alternative) of the
// schema: standardization statistics per numeric field, vocabulary per
// categorical field.
class FeatureEncoder {
 public:
  FeatureEncoder() = default;

  static FeatureEncoder fit(const std::vector<FieldSpec>& fields,
                            const std::vector<const FeatureTuple*>& tuples);

  const std::vector<FieldSpec>& fields() const { return fields_; }
  const std::vector<NumericStats>& numeric_stats() const { return stats_; }
  const std::vector<FieldVocab>& vocabs() const { return vocabs_; }

  // Standardized numeric values, in schema order of numeric fields.
  std::vector<double> standardized(const FeatureTuple& t) const;
  // Vocabulary row per categorical field; unseen levels land on the OOV row.
  std::vector<std::size_t> categorical_rows(const FeatureTuple& t) const;

  // Declared cardinality of categorical field k (row count is this + 1).
  std::size_t cardinality(std::size_t k) const;

  // Rebuild from checkpoint data.
  static FeatureEncoder restore(std::vector<FieldSpec> fields, std::vector<NumericStats> stats,
                                std::vector<std::vector<std::string>> vocab_levels);

 private:
  std::vector<FieldSpec> fields_;
  std::vector<NumericStats> stats_;    // one per numeric field, schema order
  std::vector<FieldVocab> vocabs_;     // one per categorical field, schema order
  std::vector<std::size_t> cat_cardinality_;
};

}  // namespace pcmc

#endif
