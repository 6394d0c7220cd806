#include "pcmc/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "pcmc/errors.hpp"

namespace pcmc {

FeatureEncoder FeatureEncoder::fit(const std::vector<FieldSpec>& fields,
                                   const std::vector<const FeatureTuple*>& tuples) {
  FeatureEncoder enc;
  enc.fields_ = fields;

  std::size_t ni = 0, ci = 0;
  for (const FieldSpec& f : fields) {
    if (f.kind == FieldKind::numeric) {
      double sum = 0.0, sumsq = 0.0;
      for (const FeatureTuple* t : tuples) sum += t->numeric.at(ni);
      const double n = std::max<std::size_t>(tuples.size(), 1);
      const double mean = sum / static_cast<double>(n);
      for (const FeatureTuple* t : tuples) {
        const double d = t->numeric.at(ni) - mean;
        sumsq += d * d;
      }
      double sd = std::sqrt(sumsq / static_cast<double>(n));
      if (!(sd > 0.0)) sd = 1.0;
      enc.stats_.push_back({mean, sd});
      ++ni;
    } else {
      std::set<std::string> levels;
      for (const FeatureTuple* t : tuples) levels.insert(t->categorical.at(ci));
      if (levels.size() > f.cardinality) {
        throw ValidationError("encoder: field '" + f.name + "' has " +
                              std::to_string(levels.size()) +
                              " distinct levels but declared cardinality " +
                              std::to_string(f.cardinality));
      }
      FieldVocab v;
      v.levels.assign(levels.begin(), levels.end());
      for (std::size_t i = 0; i < v.levels.size(); ++i) v.index[v.levels[i]] = i;
      enc.vocabs_.push_back(std::move(v));
      enc.cat_cardinality_.push_back(f.cardinality);
      ++ci;
    }
  }
  return enc;
}

FeatureEncoder FeatureEncoder::restore(std::vector<FieldSpec> fields,
                                       std::vector<NumericStats> stats,
                                       std::vector<std::vector<std::string>> vocab_levels) {
  FeatureEncoder enc;
  enc.fields_ = std::move(fields);
  enc.stats_ = std::move(stats);
  for (const FieldSpec& f : enc.fields_) {
    if (f.kind == FieldKind::categorical) enc.cat_cardinality_.push_back(f.cardinality);
  }
  for (auto& levels : vocab_levels) {
    FieldVocab v;
    v.levels = std::move(levels);
    for (std::size_t i = 0; i < v.levels.size(); ++i) v.index[v.levels[i]] = i;
    enc.vocabs_.push_back(std::move(v));
  }
  std::size_t num_numeric = 0, num_cat = 0;
  for (const FieldSpec& f : enc.fields_) {
    (f.kind == FieldKind::numeric ? num_numeric : num_cat) += 1;
  }
  if (enc.stats_.size() != num_numeric || enc.vocabs_.size() != num_cat) {
    throw ValidationError("encoder: restore data does not match the schema");
  }
  return enc;
}

std::vector<double> FeatureEncoder::standardized(const FeatureTuple& t) const {
  std::vector<double> out;
  out.reserve(stats_.size());
  if (t.numeric.size() != stats_.size()) {
    throw ValidationError("encoder: tuple has wrong numeric arity");
  }
  for (std::size_t i = 0; i < stats_.size(); ++i) {
    out.push_back((t.numeric[i] - stats_[i].mean) / stats_[i].stddev);
  }
  return out;
}

std::vector<std::size_t> FeatureEncoder::categorical_rows(const FeatureTuple& t) const {
  std::vector<std::size_t> out;
  out.reserve(vocabs_.size());
  if (t.categorical.size() != vocabs_.size()) {
    throw ValidationError("encoder: tuple has wrong categorical arity");
  }
  for (std::size_t i = 0; i < vocabs_.size(); ++i) {
    out.push_back(vocabs_[i].lookup(t.categorical[i], cat_cardinality_[i]));
  }
  return out;
}

std::size_t FeatureEncoder::cardinality(std::size_t k) const { return cat_cardinality_.at(k); }

}  // namespace pcmc
