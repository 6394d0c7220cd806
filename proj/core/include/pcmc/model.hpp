#ifndef PCMC_MODEL_HPP
#define PCMC_MODEL_HPP

#include <memory>
#include <string>
#include <vector>

#include "pcmc/choice.hpp"
#include "pcmc/schema.hpp"
#include "pcmc/session.hpp"

namespace pcmc {

// Common surface for everything the evaluation harness can score:
// probabilistic models expose a full choice distribution, rankers only
// scores (higher is better).
class ChoiceModel {
 public:
  virtual ~ChoiceModel() = default;

  virtual std::string kind() const = 0;
  virtual bool probabilistic() const { return true; }
  virtual const FeatureSchema& schema() const = 0;

  virtual ChoiceDistribution predict(const Session& session) const = 0;

  // Ranking scores, descending-better. Defaults to the probabilities.
  virtual std::vector<double> scores(const Session& session) const {
    return predict(session).probs;
  }
};

}  // namespace pcmc

#endif
