#ifndef PCMC_CHECKPOINT_HPP
#define PCMC_CHECKPOINT_HPP

#include <filesystem>
#include <memory>
#include <string>
#include <unordered_map>

#include "pcmc/baselines.hpp"
#include "pcmc/mle.hpp"
#include "pcmc/model.hpp"
#include "pcmc/pcmc_net.hpp"

namespace pcmc {

inline constexpr int kCheckpointFormatVersion = 1;

// PCMC-Net wrapped in the ChoiceModel surface.
class PcmcNetModel : public ChoiceModel {
 public:
  explicit PcmcNetModel(PcmcNet net) : net_(std::move(net)) {}
  std::string kind() const override { return "pcmcnet"; }
  const FeatureSchema& schema() const override { return net_.schema(); }
  ChoiceDistribution predict(const Session& session) const override {
    return net_.forward(session);
  }
  const PcmcNet& net() const { return net_; }
  PcmcNet& net() { return net_; }

 private:
  PcmcNet net_;
};

// Direct-MLE PCMC over a finite universe keyed by a single categorical
// alternative field; unseen levels are an error by design.
class PcmcMleModel : public ChoiceModel {
 public:
  PcmcMleModel(FeatureSchema schema, RateMatrix q, std::vector<std::string> item_levels);

  std::string kind() const override { return "pcmc-mle"; }
  const FeatureSchema& schema() const override { return schema_; }
  ChoiceDistribution predict(const Session& session) const override;

  const RateMatrix& rate_matrix() const { return q_; }
  const std::vector<std::string>& item_levels() const { return levels_; }

 private:
  FeatureSchema schema_;
  RateMatrix q_;
  std::vector<std::string> levels_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Single-document versioned JSON checkpoints, one per model kind.
void save_pcmc_net(const PcmcNet& net, const std::filesystem::path& path);
PcmcNet load_pcmc_net(const std::filesystem::path& path);

void save_mnl(const MnlModel& model, const std::filesystem::path& path);
MnlModel load_mnl(const std::filesystem::path& path);

void save_mle(const PcmcMleModel& model, const std::filesystem::path& path);
PcmcMleModel load_mle(const std::filesystem::path& path);

// uniform / cheapest / shortest
void save_ranker(const std::string& kind, const FeatureSchema& schema,
                 const std::filesystem::path& path);

std::string checkpoint_kind(const std::filesystem::path& path);

// Loads whatever the checkpoint holds behind the common surface.
std::unique_ptr<ChoiceModel> load_any_model(const std::filesystem::path& path);

}  // namespace pcmc

#endif
