#include "pcmc/checkpoint.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "pcmc/errors.hpp"

namespace pcmc {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json tensor_to_json(const Tensor& t) {
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < t.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (std::size_t j = 0; j < t.cols(); ++j) row.push_back(t(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Tensor tensor_from_json(const ordered_json& rows) {
  if (!rows.is_array() || rows.empty()) throw ValidationError("checkpoint: bad tensor");
  const std::size_t r = rows.size();
  const std::size_t c = rows.at(0).size();
  Tensor t(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    if (rows.at(i).size() != c) throw ValidationError("checkpoint: ragged tensor");
    for (std::size_t j = 0; j < c; ++j) t(i, j) = rows.at(i).at(j).get<double>();
  }
  return t;
}

ordered_json encoder_to_json(const FeatureEncoder& enc) {
  ordered_json o;
  ordered_json stats = ordered_json::array();
  for (const NumericStats& s : enc.numeric_stats()) {
    stats.push_back({{"mean", s.mean}, {"std", s.stddev}});
  }
  o["numeric_stats"] = std::move(stats);
  ordered_json vocabs = ordered_json::array();
  for (const FieldVocab& v : enc.vocabs()) vocabs.push_back(v.levels);
  o["vocab"] = std::move(vocabs);
  return o;
}

FeatureEncoder encoder_from_json(const ordered_json& o, const std::vector<FieldSpec>& fields) {
  std::vector<NumericStats> stats;
  for (const auto& s : o.at("numeric_stats")) {
    stats.push_back({s.at("mean").get<double>(), s.at("std").get<double>()});
  }
  std::vector<std::vector<std::string>> vocab;
  for (const auto& v : o.at("vocab")) vocab.push_back(v.get<std::vector<std::string>>());
  return FeatureEncoder::restore(fields, std::move(stats), std::move(vocab));
}

ordered_json config_to_json(const ArchitectureConfig& c) {
  ordered_json o;
  o["hidden_layers"] = c.hidden_layers;
  o["nodes_per_layer"] = c.nodes_per_layer;
  o["activation"] = activation_name(c.activation);
  o["leaky_slope"] = c.leaky_slope;
  o["epsilon"] = c.epsilon;
  o["dropout"] = c.dropout;
  o["learning_rate"] = c.learning_rate;
  o["batch_size"] = c.batch_size;
  o["max_epochs"] = c.max_epochs;
  o["patience"] = c.patience;
  o["min_delta"] = c.min_delta;
  o["seed"] = c.seed;
  o["embedding_cap"] = c.embedding_cap;
  o["one_hot_categoricals"] = c.one_hot_categoricals;
  o["standardize_numeric"] = c.standardize_numeric;
  return o;
}

ArchitectureConfig config_from_json(const ordered_json& o) {
  ArchitectureConfig c;
  c.hidden_layers = o.at("hidden_layers").get<int>();
  c.nodes_per_layer = o.at("nodes_per_layer").get<int>();
  c.activation = activation_from_name(o.at("activation").get<std::string>());
  c.leaky_slope = o.at("leaky_slope").get<double>();
  c.epsilon = o.at("epsilon").get<double>();
  c.dropout = o.at("dropout").get<double>();
  c.learning_rate = o.at("learning_rate").get<double>();
  c.batch_size = o.at("batch_size").get<int>();
  c.max_epochs = o.at("max_epochs").get<int>();
  c.patience = o.at("patience").get<int>();
  c.min_delta = o.at("min_delta").get<double>();
  c.seed = o.at("seed").get<std::uint64_t>();
  c.embedding_cap = o.at("embedding_cap").get<std::size_t>();
  c.one_hot_categoricals = o.at("one_hot_categoricals").get<bool>();
  c.standardize_numeric = o.at("standardize_numeric").get<bool>();
  return c;
}

ordered_json read_checkpoint(const std::filesystem::path& path, const std::string& want_kind) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  ordered_json o;
  try {
    in >> o;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("checkpoint: invalid JSON in " + path.string() + ": " + e.what());
  }
  if (o.at("format_version").get<int>() != kCheckpointFormatVersion) {
    throw ValidationError("checkpoint: unsupported format version in " + path.string());
  }
  if (!want_kind.empty() && o.at("model_kind").get<std::string>() != want_kind) {
    throw ValidationError("checkpoint: expected model kind '" + want_kind + "', found '" +
                          o.at("model_kind").get<std::string>() + "'");
  }
  return o;
}

void write_checkpoint(const ordered_json& o, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << o.dump(2) << "\n";
}

}  // namespace

void save_pcmc_net(const PcmcNet& net, const std::filesystem::path& path) {
  ordered_json o;
  o["format_version"] = kCheckpointFormatVersion;
  o["model_kind"] = "pcmcnet";
  o["schema"] = ordered_json::parse(schema_to_json(net.schema()));
  o["config"] = config_to_json(net.config());
  o["individual_encoder"] = encoder_to_json(net.individual_encoder());
  o["alternative_encoder"] = encoder_to_json(net.alternative_encoder());
  ordered_json params = ordered_json::object();
  const std::vector<std::string> names = net.parameter_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    params[names[i]] = tensor_to_json(net.parameters()[i]);
  }
  o["parameters"] = std::move(params);
  write_checkpoint(o, path);
}

PcmcNet load_pcmc_net(const std::filesystem::path& path) {
  const ordered_json o = read_checkpoint(path, "pcmcnet");
  FeatureSchema schema = schema_from_json(o.at("schema").dump());
  ArchitectureConfig config = config_from_json(o.at("config"));
  PcmcNet net(schema, config);
  net.set_encoders(encoder_from_json(o.at("individual_encoder"), schema.individual_fields),
                   encoder_from_json(o.at("alternative_encoder"), schema.alternative_fields));
  std::vector<Tensor> params;
  for (const std::string& name : net.parameter_names()) {
    if (!o.at("parameters").contains(name)) {
      throw ValidationError("checkpoint: missing parameter '" + name + "'");
    }
    params.push_back(tensor_from_json(o.at("parameters").at(name)));
  }
  net.set_parameters(std::move(params));
  return net;
}

void save_mnl(const MnlModel& model, const std::filesystem::path& path) {
  ordered_json o;
  o["format_version"] = kCheckpointFormatVersion;
  o["model_kind"] = "mnl";
  o["schema"] = ordered_json::parse(schema_to_json(model.schema()));
  o["alternative_encoder"] = encoder_to_json(model.encoder());
  o["weights"] = model.weights();
  write_checkpoint(o, path);
}

MnlModel load_mnl(const std::filesystem::path& path) {
  const ordered_json o = read_checkpoint(path, "mnl");
  FeatureSchema schema = schema_from_json(o.at("schema").dump());
  FeatureEncoder enc = encoder_from_json(o.at("alternative_encoder"), schema.alternative_fields);
  std::vector<double> weights = o.at("weights").get<std::vector<double>>();
  return MnlModel(std::move(schema), std::move(enc), std::move(weights));
}

PcmcMleModel::PcmcMleModel(FeatureSchema schema, RateMatrix q,
                           std::vector<std::string> item_levels)
    : schema_(std::move(schema)), q_(std::move(q)), levels_(std::move(item_levels)) {
  if (schema_.alternative_fields.size() != 1 ||
      schema_.alternative_fields[0].kind != FieldKind::categorical) {
    throw ValidationError(
        "pcmc-mle: schema must have exactly one categorical alternative field");
  }
  if (levels_.size() != q_.n) {
    throw ValidationError("pcmc-mle: item level count does not match the universe size");
  }
  for (std::size_t i = 0; i < levels_.size(); ++i) index_[levels_[i]] = i;
}

ChoiceDistribution PcmcMleModel::predict(const Session& session) const {
  validate_session(session, schema_);
  std::vector<std::size_t> idx;
  idx.reserve(session.alternatives.size());
  for (const FeatureTuple& alt : session.alternatives) {
    const auto it = index_.find(alt.categorical.at(0));
    if (it == index_.end()) {
      throw ValidationError("pcmc-mle: unseen alternative '" + alt.categorical.at(0) +
                            "' (index-based inference cannot score it)");
    }
    idx.push_back(it->second);
  }
  return solve_stationary(restrict_to(q_, idx));
}

void save_mle(const PcmcMleModel& model, const std::filesystem::path& path) {
  ordered_json o;
  o["format_version"] = kCheckpointFormatVersion;
  o["model_kind"] = "pcmc-mle";
  o["schema"] = ordered_json::parse(schema_to_json(model.schema()));
  o["item_levels"] = model.item_levels();
  Tensor q(model.rate_matrix().n, model.rate_matrix().n,
           std::vector<double>(model.rate_matrix().rates));
  o["rates"] = tensor_to_json(q);
  write_checkpoint(o, path);
}

PcmcMleModel load_mle(const std::filesystem::path& path) {
  const ordered_json o = read_checkpoint(path, "pcmc-mle");
  FeatureSchema schema = schema_from_json(o.at("schema").dump());
  std::vector<std::string> levels = o.at("item_levels").get<std::vector<std::string>>();
  const Tensor qt = tensor_from_json(o.at("rates"));
  if (qt.rows() != qt.cols()) throw ValidationError("checkpoint: rate matrix must be square");
  RateMatrix q(qt.rows(), std::vector<double>(qt.flat().begin(), qt.flat().end()));
  return PcmcMleModel(std::move(schema), std::move(q), std::move(levels));
}

void save_ranker(const std::string& kind, const FeatureSchema& schema,
                 const std::filesystem::path& path) {
  if (kind != "uniform" && kind != "cheapest" && kind != "shortest") {
    throw ValidationError("save_ranker: unknown kind '" + kind + "'");
  }
  ordered_json o;
  o["format_version"] = kCheckpointFormatVersion;
  o["model_kind"] = kind;
  o["schema"] = ordered_json::parse(schema_to_json(schema));
  write_checkpoint(o, path);
}

std::string checkpoint_kind(const std::filesystem::path& path) {
  return read_checkpoint(path, "").at("model_kind").get<std::string>();
}

std::unique_ptr<ChoiceModel> load_any_model(const std::filesystem::path& path) {
  const std::string kind = checkpoint_kind(path);
  if (kind == "pcmcnet") {
    return std::make_unique<PcmcNetModel>(load_pcmc_net(path));
  }
  if (kind == "mnl") {
    return std::make_unique<MnlModel>(load_mnl(path));
  }
  if (kind == "pcmc-mle") {
    return std::make_unique<PcmcMleModel>(load_mle(path));
  }
  const ordered_json o = read_checkpoint(path, kind);
  FeatureSchema schema = schema_from_json(o.at("schema").dump());
  if (kind == "uniform") {
    return std::make_unique<UniformModel>(std::move(schema));
  }
  if (kind == "cheapest") {
    return std::make_unique<FieldRanker>("cheapest", std::move(schema), "price");
  }
  if (kind == "shortest") {
    return std::make_unique<FieldRanker>("shortest", std::move(schema), "trip_duration");
  }
  throw ValidationError("checkpoint: unknown model kind '" + kind + "'");
}

}  // namespace pcmc
