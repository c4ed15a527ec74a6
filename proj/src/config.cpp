#include "stcl/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "json.hpp"

#include "stcl/error.hpp"

namespace stcl {
namespace {

using json = nlohmann::json;

template <typename V>
V as(const json& value, const std::string& key) {
  try {
    return value.get<V>();
  } catch (const json::exception&) {
    throw ValidationError("config: key '" + key + "' has the wrong type (" + value.dump() + ")");
  }
}

std::size_t as_count(const json& value, const std::string& key) {
  if (!value.is_number_unsigned()) {
    throw ValidationError("config: key '" + key + "' must be a non-negative integer (" + value.dump() + ")");
  }
  return value.get<std::size_t>();
}

std::uint64_t as_seed(const json& value, const std::string& key) {
  if (!value.is_number_unsigned()) {
    throw ValidationError("config: key '" + key + "' must be a non-negative integer (" + value.dump() + ")");
  }
  return value.get<std::uint64_t>();
}

using Setter = std::function<void(RunConfig&, const json&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"model_seed", [](RunConfig& c, const json& v, const std::string& k) { c.model.seed = as_seed(v, k); }},
      {"train_seed", [](RunConfig& c, const json& v, const std::string& k) { c.train.seed = as_seed(v, k); }},
      {"corpus_seed", [](RunConfig& c, const json& v, const std::string& k) { c.corpus_seed = as_seed(v, k); }},
      {"payload_seed", [](RunConfig& c, const json& v, const std::string& k) { c.payload_seed = as_seed(v, k); }},
      {"detector_seed", [](RunConfig& c, const json& v, const std::string& k) { c.detector.seed = as_seed(v, k); }},
      {"image_height", [](RunConfig& c, const json& v, const std::string& k) { c.model.image_height = as_count(v, k); }},
      {"image_width", [](RunConfig& c, const json& v, const std::string& k) { c.model.image_width = as_count(v, k); }},
      {"payload_depth", [](RunConfig& c, const json& v, const std::string& k) { c.model.payload_depth = as_count(v, k); }},
      {"encoder_layers", [](RunConfig& c, const json& v, const std::string& k) { c.model.encoder_layers = as_count(v, k); }},
      {"decoder_layers", [](RunConfig& c, const json& v, const std::string& k) { c.model.decoder_layers = as_count(v, k); }},
      {"hidden_channels", [](RunConfig& c, const json& v, const std::string& k) { c.model.hidden_channels = as_count(v, k); }},
      {"batch_size", [](RunConfig& c, const json& v, const std::string& k) { c.train.batch_size = as_count(v, k); }},
      {"learning_rate", [](RunConfig& c, const json& v, const std::string& k) { c.train.adam.lr = as<double>(v, k); }},
      {"beta1", [](RunConfig& c, const json& v, const std::string& k) { c.train.adam.beta1 = as<double>(v, k); }},
      {"beta2", [](RunConfig& c, const json& v, const std::string& k) { c.train.adam.beta2 = as<double>(v, k); }},
      {"adam_eps", [](RunConfig& c, const json& v, const std::string& k) { c.train.adam.eps = as<double>(v, k); }},
      {"w_ssim", [](RunConfig& c, const json& v, const std::string& k) { c.train.weights.w_ssim = as<double>(v, k); }},
      {"w_msssim", [](RunConfig& c, const json& v, const std::string& k) { c.train.weights.w_msssim = as<double>(v, k); }},
      {"w_rmse", [](RunConfig& c, const json& v, const std::string& k) { c.train.weights.w_rmse = as<double>(v, k); }},
      {"w_encode", [](RunConfig& c, const json& v, const std::string& k) { c.train.weights.w_encode = as<double>(v, k); }},
      {"w_decode", [](RunConfig& c, const json& v, const std::string& k) { c.train.weights.w_decode = as<double>(v, k); }},
      {"alpha1", [](RunConfig& c, const json& v, const std::string& k) { c.thresholds.alpha1 = as<double>(v, k); }},
      {"alpha2", [](RunConfig& c, const json& v, const std::string& k) { c.thresholds.alpha2 = as<double>(v, k); }},
      {"mu1", [](RunConfig& c, const json& v, const std::string& k) { c.thresholds.mu1 = as<double>(v, k); }},
      {"mu2", [](RunConfig& c, const json& v, const std::string& k) { c.thresholds.mu2 = as<double>(v, k); }},
      {"teacher_budgets",
       [](RunConfig& c, const json& v, const std::string& k) {
         if (!v.is_array()) throw ValidationError("config: key '" + k + "' must be an array of integers");
         c.teachers.epochs.clear();
         for (const auto& e : v) c.teachers.epochs.push_back(as_count(e, k));
       }},
      {"convergence_budget", [](RunConfig& c, const json& v, const std::string& k) { c.teachers.convergence = as_count(v, k); }},
      {"smoothing_window", [](RunConfig& c, const json& v, const std::string& k) { c.knee.smoothing_window = as_count(v, k); }},
      {"sensitivity", [](RunConfig& c, const json& v, const std::string& k) { c.knee.sensitivity = as<double>(v, k); }},
      {"min_epochs", [](RunConfig& c, const json& v, const std::string& k) { c.knee.min_epochs = as_count(v, k); }},
      {"stage_cap", [](RunConfig& c, const json& v, const std::string& k) { c.stage_cap = as_count(v, k); }},
      {"total_budget", [](RunConfig& c, const json& v, const std::string& k) { c.total_budget = as_count(v, k); }},
      {"patience", [](RunConfig& c, const json& v, const std::string& k) { c.patience = as_count(v, k); }},
      {"min_delta", [](RunConfig& c, const json& v, const std::string& k) { c.min_delta = as<double>(v, k); }},
      {"detector_blocks", [](RunConfig& c, const json& v, const std::string& k) { c.detector.conv_blocks = as_count(v, k); }},
      {"detector_channels", [](RunConfig& c, const json& v, const std::string& k) { c.detector.channels = as_count(v, k); }},
      {"detector_epochs", [](RunConfig& c, const json& v, const std::string& k) { c.detector.epochs = as_count(v, k); }},
      {"corpus", [](RunConfig& c, const json& v, const std::string& k) { c.corpus = as<std::string>(v, k); }},
      {"corpus_size", [](RunConfig& c, const json& v, const std::string& k) { c.corpus_size = as_count(v, k); }},
  };
  return table;
}

}  // namespace

void RunConfig::set_seed(std::uint64_t seed) {
  model.seed = seed;
  train.seed = seed;
  corpus_seed = seed;
  payload_seed = seed;
  detector.seed = seed;
}

void RunConfig::validate() const {
  model.validate();
  train.validate();
  thresholds.validate();
  teachers.validate();
  knee.validate();
  detector.validate();
  plan().validate();
  if (corpus_size < 10) throw ValidationError("config: corpus_size must be >= 10");
}

CurriculumPlan RunConfig::plan() const {
  auto p = CurriculumPlan::standard(knee, stage_cap, patience, min_delta);
  p.total_budget = total_budget;
  return p;
}

RunConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("config: top level must be a JSON object");
  RunConfig c;
  if (doc.contains("seed")) c.set_seed(as_seed(doc["seed"], "seed"));
  for (const auto& [key, value] : doc.items()) {
    if (key == "seed") continue;
    const auto it = setters().find(key);
    if (it == setters().end()) throw ValidationError("config: unknown key '" + key + "'");
    it->second(c, value, key);
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open config " + path.string());
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_config(buf.str());
}

std::string config_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["model_seed"] = c.model.seed;
  j["train_seed"] = c.train.seed;
  j["corpus_seed"] = c.corpus_seed;
  j["payload_seed"] = c.payload_seed;
  j["detector_seed"] = c.detector.seed;
  j["image_height"] = c.model.image_height;
  j["image_width"] = c.model.image_width;
  j["payload_depth"] = c.model.payload_depth;
  j["encoder_layers"] = c.model.encoder_layers;
  j["decoder_layers"] = c.model.decoder_layers;
  j["hidden_channels"] = c.model.hidden_channels;
  j["batch_size"] = c.train.batch_size;
  j["learning_rate"] = c.train.adam.lr;
  j["beta1"] = c.train.adam.beta1;
  j["beta2"] = c.train.adam.beta2;
  j["adam_eps"] = c.train.adam.eps;
  j["w_ssim"] = c.train.weights.w_ssim;
  j["w_msssim"] = c.train.weights.w_msssim;
  j["w_rmse"] = c.train.weights.w_rmse;
  j["w_encode"] = c.train.weights.w_encode;
  j["w_decode"] = c.train.weights.w_decode;
  j["alpha1"] = c.thresholds.alpha1;
  j["alpha2"] = c.thresholds.alpha2;
  j["mu1"] = c.thresholds.mu1;
  j["mu2"] = c.thresholds.mu2;
  j["teacher_budgets"] = c.teachers.epochs;
  j["convergence_budget"] = c.teachers.convergence;
  j["smoothing_window"] = c.knee.smoothing_window;
  j["sensitivity"] = c.knee.sensitivity;
  j["min_epochs"] = c.knee.min_epochs;
  j["stage_cap"] = c.stage_cap;
  j["total_budget"] = c.total_budget;
  j["patience"] = c.patience;
  j["min_delta"] = c.min_delta;
  j["detector_blocks"] = c.detector.conv_blocks;
  j["detector_channels"] = c.detector.channels;
  j["detector_epochs"] = c.detector.epochs;
  j["corpus"] = c.corpus;
  j["corpus_size"] = c.corpus_size;
  return j.dump(2) + "\n";
}

}  // namespace stcl
