#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "hsgd/harness.hpp"

namespace hsgd {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::kInvalidConfig, key + ": " + what);
}

std::size_t to_size(const std::string& key, const std::string& v) {
  const bool digits = !v.empty() && std::all_of(v.begin(), v.end(), [](unsigned char c) {
    return std::isdigit(c);
  });
  if (!digits || v.size() > 18) bad(key, "expected a nonnegative integer, got '" + v + "'");
  return static_cast<std::size_t>(std::stoull(v));
}

double to_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used == v.size() && std::isfinite(x)) return x;
  } catch (const std::exception&) {
  }
  bad(key, "expected a real number, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T pick(const std::string& key, const std::string& v,
       std::initializer_list<std::pair<const char*, T>> options) {
  for (const auto& [name, value] : options) {
    if (v == name) return value;
  }
  std::string allowed;
  for (const auto& [name, value] : options) allowed += std::string(allowed.empty() ? "" : "|") + name;
  bad(key, "expected one of " + allowed + ", got '" + v + "'");
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "dataset.source",     "dataset.path",        "dataset.num_classes", "synthetic.n",
      "synthetic.dim",      "synthetic.classes",   "synthetic.separation", "synthetic.sigma",
      "synthetic.label_noise", "synthetic.seed",   "model.kind",          "model.hidden",
      "model.input_dim",    "model.classes",
      "algorithm",          "sampler.mode",        "sampler.unseen",      "sampler.fast_draw",
      "aggregation",        "profile.alpha",       "profile.lambda",      "profile.tau_f",
      "profile.p_s",        "profile.p_f",         "schedule.kind",       "schedule.base_lr",
      "schedule.milestones", "schedule.decay",     "train.batch_size",    "train.rounds",
      "train.epochs",       "train.weight_decay",  "train.val_fraction",  "seeds",
      "cost.fast_iter_s",   "cost.slow_iter_s",    "cost.agg_s",          "output.csv",
      "output.summary"};
  return keys;
}

}  // namespace

ConfigMap ConfigMap::parse(const std::string& text) {
  ConfigMap map;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::kParseError,
            "config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    require(!key.empty(), ErrorCode::kParseError,
            "config line " + std::to_string(line_no) + ": empty key");
    require(!map.has(key), ErrorCode::kParseError,
            "config line " + std::to_string(line_no) + ": duplicate key " + key);
    map.values_[key] = value;
  }
  return map;
}

const std::string& ConfigMap::at(const std::string& key) const {
  auto it = values_.find(key);
  require(it != values_.end(), ErrorCode::kInvalidConfig, "missing key " + key);
  return it->second;
}

std::string ConfigMap::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kSyncSgd: return "sync_sgd";
    case Algorithm::kBalancedLocal: return "balanced_local";
    case Algorithm::kUnbalancedUnbiased: return "unbalanced_unbiased";
    case Algorithm::kBiasedLocal: return "biased_local";
  }
  return "?";
}

std::string to_string(AggregationRule r) {
  switch (r) {
    case AggregationRule::kBalanced: return "balanced";
    case AggregationRule::kTauWeighted: return "tau_weighted";
    case AggregationRule::kFedNova: return "fednova";
  }
  return "?";
}

std::string to_string(SamplerMode m) {
  switch (m) {
    case SamplerMode::kSeparated: return "separated";
    case SamplerMode::kUnified: return "unified";
    case SamplerMode::kUniform: return "uniform";
  }
  return "?";
}

ExperimentConfig config_from_map(const ConfigMap& map, const std::filesystem::path& base_dir) {
  for (const auto& [k, v] : map.values()) {
    if (!known_keys().contains(k)) bad(k, "unknown key");
  }
  ExperimentConfig c;
  c.canonical_text = map.canonical();
  auto get = [&](const std::string& key) -> const std::string* {
    auto it = map.values().find(key);
    return it == map.values().end() ? nullptr : &it->second;
  };
  if (auto v = get("dataset.source")) {
    c.source = pick<DatasetSource>("dataset.source", *v,
                                   {{"synthetic", DatasetSource::kSynthetic},
                                    {"csv", DatasetSource::kCsv},
                                    {"binary", DatasetSource::kBinary}});
  }
  if (auto v = get("dataset.path")) {
    std::filesystem::path p(*v);
    c.dataset_path = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  }
  if (auto v = get("dataset.num_classes")) c.dataset_classes = to_size("dataset.num_classes", *v);
  if (auto v = get("synthetic.n")) c.synthetic.n = to_size("synthetic.n", *v);
  if (auto v = get("synthetic.dim")) c.synthetic.input_dim = to_size("synthetic.dim", *v);
  if (auto v = get("synthetic.classes")) c.synthetic.num_classes = to_size("synthetic.classes", *v);
  if (auto v = get("synthetic.separation")) c.synthetic.separation = to_real("synthetic.separation", *v);
  if (auto v = get("synthetic.sigma")) c.synthetic.sigma = to_real("synthetic.sigma", *v);
  if (auto v = get("synthetic.label_noise")) c.synthetic.label_noise = to_real("synthetic.label_noise", *v);
  if (auto v = get("synthetic.seed")) c.synthetic_seed = to_size("synthetic.seed", *v);

  if (auto v = get("model.kind")) {
    c.model.kind = pick<ModelKind>("model.kind", *v,
                                   {{"logistic_regression", ModelKind::kLogisticRegression},
                                    {"mlp2", ModelKind::kMlp2}});
  }
  c.model.hidden_dim = c.model.kind == ModelKind::kMlp2 ? 16 : 0;
  if (auto v = get("model.hidden")) c.model.hidden_dim = to_size("model.hidden", *v);
  // Zero means "take from the dataset".
  c.model.input_dim = c.source == DatasetSource::kSynthetic ? c.synthetic.input_dim : 0;
  c.model.num_classes = c.source == DatasetSource::kSynthetic ? c.synthetic.num_classes : 0;
  if (auto v = get("model.input_dim")) c.model.input_dim = to_size("model.input_dim", *v);
  if (auto v = get("model.classes")) c.model.num_classes = to_size("model.classes", *v);

  if (auto v = get("algorithm")) {
    c.algorithm = pick<Algorithm>("algorithm", *v,
                                  {{"sync_sgd", Algorithm::kSyncSgd},
                                   {"balanced_local", Algorithm::kBalancedLocal},
                                   {"unbalanced_unbiased", Algorithm::kUnbalancedUnbiased},
                                   {"biased_local", Algorithm::kBiasedLocal}});
  }
  const bool biased = c.algorithm == Algorithm::kBiasedLocal;
  c.sampler_mode = biased ? SamplerMode::kSeparated : SamplerMode::kUniform;
  c.aggregation = biased ? AggregationRule::kTauWeighted : AggregationRule::kBalanced;
  if (auto v = get("sampler.mode")) {
    c.sampler_mode = pick<SamplerMode>("sampler.mode", *v,
                                       {{"separated", SamplerMode::kSeparated},
                                        {"unified", SamplerMode::kUnified},
                                        {"uniform", SamplerMode::kUniform}});
  }
  if (auto v = get("sampler.unseen")) {
    c.sampler.unseen = pick<UnseenPolicy>("sampler.unseen", *v,
                                          {{"prioritize", UnseenPolicy::kPrioritize},
                                           {"uniform_first_round", UnseenPolicy::kUniformFirstRound}});
  }
  if (auto v = get("sampler.fast_draw")) {
    c.sampler.fast_draw = pick<FastDraw>("sampler.fast_draw", *v,
                                         {{"fresh", FastDraw::kFresh}, {"epoch", FastDraw::kEpoch}});
  }
  if (auto v = get("aggregation")) {
    c.aggregation = pick<AggregationRule>("aggregation", *v,
                                          {{"balanced", AggregationRule::kBalanced},
                                           {"tau_weighted", AggregationRule::kTauWeighted},
                                           {"fednova", AggregationRule::kFedNova}});
  }

  if (auto v = get("profile.alpha")) c.alpha = to_real("profile.alpha", *v);
  if (auto v = get("profile.lambda")) c.lambda = to_real("profile.lambda", *v);
  if (auto v = get("profile.tau_f")) c.tau_f = to_size("profile.tau_f", *v);
  if (auto v = get("profile.p_s")) c.p_s = to_size("profile.p_s", *v);
  if (auto v = get("profile.p_f")) c.p_f = to_size("profile.p_f", *v);

  if (auto v = get("schedule.kind")) {
    c.schedule.kind = pick<LrKind>("schedule.kind", *v,
                                   {{"constant", LrKind::kConstant},
                                    {"multistep", LrKind::kMultistep},
                                    {"cosine", LrKind::kCosine}});
  }
  if (auto v = get("schedule.base_lr")) c.schedule.base_lr = to_real("schedule.base_lr", *v);
  if (auto v = get("schedule.decay")) c.schedule.decay = to_real("schedule.decay", *v);
  if (auto v = get("schedule.milestones")) {
    for (const auto& item : split_list(*v)) c.schedule.milestones.push_back(to_size("schedule.milestones", item));
  }

  if (auto v = get("train.batch_size")) c.batch_size = to_size("train.batch_size", *v);
  if (auto v = get("train.rounds")) c.rounds = to_size("train.rounds", *v);
  if (auto v = get("train.epochs")) c.epochs = to_size("train.epochs", *v);
  if (auto v = get("train.weight_decay")) c.weight_decay = to_real("train.weight_decay", *v);
  if (auto v = get("train.val_fraction")) c.val_fraction = to_real("train.val_fraction", *v);
  if (auto v = get("seeds")) {
    c.seeds.clear();
    for (const auto& item : split_list(*v)) c.seeds.push_back(to_size("seeds", item));
  }

  if (auto v = get("cost.fast_iter_s")) c.cost.fast_iter_cost = to_real("cost.fast_iter_s", *v);
  c.cost.slow_iter_cost = c.alpha * c.cost.fast_iter_cost;
  if (auto v = get("cost.slow_iter_s")) c.cost.slow_iter_cost = to_real("cost.slow_iter_s", *v);
  if (auto v = get("cost.agg_s")) c.cost.agg_cost = to_real("cost.agg_s", *v);

  if (auto v = get("output.csv")) {
    std::filesystem::path p(*v);
    c.output_csv = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  }
  if (auto v = get("output.summary")) {
    std::filesystem::path p(*v);
    c.output_summary = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  }

  // Algorithm/ingredient compatibility; defaults above already comply, so
  // only explicit conflicting keys fail here.
  if (c.algorithm == Algorithm::kSyncSgd) {
    if (c.aggregation != AggregationRule::kBalanced) bad("aggregation", "sync_sgd requires balanced");
  }
  if (biased) {
    if (c.sampler_mode == SamplerMode::kUniform) {
      bad("sampler.mode", "biased_local requires separated or unified");
    }
  } else if (c.sampler_mode != SamplerMode::kUniform) {
    bad("sampler.mode", to_string(c.algorithm) + " samples uniformly");
  }
  c.validate();
  return c;
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  return config_from_map(ConfigMap::parse(text), base_dir);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIoError, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

void ExperimentConfig::validate() const {
  if (source == DatasetSource::kSynthetic) {
    require(synthetic.n > 0 && synthetic.input_dim > 0 && synthetic.num_classes >= 2,
            ErrorCode::kInvalidConfig, "synthetic: n, dim must be > 0 and classes >= 2");
  } else {
    require(!dataset_path.empty(), ErrorCode::kInvalidConfig, "dataset.path is required");
  }
  require(std::isfinite(alpha) && alpha >= 1.0, ErrorCode::kInvalidConfig, "profile.alpha must be >= 1");
  require(std::isfinite(lambda) && lambda >= 1.0, ErrorCode::kInvalidConfig, "profile.lambda must be >= 1");
  require(tau_f >= 1, ErrorCode::kInvalidConfig, "profile.tau_f must be >= 1");
  require(p_s >= 1, ErrorCode::kInvalidConfig, "profile.p_s must be >= 1");
  require(batch_size >= 1, ErrorCode::kInvalidConfig, "train.batch_size must be >= 1");
  require(rounds.has_value() != epochs.has_value(), ErrorCode::kInvalidConfig,
          "set exactly one of train.rounds and train.epochs");
  require(rounds.value_or(1) >= 1 && epochs.value_or(1) >= 1, ErrorCode::kInvalidConfig,
          "training budget must be >= 1");
  require(val_fraction >= 0.0 && val_fraction < 1.0, ErrorCode::kInvalidConfig,
          "train.val_fraction must be in [0, 1)");
  require(std::isfinite(weight_decay) && weight_decay >= 0.0, ErrorCode::kInvalidConfig,
          "train.weight_decay must be >= 0");
  require(!seeds.empty(), ErrorCode::kInvalidConfig, "seeds must list at least one seed");
  cost.validate();
  LrSchedule s = schedule;
  if (s.kind == LrKind::kCosine) s.total_rounds = std::max<std::size_t>(1, s.total_rounds);
  s.validate();
  if (model.kind == ModelKind::kMlp2) {
    require(model.hidden_dim > 0, ErrorCode::kInvalidConfig, "model.hidden must be > 0");
  }
}

std::size_t ExperimentConfig::tau_s() const {
  switch (algorithm) {
    case Algorithm::kSyncSgd: return 1;
    case Algorithm::kBalancedLocal: return tau_f;
    default: return derive_tau_s(tau_f, alpha);
  }
}

std::vector<std::size_t> ExperimentConfig::worker_taus() const {
  const std::size_t fast = algorithm == Algorithm::kSyncSgd ? 1 : tau_f;
  std::vector<std::size_t> taus(p_s, tau_s());
  taus.insert(taus.end(), p_f, fast);
  return taus;
}

std::vector<WorkerSpec> ExperimentConfig::worker_specs() const {
  const auto taus = worker_taus();
  std::vector<WorkerSpec> out;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    const WorkerClass cls = i < p_s ? WorkerClass::kSlow : WorkerClass::kFast;
    out.push_back(WorkerSpec{i, cls, taus[i], cost.iter_cost(cls), batch_size});
  }
  return out;
}

SystemProfile ExperimentConfig::sampling_profile() const {
  const bool unbalanced =
      algorithm == Algorithm::kUnbalancedUnbiased || algorithm == Algorithm::kBiasedLocal;
  return SystemProfile(unbalanced ? alpha : 1.0, p_s, p_f, lambda, tau_f, sampler_mode);
}

std::size_t ExperimentConfig::rounds_per_epoch(std::size_t n_train) const {
  std::size_t per_round = 0;
  for (auto t : worker_taus()) per_round += t * batch_size;
  return std::max<std::size_t>(1, (n_train + per_round - 1) / per_round);
}

std::size_t ExperimentConfig::total_rounds(std::size_t n_train) const {
  return rounds ? *rounds : *epochs * rounds_per_epoch(n_train);
}

}  // namespace hsgd
