#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hsgd/aggregation.hpp"
#include "hsgd/data.hpp"
#include "hsgd/models.hpp"
#include "hsgd/simclock.hpp"
#include "hsgd/workers.hpp"

namespace hsgd {

enum class Algorithm { kSyncSgd, kBalancedLocal, kUnbalancedUnbiased, kBiasedLocal };

enum class DatasetSource { kSynthetic, kCsv, kBinary };

/// Flat `key = value` configuration with dotted keys. `#` starts a comment.
class ConfigMap {
 public:
  static ConfigMap parse(const std::string& text);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.contains(key); }
  const std::string& at(const std::string& key) const;
  const std::map<std::string, std::string>& values() const { return values_; }

  /// Sorted `key = value` lines; stable input for config_hash.
  std::string canonical() const;

 private:
  std::map<std::string, std::string> values_;
};

struct ExperimentConfig {
  DatasetSource source = DatasetSource::kSynthetic;
  std::filesystem::path dataset_path;
  std::optional<std::size_t> dataset_classes;
  SyntheticSpec synthetic;
  std::uint64_t synthetic_seed = 0;

  ModelSpec model = ModelSpec{ModelKind::kLogisticRegression, 2, 0, 2};
  Algorithm algorithm = Algorithm::kBiasedLocal;
  SamplerMode sampler_mode = SamplerMode::kSeparated;
  SamplerOptions sampler;
  AggregationRule aggregation = AggregationRule::kTauWeighted;

  double alpha = 32.0;
  double lambda = 2.0;
  std::size_t tau_f = 32;
  std::size_t p_s = 1;
  std::size_t p_f = 1;

  LrSchedule schedule;
  std::size_t batch_size = 32;
  std::optional<std::size_t> rounds;
  std::optional<std::size_t> epochs;
  double weight_decay = 0.0;
  double val_fraction = 0.2;
  std::vector<std::uint64_t> seeds{1};

  CostModel cost;

  std::filesystem::path output_csv;
  std::filesystem::path output_summary;

  /// Text the config was built from; hashed into the summary.
  std::string canonical_text;

  /// Structural checks that do not need the dataset.
  void validate() const;

  std::size_t tau_s() const;
  /// Local update counts per worker, slow workers first.
  std::vector<std::size_t> worker_taus() const;
  std::vector<WorkerSpec> worker_specs() const;
  /// Profile used for data shares: balanced algorithms split data evenly.
  SystemProfile sampling_profile() const;
  std::size_t rounds_per_epoch(std::size_t n_train) const;
  std::size_t total_rounds(std::size_t n_train) const;
};

ExperimentConfig config_from_map(const ConfigMap& map,
                                 const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});

std::string to_string(Algorithm a);
std::string to_string(AggregationRule r);
std::string to_string(SamplerMode m);

struct RoundRecord {
  std::uint64_t seed = 0;
  std::size_t round = 0;
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_acc = 0.0;
  double sim_wall_s = 0.0;
  double sim_block_s = 0.0;  // cumulative, summed over workers
  std::size_t agg_count = 0;
  std::size_t grad_steps = 0;  // cumulative, all workers
};

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<RoundRecord> records;
  ParamVector final_params;
  double final_acc = 0.0;
  std::optional<double> final_ledger_mean;
};

struct Summary {
  std::string config_hash;
  std::string algorithm;
  double final_acc_mean = 0.0;
  double final_acc_spread = 0.0;  // half range across seeds
  std::optional<double> final_acc_std;  // seeds >= 3
  double total_sim_wall_s = 0.0;
  std::size_t total_agg_count = 0;
};

struct ExperimentResult {
  std::vector<SeedRun> runs;
  Summary summary;
};

struct RunOptions {
  /// Worker executor size; nullopt reads HSGD_THREADS (unset or 0 = serial).
  std::optional<std::size_t> threads;
};

std::size_t threads_from_env();

/// Data ready for one seed: train/validation split of the configured source.
struct PreparedData {
  Dataset train;
  Dataset validation;
};

PreparedData prepare_data(const ExperimentConfig& config, std::uint64_t seed);

/// Full check including the dataset and the candidate-pool condition.
void validate_with_data(const ExperimentConfig& config);

SeedRun run_seed(const ExperimentConfig& config, std::uint64_t seed, const RunOptions& options = {});
ExperimentResult run(const ExperimentConfig& config, const RunOptions& options = {});

inline constexpr const char* kCsvHeader =
    "seed,round,epoch,lr,train_loss,val_acc,sim_wall_s,sim_block_s,agg_count,grad_steps";

std::string records_csv(const ExperimentResult& result);
std::string summary_json(const Summary& summary);
std::string config_hash(const std::string& canonical_text);

/// Candidate-pool ablation grid: rows (tau_f, tau_s), columns lambda.
struct LambdaCell {
  double lambda = 0.0;
  bool valid = true;
  std::optional<Summary> summary;  // empty when not trained
};

struct LambdaRow {
  std::size_t tau_f = 0;
  std::size_t tau_s = 0;
  double alpha = 1.0;
  std::vector<LambdaCell> cells;
};

std::vector<LambdaRow> sweep_lambda(const ExperimentConfig& config,
                                    const std::vector<double>& lambdas,
                                    const std::vector<std::size_t>& tau_s_rows, bool train,
                                    const RunOptions& options = {});
std::string lambda_grid_csv(const std::vector<LambdaRow>& rows);

/// Per-round compute/blocking breakdown of the configured system under
/// synchronous SGD, balanced local SGD and the system-aware unbalanced split.
struct TimingRow {
  std::string algorithm;
  std::size_t worker = 0;
  WorkerClass worker_class = WorkerClass::kFast;
  std::size_t tau = 0;
  double compute_s = 0.0;
  double blocking_s = 0.0;
  double agg_s = 0.0;
  double round_wall_s = 0.0;
};

std::vector<TimingRow> timing_breakdown(const ExperimentConfig& config);
std::string timing_csv(const std::vector<TimingRow>& rows);

}  // namespace hsgd
