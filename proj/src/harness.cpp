#include "hsgd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <thread>

#include <json.hpp>

namespace hsgd {

namespace {

// Stream purposes. A stream is keyed by (seed, purpose[, round, worker]) so
// every algorithm that shares a seed also shares its random draws.
constexpr std::uint64_t kSplitTag = 1;
constexpr std::uint64_t kInitTag = 2;
constexpr std::uint64_t kRoundTag = 3;
constexpr std::uint64_t kSampleTag = 4;
constexpr std::uint64_t kWorkerTag = 5;
constexpr std::uint64_t kSynthTag = 6;
constexpr std::uint64_t kEpochDrawTag = 7;

std::string fmt_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

Summary summarize(const ExperimentConfig& config, const std::vector<SeedRun>& runs) {
  Summary s;
  s.config_hash = config_hash(config.canonical_text);
  s.algorithm = to_string(config.algorithm);
  double lo = runs.front().final_acc, hi = lo, sum = 0.0;
  for (const auto& r : runs) {
    lo = std::min(lo, r.final_acc);
    hi = std::max(hi, r.final_acc);
    sum += r.final_acc;
  }
  const double n = static_cast<double>(runs.size());
  s.final_acc_mean = sum / n;
  s.final_acc_spread = 0.5 * (hi - lo);
  if (runs.size() >= 3) {
    double ss = 0.0;
    for (const auto& r : runs) ss += (r.final_acc - s.final_acc_mean) * (r.final_acc - s.final_acc_mean);
    s.final_acc_std = std::sqrt(ss / (n - 1.0));
  }
  // The clock does not depend on the seed.
  s.total_sim_wall_s = runs.front().records.back().sim_wall_s;
  s.total_agg_count = runs.front().records.back().agg_count;
  return s;
}

template <typename Fn>
void for_each_worker(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  {
    std::vector<std::jthread> pool;
    const std::size_t n = std::min(threads, count);
    pool.reserve(n);
    for (std::size_t t = 0; t < n; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

std::size_t threads_from_env() {
  const char* v = std::getenv("HSGD_THREADS");
  if (v == nullptr || *v == '\0') return 0;
  char* end = nullptr;
  const unsigned long n = std::strtoul(v, &end, 10);
  require(end != v && *end == '\0', ErrorCode::kInvalidConfig,
          std::string("HSGD_THREADS must be a nonnegative integer, got '") + v + "'");
  return static_cast<std::size_t>(n);
}

PreparedData prepare_data(const ExperimentConfig& config, std::uint64_t seed) {
  Dataset full;
  switch (config.source) {
    case DatasetSource::kSynthetic: {
      RngStream synth(config.synthetic_seed, kSynthTag);
      full = make_synthetic(config.synthetic, synth);
      break;
    }
    case DatasetSource::kCsv:
      full = load_dataset(config.dataset_path, DatasetFormat::kCsv, config.dataset_classes);
      break;
    case DatasetSource::kBinary:
      full = load_dataset(config.dataset_path, DatasetFormat::kBinary, config.dataset_classes);
      break;
  }
  require(config.model.input_dim == 0 || full.input_dim() == config.model.input_dim,
          ErrorCode::kLengthMismatch,
          "dataset input_dim " + std::to_string(full.input_dim()) + " != model input_dim " +
              std::to_string(config.model.input_dim));
  require(config.model.num_classes == 0 || full.num_classes() == config.model.num_classes,
          ErrorCode::kLengthMismatch,
          "dataset classes " + std::to_string(full.num_classes()) + " != model classes " +
              std::to_string(config.model.num_classes));
  RngStream split(seed, kSplitTag);
  auto [train, val] = split_train_validation(full, config.val_fraction, split);
  return PreparedData{std::move(train), std::move(val)};
}

void validate_with_data(const ExperimentConfig& config) {
  config.validate();
  const PreparedData data = prepare_data(config, config.seeds.front());
  const std::size_t n = data.train.size();
  const SystemProfile profile = config.sampling_profile();
  require(n >= profile.workers(), ErrorCode::kInvalidConfig,
          "training set smaller than the number of workers");
  if (profile.sampler_mode() != SamplerMode::kUniform) {
    // Throws kInvalidLambda for the oversized-pool condition.
    pool_size(n, profile.p_s(), profile.p_f(), profile.alpha(), profile.lambda());
  }
}

SeedRun run_seed(const ExperimentConfig& config, std::uint64_t seed, const RunOptions& options) {
  config.validate();
  const std::size_t threads = options.threads.value_or(threads_from_env());
  const PreparedData data = prepare_data(config, seed);
  const Dataset& train = data.train;
  const Dataset& eval = data.validation.size() > 0 ? data.validation : data.train;
  const Batch eval_batch = eval.all();
  ModelSpec model = config.model;
  if (model.input_dim == 0) model.input_dim = train.input_dim();
  if (model.num_classes == 0) model.num_classes = train.num_classes();

  const SystemProfile profile = config.sampling_profile();
  if (profile.sampler_mode() != SamplerMode::kUniform) {
    pool_size(train.size(), profile.p_s(), profile.p_f(), profile.alpha(), profile.lambda());
  }
  const std::vector<WorkerSpec> workers = config.worker_specs();
  const std::vector<std::size_t> taus = config.worker_taus();
  const std::size_t rounds = config.total_rounds(train.size());
  const std::size_t per_epoch = config.rounds_per_epoch(train.size());
  LrSchedule schedule = config.schedule;
  if (schedule.kind == LrKind::kCosine) schedule.total_rounds = rounds;

  RngStream init_stream(seed, kInitTag);
  ParamVector global = init_params(model, init_stream);
  LossLedger ledger(train.size());
  SimClock clock(config.cost);
  std::optional<EpochDrawState> epoch_state;
  if (config.sampler.fast_draw == FastDraw::kEpoch) {
    epoch_state.emplace(train.size(), profile.p_f(), RngStream(seed, kEpochDrawTag));
  }
  const LocalTrainOptions train_options{config.weight_decay};

  SeedRun out;
  out.seed = seed;
  out.records.reserve(rounds);
  std::size_t grad_steps = 0;
  std::vector<LocalTrainResult> results(workers.size());

  for (std::size_t round = 0; round < rounds; ++round) {
    const double lr = lr_at(schedule, round);
    const RngStream round_stream(seed, hash_combine(kRoundTag, round));
    RngStream sample_stream = round_stream.derive(kSampleTag);
    EpochDrawState* cursor = epoch_state ? &*epoch_state : nullptr;
    RoundAssignment assignment;
    switch (profile.sampler_mode()) {
      case SamplerMode::kSeparated:
        assignment = sample_separated(ledger, profile, sample_stream, config.sampler, cursor);
        break;
      case SamplerMode::kUnified:
        assignment = sample_unified(ledger, profile, sample_stream, config.sampler);
        break;
      case SamplerMode::kUniform:
        assignment = sample_uniform(train.size(), profile, sample_stream, config.sampler, cursor);
        break;
    }

    for_each_worker(workers.size(), threads, [&](std::size_t w) {
      RngStream worker_stream = round_stream.derive(hash_combine(kWorkerTag, w));
      results[w] = local_train(model, train, global, assignment.per_worker[w], taus[w], lr,
                               config.batch_size, worker_stream, train_options);
    });

    // Merge in ascending worker id; a later write to the same id wins.
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    std::vector<ParamVector> models;
    models.reserve(workers.size());
    for (auto& r : results) {
      std::vector<std::size_t> ids;
      std::vector<double> losses;
      ids.reserve(r.loss_records.size());
      losses.reserve(r.loss_records.size());
      for (const auto& [id, loss] : r.loss_records) {
        ids.push_back(id);
        losses.push_back(loss);
        loss_sum += loss;
      }
      loss_count += ids.size();
      ledger.record(ids, losses, static_cast<std::int64_t>(round));
      grad_steps += r.steps;
      models.push_back(std::move(r.end_params));
    }
    global = aggregate(config.aggregation, models, taus, &global);
    clock.advance(workers);

    RoundRecord rec;
    rec.seed = seed;
    rec.round = round;
    rec.epoch = round / per_epoch;
    rec.lr = lr;
    rec.train_loss = loss_sum / static_cast<double>(loss_count);
    rec.val_acc = accuracy(model, global, eval_batch);
    rec.sim_wall_s = clock.wall();
    rec.sim_block_s = clock.blocking_total();
    rec.agg_count = clock.agg_count();
    rec.grad_steps = grad_steps;
    out.records.push_back(rec);
  }
  out.final_params = std::move(global);
  out.final_acc = out.records.back().val_acc;
  out.final_ledger_mean = ledger.mean_seen_loss();
  return out;
}

ExperimentResult run(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  ExperimentResult result;
  for (auto seed : config.seeds) result.runs.push_back(run_seed(config, seed, options));
  result.summary = summarize(config, result.runs);
  return result;
}

std::string records_csv(const ExperimentResult& result) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& run : result.runs) {
    for (const auto& r : run.records) {
      out += std::to_string(r.seed) + ',' + std::to_string(r.round) + ',' +
             std::to_string(r.epoch) + ',' + fmt_real(r.lr) + ',' + fmt_real(r.train_loss) + ',' +
             fmt_real(r.val_acc) + ',' + fmt_real(r.sim_wall_s) + ',' + fmt_real(r.sim_block_s) +
             ',' + std::to_string(r.agg_count) + ',' + std::to_string(r.grad_steps) + '\n';
    }
  }
  return out;
}

std::string summary_json(const Summary& s) {
  nlohmann::ordered_json j;
  j["config_hash"] = s.config_hash;
  j["algorithm"] = s.algorithm;
  j["final_acc_mean"] = s.final_acc_mean;
  j["final_acc_spread"] = s.final_acc_spread;
  if (s.final_acc_std) j["final_acc_std"] = *s.final_acc_std;
  j["total_sim_wall_s"] = s.total_sim_wall_s;
  j["total_agg_count"] = s.total_agg_count;
  return j.dump(2) + "\n";
}

std::string config_hash(const std::string& canonical_text) {
  // FNV-1a 64
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<LambdaRow> sweep_lambda(const ExperimentConfig& config,
                                    const std::vector<double>& lambdas,
                                    const std::vector<std::size_t>& tau_s_rows, bool train,
                                    const RunOptions& options) {
  require(!lambdas.empty(), ErrorCode::kInvalidArgument, "sweep-lambda: no lambda values");
  require(config.algorithm == Algorithm::kBiasedLocal, ErrorCode::kInvalidConfig,
          "sweep-lambda needs algorithm = biased_local");
  std::vector<std::size_t> rows = tau_s_rows;
  if (rows.empty()) rows.push_back(config.tau_s());
  std::vector<LambdaRow> out;
  for (std::size_t tau_s : rows) {
    require(tau_s >= 1 && tau_s <= config.tau_f, ErrorCode::kInvalidArgument,
            "sweep-lambda: tau_s must be in [1, tau_f]");
    LambdaRow row;
    row.tau_f = config.tau_f;
    row.tau_s = tau_s;
    row.alpha = static_cast<double>(config.tau_f) / static_cast<double>(tau_s);
    for (double lambda : lambdas) {
      require(std::isfinite(lambda) && lambda >= 1.0, ErrorCode::kInvalidArgument,
              "sweep-lambda: lambda must be >= 1");
      LambdaCell cell;
      cell.lambda = lambda;
      cell.valid = !lambda_exceeds_dataset(config.p_s, config.p_f, row.alpha, lambda);
      if (cell.valid && train) {
        ExperimentConfig c = config;
        c.alpha = row.alpha;
        c.lambda = lambda;
        c.canonical_text += "profile.alpha = " + fmt_real(row.alpha) + "\nprofile.lambda = " +
                            fmt_real(lambda) + "\n";
        cell.summary = run(c, options).summary;
      }
      row.cells.push_back(cell);
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::string lambda_grid_csv(const std::vector<LambdaRow>& rows) {
  std::string out = "tau_f,tau_s";
  if (!rows.empty()) {
    for (const auto& cell : rows.front().cells) out += ",lambda=" + fmt_real(cell.lambda);
  }
  out += '\n';
  char buf[64];
  for (const auto& row : rows) {
    out += std::to_string(row.tau_f) + ',' + std::to_string(row.tau_s);
    for (const auto& cell : row.cells) {
      if (!cell.valid) {
        out += ",NA";
      } else if (cell.summary) {
        std::snprintf(buf, sizeof buf, ",%.4f+-%.4f", cell.summary->final_acc_mean,
                      cell.summary->final_acc_spread);
        out += buf;
      } else {
        out += ",ok";
      }
    }
    out += '\n';
  }
  return out;
}

std::vector<TimingRow> timing_breakdown(const ExperimentConfig& config) {
  std::vector<TimingRow> out;
  for (Algorithm a : {Algorithm::kSyncSgd, Algorithm::kBalancedLocal, Algorithm::kBiasedLocal}) {
    ExperimentConfig c = config;
    c.algorithm = a;
    const auto workers = c.worker_specs();
    const RoundTiming t = round_timing(workers, c.cost);
    for (std::size_t i = 0; i < workers.size(); ++i) {
      out.push_back(TimingRow{a == Algorithm::kBiasedLocal ? "system_aware_local" : to_string(a),
                              workers[i].id, workers[i].worker_class, workers[i].tau,
                              t.compute_time[i], t.blocking_time[i], c.cost.agg_cost,
                              t.round_wall});
    }
  }
  return out;
}

std::string timing_csv(const std::vector<TimingRow>& rows) {
  std::string out = "algorithm,worker,class,tau,compute_s,blocking_s,agg_s,round_wall_s\n";
  for (const auto& r : rows) {
    out += r.algorithm + ',' + std::to_string(r.worker) + ',' +
           (r.worker_class == WorkerClass::kFast ? "fast" : "slow") + ',' + std::to_string(r.tau) +
           ',' + fmt_real(r.compute_s) + ',' + fmt_real(r.blocking_s) + ',' + fmt_real(r.agg_s) +
           ',' + fmt_real(r.round_wall_s) + '\n';
  }
  return out;
}

}  // namespace hsgd
