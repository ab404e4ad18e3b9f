#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hsgd/core_math.hpp"
#include "hsgd/models.hpp"
#include "hsgd/workers.hpp"

namespace hsgd {

/// In-memory labelled dataset, features row-major N x input_dim.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t input_dim, std::size_t num_classes, std::vector<double> features,
          std::vector<std::uint32_t> labels);

  std::size_t size() const { return labels_.size(); }
  std::size_t input_dim() const { return input_dim_; }
  std::size_t num_classes() const { return num_classes_; }
  std::span<const double> features() const { return features_; }
  std::span<const std::uint32_t> labels() const { return labels_; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(features_).subspan(i * input_dim_, input_dim_);
  }

  /// Batch of the given rows; sample_ids are the row indices.
  Batch gather(std::span<const std::size_t> ids) const;
  Batch all() const;
  Dataset subset(std::span<const std::size_t> ids) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::size_t input_dim_ = 0;
  std::size_t num_classes_ = 0;
  std::vector<double> features_;
  std::vector<std::uint32_t> labels_;
};

/// Last observed training loss of every sample. Never-seen samples hold
/// +infinity so they rank ahead of every recorded loss.
class LossLedger {
 public:
  static constexpr double kNeverSeen = std::numeric_limits<double>::infinity();
  static constexpr std::int64_t kNoRound = -1;

  explicit LossLedger(std::size_t n);

  std::size_t size() const { return last_loss_.size(); }
  double loss(std::size_t id) const { return last_loss_.at(id); }
  std::int64_t round(std::size_t id) const { return last_round_.at(id); }
  bool seen(std::size_t id) const { return last_round_.at(id) != kNoRound; }
  std::size_t seen_count() const { return seen_count_; }
  std::span<const double> losses() const { return last_loss_; }

  /// Overwrites entries in order, so a repeated id keeps its last value.
  void record(std::span<const std::size_t> ids, std::span<const double> losses, std::int64_t round);

  /// Mean over seen entries; nullopt when nothing has been recorded.
  std::optional<double> mean_seen_loss() const;

 private:
  std::vector<double> last_loss_;
  std::vector<std::int64_t> last_round_;
  std::size_t seen_count_ = 0;
};

void record_losses(LossLedger& ledger, std::span<const std::size_t> ids,
                   std::span<const double> losses, std::int64_t round);

/// Slow workers are ids [0, P_S), fast workers [P_S, P_S + P_F).
struct RoundAssignment {
  std::vector<std::vector<std::size_t>> per_worker;
  /// The slow-selected set in selection order (before round-robin split).
  std::vector<std::size_t> slow_selected;
};

struct ShareCounts {
  double pool_exact = 0.0;
  double slow_exact = 0.0;
  double fast_exact = 0.0;
  std::size_t pool = 0;
  std::size_t slow_total = 0;
  std::size_t fast_per_worker = 0;
  bool lambda_valid = true;
};

/// Unrounded and round-half-up candidate pool, slow total and per-fast-worker
/// share. Does not throw on an oversized pool; sets lambda_valid instead.
ShareCounts share_counts(std::size_t n, std::size_t p_s, std::size_t p_f, double alpha,
                         double lambda);

/// True when the candidate pool would exceed the dataset.
bool lambda_exceeds_dataset(std::size_t p_s, std::size_t p_f, double alpha, double lambda);

/// round(lambda P_S N / (P_S + alpha P_F)); kInvalidLambda when the unrounded
/// value exceeds N.
std::size_t pool_size(std::size_t n, std::size_t p_s, std::size_t p_f, double alpha, double lambda);
/// round(P_S N / (P_S + alpha P_F))
std::size_t slow_total(std::size_t n, std::size_t p_s, std::size_t p_f, double alpha);
/// round(alpha N / (P_S + alpha P_F))
std::size_t fast_per_worker(std::size_t n, std::size_t p_s, std::size_t p_f, double alpha);

enum class UnseenPolicy {
  kPrioritize,        // never-seen samples rank as +inf loss
  kUniformFirstRound, // empty ledger: slow workers take a uniform draw
};

enum class FastDraw {
  kFresh,  // independent draw every round
  kEpoch,  // consume a per-worker permutation of [0, N), reshuffled when spent
};

struct SamplerOptions {
  UnseenPolicy unseen = UnseenPolicy::kPrioritize;
  FastDraw fast_draw = FastDraw::kFresh;
};

/// Per-fast-worker epoch cursors for FastDraw::kEpoch.
class EpochDrawState {
 public:
  EpochDrawState(std::size_t n, std::size_t workers, const RngStream& stream);
  /// k distinct ids for `worker`. Ids left over at an epoch boundary are
  /// moved to the back of the next permutation so batches never repeat an id.
  std::vector<std::size_t> take(std::size_t worker, std::size_t k);

 private:
  struct Cursor {
    std::vector<std::size_t> order;
    std::size_t pos = 0;
    RngStream stream;
  };
  std::size_t n_;
  std::vector<Cursor> cursors_;
};

/// Candidate pool -> top-loss slow selection -> independent fast draws over
/// all of [0, N). Fast lists may overlap the slow set and each other.
RoundAssignment sample_separated(const LossLedger& ledger, const SystemProfile& profile,
                                 RngStream& stream, const SamplerOptions& options = {},
                                 EpochDrawState* epoch_state = nullptr);

/// Same slow selection; fast workers then split a draw without replacement
/// from the complement of the slow set. Globally duplicate-free.
RoundAssignment sample_unified(const LossLedger& ledger, const SystemProfile& profile,
                               RngStream& stream, const SamplerOptions& options = {});

/// Unbiased baseline: the slow share is a uniform draw (equivalent to a
/// candidate pool of exactly slow_total), fast workers as in separated mode.
RoundAssignment sample_uniform(std::size_t n, const SystemProfile& profile, RngStream& stream,
                               const SamplerOptions& options = {},
                               EpochDrawState* epoch_state = nullptr);

/// Top-k of `pool` by (loss desc, index asc).
std::vector<std::size_t> select_highest_loss(const LossLedger& ledger,
                                             std::span<const std::size_t> pool, std::size_t k);

// --- ingestion ------------------------------------------------------------

enum class DatasetFormat { kCsv, kBinary };

/// CSV: header `label,f0,f1,...`. num_classes defaults to max label + 1.
/// Binary: "HSGD", u32 N, u32 input_dim, u32 num_classes, N*input_dim f32,
/// N u32 labels, all little-endian.
Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     std::optional<std::size_t> num_classes = std::nullopt);
void save_dataset(const Dataset& data, const std::filesystem::path& path, DatasetFormat format);

Dataset parse_csv_dataset(const std::string& text, std::optional<std::size_t> num_classes = std::nullopt);
std::string to_csv(const Dataset& data);

struct SyntheticSpec {
  std::size_t n = 1000;
  std::size_t input_dim = 2;
  std::size_t num_classes = 2;
  /// Distance between class means, in units of sigma.
  double separation = 4.0;
  double sigma = 1.0;
  /// Optional per-dimension std multipliers (diagonal covariance).
  std::vector<double> axis_scale;
  /// Optional explicit class means, num_classes x input_dim.
  std::vector<std::vector<double>> means;
  /// Fraction of labels replaced by a different, uniformly chosen class.
  double label_noise = 0.0;
};

/// Class-conditional Gaussian blobs. Class of sample i is i mod C before a
/// final shuffle; default means sit on scaled coordinate axes (random unit
/// directions once classes outnumber dimensions).
Dataset make_synthetic(const SyntheticSpec& spec, RngStream& stream);

/// Shuffles once with `stream`, then moves the first round(fraction * N) rows
/// into the validation set.
std::pair<Dataset, Dataset> split_train_validation(const Dataset& data, double val_fraction,
                                                   RngStream& stream);

}  // namespace hsgd
