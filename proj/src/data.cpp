#include "hsgd/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace hsgd {

namespace {

constexpr std::uint64_t kPoolTag = 0x706f6f6cULL;       // "pool"
constexpr std::uint64_t kFastTag = 0x66617374ULL;       // "fast"
constexpr std::uint64_t kUnifiedTag = 0x756e6966ULL;    // "unif"
constexpr std::uint64_t kNoiseTag = 0x6e6f6973ULL;      // "nois"

std::size_t round_half_up(double x) { return static_cast<std::size_t>(std::floor(x + 0.5)); }

void validate_share_inputs(std::size_t n, std::size_t p_s, double alpha, double lambda) {
  require(n > 0, ErrorCode::kInvalidArgument, "shares: dataset is empty");
  require(p_s >= 1, ErrorCode::kInvalidArgument, "shares: need at least one slow worker");
  require(std::isfinite(alpha) && alpha >= 1.0, ErrorCode::kInvalidArgument,
          "shares: alpha must be >= 1");
  require(std::isfinite(lambda) && lambda >= 1.0, ErrorCode::kInvalidArgument,
          "shares: lambda must be >= 1");
}

ShareCounts checked_shares(std::size_t n, const SystemProfile& profile) {
  ShareCounts c = share_counts(n, profile.p_s(), profile.p_f(), profile.alpha(), profile.lambda());
  require(c.lambda_valid, ErrorCode::kInvalidLambda,
          "candidate pool " + std::to_string(c.pool_exact) + " exceeds dataset size " +
              std::to_string(n));
  require(n >= profile.workers(), ErrorCode::kInvalidArgument,
          "dataset smaller than the number of workers");
  require(c.slow_total >= profile.p_s(), ErrorCode::kInvalidArgument,
          "slow share smaller than the number of slow workers");
  require(profile.p_f() == 0 || c.fast_per_worker >= 1, ErrorCode::kInvalidArgument,
          "fast share is empty");
  return c;
}

std::vector<std::size_t> draw_fast(std::size_t n, std::size_t worker, std::size_t k,
                                   RngStream& stream, const SamplerOptions& options,
                                   EpochDrawState* epoch_state) {
  if (options.fast_draw == FastDraw::kEpoch) {
    require(epoch_state != nullptr, ErrorCode::kInvalidArgument,
            "epoch fast draw requires an EpochDrawState");
    return epoch_state->take(worker, k);
  }
  RngStream own = stream.derive(hash_combine(kFastTag, worker));
  return rng_choose_without_replacement(own, n, k);
}

RoundAssignment slow_side(const LossLedger& ledger, const SystemProfile& profile,
                          const ShareCounts& c, RngStream& stream, const SamplerOptions& options) {
  RngStream pool_stream = stream.derive(kPoolTag);
  const auto pool = rng_choose_without_replacement(pool_stream, ledger.size(), c.pool);
  RoundAssignment out;
  out.per_worker.resize(profile.workers());
  if (options.unseen == UnseenPolicy::kUniformFirstRound && ledger.seen_count() == 0) {
    out.slow_selected.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(c.slow_total));
  } else {
    out.slow_selected = select_highest_loss(ledger, pool, c.slow_total);
  }
  for (std::size_t i = 0; i < out.slow_selected.size(); ++i) {
    out.per_worker[i % profile.p_s()].push_back(out.slow_selected[i]);
  }
  return out;
}

}  // namespace

// --- Dataset --------------------------------------------------------------

Dataset::Dataset(std::size_t input_dim, std::size_t num_classes, std::vector<double> features,
                 std::vector<std::uint32_t> labels)
    : input_dim_(input_dim),
      num_classes_(num_classes),
      features_(std::move(features)),
      labels_(std::move(labels)) {
  require(input_dim_ > 0, ErrorCode::kInvalidArgument, "dataset: input_dim must be > 0");
  require(num_classes_ >= 2, ErrorCode::kInvalidArgument, "dataset: need at least 2 classes");
  require(features_.size() == labels_.size() * input_dim_, ErrorCode::kLengthMismatch,
          "dataset: feature count does not match N x input_dim");
  for (auto y : labels_) {
    require(y < num_classes_, ErrorCode::kInvalidArgument, "dataset: label >= num_classes");
  }
  for (double v : features_) {
    require(std::isfinite(v), ErrorCode::kNonFinite, "dataset: non-finite feature");
  }
}

Batch Dataset::gather(std::span<const std::size_t> ids) const {
  Batch b;
  b.input_dim = input_dim_;
  b.features.reserve(ids.size() * input_dim_);
  b.labels.reserve(ids.size());
  b.sample_ids.assign(ids.begin(), ids.end());
  for (std::size_t id : ids) {
    require(id < size(), ErrorCode::kInvalidArgument, "dataset: sample id out of range");
    const auto r = row(id);
    b.features.insert(b.features.end(), r.begin(), r.end());
    b.labels.push_back(labels_[id]);
  }
  return b;
}

Batch Dataset::all() const {
  std::vector<std::size_t> ids(size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  return gather(ids);
}

Dataset Dataset::subset(std::span<const std::size_t> ids) const {
  Batch b = gather(ids);
  return Dataset(input_dim_, num_classes_, std::move(b.features), std::move(b.labels));
}

// --- LossLedger -----------------------------------------------------------

LossLedger::LossLedger(std::size_t n) : last_loss_(n, kNeverSeen), last_round_(n, kNoRound) {}

void LossLedger::record(std::span<const std::size_t> ids, std::span<const double> losses,
                        std::int64_t round) {
  require(ids.size() == losses.size(), ErrorCode::kLengthMismatch,
          "record_losses: ids and losses differ in length");
  require(round >= 0, ErrorCode::kInvalidArgument, "record_losses: negative round");
  for (std::size_t j = 0; j < ids.size(); ++j) {
    require(ids[j] < size(), ErrorCode::kInvalidArgument, "record_losses: id out of range");
    require(std::isfinite(losses[j]) && losses[j] >= 0.0, ErrorCode::kInvalidArgument,
            "record_losses: loss must be finite and >= 0");
  }
  for (std::size_t j = 0; j < ids.size(); ++j) {
    if (last_round_[ids[j]] == kNoRound) ++seen_count_;
    last_loss_[ids[j]] = losses[j];
    last_round_[ids[j]] = round;
  }
}

std::optional<double> LossLedger::mean_seen_loss() const {
  if (seen_count_ == 0) return std::nullopt;
  double sum = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    if (last_round_[i] != kNoRound) sum += last_loss_[i];
  }
  return sum / static_cast<double>(seen_count_);
}

void record_losses(LossLedger& ledger, std::span<const std::size_t> ids,
                   std::span<const double> losses, std::int64_t round) {
  ledger.record(ids, losses, round);
}

// --- share arithmetic -----------------------------------------------------

bool lambda_exceeds_dataset(std::size_t p_s, std::size_t p_f, double alpha, double lambda) {
  // lambda P_S N / (P_S + alpha P_F) > N, with N cancelled.
  const double ps = static_cast<double>(p_s);
  return lambda * ps > ps + alpha * static_cast<double>(p_f);
}

ShareCounts share_counts(std::size_t n, std::size_t p_s, std::size_t p_f, double alpha,
                         double lambda) {
  validate_share_inputs(n, p_s, alpha, lambda);
  const double nn = static_cast<double>(n);
  const double ps = static_cast<double>(p_s);
  const double denom = ps + alpha * static_cast<double>(p_f);
  ShareCounts c;
  c.pool_exact = lambda * ps * nn / denom;
  c.slow_exact = ps * nn / denom;
  c.fast_exact = alpha * nn / denom;
  c.lambda_valid = !lambda_exceeds_dataset(p_s, p_f, alpha, lambda);
  c.pool = std::min(round_half_up(c.pool_exact), n);
  c.slow_total = std::min(round_half_up(c.slow_exact), c.pool);
  c.fast_per_worker = std::min(round_half_up(c.fast_exact), n);
  return c;
}

std::size_t pool_size(std::size_t n, std::size_t p_s, std::size_t p_f, double alpha,
                      double lambda) {
  const ShareCounts c = share_counts(n, p_s, p_f, alpha, lambda);
  require(c.lambda_valid, ErrorCode::kInvalidLambda,
          "candidate pool " + std::to_string(c.pool_exact) + " exceeds dataset size " +
              std::to_string(n));
  return c.pool;
}

std::size_t slow_total(std::size_t n, std::size_t p_s, std::size_t p_f, double alpha) {
  return share_counts(n, p_s, p_f, alpha, 1.0).slow_total;
}

std::size_t fast_per_worker(std::size_t n, std::size_t p_s, std::size_t p_f, double alpha) {
  return share_counts(n, p_s, p_f, alpha, 1.0).fast_per_worker;
}

// --- samplers -------------------------------------------------------------

std::vector<std::size_t> select_highest_loss(const LossLedger& ledger,
                                             std::span<const std::size_t> pool, std::size_t k) {
  require(k <= pool.size(), ErrorCode::kInvalidArgument, "select_highest_loss: k > pool size");
  std::vector<std::size_t> ids(pool.begin(), pool.end());
  auto before = [&](std::size_t a, std::size_t b) {
    const double la = ledger.loss(a), lb = ledger.loss(b);
    if (la != lb) return la > lb;
    return a < b;
  };
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(), before);
  ids.resize(k);
  return ids;
}

EpochDrawState::EpochDrawState(std::size_t n, std::size_t workers, const RngStream& stream)
    : n_(n) {
  cursors_.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    Cursor c{std::vector<std::size_t>(n), n, stream.derive(hash_combine(kFastTag, w))};
    std::iota(c.order.begin(), c.order.end(), std::size_t{0});
    cursors_.push_back(std::move(c));
  }
}

std::vector<std::size_t> EpochDrawState::take(std::size_t worker, std::size_t k) {
  require(worker < cursors_.size(), ErrorCode::kInvalidArgument, "epoch draw: bad worker");
  require(k <= n_, ErrorCode::kInvalidArgument, "epoch draw: k exceeds dataset");
  Cursor& c = cursors_[worker];
  std::vector<std::size_t> out;
  out.reserve(k);
  const std::size_t from_old = std::min(k, n_ - c.pos);
  out.insert(out.end(), c.order.begin() + static_cast<std::ptrdiff_t>(c.pos),
             c.order.begin() + static_cast<std::ptrdiff_t>(c.pos + from_old));
  c.pos += from_old;
  if (out.size() == k) return out;

  rng_shuffle(c.stream, c.order);
  const std::unordered_set<std::size_t> taken(out.begin(), out.end());
  std::stable_partition(c.order.begin(), c.order.end(),
                        [&](std::size_t id) { return !taken.contains(id); });
  const std::size_t need = k - out.size();
  out.insert(out.end(), c.order.begin(), c.order.begin() + static_cast<std::ptrdiff_t>(need));
  c.pos = need;
  return out;
}

RoundAssignment sample_separated(const LossLedger& ledger, const SystemProfile& profile,
                                 RngStream& stream, const SamplerOptions& options,
                                 EpochDrawState* epoch_state) {
  const ShareCounts c = checked_shares(ledger.size(), profile);
  RoundAssignment out = slow_side(ledger, profile, c, stream, options);
  for (std::size_t f = 0; f < profile.p_f(); ++f) {
    out.per_worker[profile.p_s() + f] =
        draw_fast(ledger.size(), f, c.fast_per_worker, stream, options, epoch_state);
  }
  return out;
}

RoundAssignment sample_unified(const LossLedger& ledger, const SystemProfile& profile,
                               RngStream& stream, const SamplerOptions& options) {
  const ShareCounts c = checked_shares(ledger.size(), profile);
  RoundAssignment out = slow_side(ledger, profile, c, stream, options);
  if (profile.p_f() == 0) return out;

  std::vector<bool> selected(ledger.size(), false);
  for (std::size_t id : out.slow_selected) selected[id] = true;
  std::vector<std::size_t> remainder;
  remainder.reserve(ledger.size() - out.slow_selected.size());
  for (std::size_t i = 0; i < ledger.size(); ++i) {
    if (!selected[i]) remainder.push_back(i);
  }
  // Round-half-up can overshoot N by at most one per fast worker; trim it.
  const std::size_t per_worker = std::min(c.fast_per_worker, remainder.size() / profile.p_f());
  require(per_worker >= 1, ErrorCode::kInvalidArgument,
          "unified sampling: remainder smaller than the number of fast workers");
  RngStream fast_stream = stream.derive(kUnifiedTag);
  const auto draw = rng_choose_without_replacement(fast_stream, remainder.size(),
                                                   per_worker * profile.p_f());
  for (std::size_t f = 0; f < profile.p_f(); ++f) {
    auto& list = out.per_worker[profile.p_s() + f];
    list.reserve(per_worker);
    for (std::size_t j = 0; j < per_worker; ++j) list.push_back(remainder[draw[f * per_worker + j]]);
  }
  return out;
}

RoundAssignment sample_uniform(std::size_t n, const SystemProfile& profile, RngStream& stream,
                               const SamplerOptions& options, EpochDrawState* epoch_state) {
  const ShareCounts c = share_counts(n, profile.p_s(), profile.p_f(), profile.alpha(), 1.0);
  require(n >= profile.workers(), ErrorCode::kInvalidArgument,
          "dataset smaller than the number of workers");
  require(c.slow_total >= profile.p_s(), ErrorCode::kInvalidArgument,
          "slow share smaller than the number of slow workers");
  RngStream pool_stream = stream.derive(kPoolTag);
  RoundAssignment out;
  out.per_worker.resize(profile.workers());
  out.slow_selected = rng_choose_without_replacement(pool_stream, n, c.slow_total);
  for (std::size_t i = 0; i < out.slow_selected.size(); ++i) {
    out.per_worker[i % profile.p_s()].push_back(out.slow_selected[i]);
  }
  for (std::size_t f = 0; f < profile.p_f(); ++f) {
    out.per_worker[profile.p_s() + f] =
        draw_fast(n, f, c.fast_per_worker, stream, options, epoch_state);
  }
  return out;
}

// --- ingestion ------------------------------------------------------------

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kParseError,
              "csv line " + std::to_string(line_no) + ": bad number '" + s + "'");
}

std::uint32_t parse_label(const std::string& s, std::size_t line_no) {
  const bool digits = !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char ch) {
    return std::isdigit(ch);
  });
  require(digits && s.size() < 10, ErrorCode::kParseError,
          "csv line " + std::to_string(line_no) + ": bad label '" + s + "'");
  return static_cast<std::uint32_t>(std::stoul(s));
}

void put_u32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff),
                              static_cast<char>((v >> 24) & 0xff)};
  os.write(b.data(), 4);
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

Dataset parse_binary(const std::string& bytes) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  require(bytes.size() >= 16 && std::memcmp(p, "HSGD", 4) == 0, ErrorCode::kParseError,
          "binary dataset: missing HSGD header");
  const std::uint64_t n = get_u32(p + 4), d = get_u32(p + 8), c = get_u32(p + 12);
  const std::uint64_t expected = 16 + 4 * n * d + 4 * n;
  require(bytes.size() == expected, ErrorCode::kParseError,
          "binary dataset: size " + std::to_string(bytes.size()) + " != expected " +
              std::to_string(expected));
  std::vector<double> features(n * d);
  for (std::uint64_t k = 0; k < n * d; ++k) {
    const std::uint32_t raw = get_u32(p + 16 + 4 * k);
    float f;
    std::memcpy(&f, &raw, sizeof f);
    features[k] = static_cast<double>(f);
  }
  std::vector<std::uint32_t> labels(n);
  const unsigned char* lp = p + 16 + 4 * n * d;
  for (std::uint64_t i = 0; i < n; ++i) labels[i] = get_u32(lp + 4 * i);
  for (auto y : labels) {
    require(y < c, ErrorCode::kParseError, "binary dataset: label >= num_classes");
  }
  return Dataset(d, c, std::move(features), std::move(labels));
}

}  // namespace

Dataset parse_csv_dataset(const std::string& text, std::optional<std::size_t> num_classes) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_commas(trim(line));
      break;
    }
  }
  require(!header.empty(), ErrorCode::kParseError, "csv: empty file");
  require(header.size() >= 2 && header[0] == "label", ErrorCode::kParseError,
          "csv: header must be label,f0,f1,...");
  for (std::size_t k = 1; k < header.size(); ++k) {
    require(header[k] == "f" + std::to_string(k - 1), ErrorCode::kParseError,
            "csv: header column " + std::to_string(k) + " must be f" + std::to_string(k - 1));
  }
  const std::size_t dim = header.size() - 1;
  std::vector<double> features;
  std::vector<std::uint32_t> labels;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto fields = split_commas(t);
    require(fields.size() == dim + 1, ErrorCode::kParseError,
            "csv line " + std::to_string(line_no) + ": expected " + std::to_string(dim + 1) +
                " fields, got " + std::to_string(fields.size()));
    labels.push_back(parse_label(fields[0], line_no));
    for (std::size_t k = 1; k < fields.size(); ++k) features.push_back(parse_double(fields[k], line_no));
  }
  require(!labels.empty(), ErrorCode::kParseError, "csv: no data rows");
  const std::size_t max_label = *std::max_element(labels.begin(), labels.end());
  const std::size_t classes = num_classes.value_or(std::max<std::size_t>(max_label + 1, 2));
  require(max_label < classes, ErrorCode::kParseError, "csv: label >= num_classes");
  return Dataset(dim, classes, std::move(features), std::move(labels));
}

std::string to_csv(const Dataset& data) {
  std::string out = "label";
  for (std::size_t k = 0; k < data.input_dim(); ++k) out += ",f" + std::to_string(k);
  out += '\n';
  char buf[32];
  for (std::size_t i = 0; i < data.size(); ++i) {
    out += std::to_string(data.labels()[i]);
    for (double v : data.row(i)) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     std::optional<std::size_t> num_classes) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::kIoError, "cannot open dataset " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  if (format == DatasetFormat::kCsv) return parse_csv_dataset(bytes, num_classes);
  Dataset d = parse_binary(bytes);
  require(!num_classes || *num_classes == d.num_classes(), ErrorCode::kLengthMismatch,
          "binary dataset: num_classes differs from the declared value");
  return d;
}

void save_dataset(const Dataset& data, const std::filesystem::path& path, DatasetFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::kIoError, "cannot write dataset " + path.string());
  if (format == DatasetFormat::kCsv) {
    out << to_csv(data);
  } else {
    out.write("HSGD", 4);
    put_u32(out, static_cast<std::uint32_t>(data.size()));
    put_u32(out, static_cast<std::uint32_t>(data.input_dim()));
    put_u32(out, static_cast<std::uint32_t>(data.num_classes()));
    for (double v : data.features()) {
      const auto f = static_cast<float>(v);
      std::uint32_t raw;
      std::memcpy(&raw, &f, sizeof raw);
      put_u32(out, raw);
    }
    for (auto y : data.labels()) put_u32(out, y);
  }
  require(out.good(), ErrorCode::kIoError, "failed writing dataset " + path.string());
}

Dataset make_synthetic(const SyntheticSpec& spec, RngStream& stream) {
  require(spec.n > 0 && spec.input_dim > 0 && spec.num_classes >= 2, ErrorCode::kInvalidArgument,
          "synthetic: n, input_dim must be > 0 and classes >= 2");
  require(spec.sigma > 0.0 && spec.separation >= 0.0, ErrorCode::kInvalidArgument,
          "synthetic: sigma must be > 0, separation >= 0");
  require(spec.label_noise >= 0.0 && spec.label_noise <= 1.0, ErrorCode::kInvalidArgument,
          "synthetic: label_noise must be in [0, 1]");
  require(spec.axis_scale.empty() || spec.axis_scale.size() == spec.input_dim,
          ErrorCode::kLengthMismatch, "synthetic: axis_scale length != input_dim");
  const std::size_t d = spec.input_dim, c = spec.num_classes;

  std::vector<std::vector<double>> means = spec.means;
  if (means.empty()) {
    // Points on scaled axes are pairwise `separation` apart.
    const double radius = spec.separation * spec.sigma / std::sqrt(2.0);
    means.assign(c, std::vector<double>(d, 0.0));
    for (std::size_t k = 0; k < c; ++k) {
      if (k < d) {
        means[k][k] = radius;
        continue;
      }
      double norm = 0.0;
      for (auto& v : means[k]) {
        v = stream.normal();
        norm += v * v;
      }
      for (auto& v : means[k]) v *= radius / std::sqrt(norm);
    }
  }
  require(means.size() == c, ErrorCode::kLengthMismatch, "synthetic: need one mean per class");
  for (const auto& m : means) {
    require(m.size() == d, ErrorCode::kLengthMismatch, "synthetic: mean length != input_dim");
  }

  std::vector<std::size_t> order(spec.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng_shuffle(stream, order);

  // Label noise has its own stream so features do not depend on the noise level.
  RngStream noise = stream.derive(kNoiseTag);
  std::vector<double> features(spec.n * d);
  std::vector<std::uint32_t> labels(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const std::size_t cls = order[i] % c;
    for (std::size_t q = 0; q < d; ++q) {
      const double scale = spec.axis_scale.empty() ? 1.0 : spec.axis_scale[q];
      features[i * d + q] = means[cls][q] + spec.sigma * scale * stream.normal();
    }
    std::size_t label = cls;
    if (spec.label_noise > 0.0 && noise.uniform01() < spec.label_noise) {
      label = (cls + 1 + static_cast<std::size_t>(noise.uniform_below(c - 1))) % c;
    }
    labels[i] = static_cast<std::uint32_t>(label);
  }
  return Dataset(d, c, std::move(features), std::move(labels));
}

std::pair<Dataset, Dataset> split_train_validation(const Dataset& data, double val_fraction,
                                                   RngStream& stream) {
  require(val_fraction >= 0.0 && val_fraction < 1.0, ErrorCode::kInvalidArgument,
          "split: validation fraction must be in [0, 1)");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng_shuffle(stream, order);
  const std::size_t n_val = round_half_up(val_fraction * static_cast<double>(data.size()));
  require(n_val < data.size(), ErrorCode::kInvalidArgument, "split: no training rows left");
  const std::span<const std::size_t> all(order);
  Dataset val = n_val > 0 ? data.subset(all.first(n_val)) : Dataset();
  return {data.subset(all.subspan(n_val)), std::move(val)};
}

}  // namespace hsgd
