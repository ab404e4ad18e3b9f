#include "hsgd/models.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace hsgd {

namespace {

struct Layout {
  std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0, total = 0;
};

Layout layout_of(const ModelSpec& spec) {
  Layout l;
  const std::size_t d = spec.input_dim, c = spec.num_classes;
  if (spec.kind == ModelKind::kLogisticRegression) {
    l.w2 = 0;
    l.b2 = c * d;
    l.total = c * d + c;
  } else {
    const std::size_t h = spec.hidden_dim;
    l.w1 = 0;
    l.b1 = h * d;
    l.w2 = l.b1 + h;
    l.b2 = l.w2 + c * h;
    l.total = l.b2 + c;
  }
  return l;
}

void check_inputs(const ModelSpec& spec, const ParamVector& params, const Batch& batch) {
  spec.validate();
  batch.validate();
  require(params.size() == spec.param_count(), ErrorCode::kLengthMismatch,
          "model: params length " + std::to_string(params.size()) + " != " +
              std::to_string(spec.param_count()));
  require(batch.input_dim == spec.input_dim, ErrorCode::kLengthMismatch,
          "model: batch input_dim differs from spec");
  for (auto label : batch.labels) {
    require(label < spec.num_classes, ErrorCode::kInvalidArgument, "model: label out of range");
  }
}

// out = W[rows x cols] * x + b
void affine(const double* w, const double* b, std::span<const double> x, std::size_t rows,
            std::vector<double>& out) {
  const std::size_t cols = x.size();
  out.assign(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = b[r];
    const double* wr = w + r * cols;
    for (std::size_t k = 0; k < cols; ++k) acc += wr[k] * x[k];
    out[r] = acc;
  }
}

// Forward pass for one row. `hidden_pre` holds pre-activations, `hidden`
// post-ReLU values (unused for logistic regression).
void forward_row(const ModelSpec& spec, const Layout& l, const ParamVector& p,
                 std::span<const double> x, std::vector<double>& hidden_pre,
                 std::vector<double>& hidden, std::vector<double>& out) {
  if (spec.kind == ModelKind::kLogisticRegression) {
    affine(p.data() + l.w2, p.data() + l.b2, x, spec.num_classes, out);
    return;
  }
  affine(p.data() + l.w1, p.data() + l.b1, x, spec.hidden_dim, hidden_pre);
  hidden.resize(hidden_pre.size());
  for (std::size_t k = 0; k < hidden_pre.size(); ++k) hidden[k] = std::max(hidden_pre[k], 0.0);
  affine(p.data() + l.w2, p.data() + l.b2, hidden, spec.num_classes, out);
}

void require_finite_values(std::span<const double> values, const char* what) {
  for (double v : values) {
    require(std::isfinite(v), ErrorCode::kNonFinite, std::string(what) + ": non-finite activation");
  }
}

}  // namespace

ModelSpec ModelSpec::logistic_regression(std::size_t input_dim, std::size_t num_classes) {
  ModelSpec s{ModelKind::kLogisticRegression, input_dim, 0, num_classes};
  s.validate();
  return s;
}

ModelSpec ModelSpec::mlp2(std::size_t input_dim, std::size_t hidden_dim, std::size_t num_classes) {
  ModelSpec s{ModelKind::kMlp2, input_dim, hidden_dim, num_classes};
  s.validate();
  return s;
}

void ModelSpec::validate() const {
  require(input_dim > 0, ErrorCode::kInvalidArgument, "model: input_dim must be > 0");
  require(num_classes >= 2, ErrorCode::kInvalidArgument, "model: need at least 2 classes");
  if (kind == ModelKind::kMlp2) {
    require(hidden_dim > 0, ErrorCode::kInvalidArgument, "model: mlp2 hidden_dim must be > 0");
  }
}

std::size_t ModelSpec::param_count() const { return layout_of(*this).total; }

void Batch::validate() const {
  require(labels.size() == sample_ids.size() && features.size() == labels.size() * input_dim,
          ErrorCode::kLengthMismatch, "batch: features/labels/sample_ids disagree");
}

ParamVector init_params(const ModelSpec& spec, RngStream& stream) {
  spec.validate();
  const Layout l = layout_of(spec);
  ParamVector p(l.total);
  auto fill = [&](std::size_t offset, std::size_t count, std::size_t fan_in) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t k = 0; k < count; ++k) p[offset + k] = stream.uniform(-scale, scale);
  };
  if (spec.kind == ModelKind::kMlp2) {
    fill(l.w1, spec.hidden_dim * spec.input_dim, spec.input_dim);
    fill(l.w2, spec.num_classes * spec.hidden_dim, spec.hidden_dim);
  } else {
    fill(l.w2, spec.num_classes * spec.input_dim, spec.input_dim);
  }
  return p;
}

std::vector<double> logits(const ModelSpec& spec, const ParamVector& params,
                           std::span<const double> x) {
  require(params.size() == spec.param_count(), ErrorCode::kLengthMismatch,
          "logits: params length mismatch");
  require(x.size() == spec.input_dim, ErrorCode::kLengthMismatch, "logits: input length mismatch");
  std::vector<double> pre, hid, out;
  forward_row(spec, layout_of(spec), params, x, pre, hid, out);
  require_finite_values(out, "logits");
  return out;
}

LossResult forward_loss(const ModelSpec& spec, const ParamVector& params, const Batch& batch) {
  check_inputs(spec, params, batch);
  require(batch.size() > 0, ErrorCode::kEmptyInput, "forward_loss: empty batch");
  const Layout l = layout_of(spec);
  LossResult r;
  r.per_sample.reserve(batch.size());
  std::vector<double> pre, hid, out;
  double sum = 0.0;
  for (std::size_t j = 0; j < batch.size(); ++j) {
    forward_row(spec, l, params, batch.row(j), pre, hid, out);
    require_finite_values(out, "forward_loss");
    const double loss = cross_entropy_loss(out, batch.labels[j]);
    r.per_sample.push_back(loss);
    sum += loss;
  }
  r.mean_loss = sum / static_cast<double>(batch.size());
  return r;
}

LossAndGradient loss_and_gradient(const ModelSpec& spec, const ParamVector& params,
                                  const Batch& batch) {
  check_inputs(spec, params, batch);
  require(batch.size() > 0, ErrorCode::kEmptyInput, "backward: empty batch");
  const Layout l = layout_of(spec);
  const std::size_t d = spec.input_dim, h = spec.hidden_dim, c = spec.num_classes;
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  LossAndGradient r;
  r.gradient = ParamVector(l.total);
  r.per_sample.reserve(batch.size());
  double* g = r.gradient.data();
  const double* p = params.data();

  std::vector<double> pre, hid, out, dz(c), dh;
  double sum = 0.0;
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const auto x = batch.row(j);
    forward_row(spec, l, params, x, pre, hid, out);
    require_finite_values(out, "backward");
    const std::size_t y = batch.labels[j];
    const double loss = cross_entropy_loss(out, y);
    r.per_sample.push_back(loss);
    sum += loss;

    // d(loss_j / B) / d logits = (softmax - onehot) / B
    const double top = *std::max_element(out.begin(), out.end());
    double z = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      dz[k] = std::exp(out[k] - top);
      z += dz[k];
    }
    for (std::size_t k = 0; k < c; ++k) dz[k] = (dz[k] / z - (k == y ? 1.0 : 0.0)) * inv_b;

    const std::span<const double> input = spec.kind == ModelKind::kMlp2
                                              ? std::span<const double>(hid)
                                              : x;
    const std::size_t in = input.size();
    for (std::size_t k = 0; k < c; ++k) {
      double* gw = g + l.w2 + k * in;
      for (std::size_t m = 0; m < in; ++m) gw[m] += dz[k] * input[m];
      g[l.b2 + k] += dz[k];
    }
    if (spec.kind == ModelKind::kLogisticRegression) continue;

    dh.assign(h, 0.0);
    for (std::size_t k = 0; k < c; ++k) {
      const double* w2 = p + l.w2 + k * h;
      for (std::size_t m = 0; m < h; ++m) dh[m] += w2[m] * dz[k];
    }
    for (std::size_t m = 0; m < h; ++m) {
      if (pre[m] <= 0.0) continue;
      double* gw = g + l.w1 + m * d;
      for (std::size_t q = 0; q < d; ++q) gw[q] += dh[m] * x[q];
      g[l.b1 + m] += dh[m];
    }
  }
  r.mean_loss = sum * inv_b;
  require_finite(r.gradient, "backward");
  return r;
}

ParamVector backward(const ModelSpec& spec, const ParamVector& params, const Batch& batch) {
  return loss_and_gradient(spec, params, batch).gradient;
}

ParamVector finite_diff_grad(const std::function<double(const ParamVector&)>& f,
                             const ParamVector& params, double h) {
  require(std::isfinite(h) && h > 0.0, ErrorCode::kInvalidArgument,
          "finite_diff_grad: step must be positive");
  ParamVector grad(params.size());
  ParamVector probe = params;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double orig = probe[k];
    probe[k] = orig + h;
    const double up = f(probe);
    probe[k] = orig - h;
    const double down = f(probe);
    probe[k] = orig;
    grad[k] = (up - down) / (2.0 * h);
  }
  require_finite(grad, "finite_diff_grad");
  return grad;
}

ParamVector finite_diff_grad(const ModelSpec& spec, const ParamVector& params, const Batch& batch,
                             double h) {
  require(std::isfinite(h) && h > 0.0, ErrorCode::kInvalidArgument,
          "finite_diff_grad: step must be positive");
  check_inputs(spec, params, batch);
  return finite_diff_grad(
      [&](const ParamVector& p) { return forward_loss(spec, p, batch).mean_loss; }, params, h);
}

std::vector<bool> kink_adjacent_coordinates(const ModelSpec& spec, const ParamVector& params,
                                            const Batch& batch, double h, double margin) {
  check_inputs(spec, params, batch);
  std::vector<bool> skip(params.size(), false);
  if (spec.kind != ModelKind::kMlp2) return skip;
  const Layout l = layout_of(spec);
  const std::size_t d = spec.input_dim;
  std::vector<double> pre, hid, out;
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const auto x = batch.row(j);
    forward_row(spec, l, params, x, pre, hid, out);
    for (std::size_t m = 0; m < spec.hidden_dim; ++m) {
      const double z = std::abs(pre[m]);
      // Perturbing W1[m][q] by h moves z by h*|x_q|; b1[m] moves it by h.
      if (z <= h + margin) skip[l.b1 + m] = true;
      for (std::size_t q = 0; q < d; ++q) {
        if (z <= h * std::abs(x[q]) + margin) skip[l.w1 + m * d + q] = true;
      }
      // W2/b2 perturbations never move pre-activations.
    }
  }
  return skip;
}

double max_relative_error(const ParamVector& a, const ParamVector& b,
                          const std::vector<bool>& skip, double floor) {
  require_same_length(a, b, "max_relative_error");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!skip.empty() && skip[k]) continue;
    const double denom = std::max({std::abs(a[k]), std::abs(b[k]), floor});
    worst = std::max(worst, std::abs(a[k] - b[k]) / denom);
  }
  return worst;
}

std::size_t predict(const ModelSpec& spec, const ParamVector& params, std::span<const double> x) {
  const auto z = logits(spec, params, x);
  // max_element returns the first maximum, which is the lowest-index tie-break.
  return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
}

double accuracy(const ModelSpec& spec, const ParamVector& params, std::span<const Batch> batches) {
  std::size_t total = 0, correct = 0;
  for (const auto& batch : batches) {
    check_inputs(spec, params, batch);
    for (std::size_t j = 0; j < batch.size(); ++j) {
      correct += predict(spec, params, batch.row(j)) == batch.labels[j] ? 1 : 0;
    }
    total += batch.size();
  }
  require(total > 0, ErrorCode::kEmptyInput, "accuracy: empty evaluation set");
  return static_cast<double>(correct) / static_cast<double>(total);
}

double accuracy(const ModelSpec& spec, const ParamVector& params, const Batch& batch) {
  return accuracy(spec, params, std::span<const Batch>(&batch, 1));
}

}  // namespace hsgd

namespace hsgd {

GradCheckReport gradient_check(std::size_t instances, std::uint64_t seed, double h) {
  GradCheckReport report;
  RngStream stream(seed, 0x67726164ULL);  // "grad"
  for (std::size_t i = 0; i < instances; ++i) {
    const std::size_t d = 1 + stream.uniform_below(6);
    const std::size_t c = 2 + stream.uniform_below(4);
    const ModelSpec spec = i % 2 == 0
                               ? ModelSpec::logistic_regression(d, c)
                               : ModelSpec::mlp2(d, 1 + stream.uniform_below(8), c);
    ParamVector params = init_params(spec, stream);
    const double scale = stream.uniform(0.5, 2.0);
    for (auto& v : params.values()) v = v * scale + 0.1 * stream.normal();

    Batch batch;
    batch.input_dim = d;
    const std::size_t b = 1 + stream.uniform_below(8);
    for (std::size_t j = 0; j < b; ++j) {
      for (std::size_t q = 0; q < d; ++q) batch.features.push_back(stream.normal());
      batch.labels.push_back(static_cast<std::uint32_t>(stream.uniform_below(c)));
      batch.sample_ids.push_back(j);
    }
    const ParamVector analytic = backward(spec, params, batch);
    const ParamVector numeric = finite_diff_grad(spec, params, batch, h);
    const auto skip = kink_adjacent_coordinates(spec, params, batch, h);
    const auto skipped = static_cast<std::size_t>(std::count(skip.begin(), skip.end(), true));
    report.coordinates_skipped += skipped;
    report.coordinates_checked += params.size() - skipped;
    report.max_relative_error =
        std::max(report.max_relative_error, max_relative_error(analytic, numeric, skip));
    ++report.instances;
  }
  return report;
}

}  // namespace hsgd
