#include "pelab/model.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>

#include "pelab/errors.hpp"

namespace pelab::model {

using encodings::BiasMatrix;
using encodings::Encoding;
using encodings::PEMatrix;
using encodings::Scheme;
using numkit::matmul;
using numkit::matmul_nt;
using numkit::matmul_tn;
using numkit::matmul_tn_acc;

namespace {

template <typename Params, typename Fn>
void visit_tensors(Params& p, Fn&& fn) {
  fn("w_in", p.w_in);
  for (std::size_t l = 0; l < kLayers; ++l) {
    auto& L = p.layers[l];
    const std::string pre = "layer" + std::to_string(l) + ".";
    fn(pre + "wq", L.wq);
    fn(pre + "wk", L.wk);
    fn(pre + "wv", L.wv);
    fn(pre + "wo", L.wo);
    fn(pre + "w_ff1", L.w_ff1);
    fn(pre + "b_ff1", L.b_ff1);
    fn(pre + "w_ff2", L.w_ff2);
    fn(pre + "b_ff2", L.b_ff2);
  }
  fn("w_out", p.w_out);
  if (p.learned) fn("learned_table", p.learned->values);
  if (p.relative) fn("relative_table", p.relative->values);
}

void add_row_vector(Matrix& m, const Matrix& row) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) r[j] += row(0, j);
  }
}

void accumulate_column_sums(const Matrix& m, Matrix& out) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) out(0, j) += r[j];
  }
}

Matrix gaussian(std::size_t rows, std::size_t cols, double stddev, numkit::SplitMix64& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = stddev * rng.normal();
  return m;
}

void check_dims(const Matrix& m, std::size_t rows, std::size_t cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(std::string(what) + " is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
}

}  // namespace

std::vector<NamedTensor> EncoderParams::tensors() {
  std::vector<NamedTensor> out;
  visit_tensors(*this, [&](const std::string& name, Matrix& m) { out.push_back({name, &m}); });
  return out;
}

std::vector<const Matrix*> EncoderParams::tensors() const {
  std::vector<const Matrix*> out;
  visit_tensors(*this, [&](const std::string&, const Matrix& m) { out.push_back(&m); });
  return out;
}

std::vector<std::string> EncoderParams::tensor_names() const {
  std::vector<std::string> out;
  visit_tensors(*this, [&](const std::string& name, const Matrix&) { out.push_back(name); });
  return out;
}

EncoderParams EncoderParams::zeros_like() const {
  EncoderParams z = *this;
  for (auto& t : z.tensors()) t.tensor->fill(0.0);
  return z;
}

bool EncoderParams::all_finite() const {
  const auto ts = tensors();
  return std::all_of(ts.begin(), ts.end(), [](const Matrix* m) { return m->all_finite(); });
}

EncoderParams& EncoderParams::operator+=(const EncoderParams& other) {
  auto mine = tensors();
  const auto theirs = other.tensors();
  if (mine.size() != theirs.size()) throw DimensionError("EncoderParams: structure mismatch");
  for (std::size_t i = 0; i < mine.size(); ++i) *mine[i].tensor += *theirs[i];
  return *this;
}

EncoderParams& EncoderParams::operator*=(double s) {
  for (auto& t : tensors()) *t.tensor *= s;
  return *this;
}

bool operator==(const EncoderParams& a, const EncoderParams& b) {
  const auto ta = a.tensors();
  const auto tb = b.tensors();
  if (ta.size() != tb.size()) return false;
  if (a.dims.d_model != b.dims.d_model || a.dims.d_ff != b.dims.d_ff ||
      a.dims.causal != b.dims.causal)
    return false;
  for (std::size_t i = 0; i < ta.size(); ++i)
    if (!(*ta[i] == *tb[i])) return false;
  return true;
}

EncoderParams init_params(const ModelConfig& dims, const encodings::SchemeConfig& scheme,
                          std::uint64_t seed) {
  if (dims.d_model != scheme.d_model)
    throw ConfigError("model.d_model", "model and scheme dimensions differ");
  if (dims.d_model < 1) throw ConfigError("model.d_model", "must be at least 1");
  if (dims.d_ff < 1) throw ConfigError("model.d_ff", "must be at least 1");
  const std::size_t d = dims.d_model, f = dims.d_ff;
  const double sd_d = 1.0 / std::sqrt(static_cast<double>(d));
  const double sd_f = 1.0 / std::sqrt(static_cast<double>(f));
  numkit::SplitMix64 rng(numkit::derive_seed(seed, 0x11));

  EncoderParams p;
  p.dims = dims;
  p.w_in = gaussian(1, d, 1.0, rng);
  for (auto& L : p.layers) {
    L.wq = gaussian(d, d, sd_d, rng);
    L.wk = gaussian(d, d, sd_d, rng);
    L.wv = gaussian(d, d, sd_d, rng);
    L.wo = gaussian(d, d, sd_d, rng);
    L.w_ff1 = gaussian(d, f, sd_d, rng);
    L.b_ff1 = Matrix(1, f);
    L.w_ff2 = gaussian(f, d, sd_f, rng);
    L.b_ff2 = Matrix(1, d);
  }
  p.w_out = gaussian(d, 1, sd_d, rng);
  if (scheme.scheme == Scheme::learned)
    p.learned = encodings::init_learned_table(scheme.n_max, d, numkit::derive_seed(seed, 0x12));
  if (scheme.scheme == Scheme::relative)
    p.relative = encodings::init_relative_table(scheme.clip_k, numkit::derive_seed(seed, 0x13));
  return p;
}

Matrix attention_forward(const Matrix& z, const LayerParams& layer, const BiasMatrix* bias,
                         bool causal, AttentionCache* cache) {
  const std::size_t n = z.rows();
  if (bias != nullptr) check_dims(bias->values, n, n, "attention bias");
  Matrix q = matmul(z, layer.wq);
  Matrix k = matmul(z, layer.wk);
  Matrix v = matmul(z, layer.wv);
  Matrix logits = matmul_nt(q, k);
  const double scale = 1.0 / std::sqrt(static_cast<double>(layer.wq.cols()));
  logits *= scale;
  if (bias != nullptr) logits += bias->values;
  if (causal) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        logits(i, j) = -std::numeric_limits<double>::infinity();
  }
  Matrix weights = numkit::softmax_rows(logits);
  Matrix mixed = matmul(weights, v);
  Matrix out = matmul(mixed, layer.wo);
  if (cache != nullptr) {
    cache->z_in = z;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->weights = std::move(weights);
    cache->mixed = std::move(mixed);
  }
  return out;
}

ForwardResult encoder_forward(const Matrix& x, const PEMatrix* pe, const BiasMatrix* bias,
                              const EncoderParams& params, bool causal) {
  const std::size_t n = x.rows(), d = params.dims.d_model;
  if (x.cols() != 1) throw DimensionError("encoder_forward: input must be N x 1");
  if (pe != nullptr) check_dims(pe->values, n, d, "positional encoding");

  ForwardResult res;
  res.cache.x = x;
  res.cache.has_bias = bias != nullptr;
  Matrix z = matmul(x, params.w_in);
  if (pe != nullptr) z += pe->values;

  for (std::size_t l = 0; l < kLayers; ++l) {
    const auto& L = params.layers[l];
    auto& C = res.cache.layers[l];
    Matrix attn = attention_forward(z, L, bias, causal, &C.attn);
    C.z_mid = z + attn;
    C.ff_pre = matmul(C.z_mid, L.w_ff1);
    add_row_vector(C.ff_pre, L.b_ff1);
    C.ff_act = C.ff_pre;
    for (double& v : C.ff_act.data()) v = std::max(v, 0.0);
    Matrix ff = matmul(C.ff_act, L.w_ff2);
    add_row_vector(ff, L.b_ff2);
    z = C.z_mid + ff;
  }
  res.predictions = matmul(z, params.w_out);
  res.cache.z_out = std::move(z);
  return res;
}

LossResult mse_loss(const Matrix& pred, const Matrix& target) {
  if (!pred.same_shape(target)) throw DimensionError("mse_loss: prediction/target shape mismatch");
  LossResult r;
  r.gradient = Matrix(pred.rows(), pred.cols());
  const double inv = 1.0 / static_cast<double>(pred.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred.data()[i] - target.data()[i];
    acc += e * e;
    r.gradient.data()[i] = 2.0 * e * inv;
  }
  r.loss = acc * inv;
  return r;
}

EncoderParams encoder_backward(const ForwardCache& cache, const Matrix& loss_gradient,
                               const EncoderParams& params) {
  const std::size_t n = cache.x.rows(), d = params.dims.d_model;
  if (n == 0 || cache.z_out.empty())
    throw UsageError("encoder_backward: cache is empty; run encoder_forward first");
  if (cache.z_out.rows() != n || cache.z_out.cols() != d ||
      cache.layers[0].ff_pre.cols() != params.dims.d_ff)
    throw UsageError("encoder_backward: cache does not match these parameters");
  check_dims(loss_gradient, n, 1, "loss gradient");

  EncoderParams g = params.zeros_like();
  matmul_tn_acc(cache.z_out, loss_gradient, g.w_out);
  Matrix dz = matmul_nt(loss_gradient, params.w_out);
  Matrix dbias;
  if (params.relative && cache.has_bias) dbias = Matrix(n, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  for (std::size_t li = kLayers; li-- > 0;) {
    const auto& L = params.layers[li];
    const auto& C = cache.layers[li];
    auto& G = g.layers[li];

    // Feed-forward branch.
    matmul_tn_acc(C.ff_act, dz, G.w_ff2);
    accumulate_column_sums(dz, G.b_ff2);
    Matrix dpre = matmul_nt(dz, L.w_ff2);
    for (std::size_t i = 0; i < dpre.size(); ++i)
      if (C.ff_pre.data()[i] <= 0.0) dpre.data()[i] = 0.0;
    matmul_tn_acc(C.z_mid, dpre, G.w_ff1);
    accumulate_column_sums(dpre, G.b_ff1);
    Matrix dmid = dz + matmul_nt(dpre, L.w_ff1);

    // Attention branch.
    const auto& A = C.attn;
    matmul_tn_acc(A.mixed, dmid, G.wo);
    Matrix dmixed = matmul_nt(dmid, L.wo);
    Matrix dweights = matmul_nt(dmixed, A.v);
    Matrix dv = matmul_tn(A.weights, dmixed);
    Matrix dlogits(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto w = A.weights.row(i);
      const auto dw = dweights.row(i);
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += w[j] * dw[j];
      auto ds = dlogits.row(i);
      for (std::size_t j = 0; j < n; ++j) ds[j] = w[j] * (dw[j] - dot);
    }
    if (!dbias.empty()) dbias += dlogits;
    Matrix dq = matmul(dlogits, A.k);
    dq *= scale;
    Matrix dk = matmul_tn(dlogits, A.q);
    dk *= scale;
    matmul_tn_acc(A.z_in, dq, G.wq);
    matmul_tn_acc(A.z_in, dk, G.wk);
    matmul_tn_acc(A.z_in, dv, G.wv);
    dmid += matmul_nt(dq, L.wq);
    dmid += matmul_nt(dk, L.wk);
    dmid += matmul_nt(dv, L.wv);
    dz = std::move(dmid);
  }

  matmul_tn_acc(cache.x, dz, g.w_in);
  if (g.learned) {
    auto& table = g.learned->values;
    const std::size_t last = table.rows() - 1;
    for (std::size_t pos = 0; pos < n; ++pos) {
      auto dst = table.row(std::min(pos, last));
      const auto src = dz.row(pos);
      for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
    }
  }
  if (g.relative && !dbias.empty()) {
    auto r = g.relative->values.row(0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) r[params.relative->index(i, j)] += dbias(i, j);
  }
  return g;
}

PositionalContext::PositionalContext(encodings::SchemeConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (cfg_.scheme == Scheme::wavelet) tables_ = encodings::daubechies4_tables(cfg_.refinement_levels);
}

Encoding PositionalContext::build(std::size_t n, const EncoderParams& params) {
  if (cfg_.scheme == Scheme::learned || cfg_.scheme == Scheme::relative) {
    encodings::TrainableTables t;
    if (params.learned) t.learned = &*params.learned;
    if (params.relative) t.relative = &*params.relative;
    return encodings::encode(cfg_, n, t);
  }
  auto it = fixed_.find(n);
  if (it == fixed_.end())
    it = fixed_.emplace(n, encodings::encode(cfg_, n, {}, tables_ ? &*tables_ : nullptr)).first;
  return it->second;
}

ForwardResult predict(const Matrix& x, PositionalContext& ctx, const EncoderParams& params) {
  const Encoding enc = ctx.build(x.rows(), params);
  return encoder_forward(x, enc.pe ? &*enc.pe : nullptr, enc.bias ? &*enc.bias : nullptr, params,
                         params.dims.causal);
}

void TrainConfig::validate() const {
  if (n_train_samples < 1) throw ConfigError("task.n_train_samples", "must be at least 1");
  if (seq_len < 1) throw ConfigError("task.seq_len", "must be at least 1");
  if (epochs < 1) throw ConfigError("train.epochs", "must be at least 1");
  if (batch_size < 1) throw ConfigError("train.batch_size", "must be at least 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("train.lr", "must be finite and >= 0");
  if (model.d_model != scheme.d_model)
    throw ConfigError("model.d_model", "model and scheme dimensions differ");
  scheme.validate();
}

namespace {

struct SampleResult {
  double loss = 0.0;
  EncoderParams grad;
};

SampleResult sample_gradient(const EncoderParams& params, const Encoding& enc,
                             const tasks::Dataset& data, std::size_t s) {
  auto fwd = encoder_forward(data.inputs[s], enc.pe ? &*enc.pe : nullptr,
                             enc.bias ? &*enc.bias : nullptr, params, params.dims.causal);
  auto l = mse_loss(fwd.predictions, data.targets[s]);
  return {l.loss, encoder_backward(fwd.cache, l.gradient, params)};
}

BatchResult reduce(std::vector<SampleResult>& slots) {
  BatchResult r;
  r.grad = std::move(slots.front().grad);
  r.loss = slots.front().loss;
  for (std::size_t i = 1; i < slots.size(); ++i) {
    r.grad += slots[i].grad;
    r.loss += slots[i].loss;
  }
  const double inv = 1.0 / static_cast<double>(slots.size());
  r.grad *= inv;
  r.loss *= inv;
  return r;
}

}  // namespace

BatchResult batch_gradient(const EncoderParams& params, const Encoding& enc,
                           const tasks::Dataset& data, std::span<const std::size_t> indices) {
  if (indices.empty()) throw UsageError("batch_gradient: empty batch");
  std::vector<SampleResult> slots(indices.size());
  std::exception_ptr failure;
  const auto count = static_cast<std::ptrdiff_t>(indices.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      slots[static_cast<std::size_t>(i)] =
          sample_gradient(params, enc, data, indices[static_cast<std::size_t>(i)]);
    } catch (...) {
#pragma omp critical(pelab_batch_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return reduce(slots);
}

BatchResult batch_gradient_serial(const EncoderParams& params, const Encoding& enc,
                                  const tasks::Dataset& data,
                                  std::span<const std::size_t> indices) {
  if (indices.empty()) throw UsageError("batch_gradient: empty batch");
  std::vector<SampleResult> slots;
  slots.reserve(indices.size());
  for (std::size_t s : indices) slots.push_back(sample_gradient(params, enc, data, s));
  return reduce(slots);
}

TrainResult train(const TrainConfig& cfg, const tasks::Dataset& data) {
  cfg.validate();
  if (data.seq_len != cfg.seq_len || data.size() == 0)
    throw UsageError("train: dataset length does not match the configured seq_len");

  TrainResult res;
  res.params = init_params(cfg.model, cfg.scheme, cfg.seed);
  PositionalContext ctx(cfg.scheme);
  numkit::SplitMix64 shuffle(numkit::derive_seed(cfg.seed, 0x21));

  auto named = res.params.tensors();
  std::vector<numkit::Matrix*> ptrs;
  for (auto& t : named) ptrs.push_back(t.tensor);
  std::vector<const numkit::Matrix*> cptrs(ptrs.begin(), ptrs.end());
  auto state = numkit::AdamState::for_params(cptrs);
  const numkit::AdamHyper hyper{cfg.lr, 0.9, 0.999, 1e-8};

  const std::size_t n = std::min(cfg.n_train_samples, data.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
    double loss_sum = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_no) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, stop - start);
      const Encoding enc = ctx.build(cfg.seq_len, res.params);
      BatchResult br = batch_gradient(res.params, enc, data, idx);
      if (!std::isfinite(br.loss) || !br.grad.all_finite())
        throw TrainingDiverged(epoch + 1, batch_no + 1);
      std::vector<const numkit::Matrix*> gptrs;
      for (const auto& t : br.grad.tensors()) gptrs.push_back(t.tensor);
      numkit::adam_step(ptrs, gptrs, state, hyper);
      if (!res.params.all_finite()) throw TrainingDiverged(epoch + 1, batch_no + 1);
      loss_sum += br.loss * static_cast<double>(idx.size());
    }
    res.epoch_losses.push_back(loss_sum / static_cast<double>(n));
  }
  return res;
}

double evaluate(const EncoderParams& params, const encodings::SchemeConfig& scheme,
                const tasks::Dataset& data) {
  if (data.size() == 0) throw UsageError("evaluate: empty dataset");
  PositionalContext ctx(scheme);
  const Encoding enc = ctx.build(data.seq_len, params);
  std::vector<double> losses(data.size());
  const auto count = static_cast<std::ptrdiff_t>(data.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t s = 0; s < count; ++s) {
    const auto i = static_cast<std::size_t>(s);
    auto fwd = encoder_forward(data.inputs[i], enc.pe ? &*enc.pe : nullptr,
                               enc.bias ? &*enc.bias : nullptr, params, params.dims.causal);
    double acc = 0.0;
    for (std::size_t t = 0; t < data.seq_len; ++t) {
      const double e = fwd.predictions(t, 0) - data.targets[i](t, 0);
      acc += e * e;
    }
    losses[i] = acc / static_cast<double>(data.seq_len);
  }
  double total = 0.0;
  for (double l : losses) total += l;
  return total / static_cast<double>(losses.size());
}

}  // namespace pelab::model
