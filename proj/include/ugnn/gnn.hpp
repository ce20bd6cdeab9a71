#pragma once

// Two-layer graph networks over a representation matrix, trained with Adam,
// weight decay and early stopping on validation loss.  Identity features are
// never materialized: the first layer then reduces to row-selection of W0,
// which keeps memory at O(N * hidden) even though the nominal input is N x N.
// All gradients are closed-form; the tests check them against central
// differences.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "ugnn/dense.hpp"
#include "ugnn/graph.hpp"
#include "ugnn/representation.hpp"
#include "ugnn/rng.hpp"

namespace ugnn {

enum class Architecture { gcn, gat };

inline const char* architecture_name(Architecture a) {
  return a == Architecture::gcn ? "gcn" : "gat";
}

struct ModelConfig {
  Architecture architecture = Architecture::gcn;
  int hidden_dim = 16;
  int layers = 2;
  double dropout = 0.5;
  double learning_rate = 0.01;
  double weight_decay = 5e-4;
  int max_epochs = 200;
  int patience = 20;
  std::uint64_t seed = 0;

  void validate() const {
    if (hidden_dim <= 0) throw std::invalid_argument("ModelConfig: hidden_dim must be positive");
    if (layers != 2) throw std::invalid_argument("ModelConfig: only two-layer models are supported");
    if (!(dropout >= 0.0 && dropout < 1.0)) {
      throw std::invalid_argument("ModelConfig: dropout must lie in [0, 1)");
    }
    if (!(learning_rate > 0.0)) throw std::invalid_argument("ModelConfig: learning_rate must be positive");
    if (weight_decay < 0.0) throw std::invalid_argument("ModelConfig: weight_decay must be non-negative");
    if (max_epochs <= 0) throw std::invalid_argument("ModelConfig: max_epochs must be positive");
    if (patience <= 0) throw std::invalid_argument("ModelConfig: patience must be positive");
  }
};

struct ModelParams {
  Architecture architecture = Architecture::gcn;
  Matrix w0;               // in_dim x hidden
  Matrix w1;               // hidden x out_dim
  std::vector<double> a0;  // 2 * hidden, attention (gat only)
  std::vector<double> a1;  // 2 * out_dim, attention (gat only)
  std::uint64_t seed = 0;
  std::string init_scheme = "glorot-uniform";

  template <class F>
  void for_each_tensor(F&& f) {
    f(w0.data);
    f(w1.data);
    if (architecture == Architecture::gat) {
      f(a0);
      f(a1);
    }
  }
};

struct TrainingDivergence : std::runtime_error {
  int epoch;
  TrainingDivergence(const std::string& what, int epoch_)
      : std::runtime_error(what), epoch(epoch_) {}
};

namespace gnn_detail {

inline double glorot_limit(int fan_in, int fan_out) {
  return std::sqrt(6.0 / (fan_in + fan_out));
}

inline void glorot_fill(Matrix& m, rng::Generator& gen) {
  const double l = glorot_limit(m.rows, m.cols);
  for (double& v : m.data) v = gen.uniform(-l, l);
}

inline void glorot_fill(std::vector<double>& v, rng::Generator& gen) {
  const double l = glorot_limit(static_cast<int>(v.size()), 1);
  for (double& x : v) x = gen.uniform(-l, l);
}

// Precomputed structures shared by every forward pass on one representation.
struct Workspace {
  Architecture architecture = Architecture::gcn;
  int N = 0;
  int in_dim = 0;       // N for identity features
  bool identity = true;
  const Matrix* features = nullptr;  // explicit features only
  SparseMatrix a_hat;   // gcn operator
  // gat adjacency with self-loops, row-major over the symmetric pattern
  std::vector<std::int64_t> row_ptr;
  std::vector<int> col;
};

inline Workspace make_workspace(const Representation& rep, const ModelConfig& config) {
  Workspace ws;
  ws.architecture = config.architecture;
  ws.N = rep.N();
  ws.identity = rep.features.kind == FeatureMatrix::Kind::identity;
  ws.in_dim = ws.identity ? ws.N : rep.features.dim;
  if (!ws.identity) {
    if (rep.features.dense.rows != ws.N) {
      throw std::invalid_argument("forward: feature rows differ from representation size");
    }
    ws.features = &rep.features.dense;
  }
  if (config.architecture == Architecture::gcn) {
    ws.a_hat = normalize_for_gcn(rep);
  } else {
    if (!rep.matrix.is_symmetric()) {
      throw std::invalid_argument("forward: representation matrix not symmetric");
    }
    ws.row_ptr.assign(ws.N + 1, 0);
    for (int i = 0; i < ws.N; ++i) {
      auto rows = rep.matrix.column_rows(i);
      bool has_self = false;
      for (int r : rows) has_self |= r == i;
      ws.row_ptr[i + 1] = ws.row_ptr[i] + static_cast<std::int64_t>(rows.size()) + (has_self ? 0 : 1);
    }
    ws.col.resize(ws.row_ptr[ws.N]);
    for (int i = 0; i < ws.N; ++i) {
      std::int64_t at = ws.row_ptr[i];
      auto rows = rep.matrix.column_rows(i);
      bool inserted = false;
      for (int r : rows) {
        if (!inserted && r > i) {
          ws.col[at++] = i;
          inserted = true;
        }
        ws.col[at++] = r;
        if (r == i) inserted = true;
      }
      if (!inserted) ws.col[at++] = i;
    }
  }
  return ws;
}

// Multiplier masks: 0 for dropped units, 1/(1-p) for kept ones; empty in
// evaluation mode (treated as all-ones).
struct DropoutPlan {
  bool active = false;
  double scale = 1.0;
  std::vector<double> input;   // identity: per row; explicit: per element
  std::vector<double> hidden;  // per element of H1
  std::vector<double> attn0;   // per edge (gat)
  std::vector<double> attn1;
};

inline DropoutPlan make_dropout(const Workspace& ws, const ModelConfig& config,
                                int hidden_dim, std::uint64_t epoch_key, bool training) {
  DropoutPlan plan;
  if (!training || config.dropout == 0.0) return plan;
  plan.active = true;
  plan.scale = 1.0 / (1.0 - config.dropout);
  rng::Generator gen(epoch_key);
  auto fill = [&](std::vector<double>& mask, std::size_t count) {
    mask.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      mask[i] = gen.uniform() < config.dropout ? 0.0 : plan.scale;
    }
  };
  fill(plan.input, ws.identity ? static_cast<std::size_t>(ws.N)
                               : static_cast<std::size_t>(ws.N) * ws.in_dim);
  fill(plan.hidden, static_cast<std::size_t>(ws.N) * hidden_dim);
  if (ws.architecture == Architecture::gat) {
    fill(plan.attn0, ws.col.size());
    fill(plan.attn1, ws.col.size());
  }
  return plan;
}

// S = dropout(X) W for the first layer.  Identity features select rows of W.
inline void input_times(const Workspace& ws, const DropoutPlan& plan, const Matrix& w,
                        Matrix& s) {
  if (ws.identity) {
    s = w;
    if (plan.active) {
      for (int i = 0; i < ws.N; ++i) {
        const double m = plan.input[i];
        double* row = s.row(i);
        for (int j = 0; j < s.cols; ++j) row[j] *= m;
      }
    }
    return;
  }
  if (!plan.active) {
    matmul(*ws.features, w, s);
    return;
  }
  Matrix masked = *ws.features;
  for (std::size_t i = 0; i < masked.data.size(); ++i) masked.data[i] *= plan.input[i];
  matmul(masked, w, s);
}

// dW from dS through the same masked input.
inline void input_times_grad(const Workspace& ws, const DropoutPlan& plan, const Matrix& ds,
                             Matrix& dw) {
  if (ws.identity) {
    dw = ds;
    if (plan.active) {
      for (int i = 0; i < ws.N; ++i) {
        const double m = plan.input[i];
        double* row = dw.row(i);
        for (int j = 0; j < dw.cols; ++j) row[j] *= m;
      }
    }
    return;
  }
  if (!plan.active) {
    matmul_tn(*ws.features, ds, dw);
    return;
  }
  Matrix masked = *ws.features;
  for (std::size_t i = 0; i < masked.data.size(); ++i) masked.data[i] *= plan.input[i];
  matmul_tn(masked, ds, dw);
}

struct GatLayerCache {
  Matrix s;                  // N x g
  std::vector<double> fsrc;  // N
  std::vector<double> gdst;  // N
  std::vector<double> raw;   // per edge, before LeakyReLU
  std::vector<double> alpha; // per edge, after softmax
};

inline constexpr double kLeakySlope = 0.2;

inline void gat_layer_forward(const Workspace& ws, const Matrix& s,
                              const std::vector<double>& a, const std::vector<double>& amask,
                              double scale, GatLayerCache& cache, Matrix& out) {
  const int g = s.cols;
  const int N = ws.N;
  cache.s = s;
  cache.fsrc.assign(N, 0.0);
  cache.gdst.assign(N, 0.0);
  for (int i = 0; i < N; ++i) {
    const double* si = s.row(i);
    double f = 0.0, h = 0.0;
    for (int k = 0; k < g; ++k) {
      f += si[k] * a[k];
      h += si[k] * a[g + k];
    }
    cache.fsrc[i] = f;
    cache.gdst[i] = h;
  }
  const std::size_t edges = ws.col.size();
  cache.raw.resize(edges);
  cache.alpha.resize(edges);
  out = Matrix(N, g);
  for (int i = 0; i < N; ++i) {
    const std::int64_t lo = ws.row_ptr[i], hi = ws.row_ptr[i + 1];
    double vmax = -1e300;
    for (std::int64_t e = lo; e < hi; ++e) {
      const double raw = cache.fsrc[i] + cache.gdst[ws.col[e]];
      cache.raw[e] = raw;
      const double act = raw > 0.0 ? raw : kLeakySlope * raw;
      if (act > vmax) vmax = act;
    }
    double sum = 0.0;
    for (std::int64_t e = lo; e < hi; ++e) {
      const double raw = cache.raw[e];
      const double act = raw > 0.0 ? raw : kLeakySlope * raw;
      const double v = std::exp(act - vmax);
      cache.alpha[e] = v;
      sum += v;
    }
    double* oi = out.row(i);
    for (std::int64_t e = lo; e < hi; ++e) {
      cache.alpha[e] /= sum;
      const double w = amask.empty() ? cache.alpha[e] : cache.alpha[e] * amask[e] * scale;
      const double* sj = s.row(ws.col[e]);
      for (int k = 0; k < g; ++k) oi[k] += w * sj[k];
    }
  }
}

// Returns dS; accumulates attention-vector gradients into da.
inline void gat_layer_backward(const Workspace& ws, const GatLayerCache& cache,
                               const std::vector<double>& a, const std::vector<double>& amask,
                               double scale, const Matrix& dout, Matrix& ds,
                               std::vector<double>& da) {
  const int g = cache.s.cols;
  const int N = ws.N;
  ds = Matrix(N, g);
  std::vector<double> df(N, 0.0), dg(N, 0.0);
  std::vector<double> dalpha;
  for (int i = 0; i < N; ++i) {
    const std::int64_t lo = ws.row_ptr[i], hi = ws.row_ptr[i + 1];
    dalpha.assign(hi - lo, 0.0);
    const double* doi = dout.row(i);
    for (std::int64_t e = lo; e < hi; ++e) {
      const int j = ws.col[e];
      const double* sj = cache.s.row(j);
      double dot = 0.0;
      for (int k = 0; k < g; ++k) dot += doi[k] * sj[k];
      const double drop = amask.empty() ? 1.0 : amask[e] * scale;
      dalpha[e - lo] = dot * drop;
      const double w = cache.alpha[e] * drop;
      double* dsj = ds.row(j);
      for (int k = 0; k < g; ++k) dsj[k] += w * doi[k];
    }
    double inner = 0.0;
    for (std::int64_t e = lo; e < hi; ++e) inner += cache.alpha[e] * dalpha[e - lo];
    for (std::int64_t e = lo; e < hi; ++e) {
      const double dl = cache.alpha[e] * (dalpha[e - lo] - inner);
      const double draw = cache.raw[e] > 0.0 ? dl : kLeakySlope * dl;
      df[i] += draw;
      dg[ws.col[e]] += draw;
    }
  }
  for (int i = 0; i < N; ++i) {
    double* dsi = ds.row(i);
    const double* si = cache.s.row(i);
    for (int k = 0; k < g; ++k) {
      dsi[k] += df[i] * a[k] + dg[i] * a[g + k];
      da[k] += df[i] * si[k];
      da[g + k] += dg[i] * si[k];
    }
  }
}

struct ForwardCache {
  DropoutPlan dropout;
  Matrix s0;      // first-layer pre-aggregation
  Matrix z1;      // first-layer pre-activation
  Matrix h1;      // ReLU output
  Matrix h1d;     // after hidden dropout
  Matrix s1;      // second-layer pre-aggregation
  Matrix logits;  // N x out_dim
  GatLayerCache gat0, gat1;
};

inline void check_finite(const Matrix& m, int layer, int epoch) {
  if (!all_finite(m)) {
    throw TrainingDivergence(
        "non-finite values in layer " + std::to_string(layer) + " output", epoch);
  }
}

inline void forward_pass(const Workspace& ws, const ModelParams& params,
                         const ModelConfig& config, bool training, std::uint64_t epoch_key,
                         int epoch, ForwardCache& cache) {
  if (params.w0.rows != ws.in_dim || params.w0.cols != config.hidden_dim ||
      params.w1.rows != config.hidden_dim) {
    throw std::invalid_argument("forward: parameter shapes inconsistent with input");
  }
  cache.dropout = make_dropout(ws, config, config.hidden_dim, epoch_key, training);
  input_times(ws, cache.dropout, params.w0, cache.s0);

  if (ws.architecture == Architecture::gcn) {
    spmm(ws.a_hat, cache.s0, cache.z1);
  } else {
    gat_layer_forward(ws, cache.s0, params.a0, cache.dropout.attn0, cache.dropout.scale,
                      cache.gat0, cache.z1);
  }
  check_finite(cache.z1, 0, epoch);

  cache.h1 = cache.z1;
  for (double& v : cache.h1.data) v = v > 0.0 ? v : 0.0;
  cache.h1d = cache.h1;
  if (cache.dropout.active) {
    for (std::size_t i = 0; i < cache.h1d.data.size(); ++i) {
      cache.h1d.data[i] *= cache.dropout.hidden[i];
    }
  }

  matmul(cache.h1d, params.w1, cache.s1);
  if (ws.architecture == Architecture::gcn) {
    spmm(ws.a_hat, cache.s1, cache.logits);
  } else {
    gat_layer_forward(ws, cache.s1, params.a1, cache.dropout.attn1, cache.dropout.scale,
                      cache.gat1, cache.logits);
  }
  check_finite(cache.logits, 1, epoch);
}

inline ModelParams zero_like(const ModelParams& p) {
  ModelParams g = p;
  g.w0.fill(0.0);
  g.w1.fill(0.0);
  g.a0.assign(g.a0.size(), 0.0);
  g.a1.assign(g.a1.size(), 0.0);
  return g;
}

inline void backward_pass(const Workspace& ws, const ModelParams& params,
                          const ForwardCache& cache, const Matrix& dlogits,
                          ModelParams& grads) {
  Matrix ds1;
  if (ws.architecture == Architecture::gcn) {
    spmm(ws.a_hat, dlogits, ds1);
  } else {
    gat_layer_backward(ws, cache.gat1, params.a1, cache.dropout.attn1, cache.dropout.scale,
                       dlogits, ds1, grads.a1);
  }
  matmul_tn(cache.h1d, ds1, grads.w1);

  Matrix dh1d;
  matmul_nt(ds1, params.w1, dh1d);
  if (cache.dropout.active) {
    for (std::size_t i = 0; i < dh1d.data.size(); ++i) {
      dh1d.data[i] *= cache.dropout.hidden[i];
    }
  }
  for (std::size_t i = 0; i < dh1d.data.size(); ++i) {
    if (cache.z1.data[i] <= 0.0) dh1d.data[i] = 0.0;
  }

  Matrix ds0;
  if (ws.architecture == Architecture::gcn) {
    spmm(ws.a_hat, dh1d, ds0);
  } else {
    gat_layer_backward(ws, cache.gat0, params.a0, cache.dropout.attn0, cache.dropout.scale,
                       dh1d, ds0, grads.a0);
  }
  input_times_grad(ws, cache.dropout, ds0, grads.w0);
}

struct MaskedTarget {
  std::vector<int> rows;
  std::vector<int> labels;
};

inline MaskedTarget resolve_mask(const Representation& rep, const RoleLabelView& view,
                                 const std::vector<NodeTimePair>& mask) {
  if (mask.empty()) throw std::invalid_argument("loss: empty mask");
  MaskedTarget t;
  t.rows.reserve(mask.size());
  t.labels.reserve(mask.size());
  for (const NodeTimePair& w : mask) {
    t.rows.push_back(rep.row_of(w));
    t.labels.push_back(view.class_of(w));
  }
  return t;
}

// Mean cross-entropy over the masked rows; fills dlogits for those rows.
inline double masked_cross_entropy(const Matrix& logits, const MaskedTarget& target,
                                   Matrix* dlogits) {
  const int d = logits.cols;
  const double inv = 1.0 / static_cast<double>(target.rows.size());
  if (dlogits) *dlogits = Matrix(logits.rows, d);
  double loss = 0.0;
  std::vector<double> prob(d);
  for (std::size_t k = 0; k < target.rows.size(); ++k) {
    const double* row = logits.row(target.rows[k]);
    const double lse = log_sum_exp(row, d);
    loss += (lse - row[target.labels[k]]) * inv;
    if (dlogits) {
      double* drow = dlogits->row(target.rows[k]);
      softmax_row(row, prob.data(), d);
      for (int c = 0; c < d; ++c) drow[c] += prob[c] * inv;
      drow[target.labels[k]] -= inv;
    }
  }
  return loss;
}

inline double weight_decay_term(const ModelParams& params, double wd, ModelParams* grads) {
  if (wd == 0.0) return 0.0;
  double term = 0.0;
  auto add = [&](const std::vector<double>& theta, std::vector<double>* g) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
      term += 0.5 * wd * theta[i] * theta[i];
      if (g) (*g)[i] += wd * theta[i];
    }
  };
  add(params.w0.data, grads ? &grads->w0.data : nullptr);
  add(params.w1.data, grads ? &grads->w1.data : nullptr);
  if (params.architecture == Architecture::gat) {
    add(params.a0, grads ? &grads->a0 : nullptr);
    add(params.a1, grads ? &grads->a1 : nullptr);
  }
  return term;
}

struct AdamState {
  ModelParams m;
  ModelParams v;
  int t = 0;

  explicit AdamState(const ModelParams& like) : m(zero_like(like)), v(zero_like(like)) {}
};

inline void adam_step(ModelParams& params, ModelParams& grads, AdamState& state, double lr) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  ++state.t;
  const double c1 = 1.0 - std::pow(b1, state.t);
  const double c2 = 1.0 - std::pow(b2, state.t);
  auto update = [&](std::vector<double>& theta, std::vector<double>& g, std::vector<double>& m,
                    std::vector<double>& v) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      theta[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  };
  update(params.w0.data, grads.w0.data, state.m.w0.data, state.v.w0.data);
  update(params.w1.data, grads.w1.data, state.m.w1.data, state.v.w1.data);
  if (params.architecture == Architecture::gat) {
    update(params.a0, grads.a0, state.m.a0, state.v.a0);
    update(params.a1, grads.a1, state.m.a1, state.v.a1);
  }
}

}  // namespace gnn_detail

inline ModelParams init_params(const Representation& rep, const ModelConfig& config,
                               int out_dim) {
  config.validate();
  if (out_dim <= 0) throw std::invalid_argument("init_params: out_dim must be positive");
  const int in_dim = rep.features.kind == FeatureMatrix::Kind::identity
                         ? rep.N()
                         : rep.features.dim;
  ModelParams p;
  p.architecture = config.architecture;
  p.seed = config.seed;
  p.w0 = Matrix(in_dim, config.hidden_dim);
  p.w1 = Matrix(config.hidden_dim, out_dim);
  rng::Generator g0(rng::derive(config.seed, rng::kParamInit, 0));
  rng::Generator g1(rng::derive(config.seed, rng::kParamInit, 1));
  gnn_detail::glorot_fill(p.w0, g0);
  gnn_detail::glorot_fill(p.w1, g1);
  if (config.architecture == Architecture::gat) {
    p.a0.assign(2 * config.hidden_dim, 0.0);
    p.a1.assign(2 * out_dim, 0.0);
    rng::Generator ga0(rng::derive(config.seed, rng::kParamInit, 2));
    rng::Generator ga1(rng::derive(config.seed, rng::kParamInit, 3));
    gnn_detail::glorot_fill(p.a0, ga0);
    gnn_detail::glorot_fill(p.a1, ga1);
  }
  return p;
}

// Evaluation-mode forward: no dropout, deterministic.
inline Matrix forward(const ModelParams& params, const Representation& rep,
                      const ModelConfig& config) {
  config.validate();
  gnn_detail::Workspace ws = gnn_detail::make_workspace(rep, config);
  gnn_detail::ForwardCache cache;
  gnn_detail::forward_pass(ws, params, config, false, 0, -1, cache);
  return cache.logits;
}

struct LossGrads {
  double loss = 0.0;
  ModelParams grads;
};

// Training-mode loss and exact gradients for one step; dropout_key seeds the
// epoch's masks (dropout applies only when config.dropout > 0).
inline LossGrads loss_and_grads(const ModelParams& params, const Representation& rep,
                                const RoleLabelView& labels,
                                const std::vector<NodeTimePair>& mask,
                                const ModelConfig& config, std::uint64_t dropout_key = 0) {
  config.validate();
  gnn_detail::Workspace ws = gnn_detail::make_workspace(rep, config);
  gnn_detail::MaskedTarget target = gnn_detail::resolve_mask(rep, labels, mask);
  gnn_detail::ForwardCache cache;
  gnn_detail::forward_pass(ws, params, config, true, dropout_key, -1, cache);

  LossGrads out;
  out.grads = gnn_detail::zero_like(params);
  Matrix dlogits;
  out.loss = gnn_detail::masked_cross_entropy(cache.logits, target, &dlogits);
  gnn_detail::backward_pass(ws, params, cache, dlogits, out.grads);
  out.loss += gnn_detail::weight_decay_term(params, config.weight_decay, &out.grads);
  return out;
}

struct TrainResult {
  ModelParams params;
  EmbeddingMatrix embedding;
  Matrix logits;
  int best_epoch = 0;
  int epochs_run = 0;
  double best_validation_loss = 0.0;
};

// Trains on the index's training pairs with early stopping on validation
// cross-entropy, restores the best parameters and returns the eval-mode
// embedding.  Label access is limited to training and validation roles.
inline TrainResult train(const Representation& rep, const LabelTable& labels,
                         const NodeTimeIndex& index, const ModelConfig& config) {
  config.validate();
  index.validate_shape();
  RoleLabelView train_view(labels, index, {Role::training});
  RoleLabelView val_view(labels, index, {Role::validation});
  std::vector<NodeTimePair> train_pairs = index.pairs_with_role(Role::training);
  std::vector<NodeTimePair> val_pairs = index.pairs_with_role(Role::validation);
  if (train_pairs.empty() || val_pairs.empty()) {
    throw std::invalid_argument("train: empty training or validation role");
  }

  gnn_detail::Workspace ws = gnn_detail::make_workspace(rep, config);
  gnn_detail::MaskedTarget train_target = gnn_detail::resolve_mask(rep, train_view, train_pairs);
  gnn_detail::MaskedTarget val_target = gnn_detail::resolve_mask(rep, val_view, val_pairs);

  ModelParams params = init_params(rep, config, labels.d);
  gnn_detail::AdamState adam(params);

  TrainResult result;
  result.best_validation_loss = std::numeric_limits<double>::infinity();
  ModelParams best = params;
  int since_best = 0;

  gnn_detail::ForwardCache cache;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const std::uint64_t key = rng::derive(config.seed, rng::kDropout, epoch);
    gnn_detail::forward_pass(ws, params, config, true, key, epoch, cache);
    Matrix dlogits;
    double loss = gnn_detail::masked_cross_entropy(cache.logits, train_target, &dlogits);
    ModelParams grads = gnn_detail::zero_like(params);
    gnn_detail::backward_pass(ws, params, cache, dlogits, grads);
    loss += gnn_detail::weight_decay_term(params, config.weight_decay, &grads);
    if (!std::isfinite(loss)) throw TrainingDivergence("training loss became non-finite", epoch);
    gnn_detail::adam_step(params, grads, adam, config.learning_rate);

    gnn_detail::forward_pass(ws, params, config, false, 0, epoch, cache);
    const double val = gnn_detail::masked_cross_entropy(cache.logits, val_target, nullptr);
    if (!std::isfinite(val)) throw TrainingDivergence("validation loss became non-finite", epoch);
    result.epochs_run = epoch;
    if (val < result.best_validation_loss) {
      result.best_validation_loss = val;
      result.best_epoch = epoch;
      best = params;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }

  result.params = std::move(best);
  gnn_detail::forward_pass(ws, result.params, config, false, 0, -1, cache);
  result.logits = cache.logits;
  result.embedding = split_embedding(result.logits, rep);
  return result;
}

}  // namespace ugnn
