// Copyright 2026 The partcons Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "partcons/embedder.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "partcons/error.hpp"
#include "partcons/parallel.hpp"

namespace partcons {
namespace {

struct Activations {
  std::vector<double> embeddings;  // B x Q x d, unit per part
  std::vector<double> norms;       // B x Q, pre-normalization norms
};

Activations embed(const EmbedderParams& params, const Matrix& features, bool parallel) {
  if (features.cols() != params.raw_dim) {
    fail(ErrorCode::kShapeMismatch, "features have " + std::to_string(features.cols()) +
                                        " columns, embedder expects " +
                                        std::to_string(params.raw_dim));
  }
  for (double v : features.data()) {
    if (!std::isfinite(v)) fail(ErrorCode::kNonFinite, "non-finite input feature");
  }
  const std::size_t n = features.rows();
  const std::size_t q_parts = params.n_parts;
  const std::size_t dim = params.dim;
  Activations act;
  act.embeddings.resize(n * q_parts * dim);
  act.norms.resize(n * q_parts);
  auto one = [&](std::size_t i) {
    auto x = features.row(i);
    for (std::size_t q = 0; q < q_parts; ++q) {
      double* h = act.embeddings.data() + (i * q_parts + q) * dim;
      const Matrix& w = params.weights[q];
      double sq = 0.0;
      for (std::size_t r = 0; r < dim; ++r) {
        double v = params.biases[q][r];
        auto wr = w.row(r);
        for (std::size_t c = 0; c < x.size(); ++c) v += wr[c] * x[c];
        h[r] = v;
        sq += v * v;
      }
      const double norm = std::sqrt(sq);
      if (!(norm >= kMinPreNormalization)) {
        fail(ErrorCode::kDegenerate, "embedding of item " + std::to_string(i) + ", part " +
                                         std::to_string(q) +
                                         " is too close to zero to normalize");
      }
      for (std::size_t r = 0; r < dim; ++r) h[r] /= norm;
      act.norms[i * q_parts + q] = norm;
    }
  };
  if (parallel) {
    parallel_for(n, one);
  } else {
    for (std::size_t i = 0; i < n; ++i) one(i);
  }
  return act;
}

Matrix classifier_logits(const Classifier& head, const std::vector<double>& embeddings,
                         std::size_t rows) {
  const std::size_t in = head.weight.cols();
  Matrix logits(rows, head.n_classes());
  for (std::size_t b = 0; b < rows; ++b) {
    const double* h = embeddings.data() + b * in;
    for (std::size_t c = 0; c < head.n_classes(); ++c) {
      double z = head.bias[c];
      auto wc = head.weight.row(c);
      for (std::size_t k = 0; k < in; ++k) z += wc[k] * h[k];
      logits(b, c) = z;
    }
  }
  return logits;
}

void zero_gradients(const EmbedderParams& params, const Classifier& head, Gradients& g) {
  g.weights.assign(params.n_parts, Matrix(params.dim, params.raw_dim));
  g.biases.assign(params.n_parts, std::vector<double>(params.dim, 0.0));
  g.classifier_weight = Matrix(head.weight.rows(), head.weight.cols());
  g.classifier_bias.assign(head.bias.size(), 0.0);
}

class Adam {
 public:
  Adam(double beta1, double beta2, double epsilon) : b1_(beta1), b2_(beta2), eps_(epsilon) {}

  void begin_step() {
    ++t_;
    c1_ = 1.0 - std::pow(b1_, static_cast<double>(t_));
    c2_ = 1.0 - std::pow(b2_, static_cast<double>(t_));
    slot_ = 0;
  }

  void update(std::vector<double>& param, const std::vector<double>& grad, double lr) {
    if (slot_ == m_.size()) {
      m_.emplace_back(param.size(), 0.0);
      v_.emplace_back(param.size(), 0.0);
    }
    auto& m = m_[slot_];
    auto& v = v_[slot_];
    ++slot_;
    for (std::size_t i = 0; i < param.size(); ++i) {
      m[i] = b1_ * m[i] + (1.0 - b1_) * grad[i];
      v[i] = b2_ * v[i] + (1.0 - b2_) * grad[i] * grad[i];
      const double m_hat = m[i] / c1_;
      const double v_hat = v[i] / c2_;
      param[i] -= lr * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }

 private:
  double b1_, b2_, eps_;
  std::size_t t_ = 0;
  double c1_ = 1.0, c2_ = 1.0;
  std::size_t slot_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

Matrix gather_rows(const Matrix& features, const std::vector<std::size_t>& items) {
  Matrix out(items.size(), features.cols());
  for (std::size_t b = 0; b < items.size(); ++b) {
    if (items[b] >= features.rows()) {
      fail(ErrorCode::kInvalidArgument, "item " + std::to_string(items[b]) +
                                            " out of range for the feature matrix");
    }
    auto src = features.row(items[b]);
    std::copy(src.begin(), src.end(), out.row(b).begin());
  }
  return out;
}

}  // namespace

void EmbedderParams::validate() const {
  require(n_parts >= 1 && raw_dim >= 1 && dim >= 1, "embedder shape must be positive");
  require(weights.size() == n_parts && biases.size() == n_parts,
          "embedder needs one parameter block per part");
  for (std::size_t q = 0; q < n_parts; ++q) {
    require(weights[q].rows() == dim && weights[q].cols() == raw_dim,
            "embedder weight block has the wrong shape");
    require(biases[q].size() == dim, "embedder bias block has the wrong length");
    for (double v : weights[q].data()) {
      if (!std::isfinite(v)) fail(ErrorCode::kNonFinite, "non-finite embedder weight");
    }
    for (double v : biases[q]) {
      if (!std::isfinite(v)) fail(ErrorCode::kNonFinite, "non-finite embedder bias");
    }
  }
}

EmbedderParams init_params(std::size_t n_parts, std::size_t raw_dim, std::size_t dim,
                           std::uint64_t seed) {
  require(n_parts >= 1 && raw_dim >= 1 && dim >= 1, "embedder shape must be positive");
  EmbedderParams p;
  p.n_parts = n_parts;
  p.raw_dim = raw_dim;
  p.dim = dim;
  p.seed = seed;
  const double scale = 1.0 / std::sqrt(static_cast<double>(raw_dim));
  for (std::size_t q = 0; q < n_parts; ++q) {
    Rng rng(derive_seed(seed, "embedder", {q}));
    Matrix w(dim, raw_dim);
    for (double& v : w.data()) v = rng.uniform(-scale, scale);
    p.weights.push_back(std::move(w));
    p.biases.emplace_back(dim, 0.0);
  }
  return p;
}

PartEmbeddingTensor forward(const EmbedderParams& params, const Matrix& features) {
  params.validate();
  auto act = embed(params, features, true);
  return PartEmbeddingTensor(features.rows(), params.n_parts, params.dim,
                             std::move(act.embeddings));
}

Classifier init_classifier(std::size_t n_classes, std::size_t input_dim, std::uint64_t seed) {
  require(n_classes >= 1 && input_dim >= 1, "classifier shape must be positive");
  Classifier head;
  head.weight = Matrix(n_classes, input_dim);
  head.bias.assign(n_classes, 0.0);
  Rng rng(derive_seed(seed, "classifier"));
  const double scale = 1.0 / std::sqrt(static_cast<double>(input_dim));
  for (double& v : head.weight.data()) v = rng.uniform(-scale, scale);
  return head;
}

BatchLoss backward(const EmbedderParams& params, const Classifier& classifier,
                   const Matrix& features, std::span<const std::size_t> classes,
                   std::span<const std::int64_t> identities,
                   std::span<const std::uint64_t> keys, const LossOptions& options,
                   Gradients* gradients) {
  options.weights.validate();
  const std::size_t b = features.rows();
  const std::size_t q_parts = params.n_parts;
  const std::size_t dim = params.dim;
  const std::size_t row = q_parts * dim;
  require(classes.size() == b && identities.size() == b, "backward: one label per row");
  require(keys.empty() || keys.size() == b, "backward: keys must be empty or one per row");
  require(classifier.weight.cols() == row, "classifier input width must be Q * d");

  const Activations act = embed(params, features, false);
  EmbeddingBatch batch;
  batch.n_parts = q_parts;
  batch.dim = dim;
  batch.data = act.embeddings;
  batch.labels.assign(identities.begin(), identities.end());
  batch.keys.assign(keys.begin(), keys.end());

  const LossWeights& w = options.weights;
  LossComponents parts;
  Matrix logits;
  if (w.lambda_ce > 0.0) {
    logits = classifier_logits(classifier, act.embeddings, b);
    parts.cross_entropy = cross_entropy(logits, classes);
  }
  if (w.lambda_t > 0.0) parts.triplet = triplet_batch_hard(batch, w.margin);
  if (w.lambda_pm > 0.0) {
    parts.partmixup = partmixup_loss(batch, w.margin, options.mix, options.pm_hinge);
  }
  const CombinedLoss combined = total_loss(parts, w);

  BatchLoss loss;
  loss.total = combined.value;
  loss.cross_entropy = parts.cross_entropy.value;
  loss.triplet = parts.triplet.value;
  loss.partmixup = parts.partmixup.value;
  loss.partmixup_sum = parts.partmixup.sum;
  if (gradients == nullptr) return loss;

  Gradients& g = *gradients;
  zero_gradients(params, classifier, g);
  std::vector<double> dh = combined.embedding_gradient;
  if (dh.empty()) dh.assign(b * row, 0.0);
  if (!combined.logits_gradient.empty()) {
    const std::size_t n_classes = classifier.n_classes();
    for (std::size_t i = 0; i < b; ++i) {
      const double* h = act.embeddings.data() + i * row;
      for (std::size_t c = 0; c < n_classes; ++c) {
        const double dz = combined.logits_gradient[i * n_classes + c];
        if (dz == 0.0) continue;
        g.classifier_bias[c] += dz;
        auto gw = g.classifier_weight.row(c);
        auto wc = classifier.weight.row(c);
        for (std::size_t k = 0; k < row; ++k) {
          gw[k] += dz * h[k];
          dh[i * row + k] += dz * wc[k];
        }
      }
    }
  }
  // d normalize(v) / dv = (I - h h^T) / |v|.
  std::vector<double> dv(dim);
  for (std::size_t i = 0; i < b; ++i) {
    auto x = features.row(i);
    for (std::size_t q = 0; q < q_parts; ++q) {
      const double* h = act.embeddings.data() + (i * q_parts + q) * dim;
      const double* gh = dh.data() + (i * q_parts + q) * dim;
      double dot = 0.0;
      for (std::size_t r = 0; r < dim; ++r) dot += h[r] * gh[r];
      const double inv_norm = 1.0 / act.norms[i * q_parts + q];
      for (std::size_t r = 0; r < dim; ++r) dv[r] = (gh[r] - h[r] * dot) * inv_norm;
      Matrix& gw = g.weights[q];
      for (std::size_t r = 0; r < dim; ++r) {
        if (dv[r] == 0.0) continue;
        g.biases[q][r] += dv[r];
        auto gr = gw.row(r);
        for (std::size_t c = 0; c < x.size(); ++c) gr[c] += dv[r] * x[c];
      }
    }
  }
  return loss;
}

PkBatch sample_pk_batch(const SplitState& split, std::size_t p, std::size_t k, Rng& rng) {
  require(p >= 1 && k >= 1, "PK batch needs p >= 1 and k >= 1");
  std::map<std::int64_t, std::vector<std::size_t>> labeled, pseudo;
  for (std::size_t i = 0; i < split.labeled_items.size(); ++i) {
    labeled[split.labeled_ids[i]].push_back(split.labeled_items[i]);
  }
  for (std::size_t i = 0; i < split.pseudo_items.size(); ++i) {
    pseudo[split.pseudo_ids[i]].push_back(split.pseudo_items[i]);
  }
  if (labeled.size() + pseudo.size() < 2) {
    fail(ErrorCode::kInvalidArgument,
         "PK sampling needs at least 2 identities, have " +
             std::to_string(labeled.size() + pseudo.size()));
  }
  std::size_t n_pseudo = pseudo.empty() ? 0 : std::min(p / 2, pseudo.size());
  const std::size_t n_labeled = std::min(p - n_pseudo, labeled.size());
  n_pseudo = std::min(p - n_labeled, pseudo.size());

  auto pick = [&](const std::map<std::int64_t, std::vector<std::size_t>>& pool,
                  std::size_t count, PkBatch& out) {
    std::vector<std::int64_t> ids;
    for (const auto& entry : pool) ids.push_back(entry.first);
    rng.shuffle(ids.begin(), ids.end());
    for (std::size_t n = 0; n < count; ++n) {
      std::vector<std::size_t> images = pool.at(ids[n]);
      if (images.size() >= k) {
        for (std::size_t j = 0; j < k; ++j) {
          std::swap(images[j], images[j + rng.below(images.size() - j)]);
          out.items.push_back(images[j]);
          out.identities.push_back(ids[n]);
        }
      } else {
        for (std::size_t j = 0; j < k; ++j) {
          out.items.push_back(images[rng.below(images.size())]);
          out.identities.push_back(ids[n]);
        }
      }
    }
  };
  PkBatch batch;
  pick(labeled, n_labeled, batch);
  pick(pseudo, n_pseudo, batch);
  return batch;
}

void TrainerConfig::validate() const {
  require(learning_rate > 0.0 && std::isfinite(learning_rate), "learning_rate must be > 0");
  require(batch_identities >= 2, "batch needs P >= 2 identities");
  require(batch_instances >= 2, "batch needs K >= 2 instances");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0,
          "Adam moment coefficients must lie in [0, 1)");
  require(adam_epsilon > 0.0, "Adam epsilon must be > 0");
  require(lr_decay_factor > 0.0, "lr_decay_factor must be > 0");
  weights.validate();
}

double TrainerConfig::learning_rate_at(std::size_t epoch) const {
  double lr = learning_rate;
  for (std::size_t e : lr_decay_epochs) {
    if (epoch >= e) lr *= lr_decay_factor;
  }
  return lr;
}

TrainResult train(const EmbedderParams& initial, const SplitState& split,
                  const Matrix& features, const TrainerConfig& config) {
  config.validate();
  initial.validate();

  std::vector<std::size_t> items = split.labeled_items;
  items.insert(items.end(), split.pseudo_items.begin(), split.pseudo_items.end());
  std::map<std::int64_t, std::size_t> class_of;
  for (auto id : split.labeled_ids) class_of.emplace(id, 0);
  for (auto id : split.pseudo_ids) class_of.emplace(id, 0);
  std::size_t next_class = 0;
  for (auto& entry : class_of) entry.second = next_class++;

  TrainResult result;
  result.params = initial;
  if (class_of.size() < 2) {
    fail(ErrorCode::kInvalidArgument, "training needs at least 2 identities");
  }

  Classifier head = init_classifier(class_of.size(), initial.n_parts * initial.dim,
                                    derive_seed(config.seed, "head"));
  LossOptions options;
  options.weights = config.weights;
  options.pm_hinge = config.pm_hinge;
  options.mix.max_replaced = config.pm_max_replaced;

  auto batch_inputs = [&](const PkBatch& pk, Matrix& x, std::vector<std::size_t>& classes,
                          std::vector<std::uint64_t>& keys) {
    x = gather_rows(features, pk.items);
    classes.clear();
    keys.clear();
    for (std::size_t i = 0; i < pk.items.size(); ++i) {
      classes.push_back(class_of.at(pk.identities[i]));
      keys.push_back(pk.items[i]);
    }
  };

  Rng probe_rng(derive_seed(config.seed, "probe"));
  const PkBatch probe = sample_pk_batch(split, config.batch_identities,
                                        config.batch_instances, probe_rng);
  Matrix probe_x;
  std::vector<std::size_t> probe_classes;
  std::vector<std::uint64_t> probe_keys;
  batch_inputs(probe, probe_x, probe_classes, probe_keys);
  LossOptions probe_options = options;
  probe_options.mix.seed = derive_seed(config.seed, "probe-mix");
  result.probe_loss_start = backward(result.params, head, probe_x, probe_classes,
                                     probe.identities, probe_keys, probe_options, nullptr)
                                .total;

  const std::size_t per_batch = config.batch_identities * config.batch_instances;
  const std::size_t steps_per_epoch = (items.size() + per_batch - 1) / per_batch;
  Rng sampler(derive_seed(config.seed, "sampler"));
  Adam adam(config.beta1, config.beta2, config.adam_epsilon);
  Gradients grads;
  Matrix x;
  std::vector<std::size_t> classes;
  std::vector<std::uint64_t> keys;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = config.learning_rate_at(epoch);
    for (std::size_t s = 0; s < steps_per_epoch; ++s, ++step) {
      const PkBatch pk =
          sample_pk_batch(split, config.batch_identities, config.batch_instances, sampler);
      batch_inputs(pk, x, classes, keys);
      options.mix.seed = derive_seed(config.seed, "mix-step", {step});
      const BatchLoss loss =
          backward(result.params, head, x, classes, pk.identities, keys, options, &grads);
      adam.begin_step();
      for (std::size_t q = 0; q < result.params.n_parts; ++q) {
        adam.update(result.params.weights[q].data(), grads.weights[q].data(), lr);
        adam.update(result.params.biases[q], grads.biases[q], lr);
      }
      adam.update(head.weight.data(), grads.classifier_weight.data(), lr);
      adam.update(head.bias, grads.classifier_bias, lr);
      if (config.record_steps) result.records.push_back({epoch, step, lr, loss});
    }
  }
  result.steps = step;
  result.probe_loss_end = backward(result.params, head, probe_x, probe_classes,
                                   probe.identities, probe_keys, probe_options, nullptr)
                              .total;
  return result;
}

}  // namespace partcons
