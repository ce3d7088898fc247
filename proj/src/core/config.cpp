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

#include "partcons/config.hpp"

#include <cstdio>
#include <set>
#include <string_view>
#include <type_traits>

#include "partcons/error.hpp"
#include "partcons/rng.hpp"

namespace partcons {
namespace {

using nlohmann::json;

const char* order_name(MergeOrder order) {
  return order == MergeOrder::kGreedy ? "greedy" : "nn_chain";
}

MergeOrder parse_order(const std::string& name) {
  if (name == "greedy") return MergeOrder::kGreedy;
  if (name == "nn_chain") return MergeOrder::kNearestNeighborChain;
  fail(ErrorCode::kInvalidArgument,
       "unknown merge order '" + name + "' (expected greedy or nn_chain)");
}

// Reads known keys from one JSON object and rejects the rest.
class Section {
 public:
  Section(const json& parent, const std::string& key, const std::string& path)
      : path_(path.empty() ? key : path + "." + key) {
    auto it = parent.find(key);
    if (it == parent.end()) return;
    if (!it->is_object()) fail(ErrorCode::kInvalidArgument, path_ + ": expected an object");
    obj_ = &*it;
  }
  explicit Section(const json& root) : obj_(&root) {
    if (!root.is_object()) fail(ErrorCode::kInvalidArgument, "config: expected an object");
  }

  const json* raw() const { return obj_; }
  const std::string& path() const { return path_; }

  bool has(const char* key) {
    seen_.insert(key);
    return obj_ != nullptr && obj_->contains(key);
  }

  template <class T>
  void get(const char* key, T& out) {
    if (!has(key)) return;
    const json& v = (*obj_)[key];
    const std::string where = path_.empty() ? key : path_ + "." + key;
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(ErrorCode::kInvalidArgument, where + ": expected a boolean");
      out = v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_unsigned()) {
        fail(ErrorCode::kInvalidArgument, where + ": expected a non-negative integer");
      }
      out = v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) fail(ErrorCode::kInvalidArgument, where + ": expected a number");
      out = v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail(ErrorCode::kInvalidArgument, where + ": expected a string");
      out = v.get<std::string>();
    } else {
      if (!v.is_array()) fail(ErrorCode::kInvalidArgument, where + ": expected an array");
      out.clear();
      for (const auto& e : v) {
        if (!e.is_number_unsigned()) {
          fail(ErrorCode::kInvalidArgument, where + ": expected non-negative integers");
        }
        out.push_back(e.template get<typename T::value_type>());
      }
    }
  }

  void finish() const {
    if (obj_ == nullptr) return;
    for (auto it = obj_->begin(); it != obj_->end(); ++it) {
      if (!seen_.count(it.key())) {
        fail(ErrorCode::kInvalidArgument,
             "unknown config key '" + (path_.empty() ? it.key() : path_ + "." + it.key()) +
                 "'");
      }
    }
  }

 private:
  const json* obj_ = nullptr;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

json retrieval_json(const RetrievalSummary& s) {
  json cmc = json::object();
  for (std::size_t i = 0; i < s.ranks.size(); ++i) {
    cmc["rank" + std::to_string(s.ranks[i])] = s.cmc_at[i];
  }
  return {{"cmc", cmc},
          {"map", s.map},
          {"n_queries_used", s.n_queries_used},
          {"excluded_queries", s.excluded_queries}};
}

}  // namespace

void RunConfig::apply_seed(std::uint64_t new_seed) {
  seed = new_seed;
  synth.seed = derive_seed(seed, "synth");
  pipeline.seed = seed;
}

void RunConfig::validate() const {
  synth.validate();
  require(labeled_fraction > 0.0 && labeled_fraction <= 1.0,
          "split.labeled_fraction must lie in (0, 1]");
  pipeline.validate();
  require(!output_dir.empty(), "output_dir must not be empty");
}

RunConfig default_run_config() {
  RunConfig c;
  c.pipeline.n_parts = c.synth.n_parts;
  c.pipeline.embed_dim = c.synth.dim;
  c.apply_seed(0);
  return c;
}

RunConfig parse_run_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kMalformed, std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c = default_run_config();
  Section top(root);
  std::uint64_t seed = 0;
  top.get("seed", seed);
  top.get("output_dir", c.output_dir);

  Section synth(root, "synth", "");
  synth.get("n_identities", c.synth.n_identities);
  synth.get("images_per_identity", c.synth.images_per_identity);
  synth.get("n_parts", c.synth.n_parts);
  synth.get("dim", c.synth.dim);
  synth.get("noise_sigma", c.synth.noise_sigma);
  synth.get("part_confusion", c.synth.part_confusion);
  synth.get("raw_dim", c.synth.raw_dim);
  synth.get("raw_noise_scale", c.synth.raw_noise_scale);
  synth.get("test_identities", c.synth.test_identities);
  synth.finish();
  top.has("synth");

  Section split(root, "split", "");
  split.get("labeled_fraction", c.labeled_fraction);
  split.finish();
  top.has("split");

  PipelineConfig& p = c.pipeline;
  Section cluster(root, "cluster", "");
  std::string name = linkage_name(p.cluster_config.linkage);
  cluster.get("linkage", name);
  p.cluster_config.linkage = parse_linkage(name);
  cluster.get("threshold", p.cluster_config.distance_threshold);
  name = order_name(p.cluster_config.order);
  cluster.get("order", name);
  p.cluster_config.order = parse_order(name);
  cluster.finish();
  top.has("cluster");

  Section consensus(root, "consensus", "");
  consensus.get("agree", p.agreement);
  name = linkage_name(p.consensus_linkage);
  consensus.get("linkage", name);
  p.consensus_linkage = parse_linkage(name);
  consensus.finish();
  top.has("consensus");

  Section pl(root, "pseudolabel", "");
  pl.get("min_cluster_size", p.min_cluster_size);
  pl.get("n_iterations", p.n_iterations);
  pl.get("early_stop", p.early_stop);
  pl.finish();
  top.has("pseudolabel");

  TrainerConfig& t = p.trainer_config;
  Section trainer(root, "trainer", "");
  p.n_parts = c.synth.n_parts;
  p.embed_dim = c.synth.dim;
  trainer.get("n_parts", p.n_parts);
  trainer.get("dim", p.embed_dim);
  trainer.get("epochs", t.epochs);
  trainer.get("learning_rate", t.learning_rate);
  trainer.get("lr_decay_epochs", t.lr_decay_epochs);
  trainer.get("lr_decay_factor", t.lr_decay_factor);
  trainer.get("batch_identities", t.batch_identities);
  trainer.get("batch_instances", t.batch_instances);
  trainer.get("beta1", t.beta1);
  trainer.get("beta2", t.beta2);
  trainer.get("adam_epsilon", t.adam_epsilon);
  trainer.finish();
  top.has("trainer");

  Section losses(root, "losses", "");
  losses.get("lambda_ce", t.weights.lambda_ce);
  losses.get("lambda_t", t.weights.lambda_t);
  losses.get("lambda_pm", t.weights.lambda_pm);
  losses.get("margin", t.weights.margin);
  losses.get("pm_max_replaced", t.pm_max_replaced);
  losses.get("pm_hinge", t.pm_hinge);
  losses.finish();
  top.has("losses");

  Section eval(root, "eval", "");
  eval.get("camera_filter", p.eval.camera_filter);
  eval.get("queries_per_identity", p.eval.queries_per_identity);
  eval.get("ranks", p.eval.ranks);
  eval.finish();
  top.has("eval");

  Section data(root, "data", "");
  data.get("raw", c.data.raw);
  data.get("labels", c.data.labels);
  data.get("test_raw", c.data.test_raw);
  data.get("test_labels", c.data.test_labels);
  data.finish();
  top.has("data");

  top.finish();
  c.apply_seed(seed);
  c.validate();
  return c;
}

json to_json(const RunConfig& c) {
  const PipelineConfig& p = c.pipeline;
  const TrainerConfig& t = p.trainer_config;
  return {
      {"seed", c.seed},
      {"output_dir", c.output_dir},
      {"synth",
       {{"n_identities", c.synth.n_identities},
        {"images_per_identity", c.synth.images_per_identity},
        {"n_parts", c.synth.n_parts},
        {"dim", c.synth.dim},
        {"noise_sigma", c.synth.noise_sigma},
        {"part_confusion", c.synth.part_confusion},
        {"raw_dim", c.synth.raw_dim},
        {"raw_noise_scale", c.synth.raw_noise_scale},
        {"test_identities", c.synth.test_identities}}},
      {"split", {{"labeled_fraction", c.labeled_fraction}}},
      {"cluster",
       {{"linkage", linkage_name(p.cluster_config.linkage)},
        {"threshold", p.cluster_config.distance_threshold},
        {"order", order_name(p.cluster_config.order)}}},
      {"consensus", {{"agree", p.agreement}, {"linkage", linkage_name(p.consensus_linkage)}}},
      {"pseudolabel",
       {{"min_cluster_size", p.min_cluster_size},
        {"n_iterations", p.n_iterations},
        {"early_stop", p.early_stop}}},
      {"trainer",
       {{"n_parts", p.n_parts},
        {"dim", p.embed_dim},
        {"epochs", t.epochs},
        {"learning_rate", t.learning_rate},
        {"lr_decay_epochs", t.lr_decay_epochs},
        {"lr_decay_factor", t.lr_decay_factor},
        {"batch_identities", t.batch_identities},
        {"batch_instances", t.batch_instances},
        {"beta1", t.beta1},
        {"beta2", t.beta2},
        {"adam_epsilon", t.adam_epsilon}}},
      {"losses",
       {{"lambda_ce", t.weights.lambda_ce},
        {"lambda_t", t.weights.lambda_t},
        {"lambda_pm", t.weights.lambda_pm},
        {"margin", t.weights.margin},
        {"pm_max_replaced", t.pm_max_replaced},
        {"pm_hinge", t.pm_hinge}}},
      {"eval",
       {{"camera_filter", p.eval.camera_filter},
        {"queries_per_identity", p.eval.queries_per_identity},
        {"ranks", p.eval.ranks}}},
      {"data",
       {{"raw", c.data.raw},
        {"labels", c.data.labels},
        {"test_raw", c.data.test_raw},
        {"test_labels", c.data.test_labels}}},
  };
}

std::string dump_canonical(const json& document) { return document.dump(2) + "\n"; }

std::string resolved_config_text(const RunConfig& config) {
  return dump_canonical(to_json(config));
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = hash_tag(bytes);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const RunConfig& config) {
  // Where results are written does not change them, so two runs that differ
  // only in output_dir share a hash and byte-identical reports.
  json doc = to_json(config);
  doc.erase("output_dir");
  return fnv1a_hex(dump_canonical(doc));
}

json to_json(const EvalReport& report) {
  json cmc = json::array();
  for (double v : report.cmc) cmc.push_back(v);
  return {{"cmc", cmc},
          {"map", report.map},
          {"n_queries_used", report.n_queries_used},
          {"excluded_queries", report.excluded_queries}};
}

json to_json(const RetrievalSummary& summary) { return retrieval_json(summary); }

json to_json(const LabelQuality& quality) {
  return {{"precision", quality.precision ? json(*quality.precision) : json(nullptr)},
          {"recall", quality.recall ? json(*quality.recall) : json(nullptr)}};
}

json to_json(const IterationReport& r) {
  return {{"iteration", r.iteration},
          {"clusters_per_part", r.clusters_per_part},
          {"consensus_clusters", r.consensus_clusters},
          {"n_unlabeled", r.n_unlabeled},
          {"n_pseudo_labeled", r.n_pseudo_labeled},
          {"n_pseudo_identities", r.n_pseudo_identities},
          {"train_items", r.train_items},
          {"train_steps", r.train_steps},
          {"probe_loss_start", r.probe_loss_start},
          {"probe_loss_end", r.probe_loss_end},
          {"label_quality", to_json(r.label_quality)},
          {"retrieval", r.retrieval ? retrieval_json(*r.retrieval) : json(nullptr)}};
}

}  // namespace partcons
