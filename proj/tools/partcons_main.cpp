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

// partcons command-line frontend. Talks to the library only through the C
// interface in partcons/partcons.h.

#include <partcons/partcons.h>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Largest item count for which the dense co-association matrix is built.
constexpr std::size_t kMaxConsensusItems = 20000;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

// Carries an exit code out of a subcommand.
struct Failure {
  int exit_code;
  std::string message;
};

[[noreturn]] void fail_validation(const std::string& message) {
  throw Failure{kExitValidation, message};
}

[[noreturn]] void fail_io(const std::string& message) { throw Failure{kExitIo, message}; }

void check(pc_status status, const std::string& what) {
  if (status == PC_OK) return;
  throw Failure{pc_status_is_io(status) ? kExitIo : kExitValidation,
                what + ": " + pc_last_error()};
}

struct Deleter {
  void operator()(pc_array* p) const { pc_array_free(p); }
  void operator()(pc_labels* p) const { pc_labels_free(p); }
  void operator()(pc_partition* p) const { pc_partition_free(p); }
  void operator()(pc_model* p) const { pc_model_free(p); }
  void operator()(char* p) const { pc_string_free(p); }
};
using Array = std::unique_ptr<pc_array, Deleter>;
using Labels = std::unique_ptr<pc_labels, Deleter>;
using PartitionPtr = std::unique_ptr<pc_partition, Deleter>;
using Model = std::unique_ptr<pc_model, Deleter>;
using CString = std::unique_ptr<char, Deleter>;

std::string take(char* s) {
  CString owned(s);
  return owned ? std::string(owned.get()) : std::string();
}

Array load_array(const std::string& path, bool unit) {
  pc_array* a = nullptr;
  check(pc_array_load(path.c_str(), unit ? 1 : 0, &a), path);
  return Array(a);
}

Labels load_labels(const std::string& path) {
  pc_labels* l = nullptr;
  check(pc_labels_load(path.c_str(), &l), path);
  return Labels(l);
}

std::size_t rows_of(const pc_array* a) {
  std::size_t n = 0;
  pc_array_shape(a, &n, nullptr, nullptr);
  return n;
}

std::size_t parts_of(const pc_array* a) {
  std::size_t q = 0;
  pc_array_shape(a, nullptr, &q, nullptr);
  return q;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail_io("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) fail_io("write failed for " + path.string());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_io("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string canonical(const json& doc) { return doc.dump(2) + "\n"; }

// Flags shared by every subcommand, layered over the config file.
struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::string> output;
  std::optional<std::size_t> agree;
  std::optional<std::size_t> min_cluster_size;
  std::optional<std::string> linkage;
  std::optional<std::string> consensus_linkage;
  std::optional<double> threshold;
  std::optional<std::size_t> pm_max_replaced;
  bool pm_no_hinge = false;
};

// Resolved config plus everything derived from it.
struct Run {
  json config;       // fully resolved
  std::string text;  // the same, as passed to the library
  std::string hash;
  fs::path output;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
};

json& section(json& doc, const char* name) {
  if (!doc.contains(name)) doc[name] = json::object();
  return doc[name];
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail_io("cannot create " + dir.string() + ": " + ec.message());
}

// `n_parts` is the part count of the inputs, when a subcommand has them; it
// fills trainer.n_parts unless the config sets it, so agreement bounds are
// checked against the real Q.
Run resolve(const Options& o, bool linkage_is_consensus,
            std::optional<std::size_t> n_parts = std::nullopt) {
  json doc = json::object();
  if (!o.config_path.empty()) {
    try {
      doc = json::parse(read_file(o.config_path));
    } catch (const json::parse_error& e) {
      fail_io(o.config_path + ": not valid JSON: " + e.what());
    }
    if (!doc.is_object()) fail_validation(o.config_path + ": expected a JSON object");
  }
  if (o.seed) doc["seed"] = *o.seed;
  if (o.output) doc["output_dir"] = *o.output;
  if (o.agree) section(doc, "consensus")["agree"] = *o.agree;
  if (o.min_cluster_size) section(doc, "pseudolabel")["min_cluster_size"] = *o.min_cluster_size;
  if (o.linkage) {
    section(doc, linkage_is_consensus ? "consensus" : "cluster")["linkage"] = *o.linkage;
  }
  if (o.consensus_linkage) section(doc, "consensus")["linkage"] = *o.consensus_linkage;
  if (o.threshold) section(doc, "cluster")["threshold"] = *o.threshold;
  if (o.pm_max_replaced) section(doc, "losses")["pm_max_replaced"] = *o.pm_max_replaced;
  if (o.pm_no_hinge) section(doc, "losses")["pm_hinge"] = false;
  if (o.threads) pc_set_threads(*o.threads);
  if (n_parts && !section(doc, "trainer").contains("n_parts")) {
    doc["trainer"]["n_parts"] = *n_parts;
  }

  char* resolved = nullptr;
  char* hash = nullptr;
  const std::string input = doc.dump();
  check(pc_config_resolve(input.c_str(), &resolved, &hash), "config");
  Run run;
  run.text = take(resolved);
  run.hash = take(hash);
  run.config = json::parse(run.text);
  run.output = run.config.at("output_dir").get<std::string>();
  ensure_dir(run.output);
  write_file(run.output / "resolved_config.json", run.text);
  return run;
}

// Timing stays out of the canonical reports.
void write_timing(const Run& run, const std::string& command) {
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - run.start).count();
  std::ofstream out(run.output / "timing.log", std::ios::app);
  if (!out) fail_io("cannot write " + (run.output / "timing.log").string());
  out << command << " config_hash=" << run.hash << " seconds=" << seconds << "\n";
}

void write_report(const Run& run, const std::string& name, json doc, const json& files) {
  doc["config_hash"] = run.hash;
  if (!files.is_null()) doc["files"] = files;
  write_file(run.output / name, canonical(doc));
}

void save_array(const pc_array* a, const fs::path& path) {
  check(pc_array_save(a, path.string().c_str()), path.string());
}

void write_assignments(const fs::path& path, const std::vector<std::size_t>& items,
                       const std::vector<std::int64_t>& ids) {
  std::string text = "item,cluster\n";
  for (std::size_t j = 0; j < items.size(); ++j) {
    text += std::to_string(items[j]) + "," + std::to_string(ids[j]) + "\n";
  }
  write_file(path, text);
}

void guard_consensus_size(std::size_t n) {
  if (n > kMaxConsensusItems) {
    fail_validation("consensus over " + std::to_string(n) + " items needs a dense " +
                    std::to_string(n) + " x " + std::to_string(n) +
                    " matrix; the limit is " + std::to_string(kMaxConsensusItems) + " items");
  }
}

// ---- subcommands

int cmd_gen(const Options& o) {
  Run run = resolve(o, false);
  pc_array *tp = nullptr, *tr = nullptr, *sp = nullptr, *sr = nullptr;
  pc_labels *tl = nullptr, *sl = nullptr;
  check(pc_synth_generate(run.text.c_str(), &tp, &tl, &tr, &sp, &sl, &sr), "gen");
  Array train_parts(tp), train_raw(tr), test_parts(sp), test_raw(sr);
  Labels train_labels(tl), test_labels(sl);

  json files = json::array();
  auto emit_array = [&](const pc_array* a, const char* name) {
    save_array(a, run.output / name);
    files.push_back(name);
  };
  auto emit_labels = [&](const pc_labels* l, const char* name) {
    check(pc_labels_save(l, (run.output / name).string().c_str()), name);
    files.push_back(name);
  };
  emit_array(train_parts.get(), "parts.pet");
  emit_array(train_raw.get(), "raw.pet");
  emit_labels(train_labels.get(), "labels.csv");
  const std::size_t n_test = rows_of(test_parts.get());
  if (n_test > 0) {
    emit_array(test_parts.get(), "test_parts.pet");
    emit_array(test_raw.get(), "test_raw.pet");
    emit_labels(test_labels.get(), "test_labels.csv");
  }
  write_report(run, "gen.json",
               {{"n_items", rows_of(train_parts.get())},
                {"n_test_items", n_test},
                {"n_parts", parts_of(train_parts.get())}},
               files);
  write_timing(run, "gen");
  std::cout << "gen: " << rows_of(train_parts.get()) << " training and " << n_test
            << " test items written to " << run.output.string() << "\n";
  return kExitOk;
}

int cmd_cluster(const Options& o, const std::string& input) {
  Array parts = load_array(input, true);
  Run run = resolve(o, false, parts_of(parts.get()));
  const std::size_t q = parts_of(parts.get());
  std::vector<pc_partition*> raw(q, nullptr);
  check(pc_cluster_parts(parts.get(), run.text.c_str(), raw.data(), raw.size()), "cluster");
  std::vector<PartitionPtr> partitions;
  for (auto* p : raw) partitions.emplace_back(p);

  json files = json::array();
  json counts = json::array();
  for (std::size_t i = 0; i < q; ++i) {
    const std::string name = "partition_" + std::to_string(i) + ".csv";
    check(pc_partition_save(partitions[i].get(), (run.output / name).string().c_str()), name);
    files.push_back(name);
    counts.push_back(pc_partition_clusters(partitions[i].get()));
  }
  const json& c = run.config.at("cluster");
  write_report(run, "cluster.json",
               {{"n_items", rows_of(parts.get())},
                {"linkage", c.at("linkage")},
                {"threshold", c.at("threshold")},
                {"order", c.at("order")},
                {"clusters_per_part", counts}},
               files);
  write_timing(run, "cluster");
  std::cout << "cluster: clusters per part " << counts.dump() << "\n";
  return kExitOk;
}

int cmd_consensus(const Options& o, const std::vector<std::string>& inputs) {
  Run run = resolve(o, true, inputs.size());
  std::vector<PartitionPtr> partitions;
  std::vector<const pc_partition*> view;
  for (const auto& path : inputs) {
    pc_partition* p = nullptr;
    check(pc_partition_load(path.c_str(), &p), path);
    partitions.emplace_back(p);
    view.push_back(p);
  }
  guard_consensus_size(pc_partition_size(view.front()));
  const std::size_t agree = run.config.at("consensus").at("agree").get<std::size_t>();
  pc_partition* out = nullptr;
  char* report = nullptr;
  check(pc_consensus(view.data(), view.size(), agree, run.text.c_str(), &out, &report),
        "consensus");
  PartitionPtr result(out);
  json doc = json::parse(take(report));
  doc["linkage"] = run.config.at("consensus").at("linkage");
  check(pc_partition_save(result.get(), (run.output / "consensus.csv").string().c_str()),
        "consensus.csv");
  write_report(run, "consensus.json", doc, json::array({"consensus.csv"}));
  write_timing(run, "consensus");
  std::cout << "consensus: " << pc_partition_clusters(result.get()) << " clusters\n";
  return kExitOk;
}

int cmd_pseudolabel(const Options& o, const std::string& input) {
  Array parts = load_array(input, true);
  Run run = resolve(o, false, parts_of(parts.get()));
  const std::size_t n = rows_of(parts.get());
  guard_consensus_size(n);
  std::vector<std::size_t> items(n);
  std::vector<std::int64_t> ids(n);
  std::size_t kept = 0;
  pc_partition* consensus = nullptr;
  char* report = nullptr;
  check(pc_pseudolabel(parts.get(), run.text.c_str(), &consensus, &kept, items.data(),
                       ids.data(), &report),
        "pseudolabel");
  PartitionPtr result(consensus);
  items.resize(kept);
  ids.resize(kept);
  check(pc_partition_save(result.get(), (run.output / "consensus.csv").string().c_str()),
        "consensus.csv");
  write_assignments(run.output / "pseudo_labels.csv", items, ids);
  write_report(run, "pseudolabel.json", json::parse(take(report)),
               json::array({"consensus.csv", "pseudo_labels.csv"}));
  write_timing(run, "pseudolabel");
  std::cout << "pseudolabel: " << kept << " of " << n << " items pseudo-labeled\n";
  return kExitOk;
}

int cmd_train(const Options& o, const std::string& raw_path, const std::string& labels_path,
              bool dump_losses) {
  Run run = resolve(o, false);
  Array raw = load_array(raw_path, false);
  Labels labels = load_labels(labels_path);
  pc_model* m = nullptr;
  char* report = nullptr;
  check(pc_train(raw.get(), labels.get(), run.text.c_str(), dump_losses ? 1 : 0, &m, &report),
        "train");
  Model model(m);
  json doc = json::parse(take(report));
  json records = doc.at("records");
  doc.erase("records");
  json files = json::array({"checkpoint/manifest.json"});
  check(pc_model_save(model.get(), (run.output / "checkpoint").string().c_str(),
                      run.hash.c_str()),
        "checkpoint");
  if (dump_losses) {
    std::string lines;
    for (auto& r : records) {
      r["config_hash"] = run.hash;
      lines += r.dump() + "\n";
    }
    write_file(run.output / "losses.jsonl", lines);
    files.push_back("losses.jsonl");
  }
  const double start = doc.at("probe_loss_start").get<double>();
  const double end = doc.at("probe_loss_end").get<double>();
  write_report(run, "train.json", doc, files);
  write_timing(run, "train");
  std::cout << "train: " << doc.at("steps").get<std::size_t>() << " steps, probe loss " << start
            << " -> " << end << "\n";
  return kExitOk;
}

int cmd_evaluate(const Options& o, const std::string& query, const std::string& query_labels,
                 const std::string& gallery, const std::string& gallery_labels,
                 const std::string& checkpoint) {
  Run run = resolve(o, false);
  Array q, g;
  if (!checkpoint.empty()) {
    pc_model* m = nullptr;
    check(pc_model_load(checkpoint.c_str(), &m), checkpoint);
    Model model(m);
    Array rq = load_array(query, false), rg = load_array(gallery, false);
    pc_array *eq = nullptr, *eg = nullptr;
    check(pc_model_embed(model.get(), rq.get(), &eq), "embed query");
    q.reset(eq);
    check(pc_model_embed(model.get(), rg.get(), &eg), "embed gallery");
    g.reset(eg);
  } else {
    q = load_array(query, true);
    g = load_array(gallery, true);
  }
  Labels ql = load_labels(query_labels), gl = load_labels(gallery_labels);
  const json& eval = run.config.at("eval");
  std::size_t max_rank = 1;
  for (const auto& r : eval.at("ranks")) max_rank = std::max(max_rank, r.get<std::size_t>());
  char* report = nullptr;
  check(pc_evaluate(q.get(), ql.get(), g.get(), gl.get(),
                    eval.at("camera_filter").get<bool>() ? 1 : 0, max_rank, &report),
        "evaluate");
  json doc = json::parse(take(report));
  json at = json::object();
  for (const auto& r : eval.at("ranks")) {
    const auto rank = r.get<std::size_t>();
    at["rank" + std::to_string(rank)] = doc.at("cmc").at(rank - 1);
  }
  doc["cmc_at"] = at;
  write_report(run, "eval.json", doc, nullptr);
  write_timing(run, "evaluate");
  std::cout << "evaluate: rank-1 " << doc.at("cmc").at(0).get<double>() << ", mAP "
            << doc.at("map").get<double>() << "\n";
  return kExitOk;
}

int cmd_pipeline(const Options& o, bool baseline) {
  Run run = resolve(o, false);
  char* reports = nullptr;
  char* final_json = nullptr;
  check(pc_pipeline_run(run.text.c_str(), baseline ? 1 : 0, &reports, &final_json), "pipeline");
  const std::string lines = take(reports);
  const std::string final_text = take(final_json);
  write_file(run.output / "reports.jsonl", lines);
  write_file(run.output / "final.json", final_text);
  write_timing(run, "pipeline");
  const json doc = json::parse(final_text);
  std::cout << "pipeline: " << doc.at("iterations_run").get<std::size_t>() << " iterations";
  if (doc.at("retrieval").is_object()) {
    std::cout << ", final mAP " << doc.at("retrieval").at("map").get<double>();
  }
  std::cout << "\n";
  return kExitOk;
}

int cmd_selftest(const Options& o, std::size_t cases) {
  char* report = nullptr;
  int passed = 0;
  check(pc_selftest(o.seed.value_or(0), cases, &report, &passed), "selftest");
  const std::string text = take(report);
  const json doc = json::parse(text);
  for (const auto& s : doc.at("suites")) {
    std::cout << (s.at("failures").get<std::size_t>() == 0 ? "PASS " : "FAIL ")
              << s.at("suite").get<std::string>() << " (" << s.at("cases").get<std::size_t>()
              << " cases, " << s.at("failures").get<std::size_t>() << " failures)";
    const auto first = s.at("first_failure").get<std::string>();
    if (!first.empty()) std::cout << ": " << first;
    std::cout << "\n";
  }
  if (o.output) {
    ensure_dir(*o.output);
    write_file(fs::path(*o.output) / "selftest.json", text);
  }
  return passed ? kExitOk : kExitValidation;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "JSON run config")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "master seed; every random draw derives from it");
  cmd->add_option("--threads", o.threads, "worker thread cap (0 = all cores)");
  cmd->add_option("--output", o.output, "output directory");
}

void add_clustering(CLI::App* cmd, Options& o) {
  cmd->add_option("--linkage", o.linkage, "ward, average or single")
      ->check(CLI::IsMember({"ward", "average", "single"}));
  cmd->add_option("--threshold", o.threshold, "merge while linkage distance < threshold");
}

void add_consensus(CLI::App* cmd, Options& o) {
  cmd->add_option("--agree", o.agree, "parts that must agree (0 = all)");
  cmd->add_option("--consensus-linkage", o.consensus_linkage, "linkage on 1 - co-association")
      ->check(CLI::IsMember({"ward", "average", "single"}));
  cmd->add_option("--min-cluster-size", o.min_cluster_size, "drop smaller consensus clusters");
}

void add_losses(CLI::App* cmd, Options& o) {
  cmd->add_option("--pm-max-replaced", o.pm_max_replaced, "max parts replaced by PartMixUp");
  cmd->add_flag("--pm-no-hinge", o.pm_no_hinge, "use the PartMixUp bracket without the hinge");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"partcons: pseudo-labeling by consensus clustering of part embeddings"};
  app.require_subcommand(1);
  Options o;
  std::string input, raw, labels, query, query_labels, gallery, gallery_labels, checkpoint;
  std::vector<std::string> partitions;
  bool dump_losses = false, baseline = false;
  std::size_t cases = 200;

  auto* gen = app.add_subcommand("gen", "generate the synthetic benchmark");
  add_common(gen, o);

  auto* cluster = app.add_subcommand("cluster", "cluster each part of an embedding tensor");
  add_common(cluster, o);
  add_clustering(cluster, o);
  cluster->add_option("--input", input, "part embedding PET file")->required();

  auto* consensus = app.add_subcommand("consensus", "consensus partition of Q partitions");
  add_common(consensus, o);
  consensus->add_option("--agree", o.agree, "partitions that must agree (0 = all)");
  consensus->add_option("--linkage", o.linkage, "linkage on 1 - co-association")
      ->check(CLI::IsMember({"ward", "average", "single"}));
  consensus->add_option("--partitions", partitions, "partition CSV files")->required();

  auto* pseudo = app.add_subcommand("pseudolabel", "cluster, reach consensus and filter");
  add_common(pseudo, o);
  add_clustering(pseudo, o);
  add_consensus(pseudo, o);
  pseudo->add_option("--input", input, "part embedding PET file")->required();

  auto* train = app.add_subcommand("train", "train the part embedder on labeled items");
  add_common(train, o);
  add_losses(train, o);
  train->add_option("--raw", raw, "raw feature PET file (Q = 1)")->required();
  train->add_option("--labels", labels, "label CSV of the training items")->required();
  train->add_flag("--dump-losses", dump_losses, "write per-step losses to losses.jsonl");

  auto* evaluate = app.add_subcommand("evaluate", "CMC and mAP of a query/gallery split");
  add_common(evaluate, o);
  evaluate->add_option("--query", query, "query PET file")->required();
  evaluate->add_option("--query-labels", query_labels, "query label CSV")->required();
  evaluate->add_option("--gallery", gallery, "gallery PET file")->required();
  evaluate->add_option("--gallery-labels", gallery_labels, "gallery label CSV")->required();
  evaluate->add_option("--checkpoint", checkpoint,
                       "embed raw-feature inputs with this checkpoint first");

  auto* pipeline = app.add_subcommand("pipeline", "run the full pseudo-labeling loop");
  add_common(pipeline, o);
  add_clustering(pipeline, o);
  add_consensus(pipeline, o);
  add_losses(pipeline, o);
  pipeline->add_flag("--baseline", baseline, "also train the supervised-only baseline");

  auto* selftest = app.add_subcommand("selftest", "check the library against brute-force oracles");
  selftest->add_option("--seed", o.seed, "seed of the random instances");
  selftest->add_option("--output", o.output, "directory for selftest.json");
  selftest->add_option("--cases", cases, "instances per suite")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  try {
    if (*gen) return cmd_gen(o);
    if (*cluster) return cmd_cluster(o, input);
    if (*consensus) return cmd_consensus(o, partitions);
    if (*pseudo) return cmd_pseudolabel(o, input);
    if (*train) return cmd_train(o, raw, labels, dump_losses);
    if (*evaluate) return cmd_evaluate(o, query, query_labels, gallery, gallery_labels, checkpoint);
    if (*pipeline) return cmd_pipeline(o, baseline);
    if (*selftest) return cmd_selftest(o, cases);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.exit_code;
  } catch (const std::exception& e) {
    // JSON access on a library report failed: a library/CLI mismatch.
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}
