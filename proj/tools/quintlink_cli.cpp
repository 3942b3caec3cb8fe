// Copyright 2026 The Quintlink Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "quintlink/config.hpp"
#include "quintlink/embedding.hpp"
#include "quintlink/error.hpp"
#include "quintlink/features.hpp"
#include "quintlink/kg.hpp"
#include "quintlink/metrics.hpp"
#include "quintlink/models.hpp"
#include "quintlink/pipeline.hpp"
#include "quintlink/quintuplet.hpp"
#include "quintlink/synth.hpp"

namespace fs = std::filesystem;
using namespace quintlink;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
};

Config load_config(const Globals& g) {
  Config c = g.config_path.empty() ? Config{} : Config::load(g.config_path);
  if (g.seed) c.set("seed", std::to_string(*g.seed));
  c.set("out", g.out);
  return c;
}

std::uint64_t require_seed(const Config& c) {
  if (!c.has("seed")) throw ConfigError("a seed is required (--seed or 'seed' in the config file)");
  return c.get_uint("seed", 0);
}

// Settings that apply outside a full benchmark, with the seed optional.
ExperimentConfig settings(const Config& c) {
  Config copy = c;
  if (!copy.has("seed")) copy.set("seed", "0");
  return ExperimentConfig::from_config(copy);
}

fs::path output_file(const Globals& g, const std::string& name) {
  fs::create_directories(g.out);
  return fs::path(g.out) / name;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
  if (!f) throw Error("cannot write " + p.string());
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

KnowledgeGraph load_graph(const std::string& path) { return KnowledgeGraph::ingest(read_triplet_file(path)); }

QuintupletKind kind_from(const std::string& s) {
  const auto k = parse_quintuplet_kind(s);
  if (!k) throw ConfigError("unknown quintuplet kind '" + s + "'");
  return *k;
}

void print_graph_summary(const KnowledgeGraph& g) {
  std::cout << "entities " << g.entity_count() << " (companies " << g.entities_of(EntityKind::Company).size()
            << ", products " << g.entities_of(EntityKind::Product).size() << ", certificates "
            << g.entities_of(EntityKind::Certificate).size() << "), triplets " << g.triplet_count() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Supply-chain link prediction over knowledge-graph quintuplets"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "Flat key = value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--out", g.out, "Output directory");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate a triplet file and write it in canonical order");
  std::string ingest_input;
  bool ingest_partition = false;
  ingest->add_option("input", ingest_input, "Triplet file")->required()->check(CLI::ExistingFile);
  ingest->add_flag("--partition", ingest_partition, "Also write one triplet file per country");
  ingest->callback([&] {
    const auto graph = load_graph(ingest_input);
    print_graph_summary(graph);
    write_text(output_file(g, "graph.csv"), to_triplet_csv(graph));
    if (ingest_partition) {
      for (const auto& [country, part] : partition_by_country(graph)) {
        fs::create_directories(fs::path(g.out) / "partitions");
        write_text(fs::path(g.out) / "partitions" / (country + ".csv"), to_triplet_csv(part));
        std::cout << country << ": ";
        print_graph_summary(part);
      }
    }
  });

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic multi-country triplet file");
  std::optional<std::size_t> synth_countries;
  synth->add_option("--countries", synth_countries, "Number of country partitions");
  synth->callback([&] {
    const auto c = load_config(g);
    auto e = ExperimentConfig::from_config([&] {
      Config copy = c;
      copy.set("seed", std::to_string(require_seed(c)));
      return copy;
    }());
    if (synth_countries) e.countries = *synth_countries;
    const auto parts = load_partitions(e);
    const auto merged = merge_graphs(parts);
    write_text(output_file(g, "triplets.csv"), to_triplet_csv(merged));
    nlohmann::ordered_json m;
    m["config"] = nlohmann::ordered_json::object();
    const auto resolved = e.to_config();
    for (const auto& [k, v] : resolved.entries())
      if (k.rfind("synth.", 0) == 0 || k == "seed") m["config"][k] = v;
    m["config"]["synth.countries"] = std::to_string(e.countries);
    for (const auto& [country, graph] : parts) {
      m["partitions"][country] = {{"companies", graph.entities_of(EntityKind::Company).size()},
                                  {"products", graph.entities_of(EntityKind::Product).size()},
                                  {"certificates", graph.entities_of(EntityKind::Certificate).size()},
                                  {"triplets", graph.triplet_count()}};
    }
    write_text(output_file(g, "synth_manifest.json"), m.dump(2) + "\n");
    print_graph_summary(merged);
  });

  // derive
  auto* derive_cmd = app.add_subcommand("derive", "Derive positive quintuplets from a triplet file");
  std::string derive_graph, derive_kind = "supply";
  derive_cmd->add_option("--graph", derive_graph, "Triplet file")->required()->check(CLI::ExistingFile);
  derive_cmd->add_option("--kind", derive_kind, "supply or cert");
  derive_cmd->callback([&] {
    const auto graph = load_graph(derive_graph);
    const auto kind = kind_from(derive_kind);
    std::vector<LabeledQuintuplet> rows;
    for (const auto& q : derive(graph, kind)) rows.push_back({q, Label::Positive, std::nullopt});
    write_text(output_file(g, "positives_" + std::string(to_string(kind)) + ".csv"), to_dataset_csv(rows, graph));
    std::cout << rows.size() << " positive " << to_string(kind) << " quintuplets\n";
  });

  // sample
  auto* sample = app.add_subcommand("sample", "Build a balanced labeled dataset with corrupted negatives");
  std::string sample_graph, sample_kind = "supply";
  sample->add_option("--graph", sample_graph, "Triplet file")->required()->check(CLI::ExistingFile);
  sample->add_option("--kind", sample_kind, "supply or cert");
  sample->callback([&] {
    const auto c = load_config(g);
    const auto seed = require_seed(c);
    const auto graph = load_graph(sample_graph);
    const auto kind = kind_from(sample_kind);
    const auto ds = build_dataset(derive(graph, kind), graph, derive_seed(seed, "dataset"));
    for (const auto& w : ds.warnings) std::cerr << "warning: " << w << "\n";
    write_text(output_file(g, "dataset_" + std::string(to_string(kind)) + ".csv"), to_dataset_csv(ds.records, graph));
    std::cout << ds.records.size() << " labeled records\n";
  });

  // embed
  auto* embed = app.add_subcommand("embed", "Verbalize and embed a labeled dataset into feature matrices");
  std::string embed_graph, embed_dataset_path, embed_name = "hash-384";
  bool embed_split = false;
  embed->add_option("--graph", embed_graph, "Triplet file")->required()->check(CLI::ExistingFile);
  embed->add_option("--dataset", embed_dataset_path, "Labeled dataset file")->required()->check(CLI::ExistingFile);
  embed->add_option("--embedder", embed_name, "hash-<dim>, baseline-<dim> or a pretrained model name");
  embed->add_flag("--split", embed_split, "Write train/val/test matrices instead of one");
  embed->callback([&] {
    const auto c = load_config(g);
    const auto e = settings(c);
    const auto graph = load_graph(embed_graph);
    const auto records = parse_dataset_csv(read_text(embed_dataset_path), graph);
    std::unique_ptr<EmbeddingCache> cache =
        e.embed_cache.empty() ? std::make_unique<EmbeddingCache>() : std::make_unique<EmbeddingCache>(e.embed_cache);
    std::unique_ptr<Embedder> embedder;
    if (embed_name.rfind("baseline-", 0) != 0) embedder = make_embedder(embed_name, e.embed_endpoint);
    auto featurize = [&](std::span<const LabeledQuintuplet> rows) {
      if (!embedder) {
        const auto dim = registry_dim(embed_name);
        if (!dim) throw ConfigError("bad embedder name '" + embed_name + "'");
        return baseline_features(rows, graph, *dim);
      }
      return embed_dataset(rows, graph, e.templates, *embedder, cache.get()).matrix;
    };
    if (embed_split) {
      const auto parts = split(records, e.split, derive_seed(require_seed(c), "split"));
      write_feature_matrix(output_file(g, "train.qlfm").string(), featurize(parts.train));
      write_feature_matrix(output_file(g, "val.qlfm").string(), featurize(parts.val));
      write_feature_matrix(output_file(g, "test.qlfm").string(), featurize(parts.test));
      std::cout << "train " << parts.train.size() << ", val " << parts.val.size() << ", test " << parts.test.size()
                << "\n";
    } else {
      write_feature_matrix(output_file(g, "features.qlfm").string(), featurize(records));
      std::cout << records.size() << " rows\n";
    }
  });

  // train
  auto* train_cmd = app.add_subcommand("train", "Train one architecture on feature matrices");
  std::string train_path, val_path, arch_name = "ANN";
  train_cmd->add_option("--train", train_path, "Training matrix")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--val", val_path, "Validation matrix")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--arch", arch_name, "ANN, CNN1D, LogReg, LSTM or AutoEncoder");
  train_cmd->callback([&] {
    const auto c = load_config(g);
    const auto seed = require_seed(c);
    auto e = settings(c);
    const auto tr = read_feature_matrix(train_path);
    const auto va = read_feature_matrix(val_path);
    const auto arch = parse_architecture(arch_name);
    Model model(arch, tr.cols, derive_seed(seed, "train"));
    e.train.seed = derive_seed(seed, "train");
    const auto history = train(model, tr, va, e.train);
    model.save(output_file(g, "model.qlck").string());
    write_text(output_file(g, "history.csv"), history.to_csv());
    std::cout << to_string(arch) << ": " << history.stop_epoch << " epochs (" << to_string(history.stop_reason)
              << "), best val loss " << history.best_val_loss << " at epoch " << history.best_epoch << "\n";
  });

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Score a trained model on a feature matrix");
  std::string eval_model, eval_features, eval_name = "dataset", eval_embedder = "unknown";
  eval->add_option("--model", eval_model, "Model checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--features", eval_features, "Feature matrix")->required()->check(CLI::ExistingFile);
  eval->add_option("--name", eval_name, "Dataset name for the report row");
  eval->add_option("--embedder", eval_embedder, "Embedder name for the report row");
  eval->callback([&] {
    const auto c = load_config(g);
    auto model = Model::load(eval_model);
    const auto data = read_feature_matrix(eval_features);
    const auto pred = predict(model, data);
    const ReportRow row{eval_name, std::string(to_string(model.architecture())), eval_embedder,
                        evaluate(confusion(pred.labels, data.labels)), {}};
    const auto csv = report_csv(std::span(&row, 1), c.get_bool("report.balanced_uniform", false));
    write_text(output_file(g, "evaluation.csv"), csv);
    std::cout << csv;
  });

  // bench
  auto* bench = app.add_subcommand("bench", "Run the full benchmark matrix and write reports");
  std::string bench_manifest;
  bool bench_uniform = false;
  std::optional<std::size_t> bench_repeats;
  bench->add_option("--from-manifest", bench_manifest, "Re-run the configuration recorded in a manifest")
      ->check(CLI::ExistingFile);
  bench->add_flag("--balanced-uniform", bench_uniform, "Add the equal-weight balanced accuracy column");
  bench->add_option("--repeats", bench_repeats, "Independent splits per dataset; reports mean and sd");
  bench->callback([&] {
    Config c = load_config(g);
    if (!bench_manifest.empty()) {
      const auto m = nlohmann::json::parse(read_text(bench_manifest));
      Config from;
      for (const auto& [k, v] : m.at("config").items()) from.set(k, v.get<std::string>());
      if (g.seed) from.set("seed", std::to_string(*g.seed));
      from.set("out", g.out);
      c = from;
    }
    if (bench_uniform) c.set("report.balanced_uniform", "true");
    if (bench_repeats) c.set("report.repeats", std::to_string(*bench_repeats));
    const auto e = ExperimentConfig::from_config(c);
    const auto result = run_benchmark_matrix(e);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& t : result.pivots) {
      std::cout << "# " << t.kind << " / " << t.embedder << "\n" << t.to_csv();
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
