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

#include "quintlink/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "quintlink/error.hpp"
#include "quintlink/rng.hpp"

namespace quintlink {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kKeys[] = {
    "seed",
    "out",
    "data.source",
    "data.triplets",
    "data.skip_small_partitions",
    "synth.countries",
    "synth.companies",
    "synth.products",
    "synth.certificates",
    "synth.industries",
    "synth.signal",
    "synth.supply_density",
    "synth.extra_edge_density",
    "synth.extra_cert_density",
    "synth.min_companies",
    "synth.max_companies",
    "kinds",
    "embedders",
    "architectures",
    "train.batch_size",
    "train.learning_rate",
    "train.max_epochs",
    "train.patience",
    "split.train",
    "split.val",
    "split.test",
    "template.supply",
    "template.cert",
    "embed.endpoint",
    "embed.cache",
    "report.balanced_uniform",
    "report.repeats",
    "report.histories",
};

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string shortest(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

Template template_from(QuintupletKind kind, const std::string& value) {
  if (value.empty() || value == "default") return Template::defaults_for(kind);
  if (value == "alternate") {
    return kind == QuintupletKind::SuppliesProductTo ? Template::alternate_supply() : Template::alternate_cert();
  }
  return Template(kind, value);
}

std::string template_text(const Template& t) {
  if (t.pattern() == Template::defaults_for(t.kind()).pattern()) return "default";
  const auto alt = t.kind() == QuintupletKind::SuppliesProductTo ? Template::alternate_supply()
                                                                 : Template::alternate_cert();
  return t.pattern() == alt.pattern() ? "alternate" : t.pattern();
}

template <typename F>
auto run_stage(std::string_view stage, const std::string& context, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(std::string(stage), context + ": " + e.what());
  }
}

class StageClock {
 public:
  template <typename F>
  auto time(const std::string& stage, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      add(stage, t0);
    } else {
      auto out = f();
      add(stage, t0);
      return out;
    }
  }
  const std::map<std::string, double>& seconds() const noexcept { return seconds_; }

 private:
  void add(const std::string& stage, std::chrono::steady_clock::time_point t0) {
    seconds_[stage] += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  std::map<std::string, double> seconds_;
};

bool is_baseline(const std::string& name) { return name.rfind("baseline-", 0) == 0; }

}  // namespace

std::span<const std::string_view> experiment_config_keys() noexcept { return kKeys; }

ExperimentConfig ExperimentConfig::from_config(const Config& c) {
  c.require_known(kKeys);
  if (!c.has("seed")) throw ConfigError("config must set 'seed'");
  ExperimentConfig e;
  e.seed = c.get_uint("seed", 0);
  e.out_dir = c.get_string("out", "");

  const auto source = c.get_string("data.source", "synth");
  if (source == "synth") {
    e.source = DataSource::Synth;
  } else if (source == "files") {
    e.source = DataSource::Files;
  } else {
    throw ConfigError("data.source must be 'synth' or 'files', got '" + source + "'");
  }
  e.triplet_file = c.get_string("data.triplets", "");
  e.skip_small_partitions = c.get_bool("data.skip_small_partitions", false);

  auto& s = e.synth;
  e.countries = c.get_uint("synth.countries", e.countries);
  s.base.companies = c.get_uint("synth.companies", s.base.companies);
  s.base.products = c.get_uint("synth.products", s.base.products);
  s.base.certificates = c.get_uint("synth.certificates", s.base.certificates);
  s.base.industries = c.get_uint("synth.industries", s.base.industries);
  s.base.signal = c.get_double("synth.signal", s.base.signal);
  s.base.supply_density = c.get_double("synth.supply_density", s.base.supply_density);
  s.base.extra_edge_density = c.get_double("synth.extra_edge_density", s.base.extra_edge_density);
  s.base.extra_cert_density = c.get_double("synth.extra_cert_density", s.base.extra_cert_density);
  s.min_companies = c.get_uint("synth.min_companies", s.min_companies);
  s.max_companies = c.get_uint("synth.max_companies", s.max_companies);

  e.kinds.clear();
  for (const auto& k : c.get_list("kinds", {"supply"})) {
    const auto kind = parse_quintuplet_kind(k);
    if (!kind) throw ConfigError("unknown quintuplet kind '" + k + "'");
    if (std::find(e.kinds.begin(), e.kinds.end(), *kind) == e.kinds.end()) e.kinds.push_back(*kind);
  }
  e.embedders = c.get_list("embedders", {"hash-384"});
  e.architectures.clear();
  for (const auto& a : c.get_list("architectures", {"ANN"})) {
    const auto arch = parse_architecture(a);
    if (std::find(e.architectures.begin(), e.architectures.end(), arch) == e.architectures.end()) {
      e.architectures.push_back(arch);
    }
  }

  e.train.batch_size = c.get_uint("train.batch_size", e.train.batch_size);
  e.train.learning_rate = c.get_double("train.learning_rate", e.train.learning_rate);
  e.train.max_epochs = c.get_uint("train.max_epochs", e.train.max_epochs);
  e.train.patience = c.get_uint("train.patience", e.train.patience);
  e.split.train = c.get_double("split.train", e.split.train);
  e.split.val = c.get_double("split.val", e.split.val);
  e.split.test = c.get_double("split.test", e.split.test);
  e.templates.supply = template_from(QuintupletKind::SuppliesProductTo, c.get_string("template.supply", "default"));
  e.templates.cert = template_from(QuintupletKind::WithCertHasProduct, c.get_string("template.cert", "default"));
  e.embed_endpoint = c.get_string("embed.endpoint", e.embed_endpoint);
  e.embed_cache = c.get_string("embed.cache", "");
  e.balanced_uniform = c.get_bool("report.balanced_uniform", false);
  e.repeats = c.get_uint("report.repeats", 1);
  e.save_histories = c.get_bool("report.histories", false);
  e.validate();
  return e;
}

Config ExperimentConfig::to_config() const {
  Config c;
  c.set("seed", std::to_string(seed));
  if (!out_dir.empty()) c.set("out", out_dir.string());
  c.set("data.source", source == DataSource::Synth ? "synth" : "files");
  if (!triplet_file.empty()) c.set("data.triplets", triplet_file);
  c.set("data.skip_small_partitions", skip_small_partitions ? "true" : "false");
  c.set("synth.countries", std::to_string(countries));
  c.set("synth.companies", std::to_string(synth.base.companies));
  c.set("synth.products", std::to_string(synth.base.products));
  c.set("synth.certificates", std::to_string(synth.base.certificates));
  c.set("synth.industries", std::to_string(synth.base.industries));
  c.set("synth.signal", shortest(synth.base.signal));
  c.set("synth.supply_density", shortest(synth.base.supply_density));
  c.set("synth.extra_edge_density", shortest(synth.base.extra_edge_density));
  c.set("synth.extra_cert_density", shortest(synth.base.extra_cert_density));
  c.set("synth.min_companies", std::to_string(synth.min_companies));
  c.set("synth.max_companies", std::to_string(synth.max_companies));
  std::vector<std::string> names;
  for (auto k : kinds) names.emplace_back(to_string(k));
  c.set("kinds", join(names));
  c.set("embedders", join(embedders));
  names.clear();
  for (auto a : architectures) names.emplace_back(to_string(a));
  c.set("architectures", join(names));
  c.set("train.batch_size", std::to_string(train.batch_size));
  c.set("train.learning_rate", shortest(train.learning_rate));
  c.set("train.max_epochs", std::to_string(train.max_epochs));
  c.set("train.patience", std::to_string(train.patience));
  c.set("split.train", shortest(split.train));
  c.set("split.val", shortest(split.val));
  c.set("split.test", shortest(split.test));
  c.set("template.supply", template_text(templates.supply));
  c.set("template.cert", template_text(templates.cert));
  c.set("embed.endpoint", embed_endpoint);
  if (!embed_cache.empty()) c.set("embed.cache", embed_cache);
  c.set("report.balanced_uniform", balanced_uniform ? "true" : "false");
  c.set("report.repeats", std::to_string(repeats));
  c.set("report.histories", save_histories ? "true" : "false");
  return c;
}

void ExperimentConfig::validate() const {
  if (kinds.empty()) throw ConfigError("at least one quintuplet kind is required");
  if (embedders.empty()) throw ConfigError("at least one embedder is required");
  if (architectures.empty()) throw ConfigError("at least one architecture is required");
  for (const auto& name : embedders) {
    if (!registry_dim(name)) throw ConfigError("unknown embedder '" + name + "'");
  }
  if (source == DataSource::Files && triplet_file.empty()) throw ConfigError("data.triplets is required for files");
  if (source == DataSource::Synth) {
    if (countries == 0) throw ConfigError("synth.countries must be at least 1");
    synth.base.validate();
  }
  if (repeats == 0) throw ConfigError("report.repeats must be at least 1");
  train.validate();
  split.validate();
}

FeatureMatrix baseline_features(std::span<const LabeledQuintuplet> records, const KnowledgeGraph& graph,
                                std::size_t dim) {
  if (dim == 0) throw ConfigError("baseline feature dimension must be positive");
  FeatureMatrix m;
  m.rows = records.size();
  m.cols = dim;
  m.values.assign(m.rows * dim, 0.0);
  m.labels.resize(m.rows);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& q = records[i].quintuplet;
    auto row = m.row(i);
    const auto kind_hash = fnv1a64(to_string(q.kind));
    for (std::size_t slot = 0; slot < 3; ++slot) {
      const auto id = q.slot(slot);
      if (!graph.has_entity(id)) throw LookupError("baseline features: unknown entity id " + std::to_string(index_of(id)));
      const auto h = mix64(kind_hash ^ mix64((static_cast<std::uint64_t>(slot) << 32) | index_of(id)));
      row[h % dim] += (h >> 63) ? -1.0 : 1.0;
    }
    double norm = 0.0;
    for (double v : row) norm += v * v;
    if (norm > 0.0) {
      norm = std::sqrt(norm);
      for (double& v : row) v /= norm;
    }
    m.labels[i] = records[i].label == Label::Positive ? 1 : 0;
  }
  return m;
}

std::string format_cell(const MetricReport& m) {
  return fixed4(m.acc_bw) + "/" + fixed4(m.precision) + "/" + fixed4(m.recall);
}

std::string report_csv(std::span<const ReportRow> rows, bool balanced_uniform) {
  std::vector<const ReportRow*> sorted;
  for (const auto& r : rows) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const ReportRow* a, const ReportRow* b) {
    return std::tie(a->dataset, a->architecture, a->embedder) < std::tie(b->dataset, b->architecture, b->embedder);
  });
  const bool with_sd = std::any_of(rows.begin(), rows.end(), [](const ReportRow& r) { return !r.sd.empty(); });
  std::string out = "dataset,architecture,embedder,acc_bw,precision,recall,fw_score,flags";
  if (balanced_uniform) out += ",acc_balanced_uniform";
  if (with_sd) out += ",acc_bw_sd,precision_sd,recall_sd,fw_score_sd";
  out += '\n';
  for (const auto* r : sorted) {
    const auto flags = describe_flags(r->metrics.flags);
    out += r->dataset + ',' + r->architecture + ',' + r->embedder + ',' + fixed4(r->metrics.acc_bw) + ',' +
           fixed4(r->metrics.precision) + ',' + fixed4(r->metrics.recall) + ',' + fixed4(r->metrics.fw_score) + ',' +
           (flags.empty() ? "none" : flags);
    if (balanced_uniform) out += ',' + fixed4(r->metrics.acc_balanced_uniform);
    if (with_sd) {
      for (std::size_t k = 0; k < 4; ++k) out += ',' + (k < r->sd.size() ? fixed4(r->sd[k]) : std::string{});
    }
    out += '\n';
  }
  return out;
}

std::vector<PivotTable> pivot(std::span<const ReportRow> rows) {
  // (kind, embedder) -> partition -> architecture -> cell
  std::map<std::pair<std::string, std::string>, std::map<std::string, std::map<std::string, std::string>>> groups;
  std::map<std::pair<std::string, std::string>, std::vector<std::string>> columns;
  for (const auto& r : rows) {
    const auto slash = r.dataset.rfind('/');
    const auto partition = r.dataset.substr(0, slash);
    const auto kind = slash == std::string::npos ? std::string{} : r.dataset.substr(slash + 1);
    const auto key = std::make_pair(kind, r.embedder);
    groups[key][partition][r.architecture] = format_cell(r.metrics);
    auto& cols = columns[key];
    if (std::find(cols.begin(), cols.end(), r.architecture) == cols.end()) cols.push_back(r.architecture);
  }
  std::vector<PivotTable> out;
  for (auto& [key, by_partition] : groups) {
    PivotTable t;
    t.kind = key.first;
    t.embedder = key.second;
    // Canonical architecture order, then any unknown names alphabetically.
    auto& cols = columns[key];
    std::sort(cols.begin(), cols.end(), [](const std::string& a, const std::string& b) {
      auto rank = [](const std::string& s) {
        for (std::size_t i = 0; i < kAllArchitectures.size(); ++i)
          if (to_string(kAllArchitectures[i]) == s) return i;
        return kAllArchitectures.size();
      };
      return std::make_pair(rank(a), a) < std::make_pair(rank(b), b);
    });
    t.columns = cols;
    for (const auto& [partition, cells] : by_partition) {
      t.row_keys.push_back(partition);
      std::vector<std::string> row;
      for (const auto& c : t.columns) {
        const auto it = cells.find(c);
        row.push_back(it == cells.end() ? "" : it->second);
      }
      t.cells.push_back(std::move(row));
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::string PivotTable::to_csv() const {
  std::string out = "country";
  for (const auto& c : columns) out += ',' + c;
  out += '\n';
  for (std::size_t i = 0; i < row_keys.size(); ++i) {
    out += row_keys[i];
    for (const auto& cell : cells[i]) out += ',' + cell;
    out += '\n';
  }
  return out;
}

std::unique_ptr<Embedder> make_embedder(const std::string& name, const std::string& endpoint) {
  if (name.rfind("hash-", 0) == 0) {
    const auto dim = registry_dim(name);
    if (!dim) throw ConfigError("bad hash embedder name '" + name + "'");
    return std::make_unique<HashEmbedder>(*dim, 0);
  }
  if (is_baseline(name)) throw ConfigError("baseline features are not a text embedder");
  return std::make_unique<RemoteEmbedder>(endpoint, name);
}

std::map<std::string, KnowledgeGraph> load_partitions(const ExperimentConfig& config) {
  if (config.source == DataSource::Synth) {
    return run_stage("synth", "generating partitions", [&] {
      PartitionConfig pc = config.synth;
      pc.base.seed = derive_seed(config.seed, "synth");
      return generate_partitions(pc, config.countries);
    });
  }
  return run_stage("ingest", config.triplet_file, [&] {
    const auto records = read_triplet_file(config.triplet_file);
    auto graph = KnowledgeGraph::ingest(records);
    auto parts = partition_by_country(graph);
    if (parts.empty()) parts.emplace("ALL", std::move(graph));
    return parts;
  });
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult result;
  StageClock clock;
  nlohmann::ordered_json seeds = nlohmann::ordered_json::object();
  nlohmann::ordered_json datasets = nlohmann::ordered_json::array();

  const auto partitions = clock.time("load", [&] { return load_partitions(config); });
  std::unique_ptr<EmbeddingCache> cache = run_stage("embed", "opening cache", [&] {
    return config.embed_cache.empty() ? std::make_unique<EmbeddingCache>()
                                      : std::make_unique<EmbeddingCache>(fs::path(config.embed_cache));
  });
  std::map<std::string, std::unique_ptr<Embedder>> embedders;
  for (const auto& name : config.embedders) {
    if (!is_baseline(name)) embedders[name] = run_stage("embed", name, [&] { return make_embedder(name, config.embed_endpoint); });
  }

  for (const auto& [partition, graph] : partitions) {
    for (const auto kind : config.kinds) {
      const std::string dataset = partition + "/" + std::string(to_string(kind));
      const auto positives =
          clock.time("derive", [&] { return run_stage("derive", dataset, [&] { return derive(graph, kind); }); });
      if (positives.size() * 2 < kMinSplitSize && config.skip_small_partitions) {
        result.warnings.push_back(dataset + ": skipped, only " + std::to_string(positives.size()) + " positives");
        continue;
      }
      const auto dataset_seed = derive_seed(config.seed, "dataset:" + dataset);
      const auto labeled = clock.time("sample", [&] {
        return run_stage("sample", dataset, [&] { return build_dataset(positives, graph, dataset_seed); });
      });
      for (const auto& w : labeled.warnings) result.warnings.push_back(dataset + ": " + w);
      seeds[dataset] = {{"dataset", dataset_seed}};

      // (architecture, embedder) -> per-repeat reports
      std::map<std::pair<std::string, std::string>, std::vector<MetricReport>> reports;
      nlohmann::ordered_json split_sizes = nlohmann::ordered_json::array();
      for (std::size_t rep = 0; rep < config.repeats; ++rep) {
        const auto split_seed = derive_seed(config.seed, "split:" + dataset, rep);
        const auto parts = clock.time("split", [&] {
          return run_stage("split", dataset, [&] { return split(labeled.records, config.split, split_seed); });
        });
        seeds[dataset]["split"].push_back(split_seed);
        split_sizes.push_back({parts.train.size(), parts.val.size(), parts.test.size()});

        for (const auto& emb_name : config.embedders) {
          struct Sets {
            FeatureMatrix train, val, test;
          };
          const auto sets = clock.time("embed", [&] {
            return run_stage("embed", dataset + " with " + emb_name, [&] {
              if (is_baseline(emb_name)) {
                const auto dim = *registry_dim(emb_name);
                return Sets{baseline_features(parts.train, graph, dim), baseline_features(parts.val, graph, dim),
                            baseline_features(parts.test, graph, dim)};
              }
              auto& e = *embedders.at(emb_name);
              Sets s;
              s.train = embed_dataset(parts.train, graph, config.templates, e, cache.get()).matrix;
              s.val = embed_dataset(parts.val, graph, config.templates, e, cache.get()).matrix;
              s.test = embed_dataset(parts.test, graph, config.templates, e, cache.get()).matrix;
              return s;
            });
          });

          for (const auto arch : config.architectures) {
            const std::string cell = dataset + " " + std::string(to_string(arch)) + " " + emb_name;
            const auto train_seed = derive_seed(config.seed, "train:" + cell, rep);
            seeds[dataset]["train"][std::string(to_string(arch)) + " " + emb_name].push_back(train_seed);
            Model model = run_stage("train", cell, [&] { return Model(arch, sets.train.cols, train_seed); });
            TrainConfig tc = config.train;
            tc.seed = train_seed;
            const auto history = clock.time("train", [&] {
              return run_stage("train", cell, [&] { return train(model, sets.train, sets.val, tc); });
            });
            if (config.save_histories) {
              auto key = partition + "_" + std::string(to_string(kind)) + "_" + std::string(to_string(arch)) + "_" +
                         emb_name;
              if (config.repeats > 1) key += "_r" + std::to_string(rep);
              result.histories[key] = history.to_csv();
            }
            const auto report = clock.time("evaluate", [&] {
              return run_stage("evaluate", cell, [&] {
                const auto pred = predict(model, sets.test);
                return evaluate(confusion(pred.labels, sets.test.labels));
              });
            });
            reports[{std::string(to_string(arch)), emb_name}].push_back(report);
          }
        }
      }

      for (const auto& [key, runs] : reports) {
        ReportRow row{dataset, key.first, key.second, runs.front(), {}};
        if (runs.size() > 1) {
          auto field = [](const MetricReport& m, std::size_t k) {
            return k == 0 ? m.acc_bw : k == 1 ? m.precision : k == 2 ? m.recall : m.fw_score;
          };
          MetricReport mean{};
          for (const auto& r : runs) {
            mean.cm.tp += r.cm.tp;
            mean.cm.fn += r.cm.fn;
            mean.cm.fp += r.cm.fp;
            mean.cm.tn += r.cm.tn;
            mean.flags |= r.flags;
            mean.acc_balanced_uniform += r.acc_balanced_uniform / static_cast<double>(runs.size());
          }
          const double k_runs = static_cast<double>(runs.size());
          double* targets[] = {&mean.acc_bw, &mean.precision, &mean.recall, &mean.fw_score};
          for (std::size_t k = 0; k < 4; ++k) {
            double m = 0.0;
            for (const auto& r : runs) m += field(r, k);
            m /= k_runs;
            double ss = 0.0;
            for (const auto& r : runs) ss += (field(r, k) - m) * (field(r, k) - m);
            *targets[k] = m;
            row.sd.push_back(std::sqrt(ss / (k_runs - 1.0)));
          }
          row.metrics = mean;
        }
        result.rows.push_back(std::move(row));
      }
      datasets.push_back({{"dataset", dataset},
                          {"entities", graph.entity_count()},
                          {"triplets", graph.triplet_count()},
                          {"positives", positives.size()},
                          {"records", labeled.records.size()},
                          {"splits", split_sizes}});
    }
  }

  std::sort(result.rows.begin(), result.rows.end(), [](const ReportRow& a, const ReportRow& b) {
    return std::tie(a.dataset, a.architecture, a.embedder) < std::tie(b.dataset, b.architecture, b.embedder);
  });
  result.pivots = pivot(result.rows);

  nlohmann::ordered_json manifest;
  manifest["software"] = {{"name", "quintlink"}, {"version", QUINTLINK_VERSION}};
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  const auto resolved = config.to_config();
  for (const auto& [k, v] : resolved.entries()) cfg[k] = v;
  manifest["config"] = cfg;
  manifest["seed_scheme"] = "derive_seed(master, stage, index) = mix64(mix64(master ^ fnv1a64(stage)) + index)";
  manifest["seeds"] = seeds;
  manifest["datasets"] = datasets;
  manifest["notes"] = {
      "LogReg is trained with cross-entropy on its two pre-sigmoid scores; predictions report sigmoid scores",
      "baseline-<dim> features hash entity identity only and are not a pretrained-model embedding",
      "acc_bw uses prevalence weights and equals plain accuracy; acc_balanced_uniform uses equal class weights",
      "report.repeats > 1 reports mean and sample standard deviation over independent splits"};
  manifest["warnings"] = result.warnings;
  nlohmann::ordered_json timings = nlohmann::ordered_json::object();
  for (const auto& [stage, secs] : clock.seconds()) timings[stage] = secs;
  manifest["timings_seconds"] = timings;
  result.manifest = manifest.dump(2) + "\n";
  return result;
}

void write_outputs(const ExperimentResult& result, const ExperimentConfig& config) {
  if (config.out_dir.empty()) throw ConfigError("no output directory given");
  const fs::path out = config.out_dir;
  const fs::path staging = out.parent_path() / ("." + out.filename().string() + ".partial");
  auto write_text = [](const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    f << text;
    f.close();
    if (!f) throw Error("cannot write " + p.string());
  };
  try {
    fs::remove_all(staging);
    fs::create_directories(staging);
    write_text(staging / "report.csv", report_csv(result.rows, config.balanced_uniform));
    for (const auto& t : result.pivots) write_text(staging / ("pivot_" + t.kind + "_" + t.embedder + ".csv"), t.to_csv());
    write_text(staging / "manifest.json", result.manifest);
    if (!result.histories.empty()) {
      fs::create_directories(staging / "histories");
      for (const auto& [key, csv] : result.histories) write_text(staging / "histories" / (key + ".csv"), csv);
    }
    fs::create_directories(out);
    for (const auto& entry : fs::recursive_directory_iterator(staging)) {
      const auto rel = fs::relative(entry.path(), staging);
      if (entry.is_directory()) {
        fs::create_directories(out / rel);
      } else {
        fs::rename(entry.path(), out / rel);
      }
    }
    fs::remove_all(staging);
  } catch (const std::exception& e) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    throw StageError("report", e.what());
  }
}

ExperimentResult run_benchmark_matrix(const ExperimentConfig& config) {
  auto result = run_experiment(config);
  write_outputs(result, config);
  return result;
}

}  // namespace quintlink
