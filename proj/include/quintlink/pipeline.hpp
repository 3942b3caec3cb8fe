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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "quintlink/config.hpp"
#include "quintlink/embedding.hpp"
#include "quintlink/features.hpp"
#include "quintlink/kg.hpp"
#include "quintlink/metrics.hpp"
#include "quintlink/models.hpp"
#include "quintlink/quintuplet.hpp"
#include "quintlink/synth.hpp"
#include "quintlink/verbalizer.hpp"

namespace quintlink {

enum class DataSource { Synth, Files };

struct ExperimentConfig {
  DataSource source = DataSource::Synth;
  std::string triplet_file;
  /// Skip partitions too small to split instead of failing the run.
  bool skip_small_partitions = false;
  PartitionConfig synth;
  std::size_t countries = 25;

  std::vector<QuintupletKind> kinds{QuintupletKind::SuppliesProductTo};
  /// "hash-<dim>", "baseline-<dim>" or a pretrained model served by the sidecar.
  std::vector<std::string> embedders{"hash-384"};
  std::vector<Architecture> architectures{Architecture::ANN};
  TrainConfig train;
  SplitRatios split;
  TemplateSet templates;
  std::string embed_endpoint = "127.0.0.1:8876";
  std::string embed_cache;

  std::uint64_t seed = 0;
  std::size_t repeats = 1;
  bool balanced_uniform = false;
  bool save_histories = false;
  std::filesystem::path out_dir;

  /// Throws ConfigError; a seed is mandatory.
  static ExperimentConfig from_config(const Config& config);
  /// Round-trips through from_config.
  Config to_config() const;
  void validate() const;
};

/// Config keys understood by ExperimentConfig::from_config.
std::span<const std::string_view> experiment_config_keys() noexcept;

/// Signed hashing of (quintuplet kind, slot, entity id) into `dim` buckets,
/// L2-normalized. Uses entity identity only, never names.
FeatureMatrix baseline_features(std::span<const LabeledQuintuplet> records, const KnowledgeGraph& graph,
                                std::size_t dim);

struct ReportRow {
  std::string dataset;  // "<partition>/<kind>"
  std::string architecture;
  std::string embedder;
  MetricReport metrics;
  /// Standard deviations over repeats; empty for a single run.
  std::vector<double> sd;
};

/// Sorted by (dataset, architecture, embedder).
std::string report_csv(std::span<const ReportRow> rows, bool balanced_uniform);

/// Countries by architectures for one (kind, embedder); cells "acc/precision/recall".
struct PivotTable {
  std::string kind;
  std::string embedder;
  std::vector<std::string> columns;
  std::vector<std::string> row_keys;
  std::vector<std::vector<std::string>> cells;

  std::string to_csv() const;
};

std::string format_cell(const MetricReport& m);
std::vector<PivotTable> pivot(std::span<const ReportRow> rows);

struct ExperimentResult {
  std::vector<ReportRow> rows;
  std::vector<PivotTable> pivots;
  /// JSON text.
  std::string manifest;
  std::vector<std::string> warnings;
  /// "<partition>_<kind>_<arch>_<embedder>" -> TrainHistory CSV, when requested.
  std::map<std::string, std::string> histories;
};

/// Loads or generates the partitions named by the config.
std::map<std::string, KnowledgeGraph> load_partitions(const ExperimentConfig& config);

/// Runs every (partition, kind, embedder, architecture) cell. Failures are
/// re-thrown as StageError tagged with the failing stage.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// run_experiment plus writing report.csv, pivot_<kind>_<embedder>.csv and
/// manifest.json into config.out_dir. Files are staged in a sibling
/// temporary directory that is renamed into place only on success.
ExperimentResult run_benchmark_matrix(const ExperimentConfig& config);

void write_outputs(const ExperimentResult& result, const ExperimentConfig& config);

/// Creates the embedder for a name other than "baseline-<dim>".
std::unique_ptr<Embedder> make_embedder(const std::string& name, const std::string& endpoint);

}  // namespace quintlink
