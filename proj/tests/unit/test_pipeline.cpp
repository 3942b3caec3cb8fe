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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "oracles.hpp"
#include "quintlink/error.hpp"
#include "quintlink/pipeline.hpp"

namespace quintlink {
namespace {

namespace fs = std::filesystem;

ExperimentConfig small_config(std::size_t countries) {
  auto c = ExperimentConfig::from_config(Config::parse("seed = 5\n"));
  c.countries = countries;
  c.synth.min_companies = 30;
  c.synth.max_companies = 40;
  c.synth.base.companies = 40;
  c.synth.base.products = 12;
  c.synth.base.supply_density = 0.05;
  c.train.max_epochs = 2;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

TEST(ExperimentConfig, RequiresSeedAndRejectsUnknownKeys) {
  EXPECT_THROW(ExperimentConfig::from_config(Config::parse("kinds = supply\n")), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_config(Config::parse("seed = 1\ncolour = red\n")), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_config(Config::parse("seed = 1\narchitectures =\n")), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_config(Config::parse("seed = 1\nembedders = word2vec\n")), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_config(Config::parse("seed = 1\nkinds = triads\n")), ConfigError);
}

TEST(ExperimentConfig, EmptyArchitectureListIsRejected) {
  auto c = small_config(1);
  c.architectures.clear();
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(run_experiment(c), ConfigError);
}

TEST(ExperimentConfig, RoundTripsThroughText) {
  const auto text =
      "seed = 9\nkinds = supply,cert\nembedders = hash-128,baseline-128\narchitectures = ANN,LSTM\n"
      "train.max_epochs = 7\nsynth.signal = 0.3\ntemplate.cert = {P} held by {A} with {C}\n"
      "report.balanced_uniform = true\n";
  const auto c = ExperimentConfig::from_config(Config::parse(text));
  EXPECT_EQ(c.kinds.size(), 2u);
  EXPECT_EQ(c.architectures.back(), Architecture::LSTM);
  EXPECT_EQ(c.train.max_epochs, 7u);
  EXPECT_EQ(c.templates.cert.pattern(), "{P} held by {A} with {C}");
  const auto again = ExperimentConfig::from_config(c.to_config());
  EXPECT_EQ(again.to_config().to_text(), c.to_config().to_text());
  const auto resolved = c.to_config();
  for (const auto& [k, v] : resolved.entries()) {
    EXPECT_NE(std::find(experiment_config_keys().begin(), experiment_config_keys().end(), k),
              experiment_config_keys().end())
        << k;
  }
}

TEST(BaselineFeatures, IdentityOnlyAndNearOrthogonal) {
  Rng rng(61);
  const auto g = testing::random_graph(rng, 50);
  const auto ds = build_dataset(derive_cert(g), g, 2).records;
  ASSERT_GE(ds.size(), 2u);
  const auto m = baseline_features(ds, g, 384);
  EXPECT_EQ(m.cols, 384u);
  const std::vector<LabeledQuintuplet> twice{ds[0], ds[0]};
  const auto t = baseline_features(twice, g, 384);
  EXPECT_TRUE(std::equal(t.row(0).begin(), t.row(0).end(), t.row(1).begin()));

  // Rename every entity: rows must not change.
  std::vector<Entity> renamed(g.entities().begin(), g.entities().end());
  for (auto& e : renamed) e.name = "zz" + e.name + "zz";
  const auto g2 = KnowledgeGraph::from_parts(renamed, {g.triplets().begin(), g.triplets().end()});
  EXPECT_EQ(baseline_features(ds, g2, 384).values, m.values);

  // Disjoint quintuplets over a large id space.
  std::vector<Entity> es;
  for (std::uint32_t i = 0; i < 6000; ++i) {
    es.push_back({EntityId{i}, i < 4000 ? EntityKind::Company : EntityKind::Product, "e" + std::to_string(i), {}});
  }
  const auto big = KnowledgeGraph::from_parts(es, {});
  double total = 0;
  for (std::uint32_t k = 0; k < 1000; ++k) {
    const std::vector<LabeledQuintuplet> pair{
        {{QuintupletKind::SuppliesProductTo, EntityId{4 * k % 4000}, EntityId{4000 + (2 * k) % 2000},
          EntityId{(4 * k + 1) % 4000}},
         Label::Positive,
         std::nullopt},
        {{QuintupletKind::SuppliesProductTo, EntityId{(4 * k + 2) % 4000}, EntityId{4000 + (2 * k + 1) % 2000},
          EntityId{(4 * k + 3) % 4000}},
         Label::Positive,
         std::nullopt}};
    const auto f = baseline_features(pair, big, 384);
    double dot = 0, na = 0, nb = 0;
    for (std::size_t j = 0; j < 384; ++j) {
      dot += f.row(0)[j] * f.row(1)[j];
      na += f.row(0)[j] * f.row(0)[j];
      nb += f.row(1)[j] * f.row(1)[j];
    }
    EXPECT_NEAR(na, 1.0, 1e-12);
    total += std::abs(dot) / std::sqrt(na * nb);
  }
  EXPECT_LE(total / 1000, 0.1);
}

ReportRow row(std::string dataset, std::string arch, std::string emb, ConfusionMatrix cm) {
  return {std::move(dataset), std::move(arch), std::move(emb), evaluate(cm), {}};
}

TEST(Report, CellFormatAndSortedRows) {
  MetricReport m;
  m.acc_bw = 0.90374;
  m.precision = 0.90626;
  m.recall = 0.9024;
  EXPECT_EQ(format_cell(m), "0.9037/0.9063/0.9024");
  const std::vector<ReportRow> rows{row("B/supplies_product_to", "ANN", "hash-8", {5, 0, 0, 5}),
                                    row("A/supplies_product_to", "LogReg", "hash-8", {0, 5, 0, 5}),
                                    row("A/supplies_product_to", "ANN", "hash-8", {40, 10, 5, 45})};
  const auto csv = report_csv(rows, false);
  EXPECT_EQ(csv,
            "dataset,architecture,embedder,acc_bw,precision,recall,fw_score,flags\n"
            "A/supplies_product_to,ANN,hash-8,0.8500,0.8889,0.8000,0.8496,none\n"
            "A/supplies_product_to,LogReg,hash-8,0.5000,0.0000,0.0000,0.3333,"
            "precision_undefined|fscore_undefined\n"
            "B/supplies_product_to,ANN,hash-8,1.0000,1.0000,1.0000,1.0000,none\n");
  EXPECT_NE(report_csv(rows, true).find(",acc_balanced_uniform\n"), std::string::npos);
}

TEST(Report, PivotMatchesGroupByOracle) {
  Rng rng(71);
  std::vector<ReportRow> rows;
  const std::vector<std::string> archs{"LSTM", "ANN", "CNN1D"};
  for (const char* country : {"JAPAN", "EGYPT", "CHINA"}) {
    for (const char* kind : {"supplies_product_to", "with_cert_has_product"}) {
      for (const char* emb : {"hash-8", "baseline-8"}) {
        for (const auto& a : archs) {
          rows.push_back(row(std::string(country) + "/" + kind, a, emb,
                             {1 + rng.below(9), 1 + rng.below(9), 1 + rng.below(9), 1 + rng.below(9)}));
        }
      }
    }
  }
  const auto tables = pivot(rows);
  ASSERT_EQ(tables.size(), 4u);
  for (const auto& t : tables) {
    EXPECT_EQ(t.columns, (std::vector<std::string>{"ANN", "CNN1D", "LSTM"}));
    EXPECT_EQ(t.row_keys, (std::vector<std::string>{"CHINA", "EGYPT", "JAPAN"}));
    for (std::size_t i = 0; i < t.row_keys.size(); ++i) {
      for (std::size_t j = 0; j < t.columns.size(); ++j) {
        std::vector<std::string> found;
        for (const auto& r : rows) {
          if (r.dataset == t.row_keys[i] + "/" + t.kind && r.embedder == t.embedder && r.architecture == t.columns[j])
            found.push_back(format_cell(r.metrics));
        }
        ASSERT_EQ(found.size(), 1u);
        EXPECT_EQ(t.cells[i][j], found[0]);
      }
    }
    EXPECT_EQ(t.to_csv().substr(0, 23), "country,ANN,CNN1D,LSTM\n");
  }
}

TEST(Pipeline, CartesianRowCount) {
  auto c = small_config(25);
  c.kinds = {QuintupletKind::SuppliesProductTo, QuintupletKind::WithCertHasProduct};
  c.train.max_epochs = 1;
  const auto result = run_experiment(c);
  EXPECT_EQ(result.rows.size(), 50u);
  EXPECT_EQ(result.pivots.size(), 2u);
  for (const auto& t : result.pivots) EXPECT_EQ(t.row_keys.size(), 25u);
}

class PipelineFiles : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("quintlink_pipe_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST_F(PipelineFiles, RerunIsByteIdentical) {
  auto c = small_config(3);
  c.embedders = {"hash-64", "baseline-64"};
  c.architectures = {Architecture::ANN, Architecture::LogReg};
  c.save_histories = true;
  c.out_dir = dir_ / "a";
  run_benchmark_matrix(c);
  c.out_dir = dir_ / "b";
  run_benchmark_matrix(c);
  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir_ / "a")) {
    if (!entry.is_regular_file() || entry.path().filename() == "manifest.json") continue;
    const auto rel = fs::relative(entry.path(), dir_ / "a");
    EXPECT_EQ(slurp(entry.path()), slurp(dir_ / "b" / rel)) << rel;
    ++compared;
  }
  EXPECT_GE(compared, 4u);
  EXPECT_TRUE(fs::exists(dir_ / "a" / "pivot_supplies_product_to_hash-64.csv"));
  EXPECT_FALSE(fs::exists(dir_ / ".a.partial"));

  const auto manifest = nlohmann::json::parse(slurp(dir_ / "a" / "manifest.json"));
  EXPECT_EQ(manifest["config"]["seed"], "5");
  auto replay = ExperimentConfig::from_config([&] {
    Config cfg;
    for (const auto& [k, v] : manifest["config"].items()) cfg.set(k, v.get<std::string>());
    return cfg;
  }());
  replay.out_dir = dir_ / "c";
  run_benchmark_matrix(replay);
  EXPECT_EQ(slurp(dir_ / "a" / "report.csv"), slurp(dir_ / "c" / "report.csv"));
}

TEST_F(PipelineFiles, FailedWriteLeavesNoPartialOutput) {
  auto c = small_config(1);
  const auto result = run_experiment(c);
  const auto blocker = dir_ / "out";
  std::ofstream(blocker) << "not a directory";
  c.out_dir = blocker;
  try {
    write_outputs(result, c);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "report");
  }
  EXPECT_FALSE(fs::exists(dir_ / ".out.partial"));
  c.out_dir.clear();
  EXPECT_THROW(write_outputs(result, c), ConfigError);
}

TEST_F(PipelineFiles, StageErrorsAreTagged) {
  auto c = small_config(1);
  c.synth.base.companies = 3;
  c.synth.base.supply_density = 0.2;
  try {
    run_experiment(c);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "split");
  }
  c.skip_small_partitions = true;
  const auto r = run_experiment(c);
  EXPECT_TRUE(r.rows.empty());
  EXPECT_FALSE(r.warnings.empty());

  c = small_config(1);
  c.source = DataSource::Files;
  c.triplet_file = (dir_ / "missing.csv").string();
  try {
    run_experiment(c);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "ingest");
  }
}

TEST_F(PipelineFiles, FileSourcePartitionsByCountry) {
  auto c = small_config(2);
  const auto parts = load_partitions(c);
  write_triplet_file((dir_ / "t.csv").string(), merge_graphs(parts));
  auto f = small_config(1);
  f.source = DataSource::Files;
  f.triplet_file = (dir_ / "t.csv").string();
  const auto loaded = load_partitions(f);
  ASSERT_EQ(loaded.size(), 2u);
  for (const auto& [k, g] : parts) EXPECT_EQ(loaded.at(k).triplet_count(), g.triplet_count());
}

}  // namespace
}  // namespace quintlink
