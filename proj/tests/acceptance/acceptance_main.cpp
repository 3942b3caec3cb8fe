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

// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "quintlink/error.hpp"
#include "quintlink/metrics.hpp"
#include "quintlink/models.hpp"
#include "quintlink/pipeline.hpp"

namespace {

using namespace quintlink;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

// Appends a failure note and clears the pass bit.
void require(Outcome& o, bool ok, const std::string& what) {
  if (ok) return;
  o.pass = false;
  if (!o.detail.empty()) o.detail += "; ";
  o.detail += what;
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

Outcome gradient_suite() {
  Outcome o;
  const std::vector<std::string> kinds{"Linear", "BatchNorm1d", "Conv1D", "AvgPool1D", "BiLSTM",   "Sigmoid",
                                       "Softmax", "ReLU",       "ToSequence", "LastStep", "Flatten", "ToChannels"};
  double worst = 0.0;
  std::size_t instances = 0;
  for (const auto& kind : kinds) {
    Rng rng(derive_seed(20261016, "grad:" + kind));
    for (int trial = 0; trial < 20; ++trial) {
      const auto c = testing::random_case(kind, rng);
      auto layer = nn::make_layer(c.spec, rng);
      auto x = testing::random_tensor(c.input, rng);
      if (kind == "ReLU") {
        for (auto& v : x.values())
          if (std::abs(v) < 1e-2) v = 0.5;
      }
      const auto r = testing::check_layer(*layer, x, rng);
      worst = std::max(worst, r.max_rel_error);
      require(o, r.checked > 0 && r.max_rel_error <= 1e-4, nn::describe(c.spec) + ": " + r.worst);
      ++instances;
    }
  }
  Rng rng(derive_seed(20261016, "grad:cross_entropy"));
  for (int trial = 0; trial < 20; ++trial) {
    const auto n = 1 + rng.below(8);
    std::vector<int> labels(n);
    for (auto& l : labels) l = static_cast<int>(rng.below(2));
    const auto r = testing::check_cross_entropy(testing::random_tensor({n, 2}, rng, -3, 3), labels);
    worst = std::max(worst, r.max_rel_error);
    require(o, r.max_rel_error <= 1e-4, "cross-entropy: " + r.worst);
    ++instances;
  }
  if (o.pass) o.detail = std::to_string(instances) + " instances, max rel error " + fmt(worst * 1e6, 3) + "e-6";
  return o;
}

Outcome join_oracle() {
  Outcome o;
  Rng rng(derive_seed(20261016, "join"));
  std::size_t quintuplets = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto g = testing::random_graph(rng, 50);
    for (auto kind : {QuintupletKind::SuppliesProductTo, QuintupletKind::WithCertHasProduct}) {
      const auto got = derive(g, kind);
      quintuplets += got.size();
      require(o, got == testing::join_oracle(g, kind), "graph " + std::to_string(trial) + " " +
                                                            std::string(to_string(kind)) + " differs");
    }
  }
  if (o.pass) o.detail = "200 graphs, " + std::to_string(quintuplets) + " quintuplets, exact match";
  return o;
}

Outcome negative_sampling() {
  Outcome o;
  Rng rng(derive_seed(20261016, "negatives"));
  std::size_t negatives = 0, graphs = 0;
  while (negatives < 10000) {
    const auto g = testing::random_graph(rng, 50);
    ++graphs;
    for (auto kind : {QuintupletKind::SuppliesProductTo, QuintupletKind::WithCertHasProduct}) {
      const auto positives = derive(g, kind);
      if (positives.empty()) continue;
      const auto ds = build_dataset(positives, g, rng.next());
      std::size_t pos = 0, neg = 0;
      for (const auto& r : ds.records) {
        const auto& q = r.quintuplet;
        if (r.label == Label::Positive) {
          ++pos;
          require(o, positives.contains(q), "positive not derived");
          continue;
        }
        ++neg;
        require(o, !positives.contains(q), "negative collides with a positive");
        require(o, well_typed(q, g), "negative breaks the type signature");
        require(o, r.corruption.has_value(), "negative without strategy");
      }
      require(o, pos == positives.size(), "positives lost");
      if (ds.warnings.empty()) require(o, pos == neg, "unbalanced dataset without warnings");
      require(o, neg + ds.warnings.size() == pos, "warning count mismatch");
      negatives += neg;
    }
  }
  if (o.pass) o.detail = std::to_string(negatives) + " negatives over " + std::to_string(graphs) + " graphs, no collisions";
  return o;
}

Outcome metric_oracles() {
  Outcome o;
  const ConfusionMatrix cm{40, 10, 5, 45};
  const auto r = evaluate(cm);
  const double p = 40.0 / 45.0, rc = 40.0 / 50.0, pn = 45.0 / 55.0, rn = 45.0 / 50.0;
  const double fw = 0.5 * (2 * p * rc / (p + rc)) + 0.5 * (2 * pn * rn / (pn + rn));
  require(o, std::abs(r.acc_bw - 0.85) <= 1e-9, "acc_bw " + fmt(r.acc_bw, 12));
  require(o, std::abs(r.precision - p) <= 1e-9, "precision");
  require(o, std::abs(r.recall - rc) <= 1e-9, "recall");
  require(o, std::abs(r.fw_score - fw) <= 1e-9 && std::abs(r.fw_score - 0.8496) < 5e-5, "fw " + fmt(r.fw_score, 12));

  Rng rng(derive_seed(20261016, "metrics"));
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(400);
    std::vector<int> truth(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = static_cast<int>(rng.below(2));
      pred[i] = static_cast<int>(rng.below(2));
    }
    const auto c = testing::count_cells(truth, pred);
    const auto m = confusion(pred, truth);
    require(o, m.tp == std::uint64_t(c.tp) && m.fn == std::uint64_t(c.fn) && m.fp == std::uint64_t(c.fp) &&
                   m.tn == std::uint64_t(c.tn),
            "confusion counts");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) hits += truth[i] == pred[i];
    const double acc = static_cast<double>(hits) / static_cast<double>(n);
    const auto b = basic_metrics(m);
    require(o, std::abs(b.accuracy - acc) <= 1e-9, "accuracy");
    if (c.tp + c.fp > 0) require(o, std::abs(b.precision - double(c.tp) / double(c.tp + c.fp)) <= 1e-9, "precision");
    if (c.tp + c.fn > 0) require(o, std::abs(b.recall - double(c.tp) / double(c.tp + c.fn)) <= 1e-9, "recall");
    worst = std::max(worst, std::abs(balanced_accuracy_weighted(m).value - acc));
  }
  require(o, worst <= 1e-12, "identity gap " + fmt(worst, 15));
  if (o.pass) o.detail = "fw " + fmt(r.fw_score) + ", acc_bw " + fmt(r.acc_bw) + ", identity gap " + fmt(worst * 1e15, 1) + "e-15";
  return o;
}

struct PlantedRun {
  std::map<std::string, double> hash, baseline;
  double seconds = 0;
};

PlantedRun planted(double signal) {
  auto cfg = ExperimentConfig::from_config(Config::parse("seed = 20261016\n"));
  cfg.countries = 25;
  cfg.synth.base.signal = signal;
  cfg.embedders = {"hash-384", "baseline-384"};
  cfg.architectures = {Architecture::ANN};
  cfg.train.max_epochs = 30;
  const auto start = Clock::now();
  const auto result = run_experiment(cfg);
  PlantedRun out;
  out.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  for (const auto& row : result.rows) {
    (row.embedder == "hash-384" ? out.hash : out.baseline)[row.dataset] = row.metrics.acc_bw;
  }
  return out;
}

double mean(const std::map<std::string, double>& m) {
  double s = 0;
  for (const auto& [k, v] : m) s += v;
  return m.empty() ? 0.0 : s / static_cast<double>(m.size());
}

Outcome planted_replication() {
  Outcome o;
  const auto strong = planted(0.9);
  const auto none = planted(0.0);
  std::size_t wins = 0;
  for (const auto& [dataset, acc] : strong.hash) wins += acc - strong.baseline.at(dataset) >= 0.05;
  const double hash_mean = mean(strong.hash), base_mean = mean(strong.baseline);
  const double hash0 = mean(none.hash), base0 = mean(none.baseline);
  require(o, strong.hash.size() == 25 && strong.baseline.size() == 25, "expected 25 partitions");
  require(o, hash_mean >= 0.90, "hash mean " + fmt(hash_mean) + " < 0.90");
  require(o, wins >= 20, "margin >= 0.05 on only " + std::to_string(wins) + "/25");
  require(o, std::abs(hash0 - 0.5) <= 0.05, "signal 0 hash mean " + fmt(hash0));
  require(o, std::abs(base0 - 0.5) <= 0.05, "signal 0 baseline mean " + fmt(base0));
  const double secs = strong.seconds + none.seconds;
  require(o, secs < 600, "run took " + fmt(secs, 0) + " s");
  std::ostringstream os;
  os << "signal 0.9: hash " << fmt(hash_mean) << " vs baseline " << fmt(base_mean) << ", margin on " << wins
     << "/25; signal 0: hash " << fmt(hash0) << ", baseline " << fmt(base0) << "; " << fmt(secs, 0) << " s";
  o.detail = o.pass ? os.str() : os.str() + "; " + o.detail;
  return o;
}

Outcome smoke_matrix() {
  Outcome o;
  auto cfg = ExperimentConfig::from_config(Config::parse("seed = 20261016\n"));
  cfg.synth.base.companies = 80;
  cfg.synth.base.products = 15;
  cfg.countries = 1;
  const auto parts = load_partitions(cfg);
  const auto& [partition, graph] = *parts.begin();
  const auto positives = derive_supply(graph);
  const auto ds = build_dataset(positives, graph, derive_seed(cfg.seed, "dataset"));
  const auto s = split(ds.records, {}, derive_seed(cfg.seed, "split"));
  HashEmbedder embedder(384, 0);
  const auto train_set = embed_dataset(s.train, graph, {}, embedder, nullptr).matrix;
  const auto val_set = embed_dataset(s.val, graph, {}, embedder, nullptr).matrix;

  std::ostringstream os;
  os << partition << " " << train_set.rows << " train rows;";
  for (auto arch : kAllArchitectures) {
    TrainConfig tc;
    tc.max_epochs = 50;
    tc.patience = 1000;
    tc.seed = derive_seed(cfg.seed, "smoke", static_cast<std::uint64_t>(arch));
    Model model(arch, 384, tc.seed);
    try {
      const auto h = train(model, train_set, val_set, tc);
      const bool ok = h.train_loss.size() == 50 && h.train_loss.back() < h.train_loss.front();
      require(o, ok, std::string(to_string(arch)) + " loss did not fall");
      os << " " << to_string(arch) << " " << fmt(h.train_loss.front(), 3) << "->" << fmt(h.train_loss.back(), 3);
    } catch (const Error& e) {
      require(o, false, std::string(to_string(arch)) + ": " + e.what());
    }
  }

  // Ten consecutive (train down, val up) epochs fire the stop; a broken streak resets it.
  EarlyStopper stopper(10);
  std::vector<std::pair<double, double>> trace{{1.0, 1.0}, {0.9, 0.9}, {0.8, 1.0}, {0.7, 0.95}};
  for (int i = 1; i <= 10; ++i) trace.emplace_back(0.7 - 0.01 * i, 0.95 + 0.01 * i);
  std::size_t fired = 0;
  for (std::size_t e = 0; e < trace.size(); ++e) {
    if (stopper.update(trace[e].first, trace[e].second)) {
      fired = e + 1;
      break;
    }
  }
  require(o, fired == trace.size(), "early stop fired at epoch " + std::to_string(fired));
  os << "; early stop at epoch " << fired << " of " << trace.size();
  o.detail = o.pass ? os.str() : os.str() + "; " + o.detail;
  return o;
}

Outcome determinism() {
  Outcome o;
  auto cfg = ExperimentConfig::from_config(Config::parse("seed = 20261016\n"));
  cfg.countries = 3;
  cfg.kinds = {QuintupletKind::SuppliesProductTo, QuintupletKind::WithCertHasProduct};
  cfg.embedders = {"hash-384", "baseline-384"};
  cfg.architectures = {Architecture::ANN, Architecture::LogReg, Architecture::LSTM};
  cfg.train.max_epochs = 5;
  cfg.save_histories = true;
  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);
  const auto ra = report_csv(a.rows, true), rb = report_csv(b.rows, true);
  require(o, ra == rb, "report differs");
  require(o, a.histories == b.histories, "training histories differ");
  for (std::size_t i = 0; i < a.pivots.size(); ++i) require(o, a.pivots[i].to_csv() == b.pivots[i].to_csv(), "pivot differs");
  if (o.pass) o.detail = std::to_string(a.rows.size()) + " report rows and " + std::to_string(a.histories.size()) + " histories byte-identical";
  return o;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"gradient-suite", 120, gradient_suite},
      {"join-oracle", 30, join_oracle},
      {"negative-sampling", 30, negative_sampling},
      {"metric-oracles", 30, metric_oracles},
      {"planted-signal-replication", 600, planted_replication},
      {"architecture-smoke-matrix", 300, smoke_matrix},
      {"determinism", 300, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    require(o, secs < c.budget_seconds, "over time budget of " + fmt(c.budget_seconds, 0) + " s");
    std::printf("%s %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", c.name.c_str(), secs, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
