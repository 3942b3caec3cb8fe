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

#include "quintlink/quintuplet.hpp"

#include <cmath>
#include <sstream>

#include "quintlink/csv.hpp"
#include "quintlink/error.hpp"

namespace quintlink {

std::string_view to_string(QuintupletKind k) noexcept {
  return k == QuintupletKind::SuppliesProductTo ? "supplies_product_to" : "with_cert_has_product";
}

std::optional<QuintupletKind> parse_quintuplet_kind(std::string_view s) noexcept {
  if (s == "supplies_product_to" || s == "supply") return QuintupletKind::SuppliesProductTo;
  if (s == "with_cert_has_product" || s == "cert") return QuintupletKind::WithCertHasProduct;
  return std::nullopt;
}

std::string_view to_string(CorruptionStrategy s) noexcept {
  switch (s) {
    case CorruptionStrategy::ReplaceE1:
      return "replace_e1";
    case CorruptionStrategy::ReplaceE2:
      return "replace_e2";
    case CorruptionStrategy::ReplaceE3:
      return "replace_e3";
    case CorruptionStrategy::InvertDirection:
      return "invert_direction";
  }
  return "?";
}

std::optional<CorruptionStrategy> parse_corruption_strategy(std::string_view s) noexcept {
  for (auto c : {CorruptionStrategy::ReplaceE1, CorruptionStrategy::ReplaceE2, CorruptionStrategy::ReplaceE3,
                 CorruptionStrategy::InvertDirection}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

bool well_typed(const Quintuplet& q, const KnowledgeGraph& graph) {
  const auto kinds = slot_kinds(q.kind);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto id = q.slot(i);
    if (!graph.has_entity(id) || graph.entity(id).kind != kinds[i]) return false;
  }
  return q.kind != QuintupletKind::SuppliesProductTo || q.e1 != q.e3;
}

QuintupletSet derive_supply(const KnowledgeGraph& graph) {
  QuintupletSet out;
  for (auto a : graph.entities_of(EntityKind::Company)) {
    for (auto p : graph.neighbors(a, RelationKind::HasProduct, Direction::Forward)) {
      for (auto b : graph.neighbors(p, RelationKind::PurchasedBy, Direction::Forward)) {
        if (b != a && graph.contains(a, RelationKind::SuppliesTo, b)) {
          out.insert(Quintuplet{QuintupletKind::SuppliesProductTo, a, p, b});
        }
      }
    }
  }
  return out;
}

QuintupletSet derive_cert(const KnowledgeGraph& graph) {
  QuintupletSet out;
  for (auto a : graph.entities_of(EntityKind::Company)) {
    const auto products = graph.neighbors(a, RelationKind::HasProduct, Direction::Forward);
    for (auto c : graph.neighbors(a, RelationKind::HasCert, Direction::Forward)) {
      for (auto p : products) out.insert(Quintuplet{QuintupletKind::WithCertHasProduct, a, c, p});
    }
  }
  return out;
}

QuintupletSet derive(const KnowledgeGraph& graph, QuintupletKind kind) {
  return kind == QuintupletKind::SuppliesProductTo ? derive_supply(graph) : derive_cert(graph);
}

bool supported(const Quintuplet& q, const KnowledgeGraph& graph) {
  if (!well_typed(q, graph)) return false;
  if (q.kind == QuintupletKind::SuppliesProductTo) {
    return graph.contains(q.e1, RelationKind::HasProduct, q.e2) &&
           graph.contains(q.e2, RelationKind::PurchasedBy, q.e3) &&
           graph.contains(q.e1, RelationKind::SuppliesTo, q.e3);
  }
  return graph.contains(q.e1, RelationKind::HasCert, q.e2) && graph.contains(q.e1, RelationKind::HasProduct, q.e3);
}

std::vector<CorruptionStrategy> valid_strategies(QuintupletKind kind) {
  std::vector<CorruptionStrategy> out{CorruptionStrategy::ReplaceE1, CorruptionStrategy::ReplaceE2,
                                      CorruptionStrategy::ReplaceE3};
  if (kind == QuintupletKind::SuppliesProductTo) out.push_back(CorruptionStrategy::InvertDirection);
  return out;
}

std::optional<Quintuplet> corrupt(const Quintuplet& q, const KnowledgeGraph& graph, const QuintupletSet& positives,
                                  CorruptionStrategy strategy, Rng& rng) {
  if (strategy == CorruptionStrategy::InvertDirection) {
    if (q.kind != QuintupletKind::SuppliesProductTo) {
      throw InputError("invert_direction is not valid for " + std::string(to_string(q.kind)));
    }
    Quintuplet inverted{q.kind, q.e3, q.e2, q.e1};
    if (positives.contains(inverted)) return std::nullopt;
    return inverted;
  }

  const std::size_t slot = static_cast<std::size_t>(strategy);
  const auto pool = graph.entities_of(slot_kinds(q.kind)[slot]);
  if (pool.empty()) return std::nullopt;

  std::array<EntityId, 2> retained{};
  for (std::size_t i = 0, j = 0; i < 3; ++i)
    if (i != slot) retained[j++] = q.slot(i);

  for (int attempt = 0; attempt < kMaxCorruptionAttempts; ++attempt) {
    const EntityId candidate = pool[rng.below(pool.size())];
    if (candidate == q.slot(slot)) continue;
    Quintuplet out = q;
    (slot == 0 ? out.e1 : slot == 1 ? out.e2 : out.e3) = candidate;
    if (out.kind == QuintupletKind::SuppliesProductTo && out.e1 == out.e3) continue;
    if (positives.contains(out)) continue;
    if (graph.connected(candidate, retained[0]) || graph.connected(candidate, retained[1])) continue;
    return out;
  }
  return std::nullopt;
}

LabeledDataset build_dataset(const QuintupletSet& positives, const KnowledgeGraph& graph, std::uint64_t seed) {
  if (positives.empty()) throw InputError("build_dataset: no positive quintuplets");
  LabeledDataset out;
  out.records.reserve(positives.size() * 2);
  std::size_t rank = 0;
  for (const auto& q : positives) {
    out.records.push_back({q, Label::Positive, std::nullopt});
    Rng rng(derive_seed(seed, "negatives", rank));
    auto strategies = valid_strategies(q.kind);
    rng.shuffle(strategies);
    bool found = false;
    for (auto s : strategies) {
      if (auto neg = corrupt(q, graph, positives, s, rng)) {
        out.records.push_back({*neg, Label::Negative, s});
        found = true;
        break;
      }
    }
    if (!found) {
      std::ostringstream os;
      os << "no negative found for positive #" << rank << " (" << graph.entity(q.e1).name << ", "
         << graph.entity(q.e2).name << ", " << graph.entity(q.e3).name << ")";
      out.warnings.push_back(os.str());
    }
    ++rank;
  }
  Rng shuffler(derive_seed(seed, "dataset-shuffle"));
  shuffler.shuffle(out.records);
  return out;
}

void SplitRatios::validate() const {
  for (double r : {train, val, test}) {
    if (!(r > 0.0 && r < 1.0)) throw ConfigError("split ratios must each lie in (0,1)");
  }
  if (std::abs(train + val + test - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
}

DatasetSplit split(std::span<const LabeledQuintuplet> dataset, const SplitRatios& ratios, std::uint64_t seed) {
  ratios.validate();
  if (dataset.size() < kMinSplitSize) {
    throw SplitError("dataset of " + std::to_string(dataset.size()) + " records is too small to split (need " +
                     std::to_string(kMinSplitSize) + ")");
  }
  std::vector<LabeledQuintuplet> all(dataset.begin(), dataset.end());
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(all);
  const auto n = static_cast<double>(all.size());
  // The tolerance keeps 0.7 + 0.1 from flooring below 0.8.
  const auto cut1 = static_cast<std::size_t>(std::floor(n * ratios.train + 1e-9));
  const auto cut2 = static_cast<std::size_t>(std::floor(n * (ratios.train + ratios.val) + 1e-9));
  DatasetSplit out;
  out.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(cut1));
  out.val.assign(all.begin() + static_cast<std::ptrdiff_t>(cut1), all.begin() + static_cast<std::ptrdiff_t>(cut2));
  out.test.assign(all.begin() + static_cast<std::ptrdiff_t>(cut2), all.end());
  return out;
}

std::string to_dataset_csv(std::span<const LabeledQuintuplet> records, const KnowledgeGraph& graph) {
  std::ostringstream os;
  os << kDatasetHeader << '\n';
  for (const auto& r : records) {
    const auto& q = r.quintuplet;
    std::string provenance =
        r.corruption ? "corrupted:" + std::string(to_string(*r.corruption)) : std::string("derived");
    csv::write_row(os, {std::string(to_string(q.kind)), graph.entity(q.e1).name, graph.entity(q.e2).name,
                        graph.entity(q.e3).name, r.label == Label::Positive ? "positive" : "negative",
                        std::move(provenance)});
  }
  return os.str();
}

std::vector<LabeledQuintuplet> parse_dataset_csv(std::string_view text, const KnowledgeGraph& graph) {
  const auto rows = csv::parse(text);
  if (rows.empty()) throw FormatError("dataset file: missing header");
  std::string header;
  for (std::size_t i = 0; i < rows[0].size(); ++i) header += (i ? "," : "") + rows[0][i];
  if (header != kDatasetHeader) throw FormatError("dataset file: unexpected header '" + header + "'");

  std::vector<LabeledQuintuplet> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::string where = "dataset line " + std::to_string(i + 1);
    if (row.size() != 6) throw FormatError(where + ": expected 6 fields");
    auto kind = parse_quintuplet_kind(row[0]);
    if (!kind) throw FormatError(where + ": unknown kind '" + row[0] + "'");
    const auto kinds = slot_kinds(*kind);
    std::array<EntityId, 3> ids{};
    for (std::size_t s = 0; s < 3; ++s) {
      auto id = graph.find(kinds[s], row[1 + s]);
      if (!id) throw LookupError(where + ": unknown " + std::string(to_string(kinds[s])) + " '" + row[1 + s] + "'");
      ids[s] = *id;
    }
    LabeledQuintuplet rec{{*kind, ids[0], ids[1], ids[2]}, Label::Negative, std::nullopt};
    if (row[4] == "positive") {
      rec.label = Label::Positive;
    } else if (row[4] != "negative") {
      throw FormatError(where + ": label must be positive or negative");
    }
    if (row[5] != "derived") {
      constexpr std::string_view prefix = "corrupted:";
      if (row[5].rfind(prefix, 0) != 0) throw FormatError(where + ": bad provenance '" + row[5] + "'");
      rec.corruption = parse_corruption_strategy(std::string_view(row[5]).substr(prefix.size()));
      if (!rec.corruption) throw FormatError(where + ": bad provenance '" + row[5] + "'");
    }
    if (rec.label == Label::Positive && rec.corruption) {
      throw FormatError(where + ": positive records must be derived");
    }
    out.push_back(rec);
  }
  return out;
}

}  // namespace quintlink
