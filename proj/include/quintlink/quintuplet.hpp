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

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "quintlink/kg.hpp"
#include "quintlink/rng.hpp"

namespace quintlink {

enum class QuintupletKind : std::uint8_t {
  /// (company e1, supplies, product e2, to, company e3)
  SuppliesProductTo,
  /// (company e1, with, certificate e2, has, product e3)
  WithCertHasProduct,
};

std::string_view to_string(QuintupletKind k) noexcept;
std::optional<QuintupletKind> parse_quintuplet_kind(std::string_view s) noexcept;

/// Entity kinds expected in slots e1, e2, e3.
constexpr std::array<EntityKind, 3> slot_kinds(QuintupletKind k) noexcept {
  if (k == QuintupletKind::SuppliesProductTo) {
    return {EntityKind::Company, EntityKind::Product, EntityKind::Company};
  }
  return {EntityKind::Company, EntityKind::Certificate, EntityKind::Product};
}

struct Quintuplet {
  QuintupletKind kind;
  EntityId e1;
  EntityId e2;
  EntityId e3;

  EntityId slot(std::size_t i) const noexcept { return i == 0 ? e1 : (i == 1 ? e2 : e3); }

  friend auto operator<=>(const Quintuplet&, const Quintuplet&) = default;
};

using QuintupletSet = std::set<Quintuplet>;

/// True when slot kinds match and, for supply quintuplets, e1 != e3.
bool well_typed(const Quintuplet& q, const KnowledgeGraph& graph);

/// Every (A, P, B) with A has_product P, P purchased_by B, A supplies_to B, A != B.
QuintupletSet derive_supply(const KnowledgeGraph& graph);

/// Every (A, C, P) with A has_cert C and A has_product P.
QuintupletSet derive_cert(const KnowledgeGraph& graph);

QuintupletSet derive(const KnowledgeGraph& graph, QuintupletKind kind);

/// True when all supporting triplets of q exist in the graph.
bool supported(const Quintuplet& q, const KnowledgeGraph& graph);

enum class CorruptionStrategy : std::uint8_t { ReplaceE1, ReplaceE2, ReplaceE3, InvertDirection };

std::string_view to_string(CorruptionStrategy s) noexcept;
std::optional<CorruptionStrategy> parse_corruption_strategy(std::string_view s) noexcept;

/// ReplaceE1..E3 for every kind; InvertDirection only for supply quintuplets.
std::vector<CorruptionStrategy> valid_strategies(QuintupletKind kind);

/// Upper bound on replacement draws per strategy before giving up.
inline constexpr int kMaxCorruptionAttempts = 1000;

/// Produces a negative from positive q, or nullopt when no candidate exists.
///
/// A replacement entity is accepted when the resulting quintuplet is not in
/// `positives` and the replacement shares no triplet, in any relation or
/// direction, with the two retained entities. Replacements are drawn
/// uniformly from the same-kind pool, at most kMaxCorruptionAttempts times.
/// InvertDirection swaps e1 and e3 and only requires the result to be absent
/// from `positives`.
std::optional<Quintuplet> corrupt(const Quintuplet& q, const KnowledgeGraph& graph,
                                  const QuintupletSet& positives, CorruptionStrategy strategy, Rng& rng);

enum class Label : std::uint8_t { Negative = 0, Positive = 1 };

struct LabeledQuintuplet {
  Quintuplet quintuplet;
  Label label;
  /// Empty for derived positives; the strategy for corrupted negatives.
  std::optional<CorruptionStrategy> corruption;

  friend bool operator==(const LabeledQuintuplet&, const LabeledQuintuplet&) = default;
};

struct LabeledDataset {
  std::vector<LabeledQuintuplet> records;
  /// One entry per positive for which every strategy failed.
  std::vector<std::string> warnings;
};

/// One negative per positive, strategy drawn per positive from a stream keyed
/// by the positive's rank in `positives`, then a global shuffle.
LabeledDataset build_dataset(const QuintupletSet& positives, const KnowledgeGraph& graph, std::uint64_t seed);

struct SplitRatios {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;

  /// Throws ConfigError unless each ratio is in (0,1) and they sum to 1.
  void validate() const;
};

struct DatasetSplit {
  std::vector<LabeledQuintuplet> train;
  std::vector<LabeledQuintuplet> val;
  std::vector<LabeledQuintuplet> test;
};

inline constexpr std::size_t kMinSplitSize = 10;

/// Shuffles, then cuts at floor(n*train) and floor(n*(train+val)).
/// Throws SplitError when fewer than kMinSplitSize records are given.
DatasetSplit split(std::span<const LabeledQuintuplet> dataset, const SplitRatios& ratios, std::uint64_t seed);

/// Labeled dataset file, header kind,e1,e2,e3,label,provenance. Entities are
/// written by name; reading resolves them against `graph`.
std::string to_dataset_csv(std::span<const LabeledQuintuplet> records, const KnowledgeGraph& graph);
std::vector<LabeledQuintuplet> parse_dataset_csv(std::string_view text, const KnowledgeGraph& graph);

inline constexpr std::string_view kDatasetHeader = "kind,e1,e2,e3,label,provenance";

}  // namespace quintlink
