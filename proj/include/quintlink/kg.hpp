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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace quintlink {

enum class EntityKind : std::uint8_t { Company, Product, Certificate };
inline constexpr std::array<EntityKind, 3> kAllEntityKinds{EntityKind::Company, EntityKind::Product,
                                                          EntityKind::Certificate};

enum class RelationKind : std::uint8_t { HasProduct, HasCert, SuppliesTo, PurchasedBy };
inline constexpr std::array<RelationKind, 4> kAllRelationKinds{
    RelationKind::HasProduct, RelationKind::HasCert, RelationKind::SuppliesTo, RelationKind::PurchasedBy};

enum class Direction : std::uint8_t { Forward, Reverse };

/// Graph-local entity handle: the index into the entity catalog.
enum class EntityId : std::uint32_t {};

constexpr std::uint32_t index_of(EntityId id) noexcept { return static_cast<std::uint32_t>(id); }

struct RelationSignature {
  EntityKind head;
  EntityKind tail;
};

constexpr RelationSignature signature_of(RelationKind r) noexcept {
  switch (r) {
    case RelationKind::HasProduct:
      return {EntityKind::Company, EntityKind::Product};
    case RelationKind::HasCert:
      return {EntityKind::Company, EntityKind::Certificate};
    case RelationKind::SuppliesTo:
      return {EntityKind::Company, EntityKind::Company};
    case RelationKind::PurchasedBy:
      return {EntityKind::Product, EntityKind::Company};
  }
  return {EntityKind::Company, EntityKind::Company};
}

std::string_view to_string(EntityKind k) noexcept;
std::string_view to_string(RelationKind r) noexcept;
/// Parses the lower-case file spellings ("company", "has_product", ...).
std::optional<EntityKind> parse_entity_kind(std::string_view s) noexcept;
std::optional<RelationKind> parse_relation_kind(std::string_view s) noexcept;

struct Entity {
  EntityId id;
  EntityKind kind;
  std::string name;
  /// Upper-case country code. Only companies carry one; it may be unknown.
  std::optional<std::string> country;
};

struct Triplet {
  EntityId head;
  RelationKind relation;
  EntityId tail;

  friend auto operator<=>(const Triplet&, const Triplet&) = default;
};

/// One row of a triplet file, before entities are resolved.
struct TripletRecord {
  std::string head_name;
  EntityKind head_kind;
  RelationKind relation;
  std::string tail_name;
  EntityKind tail_kind;
  std::optional<std::string> country;
};

/// Immutable typed knowledge graph with per-relation adjacency indices.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  /// Entities are keyed by (name, kind); duplicate triplets collapse.
  /// Throws IngestError naming the offending record.
  static KnowledgeGraph ingest(std::span<const TripletRecord> records);

  /// Builds from an already resolved catalog. Entity ids must equal their
  /// catalog index. Throws IngestError on any invariant violation.
  static KnowledgeGraph from_parts(std::vector<Entity> entities, std::vector<Triplet> triplets);

  std::size_t entity_count() const noexcept { return entities_.size(); }
  std::size_t triplet_count() const noexcept { return triplets_.size(); }

  std::span<const Entity> entities() const noexcept { return entities_; }
  /// Sorted, duplicate-free.
  std::span<const Triplet> triplets() const noexcept { return triplets_; }
  /// Ids of one kind, ascending.
  std::span<const EntityId> entities_of(EntityKind kind) const noexcept {
    return by_kind_[static_cast<std::size_t>(kind)];
  }

  /// Throws LookupError for unknown ids.
  const Entity& entity(EntityId id) const;
  bool has_entity(EntityId id) const noexcept { return index_of(id) < entities_.size(); }
  std::optional<EntityId> find(EntityKind kind, std::string_view name) const;

  bool contains(const Triplet& t) const;
  bool contains(EntityId head, RelationKind relation, EntityId tail) const {
    return contains(Triplet{head, relation, tail});
  }

  /// Sorted neighbor ids. Throws LookupError for unknown ids.
  std::span<const EntityId> neighbors(EntityId id, RelationKind relation, Direction dir) const;

  /// True when any triplet links a and b, in either direction.
  bool connected(EntityId a, EntityId b) const;

  /// Country codes present on companies, sorted.
  std::vector<std::string> countries() const;

  friend bool operator==(const KnowledgeGraph& a, const KnowledgeGraph& b);

 private:
  using Adjacency = std::vector<std::vector<EntityId>>;
  void build_indices();

  std::vector<Entity> entities_;
  std::vector<Triplet> triplets_;
  std::array<std::vector<EntityId>, 3> by_kind_;
  std::map<std::pair<EntityKind, std::string>, EntityId, std::less<>> name_index_;
  std::array<Adjacency, 4> forward_;
  std::array<Adjacency, 4> reverse_;
};

bool operator==(const Entity& a, const Entity& b);

/// Per-country subgraphs. A partition holds the companies of one country,
/// each triplet whose company endpoints all lie in that country, and the
/// products/certificates those triplets reference. Companies without a
/// country belong to no partition. Entity ids are re-numbered per partition.
std::map<std::string, KnowledgeGraph> partition_by_country(const KnowledgeGraph& graph);

/// Reads a triplet file (header head_name,head_kind,relation,tail_name,tail_kind,country).
std::vector<TripletRecord> read_triplet_file(const std::string& path);
std::vector<TripletRecord> parse_triplet_csv(std::string_view text);

/// Writes the graph's triplets in file order (sorted by head, relation, tail).
/// Companies that appear in no triplet are not representable and are dropped.
void write_triplet_file(const std::string& path, const KnowledgeGraph& graph);
std::string to_triplet_csv(const KnowledgeGraph& graph);

inline constexpr std::string_view kTripletHeader =
    "head_name,head_kind,relation,tail_name,tail_kind,country";

}  // namespace quintlink
