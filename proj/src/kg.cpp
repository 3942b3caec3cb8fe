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

#include "quintlink/kg.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "quintlink/csv.hpp"
#include "quintlink/error.hpp"

namespace quintlink {

std::string_view to_string(EntityKind k) noexcept {
  switch (k) {
    case EntityKind::Company:
      return "company";
    case EntityKind::Product:
      return "product";
    case EntityKind::Certificate:
      return "certificate";
  }
  return "?";
}

std::string_view to_string(RelationKind r) noexcept {
  switch (r) {
    case RelationKind::HasProduct:
      return "has_product";
    case RelationKind::HasCert:
      return "has_cert";
    case RelationKind::SuppliesTo:
      return "supplies_to";
    case RelationKind::PurchasedBy:
      return "purchased_by";
  }
  return "?";
}

std::optional<EntityKind> parse_entity_kind(std::string_view s) noexcept {
  for (auto k : kAllEntityKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

std::optional<RelationKind> parse_relation_kind(std::string_view s) noexcept {
  for (auto r : kAllRelationKinds)
    if (to_string(r) == s) return r;
  return std::nullopt;
}

namespace {

std::string normalize_country(std::string_view raw) {
  std::string out(raw);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string describe(const TripletRecord& r, std::size_t index) {
  std::ostringstream os;
  os << "record " << index << " (" << r.head_name << ", " << to_string(r.head_kind) << ", "
     << to_string(r.relation) << ", " << r.tail_name << ", " << to_string(r.tail_kind) << ")";
  return os.str();
}

}  // namespace

bool operator==(const Entity& a, const Entity& b) {
  return a.id == b.id && a.kind == b.kind && a.name == b.name && a.country == b.country;
}

bool operator==(const KnowledgeGraph& a, const KnowledgeGraph& b) {
  return a.entities_ == b.entities_ && a.triplets_ == b.triplets_;
}

KnowledgeGraph KnowledgeGraph::ingest(std::span<const TripletRecord> records) {
  std::vector<Entity> entities;
  std::map<std::pair<EntityKind, std::string>, EntityId, std::less<>> ids;
  std::vector<Triplet> triplets;
  triplets.reserve(records.size());

  auto resolve = [&](const std::string& name, EntityKind kind) {
    auto key = std::make_pair(kind, name);
    if (auto it = ids.find(key); it != ids.end()) return it->second;
    const auto id = static_cast<EntityId>(entities.size());
    entities.push_back(Entity{id, kind, name, std::nullopt});
    ids.emplace(std::move(key), id);
    return id;
  };

  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.head_name.empty() || r.tail_name.empty()) {
      throw IngestError(describe(r, i) + ": empty entity name");
    }
    const auto sig = signature_of(r.relation);
    if (sig.head != r.head_kind || sig.tail != r.tail_kind) {
      throw IngestError(describe(r, i) + ": relation " + std::string(to_string(r.relation)) +
                        " requires (" + std::string(to_string(sig.head)) + ", " +
                        std::string(to_string(sig.tail)) + ")");
    }
    const bool has_country = r.country && !r.country->empty();
    if (has_country && r.head_kind != EntityKind::Company) {
      throw IngestError(describe(r, i) + ": country given for a non-company head");
    }
    const EntityId head = resolve(r.head_name, r.head_kind);
    const EntityId tail = resolve(r.tail_name, r.tail_kind);
    if (has_country) {
      auto code = normalize_country(*r.country);
      auto& slot = entities[index_of(head)].country;
      if (slot && *slot != code) {
        throw IngestError(describe(r, i) + ": conflicting country " + code + " vs " + *slot);
      }
      slot = std::move(code);
    }
    triplets.push_back(Triplet{head, r.relation, tail});
  }
  return from_parts(std::move(entities), std::move(triplets));
}

KnowledgeGraph KnowledgeGraph::from_parts(std::vector<Entity> entities, std::vector<Triplet> triplets) {
  KnowledgeGraph g;
  for (std::size_t i = 0; i < entities.size(); ++i) {
    const auto& e = entities[i];
    if (index_of(e.id) != i) throw IngestError("entity '" + e.name + "': id does not match catalog index");
    if (e.name.empty()) throw IngestError("entity " + std::to_string(i) + ": empty name");
    if (e.country && e.kind != EntityKind::Company) {
      throw IngestError("entity '" + e.name + "': only companies carry a country");
    }
    auto [it, inserted] = g.name_index_.emplace(std::make_pair(e.kind, e.name), e.id);
    if (!inserted) {
      throw IngestError("entity '" + e.name + "' of kind " + std::string(to_string(e.kind)) +
                        " appears twice");
    }
  }
  for (const auto& t : triplets) {
    if (index_of(t.head) >= entities.size() || index_of(t.tail) >= entities.size()) {
      throw IngestError("triplet references an unknown entity");
    }
    const auto sig = signature_of(t.relation);
    if (entities[index_of(t.head)].kind != sig.head || entities[index_of(t.tail)].kind != sig.tail) {
      throw IngestError("triplet (" + entities[index_of(t.head)].name + ", " +
                        std::string(to_string(t.relation)) + ", " + entities[index_of(t.tail)].name +
                        ") violates the relation signature");
    }
  }
  std::sort(triplets.begin(), triplets.end());
  triplets.erase(std::unique(triplets.begin(), triplets.end()), triplets.end());
  g.entities_ = std::move(entities);
  g.triplets_ = std::move(triplets);
  g.build_indices();
  return g;
}

void KnowledgeGraph::build_indices() {
  const auto n = entities_.size();
  for (auto& v : by_kind_) v.clear();
  for (const auto& e : entities_) by_kind_[static_cast<std::size_t>(e.kind)].push_back(e.id);
  for (std::size_t r = 0; r < 4; ++r) {
    forward_[r].assign(n, {});
    reverse_[r].assign(n, {});
  }
  // Triplets are sorted by (head, relation, tail), so forward lists come out sorted.
  for (const auto& t : triplets_) {
    const auto r = static_cast<std::size_t>(t.relation);
    forward_[r][index_of(t.head)].push_back(t.tail);
    reverse_[r][index_of(t.tail)].push_back(t.head);
  }
  for (auto& adj : reverse_)
    for (auto& list : adj) std::sort(list.begin(), list.end());
}

const Entity& KnowledgeGraph::entity(EntityId id) const {
  if (!has_entity(id)) throw LookupError("unknown entity id " + std::to_string(index_of(id)));
  return entities_[index_of(id)];
}

std::optional<EntityId> KnowledgeGraph::find(EntityKind kind, std::string_view name) const {
  auto it = name_index_.find(std::make_pair(kind, std::string(name)));
  if (it == name_index_.end()) return std::nullopt;
  return it->second;
}

bool KnowledgeGraph::contains(const Triplet& t) const {
  if (!has_entity(t.head) || !has_entity(t.tail)) return false;
  const auto& list = forward_[static_cast<std::size_t>(t.relation)][index_of(t.head)];
  return std::binary_search(list.begin(), list.end(), t.tail);
}

std::span<const EntityId> KnowledgeGraph::neighbors(EntityId id, RelationKind relation,
                                                   Direction dir) const {
  if (!has_entity(id)) throw LookupError("unknown entity id " + std::to_string(index_of(id)));
  const auto r = static_cast<std::size_t>(relation);
  return dir == Direction::Forward ? std::span<const EntityId>(forward_[r][index_of(id)])
                                   : std::span<const EntityId>(reverse_[r][index_of(id)]);
}

bool KnowledgeGraph::connected(EntityId a, EntityId b) const {
  for (auto r : kAllRelationKinds) {
    if (contains(a, r, b) || contains(b, r, a)) return true;
  }
  return false;
}

std::vector<std::string> KnowledgeGraph::countries() const {
  std::set<std::string> out;
  for (auto id : entities_of(EntityKind::Company))
    if (const auto& c = entities_[index_of(id)].country) out.insert(*c);
  return {out.begin(), out.end()};
}

std::map<std::string, KnowledgeGraph> partition_by_country(const KnowledgeGraph& graph) {
  std::map<std::string, KnowledgeGraph> out;
  const auto& all = graph.entities();

  auto company_country = [&](EntityId id) -> const std::optional<std::string>& {
    return all[index_of(id)].country;
  };

  for (const auto& country : graph.countries()) {
    std::vector<Triplet> kept;
    for (const auto& t : graph.triplets()) {
      bool inside = true;
      for (auto end : {t.head, t.tail}) {
        if (all[index_of(end)].kind != EntityKind::Company) continue;
        const auto& c = company_country(end);
        if (!c || *c != country) inside = false;
      }
      if (inside) kept.push_back(t);
    }

    // Companies of this country first (even isolated ones), then referenced
    // products/certificates, all in original id order.
    std::vector<bool> keep(all.size(), false);
    for (auto id : graph.entities_of(EntityKind::Company)) {
      const auto& c = company_country(id);
      if (c && *c == country) keep[index_of(id)] = true;
    }
    for (const auto& t : kept) {
      keep[index_of(t.head)] = true;
      keep[index_of(t.tail)] = true;
    }
    std::vector<std::uint32_t> remap(all.size(), UINT32_MAX);
    std::vector<Entity> entities;
    for (const auto& e : all) {
      if (!keep[index_of(e.id)]) continue;
      remap[index_of(e.id)] = static_cast<std::uint32_t>(entities.size());
      Entity copy = e;
      copy.id = static_cast<EntityId>(entities.size());
      entities.push_back(std::move(copy));
    }
    for (auto& t : kept) {
      t.head = static_cast<EntityId>(remap[index_of(t.head)]);
      t.tail = static_cast<EntityId>(remap[index_of(t.tail)]);
    }
    out.emplace(country, KnowledgeGraph::from_parts(std::move(entities), std::move(kept)));
  }
  return out;
}

std::vector<TripletRecord> parse_triplet_csv(std::string_view text) {
  if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
      static_cast<unsigned char>(text[1]) == 0xBB && static_cast<unsigned char>(text[2]) == 0xBF) {
    text.remove_prefix(3);
  }
  const auto rows = csv::parse(text);
  if (rows.empty()) throw IngestError("triplet file: missing header");
  std::string header;
  for (std::size_t i = 0; i < rows[0].size(); ++i) header += (i ? "," : "") + rows[0][i];
  if (header != kTripletHeader) {
    throw IngestError("triplet file: header must be '" + std::string(kTripletHeader) + "', got '" + header + "'");
  }
  std::vector<TripletRecord> out;
  out.reserve(rows.size() - 1);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::string where = "triplet file line " + std::to_string(i + 1);
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != 6) throw IngestError(where + ": expected 6 fields, got " + std::to_string(row.size()));
    auto hk = parse_entity_kind(row[1]);
    auto rel = parse_relation_kind(row[2]);
    auto tk = parse_entity_kind(row[4]);
    if (!hk) throw IngestError(where + ": unknown head kind '" + row[1] + "'");
    if (!rel) throw IngestError(where + ": unknown relation '" + row[2] + "'");
    if (!tk) throw IngestError(where + ": unknown tail kind '" + row[4] + "'");
    TripletRecord rec{row[0], *hk, *rel, row[3], *tk, std::nullopt};
    if (!row[5].empty()) rec.country = row[5];
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<TripletRecord> read_triplet_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_triplet_csv(buf.str());
}

std::string to_triplet_csv(const KnowledgeGraph& graph) {
  std::ostringstream os;
  os << kTripletHeader << '\n';
  for (const auto& t : graph.triplets()) {
    const auto& h = graph.entity(t.head);
    const auto& tl = graph.entity(t.tail);
    csv::write_row(os, {h.name, std::string(to_string(h.kind)), std::string(to_string(t.relation)), tl.name,
                        std::string(to_string(tl.kind)), h.country.value_or("")});
  }
  return os.str();
}

void write_triplet_file(const std::string& path, const KnowledgeGraph& graph) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << to_triplet_csv(graph);
}

}  // namespace quintlink
