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
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "quintlink/kg.hpp"
#include "quintlink/quintuplet.hpp"

namespace quintlink {

inline constexpr std::array<std::string_view, 16> kIndustryTokens = {
    "powertrain", "chassis", "electrical", "interior", "exterior", "braking",      "steering", "suspension",
    "exhaust",    "fuel",    "cooling",    "lighting", "seating",  "transmission", "body",     "infotainment"};

/// Two product families per industry; family 2i and 2i+1 belong to industry i.
inline constexpr std::array<std::string_view, 32> kFamilyTokens = {
    "crankshaft", "piston",   "subframe", "crossmember", "harness", "alternator", "dashboard", "headliner",
    "bumper",     "grille",   "caliper",  "rotor",       "rack",    "column",     "strut",     "damper",
    "muffler",    "manifold", "injector", "tank",        "radiator", "thermostat", "headlamp",  "taillamp",
    "recliner",   "cushion",  "gearbox",  "clutch",      "panel",   "door",       "display",   "speaker"};

inline constexpr std::array<std::string_view, 10> kCertificateNames = {
    "ISO 9001", "IATF 16949", "ISO 14001", "ISO 45001", "ISO 50001",
    "VDA 6.3",  "ISO 26262",  "ISO 27001", "TISAX",     "ISO 17025"};

/// Company name suffixes. Suppliers sell to manufacturers.
inline constexpr std::string_view kSupplierSuffix = "Components";
inline constexpr std::string_view kManufacturerSuffix = "Motors";

/// Country code for partition p: a fixed list first, then COUNTRY_nn.
std::string country_name(std::size_t p);

/// Generator settings. Company names read "<Base> <industry> <tier>" and
/// product names "<industry> <family> #<n>"; with probability `signal` the
/// industry and tier shown in a name are the entity's own, otherwise drawn at
/// random. Links are drawn against the tokens shown in names.
struct SynthConfig {
  std::size_t companies = 200;
  std::size_t products = 50;
  std::size_t certificates = 5;
  std::size_t industries = 16;
  double signal = 0.9;
  /// Supply transactions = round(supply_density * C * (C - 1)); each one adds
  /// has_product, purchased_by and supplies_to triplets.
  double supply_density = 0.02;
  /// Extra has_product and purchased_by triplets, as a fraction of transactions.
  double extra_edge_density = 0.25;
  /// Probability of a random second certificate per company, scaled by (1 - signal).
  double extra_cert_density = 0.2;
  std::uint64_t seed = 0;
  /// Attached to every company when non-empty.
  std::string country;
  /// Offsets that keep names unique when several graphs are merged.
  std::size_t company_name_offset = 0;
  std::size_t product_number_offset = 0;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  std::size_t transactions() const;
};

KnowledgeGraph generate(const SynthConfig& config);

/// Per-partition company counts are log-uniform in [min_companies, max_companies];
/// product counts scale with the company count.
struct PartitionConfig {
  SynthConfig base;
  std::size_t min_companies = 160;
  std::size_t max_companies = 250;
};

/// One graph per country, keyed by country code. A single requested country
/// yields generate(base) with that country attached.
std::map<std::string, KnowledgeGraph> generate_partitions(const PartitionConfig& config, std::size_t countries);

/// Union of graphs whose entity names do not collide across graphs.
KnowledgeGraph merge_graphs(const std::map<std::string, KnowledgeGraph>& graphs);

/// Tokens shown in a generated name; empty when the name does not follow the scheme.
struct NameTokens {
  std::string industry;
  std::string tier;
};
NameTokens name_tokens(const Entity& e);

/// Certificate a company of the given industry holds when names are faithful.
std::string_view preferred_certificate(std::string_view industry, std::size_t certificates);

/// The planted decision rule: supply quintuplets are positive when all three
/// names show one industry and the supplier/manufacturer tiers run from e1
/// to e3; certificate quintuplets when company and product share an industry
/// and the certificate is that industry's preferred one.
bool planted_rule(const Quintuplet& q, const KnowledgeGraph& graph, std::size_t certificates);

}  // namespace quintlink
