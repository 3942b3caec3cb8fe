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

#include "quintlink/synth.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "quintlink/error.hpp"
#include "quintlink/rng.hpp"

namespace quintlink {

namespace {

constexpr std::array<std::string_view, 25> kCountries = {
    "AUSTRALIA", "AUSTRIA",  "BELGIUM", "BRAZIL",   "CANADA", "CHINA",  "FRANCE", "GERMANY", "HUNGARY",
    "INDIA",     "INDONESIA", "ITALY",  "JAPAN",    "KOREA",  "MALAYSIA", "MEXICO", "POLAND", "RUSSIA",
    "SPAIN",     "SWEDEN",   "TAIWAN",  "THAILAND", "TURKEY", "USA",    "UK"};

constexpr std::array<std::string_view, 20> kSyllables = {"ka", "lo", "mi", "ne", "ru", "sa", "to", "vi", "da", "ze",
                                                         "po", "li", "ga", "fe", "bo", "ta", "ri", "mo", "ke", "su"};
constexpr std::size_t kBaseNameSpace = 20 * 20 * 20 * 20;

// Distinct for distinct index < kBaseNameSpace: 7919 is coprime to 20^4.
std::string base_name(std::size_t index) {
  std::size_t code = (index % kBaseNameSpace) * 7919 % kBaseNameSpace;
  std::string out;
  for (int i = 0; i < 4; ++i) {
    out += kSyllables[code % 20];
    code /= 20;
  }
  out[0] = static_cast<char>(out[0] - 'a' + 'A');
  return out;
}

// Draws without replacement from a pool, reshuffling once exhausted, so
// every member is drawn equally often over a long run.
class Deck {
 public:
  Deck(std::vector<std::size_t> pool, Rng& rng) : pool_(std::move(pool)), rng_(rng) {}
  bool empty() const noexcept { return pool_.empty(); }
  std::size_t draw() {
    if (pos_ == 0) rng_.shuffle(pool_);
    const auto v = pool_[pos_];
    pos_ = (pos_ + 1) % pool_.size();
    return v;
  }

 private:
  std::vector<std::size_t> pool_;
  Rng& rng_;
  std::size_t pos_ = 0;
};

std::size_t pick(const std::vector<std::size_t>& v, Rng& rng) { return v[rng.below(v.size())]; }

std::size_t token_index(std::string_view token) {
  const auto it = std::find(kIndustryTokens.begin(), kIndustryTokens.end(), token);
  return static_cast<std::size_t>(it - kIndustryTokens.begin());
}

}  // namespace

std::string country_name(std::size_t p) {
  if (p < kCountries.size()) return std::string(kCountries[p]);
  const auto n = std::to_string(p + 1);
  return "COUNTRY_" + std::string(n.size() < 2 ? 2 - n.size() : 0, '0') + n;
}

void SynthConfig::validate() const {
  if (companies < 2) throw ConfigError("synth: companies must be at least 2");
  if (products < 2) throw ConfigError("synth: products must be at least 2");
  if (certificates < 2 || certificates > kCertificateNames.size()) {
    throw ConfigError("synth: certificates must be between 2 and " + std::to_string(kCertificateNames.size()));
  }
  if (industries < 1 || industries > kIndustryTokens.size()) {
    throw ConfigError("synth: industries must be between 1 and " + std::to_string(kIndustryTokens.size()));
  }
  if (!(signal >= 0.0 && signal <= 1.0)) throw ConfigError("synth: signal must lie in [0, 1]");
  if (!(supply_density > 0.0 && supply_density < 1.0)) throw ConfigError("synth: supply_density must lie in (0, 1)");
  if (!(extra_edge_density >= 0.0 && extra_edge_density < 1.0)) {
    throw ConfigError("synth: extra_edge_density must lie in [0, 1)");
  }
  if (!(extra_cert_density >= 0.0 && extra_cert_density <= 1.0)) {
    throw ConfigError("synth: extra_cert_density must lie in [0, 1]");
  }
  if (transactions() == 0) throw ConfigError("synth: supply_density yields no transactions for this company count");
  if (company_name_offset + companies > kBaseNameSpace) throw ConfigError("synth: company name space exhausted");
}

std::size_t SynthConfig::transactions() const {
  return static_cast<std::size_t>(
      std::llround(supply_density * static_cast<double>(companies) * static_cast<double>(companies - 1)));
}

KnowledgeGraph generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, "synth"));
  const std::size_t n_ind = cfg.industries;
  const std::size_t n_fam = 2 * n_ind;
  const std::size_t C = cfg.companies, P = cfg.products;

  std::vector<Entity> entities;
  entities.reserve(C + P + cfg.certificates);
  std::vector<std::size_t> shown_token(C);
  std::vector<bool> supplier(C);
  std::vector<std::vector<std::size_t>> suppliers_by_token(n_ind), oems_by_token(n_ind), products_by_token(n_ind);
  std::vector<std::size_t> suppliers, oems;

  for (std::size_t i = 0; i < C; ++i) {
    const auto industry = rng.below(n_ind);
    const bool is_supplier = rng.below(2) == 0;
    shown_token[i] = rng.bernoulli(cfg.signal) ? industry : rng.below(n_ind);
    supplier[i] = rng.bernoulli(cfg.signal) ? is_supplier : rng.below(2) == 0;
    (supplier[i] ? suppliers_by_token : oems_by_token)[shown_token[i]].push_back(i);
    (supplier[i] ? suppliers : oems).push_back(i);
    Entity e{EntityId{static_cast<std::uint32_t>(i)}, EntityKind::Company,
             base_name(cfg.company_name_offset + i) + " " + std::string(kIndustryTokens[shown_token[i]]) + " " +
                 std::string(supplier[i] ? kSupplierSuffix : kManufacturerSuffix),
             std::nullopt};
    if (!cfg.country.empty()) e.country = cfg.country;
    entities.push_back(std::move(e));
  }
  for (std::size_t j = 0; j < P; ++j) {
    const auto family = j < n_fam ? j : rng.below(n_fam);
    const auto shown = rng.bernoulli(cfg.signal) ? family : rng.below(n_fam);
    products_by_token[shown / 2].push_back(C + j);
    entities.push_back(Entity{EntityId{static_cast<std::uint32_t>(C + j)}, EntityKind::Product,
                              std::string(kIndustryTokens[shown / 2]) + " " + std::string(kFamilyTokens[shown]) +
                                  " #" + std::to_string(cfg.product_number_offset + j + 1),
                              std::nullopt});
  }
  for (std::size_t k = 0; k < cfg.certificates; ++k) {
    entities.push_back(Entity{EntityId{static_cast<std::uint32_t>(C + P + k)}, EntityKind::Certificate,
                              std::string(kCertificateNames[k]), std::nullopt});
  }

  std::vector<std::size_t> all_companies(C), all_products(P);
  for (std::size_t i = 0; i < C; ++i) all_companies[i] = i;
  for (std::size_t j = 0; j < P; ++j) all_products[j] = C + j;
  Deck company_deck(all_companies, rng), buyer_deck(all_companies, rng), product_deck(all_products, rng);
  Deck supplier_deck(suppliers, rng);

  std::vector<Triplet> triplets;
  auto add = [&](std::size_t h, RelationKind r, std::size_t t) {
    triplets.push_back(Triplet{EntityId{static_cast<std::uint32_t>(h)}, r, EntityId{static_cast<std::uint32_t>(t)}});
  };
  auto product_for = [&](std::size_t token) {
    return products_by_token[token].empty() ? pick(all_products, rng) : pick(products_by_token[token], rng);
  };

  const auto T = cfg.transactions();
  for (std::size_t k = 0; k < T; ++k) {
    std::size_t a, b, p;
    if (rng.bernoulli(cfg.signal) && !supplier_deck.empty()) {
      a = supplier_deck.draw();
      const auto t = shown_token[a];
      if (!oems_by_token[t].empty()) {
        b = pick(oems_by_token[t], rng);
      } else if (!oems.empty()) {
        b = pick(oems, rng);
      } else {
        do b = pick(all_companies, rng);
        while (b == a);
      }
      p = product_for(t);
    } else {
      a = company_deck.draw();
      do b = buyer_deck.draw();
      while (b == a);
      p = product_deck.draw();
    }
    add(a, RelationKind::HasProduct, p);
    add(p, RelationKind::PurchasedBy, b);
    add(a, RelationKind::SuppliesTo, b);
  }

  const auto extra = static_cast<std::size_t>(std::llround(cfg.extra_edge_density * static_cast<double>(T)));
  for (std::size_t k = 0; k < extra; ++k) {
    if (rng.bernoulli(cfg.signal) && !suppliers.empty()) {
      const auto a = pick(suppliers, rng);
      add(a, RelationKind::HasProduct, product_for(shown_token[a]));
    } else {
      add(company_deck.draw(), RelationKind::HasProduct, product_deck.draw());
    }
    if (rng.bernoulli(cfg.signal) && !oems.empty()) {
      const auto b = pick(oems, rng);
      add(product_for(shown_token[b]), RelationKind::PurchasedBy, b);
    } else {
      add(product_deck.draw(), RelationKind::PurchasedBy, buyer_deck.draw());
    }
  }

  for (std::size_t i = 0; i < C; ++i) {
    const auto preferred = shown_token[i] % cfg.certificates;
    add(i, RelationKind::HasCert, C + P + (rng.bernoulli(cfg.signal) ? preferred : rng.below(cfg.certificates)));
    if (rng.bernoulli(cfg.extra_cert_density * (1.0 - cfg.signal))) {
      add(i, RelationKind::HasCert, C + P + rng.below(cfg.certificates));
    }
  }

  return KnowledgeGraph::from_parts(std::move(entities), std::move(triplets));
}

std::map<std::string, KnowledgeGraph> generate_partitions(const PartitionConfig& config, std::size_t countries) {
  if (countries == 0) throw ConfigError("synth: at least one country is required");
  if (countries == 1) {
    SynthConfig cfg = config.base;
    if (cfg.country.empty()) cfg.country = country_name(0);
    return {{cfg.country, generate(cfg)}};
  }
  if (config.min_companies < 2 || config.min_companies > config.max_companies) {
    throw ConfigError("synth: need 2 <= min_companies <= max_companies");
  }
  std::map<std::string, KnowledgeGraph> out;
  std::size_t company_offset = config.base.company_name_offset;
  std::size_t product_offset = config.base.product_number_offset;
  const double lo = std::log(static_cast<double>(config.min_companies));
  const double hi = std::log(static_cast<double>(config.max_companies));
  for (std::size_t p = 0; p < countries; ++p) {
    Rng size_rng(derive_seed(config.base.seed, "partition-size", p));
    SynthConfig cfg = config.base;
    cfg.companies = static_cast<std::size_t>(std::llround(std::exp(size_rng.uniform(lo, hi))));
    cfg.companies = std::clamp(cfg.companies, config.min_companies, config.max_companies);
    cfg.products = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::llround(static_cast<double>(config.base.products) *
                                                 static_cast<double>(cfg.companies) /
                                                 static_cast<double>(config.base.companies))));
    cfg.seed = derive_seed(config.base.seed, "partition", p);
    cfg.country = country_name(p);
    cfg.company_name_offset = company_offset;
    cfg.product_number_offset = product_offset;
    company_offset += cfg.companies;
    product_offset += cfg.products;
    out.emplace(cfg.country, generate(cfg));
  }
  return out;
}

KnowledgeGraph merge_graphs(const std::map<std::string, KnowledgeGraph>& graphs) {
  std::vector<TripletRecord> records;
  for (const auto& [country, g] : graphs) {
    for (const auto& t : g.triplets()) {
      const auto& h = g.entity(t.head);
      const auto& tl = g.entity(t.tail);
      std::optional<std::string> c;
      if (h.kind == EntityKind::Company) c = h.country;
      records.push_back(TripletRecord{h.name, h.kind, t.relation, tl.name, tl.kind, c});
    }
  }
  return KnowledgeGraph::ingest(records);
}

NameTokens name_tokens(const Entity& e) {
  const auto& name = e.name;
  if (e.kind == EntityKind::Company) {
    const auto last = name.rfind(' ');
    if (last == std::string::npos) return {};
    const auto prev = name.rfind(' ', last - 1);
    if (prev == std::string::npos) return {};
    return {name.substr(prev + 1, last - prev - 1), name.substr(last + 1)};
  }
  if (e.kind == EntityKind::Product) {
    const auto sp = name.find(' ');
    return {sp == std::string::npos ? std::string{} : name.substr(0, sp), {}};
  }
  return {};
}

std::string_view preferred_certificate(std::string_view industry, std::size_t certificates) {
  const auto idx = token_index(industry);
  if (idx >= kIndustryTokens.size() || certificates == 0) return {};
  return kCertificateNames[idx % std::min(certificates, kCertificateNames.size())];
}

bool planted_rule(const Quintuplet& q, const KnowledgeGraph& graph, std::size_t certificates) {
  const auto& e1 = graph.entity(q.e1);
  const auto& e2 = graph.entity(q.e2);
  const auto& e3 = graph.entity(q.e3);
  if (q.kind == QuintupletKind::SuppliesProductTo) {
    const auto a = name_tokens(e1), p = name_tokens(e2), b = name_tokens(e3);
    return !a.industry.empty() && a.industry == p.industry && a.industry == b.industry && a.tier == kSupplierSuffix &&
           b.tier == kManufacturerSuffix;
  }
  const auto a = name_tokens(e1), p = name_tokens(e3);
  return !a.industry.empty() && a.industry == p.industry && preferred_certificate(a.industry, certificates) == e2.name;
}

}  // namespace quintlink
