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

#include "quintlink/verbalizer.hpp"

#include <array>

#include "quintlink/error.hpp"

namespace quintlink {

namespace {

// Placeholder for each slot, in slot order.
std::array<std::string_view, 3> placeholders(QuintupletKind kind) {
  if (kind == QuintupletKind::SuppliesProductTo) return {"{A}", "{P}", "{B}"};
  return {"{A}", "{C}", "{P}"};
}

std::size_t count_of(std::string_view haystack, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos; pos = haystack.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

Template::Template(QuintupletKind kind, std::string pattern) : kind_(kind), pattern_(std::move(pattern)) {
  const auto required = placeholders(kind);
  for (auto ph : required) {
    const auto n = count_of(pattern_, ph);
    if (n != 1) {
      throw TemplateError("template for " + std::string(to_string(kind)) + " must contain " + std::string(ph) +
                          " exactly once (found " + std::to_string(n) + ")");
    }
  }
  for (std::string_view ph : {"{A}", "{B}", "{C}", "{P}"}) {
    bool allowed = false;
    for (auto r : required) allowed = allowed || r == ph;
    if (!allowed && count_of(pattern_, ph) > 0) {
      throw TemplateError("template for " + std::string(to_string(kind)) + " must not contain " + std::string(ph));
    }
  }
}

Template Template::default_supply() {
  return {QuintupletKind::SuppliesProductTo, "Company {A} supplies {P} to company {B}"};
}

Template Template::default_cert() {
  return {QuintupletKind::WithCertHasProduct, "Company {A} with certificate {C} has {P}"};
}

Template Template::alternate_supply() {
  return {QuintupletKind::SuppliesProductTo, "Company {A} has {P} and supplies it to company {B}"};
}

Template Template::alternate_cert() {
  return {QuintupletKind::WithCertHasProduct, "Company {A} has {P} and holds certificate {C}"};
}

Template Template::defaults_for(QuintupletKind kind) {
  return kind == QuintupletKind::SuppliesProductTo ? default_supply() : default_cert();
}

std::string verbalize(const Quintuplet& q, const KnowledgeGraph& graph, const Template& tmpl) {
  if (tmpl.kind() != q.kind) {
    throw TemplateError("template kind " + std::string(to_string(tmpl.kind())) + " does not match quintuplet kind " +
                        std::string(to_string(q.kind)));
  }
  const auto phs = placeholders(q.kind);
  std::array<const std::string*, 3> names{};
  for (std::size_t i = 0; i < 3; ++i) names[i] = &graph.entity(q.slot(i)).name;

  // Single left-to-right pass so that names containing "{X}" are never re-expanded.
  const std::string& pattern = tmpl.pattern();
  std::string out;
  out.reserve(pattern.size() + 64);
  for (std::size_t pos = 0; pos < pattern.size();) {
    bool replaced = false;
    if (pattern[pos] == '{') {
      for (std::size_t i = 0; i < 3; ++i) {
        if (pattern.compare(pos, phs[i].size(), phs[i]) == 0) {
          out += *names[i];
          pos += phs[i].size();
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out.push_back(pattern[pos++]);
  }
  return out;
}

}  // namespace quintlink
