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

#include <string>
#include <string_view>

#include "quintlink/kg.hpp"
#include "quintlink/quintuplet.hpp"

namespace quintlink {

/// Sentence pattern for one quintuplet kind. Supply patterns use {A} {P} {B};
/// certificate patterns use {A} {C} {P}. Each required placeholder appears
/// exactly once and no other placeholder is allowed.
class Template {
 public:
  /// Throws TemplateError when the pattern does not fit the kind.
  Template(QuintupletKind kind, std::string pattern);

  static Template default_supply();
  static Template default_cert();
  static Template alternate_supply();
  static Template alternate_cert();
  static Template defaults_for(QuintupletKind kind);

  QuintupletKind kind() const noexcept { return kind_; }
  const std::string& pattern() const noexcept { return pattern_; }

 private:
  QuintupletKind kind_;
  std::string pattern_;
};

/// Substitutes entity names into the template. Throws TemplateError on a kind
/// mismatch and LookupError for ids missing from the graph.
std::string verbalize(const Quintuplet& q, const KnowledgeGraph& graph, const Template& tmpl);

/// Template pair used for one run.
struct TemplateSet {
  Template supply = Template::default_supply();
  Template cert = Template::default_cert();

  const Template& for_kind(QuintupletKind k) const noexcept {
    return k == QuintupletKind::SuppliesProductTo ? supply : cert;
  }
};

}  // namespace quintlink
