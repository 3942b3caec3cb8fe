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

#include "quintlink/error.hpp"
#include "quintlink/verbalizer.hpp"

namespace quintlink {
namespace {

using QK = QuintupletKind;

KnowledgeGraph small_graph() {
  std::vector<Entity> es{{EntityId{0}, EntityKind::Company, "Acme {B}", {}},
                         {EntityId{1}, EntityKind::Product, "bolt", {}},
                         {EntityId{2}, EntityKind::Company, "Beta", {}},
                         {EntityId{3}, EntityKind::Certificate, "ISO 9001", {}}};
  return KnowledgeGraph::from_parts(es, {});
}

TEST(Verbalizer, DefaultTemplates) {
  const auto g = small_graph();
  EXPECT_EQ(verbalize({QK::SuppliesProductTo, EntityId{2}, EntityId{1}, EntityId{0}}, g, Template::default_supply()),
            "Company Beta supplies bolt to company Acme {B}");
  EXPECT_EQ(verbalize({QK::WithCertHasProduct, EntityId{2}, EntityId{3}, EntityId{1}}, g, Template::default_cert()),
            "Company Beta with certificate ISO 9001 has bolt");
}

TEST(Verbalizer, NamesAreNotReExpanded) {
  const auto g = small_graph();
  EXPECT_EQ(verbalize({QK::SuppliesProductTo, EntityId{0}, EntityId{1}, EntityId{2}}, g, Template::default_supply()),
            "Company Acme {B} supplies bolt to company Beta");
}

TEST(Verbalizer, AlternateTemplatesAreValid) {
  EXPECT_EQ(Template::alternate_supply().kind(), QK::SuppliesProductTo);
  EXPECT_EQ(Template::alternate_cert().kind(), QK::WithCertHasProduct);
  EXPECT_EQ(Template::defaults_for(QK::WithCertHasProduct).pattern(), Template::default_cert().pattern());
  TemplateSet set;
  EXPECT_EQ(set.for_kind(QK::SuppliesProductTo).pattern(), Template::default_supply().pattern());
}

TEST(Verbalizer, RejectsBadPatterns) {
  EXPECT_THROW(Template(QK::SuppliesProductTo, "{A} to {B}"), TemplateError);
  EXPECT_THROW(Template(QK::SuppliesProductTo, "{A} {P} {B} {A}"), TemplateError);
  EXPECT_THROW(Template(QK::SuppliesProductTo, "{A} {P} {B} {C}"), TemplateError);
  EXPECT_THROW(Template(QK::WithCertHasProduct, "{A} {C} {P} {B}"), TemplateError);
  EXPECT_NO_THROW(Template(QK::WithCertHasProduct, "{P}{C}{A}"));
}

TEST(Verbalizer, KindMismatchAndUnknownIds) {
  const auto g = small_graph();
  EXPECT_THROW(verbalize({QK::SuppliesProductTo, EntityId{0}, EntityId{1}, EntityId{2}}, g, Template::default_cert()),
               TemplateError);
  EXPECT_THROW(verbalize({QK::SuppliesProductTo, EntityId{0}, EntityId{1}, EntityId{9}}, g, Template::default_supply()),
               LookupError);
}

}  // namespace
}  // namespace quintlink
