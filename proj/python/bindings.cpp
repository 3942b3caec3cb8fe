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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <tuple>
#include <vector>

#include "quintlink/config.hpp"
#include "quintlink/embedding.hpp"
#include "quintlink/error.hpp"
#include "quintlink/kg.hpp"
#include "quintlink/metrics.hpp"
#include "quintlink/pipeline.hpp"
#include "quintlink/quintuplet.hpp"
#include "quintlink/synth.hpp"
#include "quintlink/verbalizer.hpp"

namespace py = pybind11;
using namespace quintlink;

namespace {

QuintupletKind kind_arg(const std::string& s) {
  const auto k = parse_quintuplet_kind(s);
  if (!k) throw ConfigError("unknown quintuplet kind '" + s + "'");
  return *k;
}

using NamedQuintuplet = std::tuple<std::string, std::string, std::string>;

NamedQuintuplet names_of(const Quintuplet& q, const KnowledgeGraph& g) {
  return {g.entity(q.e1).name, g.entity(q.e2).name, g.entity(q.e3).name};
}

py::dict metric_dict(const MetricReport& m) {
  py::dict d;
  d["tp"] = m.cm.tp;
  d["fn"] = m.cm.fn;
  d["fp"] = m.cm.fp;
  d["tn"] = m.cm.tn;
  d["acc_bw"] = m.acc_bw;
  d["precision"] = m.precision;
  d["recall"] = m.recall;
  d["fw_score"] = m.fw_score;
  d["acc_balanced_uniform"] = m.acc_balanced_uniform;
  d["flags"] = describe_flags(m.flags);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Knowledge-graph link prediction over verbalized quintuplets";

  py::register_exception<Error>(m, "QuintlinkError", PyExc_ValueError);

  py::class_<KnowledgeGraph>(m, "KnowledgeGraph")
      .def_static("from_csv", [](const std::string& text) { return KnowledgeGraph::ingest(parse_triplet_csv(text)); })
      .def_static("load", [](const std::string& path) { return KnowledgeGraph::ingest(read_triplet_file(path)); })
      .def("to_csv", &to_triplet_csv)
      .def_property_readonly("entity_count", &KnowledgeGraph::entity_count)
      .def_property_readonly("triplet_count", &KnowledgeGraph::triplet_count)
      .def("countries", &KnowledgeGraph::countries)
      .def("partition_by_country", &partition_by_country)
      .def("__len__", &KnowledgeGraph::triplet_count);

  m.def(
      "synthesize",
      [](std::uint64_t seed, std::size_t companies, std::size_t products, double signal, const std::string& country) {
        SynthConfig c;
        c.seed = seed;
        c.companies = companies;
        c.products = products;
        c.signal = signal;
        c.country = country;
        return generate(c);
      },
      py::arg("seed"), py::arg("companies") = 200, py::arg("products") = 50, py::arg("signal") = 0.9,
      py::arg("country") = "");

  m.def(
      "derive",
      [](const KnowledgeGraph& g, const std::string& kind) {
        std::vector<NamedQuintuplet> out;
        for (const auto& q : derive(g, kind_arg(kind))) out.push_back(names_of(q, g));
        return out;
      },
      py::arg("graph"), py::arg("kind") = "supplies_product_to");

  m.def(
      "sample",
      [](const KnowledgeGraph& g, const std::string& kind, std::uint64_t seed) {
        const auto ds = build_dataset(derive(g, kind_arg(kind)), g, seed);
        std::vector<std::tuple<std::string, std::string, std::string, int>> rows;
        for (const auto& r : ds.records) {
          const auto [a, b, c] = names_of(r.quintuplet, g);
          rows.emplace_back(a, b, c, static_cast<int>(r.label));
        }
        return py::make_tuple(rows, ds.warnings);
      },
      py::arg("graph"), py::arg("kind") = "supplies_product_to", py::arg("seed") = 0);

  m.def(
      "verbalize",
      [](const KnowledgeGraph& g, const std::string& kind, bool alternate) {
        const auto k = kind_arg(kind);
        const auto t = !alternate ? Template::defaults_for(k)
                       : k == QuintupletKind::SuppliesProductTo ? Template::alternate_supply()
                                                                : Template::alternate_cert();
        std::vector<std::string> out;
        for (const auto& q : derive(g, k)) out.push_back(verbalize(q, g, t));
        return out;
      },
      py::arg("graph"), py::arg("kind") = "supplies_product_to", py::arg("alternate") = false);

  m.def(
      "hash_embed",
      [](const std::string& text, std::size_t dim, std::uint64_t seed) { return hash_embed(text, dim, seed).vector.values; },
      py::arg("text"), py::arg("dim") = 384, py::arg("seed") = 0);

  m.def(
      "evaluate",
      [](std::uint64_t tp, std::uint64_t fn, std::uint64_t fp, std::uint64_t tn) {
        return metric_dict(evaluate(ConfusionMatrix{tp, fn, fp, tn}));
      },
      py::arg("tp"), py::arg("fn"), py::arg("fp"), py::arg("tn"));

  m.def(
      "run_experiment",
      [](const std::string& config_text) {
        auto cfg = ExperimentConfig::from_config(Config::parse(config_text));
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(cfg);
        }
        py::list rows;
        for (const auto& row : r.rows) {
          auto d = metric_dict(row.metrics);
          d["dataset"] = row.dataset;
          d["architecture"] = row.architecture;
          d["embedder"] = row.embedder;
          rows.append(d);
        }
        py::dict out;
        out["rows"] = rows;
        out["report_csv"] = report_csv(r.rows, cfg.balanced_uniform);
        out["warnings"] = r.warnings;
        return out;
      },
      py::arg("config_text"));

  m.attr("__version__") = QUINTLINK_VERSION;
}
