#include <doctest.h>

#include <algorithm>
#include <set>

#include "raganything/errors.hpp"
#include "raganything/kg_builder.hpp"
#include "raganything/text_utils.hpp"

using namespace raganything;

namespace {

ModelProfile stub_profile() {
  ModelProfile p;
  p.backend = Backend::stub;
  return p;
}

KnowledgeSource text_source(const std::string& source_id,
                            const std::vector<std::string>& bodies) {
  KnowledgeSource s;
  s.source_id = source_id;
  s.title = source_id;
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    ContentUnit u;
    u.index = static_cast<std::uint32_t>(i);
    u.unit_id = source_id + "#" + std::to_string(i);
    u.content = TextPayload{bodies[i]};
    s.units.push_back(std::move(u));
  }
  return s;
}

std::set<std::string> entity_names(const ExtractionResult& r) {
  std::set<std::string> out;
  for (const auto& e : r.entities) out.insert(e.name);
  return out;
}

}  // namespace

TEST_CASE("stub extraction: quoted spans and capitalized runs") {
  ModelGateway gw;
  // Hand-applied rule: quoted span "style space" plus the capitalized
  // tokens The+GCAN; "The" is a stop word trimmed from the run edge.
  auto r = extract_graph("The \"style space\" panel shows GCAN results",
                         gw, stub_profile());
  CHECK(entity_names(r) == std::set<std::string>{"style space", "GCAN"});
  REQUIRE(r.relations.size() == 1);
  CHECK(r.relations[0].predicate == "related_to");
  std::set<std::string> ends{r.relations[0].subject, r.relations[0].object};
  CHECK(ends == std::set<std::string>{"style space", "GCAN"});
}

TEST_CASE("stub extraction: no extractable spans is valid") {
  ModelGateway gw;
  auto r = extract_graph("just lowercase words here.", gw, stub_profile());
  CHECK(r.entities.empty());
  CHECK(r.relations.empty());
}

TEST_CASE("stub extraction: no self-relations from repeated mentions") {
  ModelGateway gw;
  auto r = extract_graph("Tesla reported revenue. Tesla builds cars.",
                         gw, stub_profile());
  CHECK(entity_names(r) == std::set<std::string>{"Tesla"});
  CHECK(r.relations.empty());
}

TEST_CASE("stub extraction: relations do not cross sentences, no duplicates") {
  ModelGateway gw;
  auto r = extract_graph("Alpha met Beta. Gamma slept. Alpha met Beta again.",
                         gw, stub_profile());
  // "met" is lowercase, so Alpha and Beta are separate runs; Gamma alone
  // in its sentence adds no relation; the repeated Alpha-Beta pair in the
  // third sentence deduplicates.
  CHECK(entity_names(r) == std::set<std::string>{"Alpha", "Beta", "Gamma"});
  REQUIRE(r.relations.size() == 1);
  CHECK(r.relations[0].subject == "Alpha");
  CHECK(r.relations[0].object == "Beta");
}

TEST_CASE("stub extraction: multi-token capitalized run forms one entity") {
  ModelGateway gw;
  auto r = extract_graph("New York City hosts the event", gw, stub_profile());
  CHECK(entity_names(r) == std::set<std::string>{"New York City"});
}

TEST_CASE("extract_graph rejects empty input") {
  ModelGateway gw;
  CHECK_THROWS_AS(extract_graph("", gw, stub_profile()), EmptyInputError);
}

TEST_CASE("cross-modal graph structure for one image unit") {
  // doc: text neighbor + image with caption "Growth Chart" whose payload
  // text is the caption. Stub description:
  //   "[image d#1] Growth Chart\nContext: plain neighbor words"
  // Stub extraction on that description (stop word "context" trimmed):
  // sentence split on '\n' gives "[image d#1] Growth Chart" ->
  // capitalized run {Growth Chart}; "Context: plain neighbor words" ->
  // nothing ("Context:" is a trimmed stop word).
  KnowledgeSource s = text_source("d", {"plain neighbor words"});
  ContentUnit img;
  img.index = 1;
  img.unit_id = "d#1";
  img.modality = ModalityType::image;
  img.content = ImagePayload{"g.png", "Growth Chart", {}};
  s.units.push_back(img);

  ModelGateway gw;
  auto result = build_cross_modal_graph(s, 1, gw, stub_profile(),
                                        stub_profile());
  REQUIRE(result.manifest.size() == 1);
  CHECK(result.manifest[0].ok);

  // 1 anchor + 1 extracted entity, 1 belongs_to edge, no extracted rels.
  CHECK(result.graph.entities.size() == 2);
  CHECK(result.graph.relations.size() == 1);
  const auto& anchor = result.graph.entities.at("anchor:d#1");
  CHECK(anchor.kind == EntityKind::multimodal_anchor);
  CHECK(anchor.name == "Growth Chart");
  const auto& rel = result.graph.relations.begin()->second;
  CHECK(rel.kind == RelationKind::belongs_to);
  CHECK(rel.object_id == "anchor:d#1");
  CHECK(rel.subject_id != rel.object_id);

  REQUIRE(result.chunks.size() == 1);
  CHECK(result.chunks[0].chunk_key == "d#1");
  CHECK(result.chunks[0].modality == ModalityType::image);
  CHECK(result.chunks[0].image_ref == "g.png");
  CHECK(result.chunks[0].token_count ==
        text::count_tokens(result.chunks[0].retrieval_text));
}

TEST_CASE("cross-modal graph invariants hold on a mixed source") {
  KnowledgeSource s = text_source("m", {"Alpha precedes the figures."});
  ContentUnit img;
  img.index = 1;
  img.unit_id = "m#1";
  img.modality = ModalityType::image;
  img.content = ImagePayload{"a.png", "Alpha Chart", {"Beta appears here"}};
  s.units.push_back(img);
  ContentUnit tab;
  tab.index = 2;
  tab.unit_id = "m#2";
  tab.modality = ModalityType::table;
  TablePayload tp;
  tp.caption = "Scores Table";
  tp.body_rows = {{"Gamma", "1"}, {"Delta", "2"}};
  tab.content = tp;
  s.units.push_back(tab);

  ModelGateway gw;
  auto result = build_cross_modal_graph(s, 1, gw, stub_profile(),
                                        stub_profile());
  result.graph.validate();

  // Every extracted entity has exactly one belongs_to edge to an anchor;
  // anchors have no outgoing belongs_to.
  std::map<std::string, int> outgoing;
  for (const auto& [rid, r] : result.graph.relations) {
    if (r.kind != RelationKind::belongs_to) continue;
    outgoing[r.subject_id]++;
    CHECK(result.graph.entities.at(r.object_id).kind ==
          EntityKind::multimodal_anchor);
  }
  for (const auto& [eid, e] : result.graph.entities) {
    if (e.kind == EntityKind::extracted)
      CHECK(outgoing[eid] == 1);
    else
      CHECK(outgoing.count(eid) == 0);
  }
  CHECK(result.chunks.size() == 2);  // one per non-text unit
}

TEST_CASE("zero non-text units give an empty cross-modal graph") {
  KnowledgeSource s = text_source("t", {"Only Text Here."});
  ModelGateway gw;
  auto result = build_cross_modal_graph(s, 1, gw, stub_profile(),
                                        stub_profile());
  CHECK(result.graph.empty());
  CHECK(result.chunks.empty());
  CHECK(result.manifest.empty());
}

TEST_CASE("shared names across units stay distinct before fusion") {
  KnowledgeSource s;
  s.source_id = "p";
  for (int i = 0; i < 2; ++i) {
    ContentUnit img;
    img.index = i;
    img.unit_id = "p#" + std::to_string(i);
    img.modality = ModalityType::image;
    img.content = ImagePayload{"x.png", "Shared Name", {}};
    s.units.push_back(img);
  }
  ModelGateway gw;
  auto result = build_cross_modal_graph(s, 0, gw, stub_profile(),
                                        stub_profile());
  // Two anchors + one extracted "Shared Name" instance per unit.
  CHECK(result.graph.entities.size() == 4);
  CHECK(result.graph.entities.count("x:p#0:shared name") == 1);
  CHECK(result.graph.entities.count("x:p#1:shared name") == 1);
}

TEST_CASE("pack_text_chunks splits oversized units by the token oracle") {
  // 12 whitespace tokens, max 5, overlap 0 -> windows [0,5) [5,10) [10,12).
  KnowledgeSource s = text_source(
      "c", {"w1 w2 w3 w4 w5 w6 w7 w8 w9 w10 w11 w12"});
  auto chunks = pack_text_chunks(s, {5, 0});
  REQUIRE(chunks.size() == 3);
  CHECK(chunks[0].retrieval_text == "w1 w2 w3 w4 w5");
  CHECK(chunks[1].retrieval_text == "w6 w7 w8 w9 w10");
  CHECK(chunks[2].retrieval_text == "w11 w12");
  CHECK(chunks[0].chunk_key == "c#txt0");
  CHECK(chunks[2].chunk_key == "c#txt2");
  for (const auto& c : chunks)
    CHECK(c.token_count == text::count_tokens(c.retrieval_text));
}

TEST_CASE("pack_text_chunks overlap repeats trailing tokens") {
  KnowledgeSource s = text_source("c", {"a b c d e f g h"});
  auto chunks = pack_text_chunks(s, {4, 2});
  // Stride max-overlap = 2: [a..d] [c..f] [e..h].
  REQUIRE(chunks.size() == 3);
  CHECK(chunks[0].retrieval_text == "a b c d");
  CHECK(chunks[1].retrieval_text == "c d e f");
  CHECK(chunks[2].retrieval_text == "e f g h");
}

TEST_CASE("pack_text_chunks packs whole small units greedily") {
  KnowledgeSource s =
      text_source("c", {"a b", "c d", "e f"});  // 2 tokens each
  auto chunks = pack_text_chunks(s, {4, 0});
  REQUIRE(chunks.size() == 2);
  CHECK(chunks[0].retrieval_text == "a b\nc d");
  CHECK(chunks[0].covered_unit_ids ==
        std::vector<std::string>{"c#0", "c#1"});
  CHECK(chunks[1].retrieval_text == "e f");
}

TEST_CASE("build_text_graph on an empty source") {
  KnowledgeSource s = text_source("e", {});
  ModelGateway gw;
  auto result = build_text_graph(s, gw, stub_profile(), {});
  CHECK(result.graph.empty());
  CHECK(result.chunks.empty());
}

TEST_CASE("build_text_graph extracts per chunk and validates") {
  KnowledgeSource s =
      text_source("g", {"Alice met Bob in Paris. Carol stayed home."});
  ModelGateway gw;
  auto result = build_text_graph(s, gw, stub_profile(), {});
  result.graph.validate();
  // "met" is lowercase, so the runs in sentence one are {Alice}, {Bob},
  // {Paris}; sentence two adds {Carol}.
  CHECK(result.graph.entities.count("t:g#txt0:alice met bob") == 0);
  CHECK(result.graph.entities.count("t:g#txt0:alice") == 1);
  CHECK(result.graph.entities.size() == 4);
  // Relations: C(3,2)=3 pairs in sentence one, none in sentence two.
  CHECK(result.graph.relations.size() == 3);
  for (const auto& [rid, r] : result.graph.relations)
    CHECK(r.kind == RelationKind::extracted);
  REQUIRE(result.chunks.size() == 1);
  CHECK(result.chunks[0].modality == ModalityType::text);
}

TEST_CASE("builds are deterministic across worker counts") {
  KnowledgeSource s = text_source("w", {"Alpha one.", "Beta two.", "Gamma."});
  for (int i = 0; i < 3; ++i) {
    ContentUnit img;
    img.index = static_cast<std::uint32_t>(3 + i);
    img.unit_id = "w#" + std::to_string(3 + i);
    img.modality = ModalityType::image;
    img.content = ImagePayload{"i.png", "Figure " + std::to_string(i), {}};
    s.units.push_back(img);
  }
  ModelGateway gw;
  auto r1 = build_cross_modal_graph(s, 1, gw, stub_profile(), stub_profile(), 1);
  auto r4 = build_cross_modal_graph(s, 1, gw, stub_profile(), stub_profile(), 4);
  CHECK(r1.graph == r4.graph);
  CHECK(r1.chunks == r4.chunks);
  auto t1 = build_text_graph(s, gw, stub_profile(), {}, 1);
  auto t3 = build_text_graph(s, gw, stub_profile(), {}, 3);
  CHECK(t1.graph == t3.graph);
  CHECK(t1.chunks == t3.chunks);
}
