#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "raganything/errors.hpp"
#include "raganything/synthesis.hpp"
#include "raganything/text_utils.hpp"

using namespace raganything;

namespace {

RetrievalIndex synth_index() {
  RetrievalIndex index;
  Entity e;
  e.entity_id = "ent:alpha";
  e.name = "Alpha";
  e.entity_type = "concept";
  e.description = "the first";
  e.source_unit_ids = {"d#0"};
  index.graph.add_entity(e);
  Entity f;
  f.entity_id = "ent:beta";
  f.name = "Beta";
  f.entity_type = "concept";
  f.source_unit_ids = {"d#0"};
  index.graph.add_entity(f);
  Relation r;
  r.relation_id = "rel:ab";
  r.subject_id = "ent:alpha";
  r.object_id = "ent:beta";
  r.predicate = "related_to";
  r.description = "pairs";
  index.graph.add_relation(r);

  ChunkRecord t;
  t.chunk_key = "d#txt0";
  t.covered_unit_ids = {"d#0"};
  t.retrieval_text = "alpha and beta text";
  t.token_count = 4;
  index.chunks["d#txt0"] = t;

  ChunkRecord img;
  img.chunk_key = "d#1";
  img.covered_unit_ids = {"d#1"};
  img.modality = ModalityType::image;
  img.retrieval_text = "a picture of alpha";
  img.entity_summary = EntitySummary{"Alpha Figure", "image", "alpha pic"};
  img.token_count = 4;
  img.image_ref = "figs/alpha.png";
  index.chunks["d#1"] = img;

  ModelGateway gw;
  index.table = build_embedding_table(index.graph, index.chunks, gw,
                                      ModelProfile{});
  index.rebuild_unit_map();
  return index;
}

}  // namespace

TEST_CASE("build_context renders sections in order with delimiters") {
  RetrievalIndex index = synth_index();
  SelectionBundle bundle;
  bundle.entity_ids = {"ent:alpha"};
  bundle.chunk_keys = {"d#txt0"};
  auto ctx = build_context(bundle, index);
  REQUIRE(ctx.sections.size() == 2);
  CHECK(ctx.sections[0].kind == SectionKind::entity);
  CHECK(ctx.sections[1].kind == SectionKind::chunk_text);
  CHECK(ctx.rendered ==
        "[BEGIN entity ent:alpha]\n"
        "Alpha (concept): the first\n"
        "[END entity]\n"
        "[BEGIN chunk:text d#txt0]\n"
        "alpha and beta text\n"
        "[END chunk:text]\n");
}

TEST_CASE("empty bundle renders the empty string") {
  RetrievalIndex index = synth_index();
  auto ctx = build_context(SelectionBundle{}, index);
  CHECK(ctx.rendered.empty());
  CHECK(ctx.sections.empty());
}

TEST_CASE("image chunk section carries chunk:image kind and the unit id") {
  RetrievalIndex index = synth_index();
  SelectionBundle bundle;
  bundle.chunk_keys = {"d#1"};
  auto ctx = build_context(bundle, index);
  REQUIRE(ctx.sections.size() == 1);
  CHECK(ctx.sections[0].kind == SectionKind::chunk_image);
  CHECK(ctx.sections[0].heading == "d#1");
  CHECK(ctx.rendered.find("[BEGIN chunk:image d#1]") != std::string::npos);
}

TEST_CASE("relations render and dangling keys throw") {
  RetrievalIndex index = synth_index();
  SelectionBundle bundle;
  bundle.relation_ids = {"rel:ab"};
  auto ctx = build_context(bundle, index);
  CHECK(ctx.rendered.find("Alpha related_to Beta: pairs") != std::string::npos);

  bundle.relation_ids = {"rel:nope"};
  CHECK_THROWS_AS(build_context(bundle, index), DanglingKeyError);
  bundle = SelectionBundle{};
  bundle.chunk_keys = {"ghost"};
  CHECK_THROWS_AS(build_context(bundle, index), DanglingKeyError);
}

TEST_CASE("dereference_visuals resolves files and reports misses") {
  RetrievalIndex index = synth_index();
  auto root = std::filesystem::temp_directory_path() / "rag_synth_root";
  std::filesystem::create_directories(root / "figs");
  {
    std::ofstream out(root / "figs" / "alpha.png", std::ios::binary);
    out << "PNGBYTES";
  }
  ChunkRecord missing = index.chunks.at("d#1");
  missing.chunk_key = "d#2";
  missing.image_ref = "figs/absent.png";
  index.chunks["d#2"] = missing;
  ModelGateway gw;
  index.table = build_embedding_table(index.graph, index.chunks, gw,
                                      ModelProfile{});

  SelectionBundle bundle;
  bundle.chunk_keys = {"d#1", "d#2", "d#txt0"};
  auto payload = dereference_visuals(bundle, index, root.string());
  REQUIRE(payload.items.size() == 1);
  CHECK(payload.items[0].chunk_key == "d#1");
  CHECK(payload.items[0].bytes == "PNGBYTES");
  CHECK(payload.items[0].caption == "Alpha Figure");
  REQUIRE(payload.warnings.size() == 1);
  CHECK(payload.warnings[0].find("d#2") != std::string::npos);
  std::filesystem::remove_all(root);
}

TEST_CASE("dereference_visuals decodes base64 refs inline") {
  RetrievalIndex index = synth_index();
  index.chunks.at("d#1").image_ref = "base64:aGVsbG8=";  // "hello"
  SelectionBundle bundle;
  bundle.chunk_keys = {"d#1"};
  auto payload = dereference_visuals(bundle, index, "/nonexistent");
  REQUIRE(payload.items.size() == 1);
  CHECK(payload.items[0].bytes == "hello");
  CHECK(payload.warnings.empty());
}

TEST_CASE("no image chunks yield an empty payload") {
  RetrievalIndex index = synth_index();
  SelectionBundle bundle;
  bundle.chunk_keys = {"d#txt0"};
  auto payload = dereference_visuals(bundle, index, ".");
  CHECK(payload.items.empty());
  CHECK(payload.warnings.empty());
}

TEST_CASE("max_images caps attachments") {
  RetrievalIndex index = synth_index();
  index.chunks.at("d#1").image_ref = "base64:QQ==";
  ChunkRecord more = index.chunks.at("d#1");
  more.chunk_key = "d#3";
  index.chunks["d#3"] = more;
  SelectionBundle bundle;
  bundle.chunk_keys = {"d#1", "d#3"};
  CHECK(dereference_visuals(bundle, index, ".", 1).items.size() == 1);
  CHECK(dereference_visuals(bundle, index, ".", 6).items.size() == 2);
}

TEST_CASE("generate_response dry run returns the rendered context") {
  RetrievalIndex index = synth_index();
  SelectionBundle bundle;
  bundle.chunk_keys = {"d#txt0"};
  auto ctx = build_context(bundle, index);
  ModelGateway gw;
  SynthesisOptions options;
  options.dry_run = true;
  CHECK(generate_response("q", ctx, {}, gw, ModelProfile{}, options) ==
        ctx.rendered);
}

TEST_CASE("generate_response stub answer is a stable digest") {
  RetrievalIndex index = synth_index();
  SelectionBundle bundle;
  bundle.chunk_keys = {"d#txt0"};
  auto ctx = build_context(bundle, index);
  ModelGateway gw;
  std::string a = generate_response("q", ctx, {}, gw, ModelProfile{});
  std::string b = generate_response("q", ctx, {}, gw, ModelProfile{});
  CHECK(a == b);
  CHECK(a.rfind("stub-reply:", 0) == 0);
}
