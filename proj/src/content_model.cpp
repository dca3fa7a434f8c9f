#include "raganything/content_model.hpp"

#include <nlohmann/json.hpp>

#include "raganything/errors.hpp"

namespace raganything {

using nlohmann::json;

std::string to_string(ModalityType t) {
  switch (t) {
    case ModalityType::text: return "text";
    case ModalityType::image: return "image";
    case ModalityType::table: return "table";
    case ModalityType::equation: return "equation";
    case ModalityType::generic: return "generic";
  }
  return "generic";
}

ModalityType modality_from_string(const std::string& s) {
  if (s == "text") return ModalityType::text;
  if (s == "image") return ModalityType::image;
  if (s == "table") return ModalityType::table;
  if (s == "equation") return ModalityType::equation;
  if (s == "generic") return ModalityType::generic;
  throw SchemaError("unknown modality '" + s + "'");
}

namespace {

std::string require_string(const json& j, const char* field,
                           const std::string& where) {
  if (!j.contains(field) || !j[field].is_string())
    throw SchemaError(where + ": missing or non-string field '" + field + "'");
  return j[field].get<std::string>();
}

std::vector<std::vector<std::string>> parse_rows(const json& j,
                                                 const char* field,
                                                 const std::string& where) {
  std::vector<std::vector<std::string>> rows;
  if (!j.contains(field)) return rows;
  if (!j[field].is_array())
    throw SchemaError(where + ": field '" + field + "' must be an array");
  for (const auto& row : j[field]) {
    if (!row.is_array())
      throw SchemaError(where + ": rows of '" + field + "' must be arrays");
    std::vector<std::string> cells;
    for (const auto& cell : row) {
      if (!cell.is_string())
        throw SchemaError(where + ": table cells must be strings");
      cells.push_back(cell.get<std::string>());
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

ModalityPayload parse_payload(ModalityType modality, const json& p,
                              const std::string& where) {
  if (!p.is_object()) throw SchemaError(where + ": payload must be an object");
  switch (modality) {
    case ModalityType::text:
      return TextPayload{require_string(p, "body", where)};
    case ModalityType::generic:
      return GenericPayload{require_string(p, "body", where)};
    case ModalityType::image: {
      ImagePayload img;
      img.image_ref = require_string(p, "image_ref", where);
      if (p.contains("caption") && !p["caption"].is_null())
        img.caption = p["caption"].get<std::string>();
      if (p.contains("footnotes"))
        for (const auto& f : p["footnotes"])
          img.footnotes.push_back(f.get<std::string>());
      return img;
    }
    case ModalityType::table: {
      TablePayload tab;
      if (p.contains("caption") && !p["caption"].is_null())
        tab.caption = p["caption"].get<std::string>();
      tab.header_rows = parse_rows(p, "header_rows", where);
      tab.body_rows = parse_rows(p, "body_rows", where);
      if (p.contains("raw")) tab.raw = p["raw"].get<std::string>();

      std::size_t width = 0;
      bool first = true;
      auto check = [&](const std::vector<std::string>& row) {
        if (first) {
          width = row.size();
          first = false;
        } else if (row.size() != width) {
          throw RaggedTableError(where + ": row width " +
                                 std::to_string(row.size()) +
                                 " != " + std::to_string(width));
        }
      };
      for (const auto& r : tab.header_rows) check(r);
      for (const auto& r : tab.body_rows) check(r);
      return tab;
    }
    case ModalityType::equation: {
      EquationPayload eq;
      eq.latex = require_string(p, "latex", where);
      if (p.contains("surrounding_text") && !p["surrounding_text"].is_null())
        eq.surrounding_text = p["surrounding_text"].get<std::string>();
      return eq;
    }
  }
  throw SchemaError(where + ": unhandled modality");
}

json payload_to_json(const ContentUnit& u) {
  json p = json::object();
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, TextPayload> ||
                      std::is_same_v<T, GenericPayload>) {
          p["body"] = v.body;
        } else if constexpr (std::is_same_v<T, ImagePayload>) {
          p["image_ref"] = v.image_ref;
          if (v.caption) p["caption"] = *v.caption;
          if (!v.footnotes.empty()) p["footnotes"] = v.footnotes;
        } else if constexpr (std::is_same_v<T, TablePayload>) {
          if (v.caption) p["caption"] = *v.caption;
          p["header_rows"] = v.header_rows;
          p["body_rows"] = v.body_rows;
          p["raw"] = v.raw;
        } else if constexpr (std::is_same_v<T, EquationPayload>) {
          p["latex"] = v.latex;
          if (v.surrounding_text) p["surrounding_text"] = *v.surrounding_text;
        }
      },
      u.content);
  return p;
}

}  // namespace

KnowledgeSource load_source(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("document must be a JSON object");

  KnowledgeSource src;
  src.source_id = require_string(doc, "source_id", "document");
  if (src.source_id.empty()) throw SchemaError("source_id must be non-empty");
  src.title = require_string(doc, "title", "document");
  if (doc.contains("metadata")) {
    if (!doc["metadata"].is_object())
      throw SchemaError("metadata must be an object of strings");
    for (const auto& [k, v] : doc["metadata"].items()) {
      if (!v.is_string()) throw SchemaError("metadata values must be strings");
      src.metadata[k] = v.get<std::string>();
    }
  }
  if (!doc.contains("units") || !doc["units"].is_array())
    throw SchemaError("document: missing 'units' array");

  std::uint32_t expected = 0;
  for (const auto& ju : doc["units"]) {
    const std::string where =
        src.source_id + "#" + std::to_string(expected);
    if (!ju.is_object()) throw SchemaError(where + ": unit must be an object");
    if (!ju.contains("index") || !ju["index"].is_number_integer())
      throw SchemaError(where + ": missing integer 'index'");
    const auto idx = ju["index"].get<std::int64_t>();
    if (idx != static_cast<std::int64_t>(expected))
      throw OrderError(src.source_id + ": unit index " + std::to_string(idx) +
                       " out of order, expected " + std::to_string(expected));

    ContentUnit u;
    u.index = expected;
    u.unit_id = src.source_id + "#" + std::to_string(expected);
    u.modality = modality_from_string(require_string(ju, "modality", where));
    if (!ju.contains("payload"))
      throw SchemaError(where + ": missing 'payload'");
    u.content = parse_payload(u.modality, ju["payload"], where);
    if (ju.contains("page_hint") && !ju["page_hint"].is_null())
      u.page_hint = ju["page_hint"].get<int>();
    src.units.push_back(std::move(u));
    ++expected;
  }
  return src;
}

std::string serialize_source(const KnowledgeSource& source) {
  json doc;
  doc["source_id"] = source.source_id;
  doc["title"] = source.title;
  doc["metadata"] = source.metadata;
  doc["units"] = json::array();
  for (const auto& u : source.units) {
    json ju;
    ju["index"] = u.index;
    ju["modality"] = to_string(u.modality);
    ju["payload"] = payload_to_json(u);
    if (u.page_hint) ju["page_hint"] = *u.page_hint;
    doc["units"].push_back(std::move(ju));
  }
  return doc.dump(2);
}

ContextWindow neighborhood(const KnowledgeSource& source, std::uint32_t center,
                           std::uint32_t delta) {
  if (center >= source.units.size())
    throw UnitIndexError(source.source_id + ": center " +
                         std::to_string(center) + " out of range (n=" +
                         std::to_string(source.units.size()) + ")");
  ContextWindow w;
  w.delta = delta;
  w.center = center;
  const std::uint32_t lo = center > delta ? center - delta : 0;
  const std::uint32_t hi =
      std::min<std::uint32_t>(static_cast<std::uint32_t>(source.units.size()) - 1,
                              center + delta);
  for (std::uint32_t k = lo; k <= hi; ++k) w.members.push_back(source.units[k]);
  return w;
}

std::vector<ContentUnit> modality_filter(const KnowledgeSource& source,
                                         ModalityType tag) {
  std::vector<ContentUnit> out;
  for (const auto& u : source.units)
    if (u.modality == tag) out.push_back(u);
  return out;
}

std::string payload_text(const ContentUnit& unit) {
  std::string out;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, TextPayload> ||
                      std::is_same_v<T, GenericPayload>) {
          out = v.body;
        } else if constexpr (std::is_same_v<T, ImagePayload>) {
          if (v.caption) out = *v.caption;
          for (const auto& f : v.footnotes) {
            if (!out.empty()) out += "\n";
            out += f;
          }
        } else if constexpr (std::is_same_v<T, TablePayload>) {
          if (v.caption) out = *v.caption;
          auto render = [&](const std::vector<std::vector<std::string>>& rows) {
            for (const auto& row : rows) {
              if (!out.empty()) out += "\n";
              for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) out += " | ";
                out += row[i];
              }
            }
          };
          render(v.header_rows);
          render(v.body_rows);
          if (out.empty()) out = v.raw;
        } else if constexpr (std::is_same_v<T, EquationPayload>) {
          out = v.latex;
          if (v.surrounding_text) out += "\n" + *v.surrounding_text;
        }
      },
      unit.content);
  return out;
}

}  // namespace raganything
