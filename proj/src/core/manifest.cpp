#include "core/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "core/error.hpp"

namespace mc {

using json = nlohmann::ordered_json;

std::string grid_manifest_json(const GridManifest& m) {
  json doc;
  doc["format_version"] = "1";
  doc["block_id"] = m.block_id;
  doc["source_width"] = m.grid.source_width();
  doc["source_height"] = m.grid.source_height();
  doc["patch_size"] = m.grid.patch_size();
  doc["include_partial"] = m.grid.include_partial();
  doc["rows"] = m.grid.rows();
  doc["cols"] = m.grid.cols();
  json patches = json::array();
  for (std::int64_t i = 0; i < m.grid.patch_count(); ++i) {
    const auto b = m.grid.bounds(i);
    patches.push_back({{"id", patch_id(m.block_id, b.row, b.col)},
                       {"row", b.row},
                       {"col", b.col},
                       {"x0", b.x0},
                       {"y0", b.y0},
                       {"width", b.width},
                       {"height", b.height}});
  }
  doc["patches"] = std::move(patches);
  return doc.dump(2) + "\n";
}

namespace {

std::int64_t get_int(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_number_integer())
    fail(ErrorKind::Validation, std::string("grid manifest field '") + key + "' must be an integer");
  return doc[key].get<std::int64_t>();
}

}  // namespace

GridManifest parse_grid_manifest(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::Parse, std::string("malformed grid manifest: ") + e.what());
  }
  require(doc.is_object(), ErrorKind::Validation, "grid manifest must be a JSON object");
  static const std::set<std::string> known = {"format_version", "block_id", "source_width",
                                              "source_height", "patch_size", "include_partial",
                                              "rows", "cols", "patches"};
  for (auto it = doc.begin(); it != doc.end(); ++it)
    require(known.count(it.key()) > 0, ErrorKind::Validation,
            "grid manifest has unknown field '" + it.key() + "'");
  require(doc.contains("format_version") && doc["format_version"] == "1",
          ErrorKind::UnsupportedVersion, "grid manifest format_version must be \"1\"");
  require(doc.contains("block_id") && doc["block_id"].is_string(), ErrorKind::Validation,
          "grid manifest field 'block_id' must be a string");
  require(doc.contains("include_partial") && doc["include_partial"].is_boolean(),
          ErrorKind::Validation, "grid manifest field 'include_partial' must be a boolean");
  GridManifest m;
  m.block_id = doc["block_id"].get<std::string>();
  m.grid = build_grid(get_int(doc, "source_width"), get_int(doc, "source_height"),
                      get_int(doc, "patch_size"), doc["include_partial"].get<bool>());
  require(get_int(doc, "rows") == m.grid.rows() && get_int(doc, "cols") == m.grid.cols(),
          ErrorKind::Consistency, "grid manifest rows/cols do not match its dimensions");
  return m;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write '" + path + "'");
  out << text;
  out.flush();
  require(static_cast<bool>(out), ErrorKind::Io, "write failed for '" + path + "'");
}

void save_grid_manifest(const GridManifest& manifest, const std::string& path) {
  write_text_file(path, grid_manifest_json(manifest));
}

GridManifest load_grid_manifest(const std::string& path) {
  try {
    return parse_grid_manifest(read_text_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    throw Error(e.kind(), path + ": " + e.what());
  }
}

}  // namespace mc
