#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "netforge/network.hpp"

namespace netforge {

using json = nlohmann::json;

inline double finite_number(const json& j, const std::string& what) {
  if (!j.is_number()) throw InputError(what + " must be a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw InputError(what + " must be finite");
  return x;
}

inline std::string id_string(const json& j, const std::string& what) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  throw InputError(what + " must be a string id");
}

inline json network_to_json(const WeightedNetwork& net) {
  json out;
  out["vertices"] = json::array();
  for (const auto& v : net.vertices()) out["vertices"].push_back({{"id", v.id}, {"x", v.pos.real()}, {"y", v.pos.imag()}});
  out["edges"] = json::array();
  for (const auto& e : net.edges())
    out["edges"].push_back({{"u", net.vertex(e.u).id}, {"v", net.vertex(e.v).id}, {"weight", e.weight}});
  return out;
}

inline WeightedNetwork network_from_json(const json& j) {
  if (!j.is_object()) throw InputError("network must be a JSON object");
  if (!j.contains("vertices") || !j["vertices"].is_array()) throw InputError("network needs a 'vertices' array");
  std::vector<Vertex> verts;
  for (const auto& v : j["vertices"]) {
    if (!v.is_object() || !v.contains("id") || !v.contains("x") || !v.contains("y"))
      throw InputError("vertex entries need id, x, y");
    verts.push_back({id_string(v["id"], "vertex id"), {finite_number(v["x"], "x"), finite_number(v["y"], "y")}});
  }
  std::vector<EdgeSpec> edges;
  if (j.contains("edges")) {
    if (!j["edges"].is_array()) throw InputError("'edges' must be an array");
    for (const auto& e : j["edges"]) {
      if (!e.is_object() || !e.contains("u") || !e.contains("v")) throw InputError("edge entries need u, v");
      const double w = e.contains("weight") ? finite_number(e["weight"], "weight") : 1.0;
      edges.push_back({id_string(e["u"], "edge endpoint"), id_string(e["v"], "edge endpoint"), w});
    }
  }
  return {verts, edges};
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& ex) {
    throw InputError("malformed JSON in '" + path + "': " + ex.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
}

}  // namespace netforge
