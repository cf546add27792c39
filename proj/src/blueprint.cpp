// Copyright 2026 The Archloop Authors
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

#include "archloop/blueprint.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <unordered_map>

#include "archloop/assets.hpp"
#include "archloop/paths.hpp"

namespace archloop::blueprint {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

const json& require(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(std::string("missing field \"") + key + "\"",
                     path + "/" + key);
  }
  return *it;
}

std::string require_string(const json& obj, const char* key,
                           const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_string()) {
    throw ParseError(std::string("field \"") + key + "\" must be a string",
                     path + "/" + key);
  }
  return v.get<std::string>();
}

std::string optional_string(const json& obj, const char* key,
                            const std::string& path) {
  if (!obj.contains(key)) return {};
  return require_string(obj, key, path);
}

json collect_extra(const json& obj, std::initializer_list<const char*> known) {
  json extra = json::object();
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool is_known = std::any_of(known.begin(), known.end(),
                                [&](const char* k) { return it.key() == k; });
    if (!is_known) extra[it.key()] = it.value();
  }
  return extra;
}

PortSpec parse_port(const json& j, const std::string& path) {
  if (!j.is_object()) throw ParseError("port must be an object", path);
  PortSpec port;
  port.name = require_string(j, "name", path);
  std::string dir = require_string(j, "direction", path);
  if (dir == "input") {
    port.direction = Direction::kInput;
  } else if (dir == "output") {
    port.direction = Direction::kOutput;
  } else {
    throw ParseError("direction must be \"input\" or \"output\", got \"" +
                         dir + "\"",
                     path + "/direction");
  }
  const json& w = require(j, "width", path);
  if (w.is_number_integer()) {
    port.width = WidthExpr::literal(w.get<std::int64_t>());
  } else if (w.is_string()) {
    port.width = WidthExpr::symbol(w.get<std::string>());
  } else {
    throw ParseError("width must be an integer or a parameter name",
                     path + "/width");
  }
  port.extra = collect_extra(j, {"name", "direction", "width"});
  return port;
}

ComponentSpec parse_component(const json& j, const std::string& path) {
  if (!j.is_object()) throw ParseError("component must be an object", path);
  ComponentSpec c;
  c.name = require_string(j, "name", path);
  c.file = optional_string(j, "file", path);
  c.description = optional_string(j, "description", path);
  c.status = optional_string(j, "status", path);
  if (auto it = j.find("dependencies"); it != j.end()) {
    if (!it->is_array()) {
      throw ParseError("dependencies must be an array", path + "/dependencies");
    }
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& d = (*it)[i];
      if (!d.is_string()) {
        throw ParseError("dependency must be a string",
                         path + "/dependencies/" + std::to_string(i));
      }
      c.dependencies.push_back(d.get<std::string>());
    }
  }
  if (auto it = j.find("interface"); it != j.end()) {
    if (!it->is_array()) {
      throw ParseError("interface must be an array", path + "/interface");
    }
    for (std::size_t i = 0; i < it->size(); ++i) {
      c.interface.push_back(
          parse_port((*it)[i], path + "/interface/" + std::to_string(i)));
    }
  }
  c.extra = collect_extra(j, {"name", "file", "description", "dependencies",
                              "status", "interface"});
  return c;
}

}  // namespace

std::string WidthExpr::to_string() const {
  if (auto* s = std::get_if<std::string>(&value)) return *s;
  return std::to_string(std::get<std::int64_t>(value));
}

std::string_view to_string(Direction d) {
  return d == Direction::kInput ? "input" : "output";
}

std::string_view to_string(Severity s) {
  return s == Severity::kError ? "error" : "warning";
}

const PortSpec* ComponentSpec::find_port(std::string_view port) const {
  for (const auto& p : interface) {
    if (p.name == port) return &p;
  }
  return nullptr;
}

const ComponentSpec* Blueprint::find(std::string_view name) const {
  for (const auto& c : components) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

ParseError::ParseError(const std::string& message, std::string path,
                       std::optional<std::size_t> byte_offset)
    : Error("ParseError",
            (path.empty() ? std::string() : path + ": ") + message +
                (byte_offset ? " (byte " + std::to_string(*byte_offset) + ")"
                             : std::string())),
      path_(std::move(path)),
      offset_(byte_offset) {}

CycleError::CycleError(std::vector<std::string> members)
    : Error("CycleError", "dependency cycle: " + join(members, " -> ")),
      members_(std::move(members)) {}

MissingDependencyError::MissingDependencyError(std::string component,
                                               std::string missing)
    : Error("MissingDependency", "component '" + component +
                                     "' depends on unknown component '" +
                                     missing + "'"),
      component_(std::move(component)),
      missing_(std::move(missing)) {}

Blueprint parse_blueprint(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), "", e.byte);
  }
  return parse_blueprint_json(doc);
}

Blueprint parse_blueprint_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("blueprint must be a JSON object", "");
  Blueprint bp;
  bp.project_name = require_string(doc, "projectName", "");
  const json& params = require(doc, "parameters", "");
  if (!params.is_object()) {
    throw ParseError("parameters must be an object", "/parameters");
  }
  for (auto it = params.begin(); it != params.end(); ++it) {
    const json& v = it.value();
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
      throw ParseError("parameter value must be a non-negative integer",
                       "/parameters/" + it.key());
    }
    bp.parameters[it.key()] = v.get<std::int64_t>();
  }
  const json& comps = require(doc, "components", "");
  if (!comps.is_array()) {
    throw ParseError("components must be an array", "/components");
  }
  for (std::size_t i = 0; i < comps.size(); ++i) {
    bp.components.push_back(
        parse_component(comps[i], "/components/" + std::to_string(i)));
  }
  bp.extra = collect_extra(doc, {"projectName", "parameters", "components"});
  return bp;
}

nlohmann::ordered_json to_json(const Blueprint& bp) {
  using ojson = nlohmann::ordered_json;
  ojson doc;
  doc["projectName"] = bp.project_name;
  ojson params = ojson::object();
  for (const auto& [name, value] : bp.parameters) params[name] = value;
  doc["parameters"] = std::move(params);
  ojson comps = ojson::array();
  for (const auto& c : bp.components) {
    ojson jc;
    jc["name"] = c.name;
    jc["file"] = c.file;
    jc["description"] = c.description;
    jc["dependencies"] = c.dependencies;
    jc["status"] = c.status;
    ojson ports = ojson::array();
    for (const auto& p : c.interface) {
      ojson jp;
      jp["name"] = p.name;
      jp["direction"] = to_string(p.direction);
      if (p.width.is_symbol()) {
        jp["width"] = std::get<std::string>(p.width.value);
      } else {
        jp["width"] = std::get<std::int64_t>(p.width.value);
      }
      for (auto it = p.extra.begin(); it != p.extra.end(); ++it) {
        jp[it.key()] = ojson::parse(it.value().dump());
      }
      ports.push_back(std::move(jp));
    }
    jc["interface"] = std::move(ports);
    for (auto it = c.extra.begin(); it != c.extra.end(); ++it) {
      jc[it.key()] = ojson::parse(it.value().dump());
    }
    comps.push_back(std::move(jc));
  }
  doc["components"] = std::move(comps);
  for (auto it = bp.extra.begin(); it != bp.extra.end(); ++it) {
    doc[it.key()] = ojson::parse(it.value().dump());
  }
  return doc;
}

std::string emit_blueprint(const Blueprint& bp) {
  return to_json(bp).dump(2) + "\n";
}

std::int64_t resolve_width(const WidthExpr& expr, const ParameterTable& table) {
  std::int64_t value = 0;
  if (auto* name = std::get_if<std::string>(&expr.value)) {
    auto it = table.find(*name);
    if (it == table.end()) {
      throw ResolveError("unknown parameter '" + *name + "'");
    }
    value = it->second;
  } else {
    value = std::get<std::int64_t>(expr.value);
  }
  if (value <= 0) {
    throw ResolveError("width '" + expr.to_string() +
                       "' resolves to non-positive value " +
                       std::to_string(value));
  }
  return value;
}

namespace {

struct OrderResult {
  std::vector<std::size_t> order;  // component indices
  std::vector<std::string> cycle;  // empty when acyclic
};

// Kahn's algorithm with declaration-order tie breaking. Dependencies on
// unknown names are ignored here; callers check them separately.
OrderResult order_indices(const Blueprint& bp) {
  const auto n = bp.components.size();
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index.emplace(bp.components[i].name, i);

  std::vector<std::vector<std::size_t>> deps(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& d : bp.components[i].dependencies) {
      if (auto it = index.find(d); it != index.end()) {
        deps[i].push_back(it->second);
      }
    }
  }

  OrderResult result;
  std::vector<bool> done(n, false);
  while (result.order.size() < n) {
    bool progressed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (done[i]) continue;
      bool ready = std::all_of(deps[i].begin(), deps[i].end(),
                               [&](std::size_t d) { return done[d]; });
      if (ready) {
        done[i] = true;
        result.order.push_back(i);
        progressed = true;
        break;
      }
    }
    if (!progressed) break;
  }
  if (result.order.size() == n) return result;

  // Every remaining node has an unfinished dependency: walk until a repeat.
  std::size_t cur = 0;
  while (done[cur]) ++cur;
  std::vector<std::size_t> path;
  std::vector<int> seen_at(n, -1);
  while (seen_at[cur] < 0) {
    seen_at[cur] = static_cast<int>(path.size());
    path.push_back(cur);
    for (std::size_t d : deps[cur]) {
      if (!done[d]) {
        cur = d;
        break;
      }
    }
  }
  for (std::size_t k = static_cast<std::size_t>(seen_at[cur]); k < path.size();
       ++k) {
    result.cycle.push_back(bp.components[path[k]].name);
  }
  return result;
}

}  // namespace

std::vector<std::string> dependency_order(const Blueprint& bp) {
  for (const auto& c : bp.components) {
    for (const auto& d : c.dependencies) {
      if (bp.find(d) == nullptr) throw MissingDependencyError(c.name, d);
    }
  }
  OrderResult r = order_indices(bp);
  if (!r.cycle.empty()) throw CycleError(r.cycle);
  std::vector<std::string> names;
  names.reserve(r.order.size());
  for (std::size_t i : r.order) names.push_back(bp.components[i].name);
  return names;
}

std::vector<std::string> top_level_components(const Blueprint& bp) {
  std::set<std::string> depended;
  for (const auto& c : bp.components) {
    depended.insert(c.dependencies.begin(), c.dependencies.end());
  }
  std::vector<std::string> tops;
  for (const auto& c : bp.components) {
    if (!depended.count(c.name)) tops.push_back(c.name);
  }
  return tops;
}

json to_json(const BlueprintDiagnostic& d) {
  json j;
  j["code"] = d.code;
  j["severity"] = to_string(d.severity);
  j["component"] = d.component ? json(*d.component) : json(nullptr);
  j["message"] = d.message;
  return j;
}

bool has_errors(const std::vector<BlueprintDiagnostic>& diags) {
  return std::any_of(diags.begin(), diags.end(), [](const auto& d) {
    return d.severity == Severity::kError;
  });
}

namespace {

bool is_width_parameter(std::string_view name) {
  constexpr std::string_view suffix = "_WIDTH";
  return name == "PC_INCREMENT_VAL" ||
         (name.size() > suffix.size() &&
          name.substr(name.size() - suffix.size()) == suffix);
}

bool mentions_decode(std::string_view description) {
  std::string d = lower(description);
  for (std::string_view key : {"decod", "control", "opcode"}) {
    if (d.find(key) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

std::vector<BlueprintDiagnostic> consistency_check(const Blueprint& bp) {
  std::vector<BlueprintDiagnostic> out;
  auto add = [&](const char* code, Severity sev,
                 std::optional<std::string> comp, std::string msg) {
    out.push_back({code, sev, std::move(comp), std::move(msg)});
  };

  // R1
  for (const auto& [name, value] : bp.parameters) {
    if (is_width_parameter(name) && value < 1) {
      add("R1", Severity::kError, std::nullopt,
          "parameter " + name + " must be >= 1");
    }
  }
  for (const auto& c : bp.components) {
    for (const auto& p : c.interface) {
      try {
        resolve_width(p.width, bp.parameters);
      } catch (const ResolveError& e) {
        add("R1", Severity::kError, c.name,
            "port '" + p.name + "': " + e.what());
      }
    }
  }

  // R2
  for (const auto& c : bp.components) {
    for (const auto& d : c.dependencies) {
      if (bp.find(d) == nullptr) {
        add("R2", Severity::kError, c.name,
            "dependency '" + d + "' is not a component");
      }
    }
  }

  // R3
  if (auto r = order_indices(bp); !r.cycle.empty()) {
    add("R3", Severity::kError, r.cycle.front(),
        "dependency cycle: " + join(r.cycle, " -> "));
  }

  // R4
  std::set<std::string> names;
  for (const auto& c : bp.components) {
    if (!names.insert(c.name).second) {
      add("R4", Severity::kError, c.name, "duplicate component name");
    }
    std::set<std::string> ports;
    for (const auto& p : c.interface) {
      if (!ports.insert(p.name).second) {
        add("R4", Severity::kError, c.name,
            "duplicate port name '" + p.name + "'");
      }
    }
    if (!c.file.empty() && !is_safe_relative_path(c.file)) {
      add("R4", Severity::kError, c.name,
          "file '" + c.file + "' is not a bare relative path");
    }
  }

  // R5
  if (!bp.components.empty()) {
    auto tops = top_level_components(bp);
    if (tops.empty()) {
      add("R5", Severity::kError, std::nullopt,
          "no top-level component (every component is a dependency)");
    } else if (tops.size() > 1) {
      add("R5", Severity::kError, std::nullopt,
          "multiple top-level components: " + join(tops, ", "));
    }
  }

  // R6
  bool needs_isa = std::any_of(
      bp.components.begin(), bp.components.end(),
      [](const ComponentSpec& c) { return mentions_decode(c.description); });
  if (needs_isa) {
    for (const char* p : {"OPCODE_WIDTH", "INSTRUCTION_WIDTH"}) {
      if (!bp.parameters.count(p)) {
        add("R6", Severity::kWarning, std::nullopt,
            std::string("instruction decode is described but parameter ") + p +
                " is not defined (ISA omitted from blueprint)");
      }
    }
  }

  // R7: components are connected when one depends on the other or both are
  // dependencies of the same parent.
  const auto n = bp.components.size();
  std::vector<std::set<std::size_t>> adj(n);
  {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) index.emplace(bp.components[i].name, i);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::size_t> children;
      for (const auto& d : bp.components[i].dependencies) {
        if (auto it = index.find(d); it != index.end() && it->second != i) {
          children.push_back(it->second);
          adj[i].insert(it->second);
          adj[it->second].insert(i);
        }
      }
      for (std::size_t a : children) {
        for (std::size_t b : children) {
          if (a != b) adj[a].insert(b);
        }
      }
    }
  }
  auto try_resolve = [&](const WidthExpr& w) -> std::optional<std::int64_t> {
    try {
      return resolve_width(w, bp.parameters);
    } catch (const ResolveError&) {
      return std::nullopt;
    }
  };
  for (std::size_t a = 0; a < n; ++a) {
    for (const auto& out_port : bp.components[a].interface) {
      if (out_port.direction != Direction::kOutput) continue;
      auto out_width = try_resolve(out_port.width);
      if (!out_width) continue;
      for (std::size_t b : adj[a]) {
        const PortSpec* in_port = bp.components[b].find_port(out_port.name);
        if (!in_port || in_port->direction != Direction::kInput) continue;
        auto in_width = try_resolve(in_port->width);
        if (in_width && *in_width != *out_width) {
          add("R7", Severity::kWarning, bp.components[b].name,
              "port '" + out_port.name + "' is " + std::to_string(*in_width) +
                  " bits but driver " + bp.components[a].name + "." +
                  out_port.name + " is " + std::to_string(*out_width) +
                  " bits");
        }
      }
    }
  }
  return out;
}

std::string_view reference_blueprint_text() {
  return assets::get("blueprints/legv8_single_cycle.json");
}

Blueprint reference_blueprint() {
  return parse_blueprint(reference_blueprint_text());
}

}  // namespace archloop::blueprint
