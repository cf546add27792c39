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

#ifndef ARCHLOOP_BLUEPRINT_HPP
#define ARCHLOOP_BLUEPRINT_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "archloop/errors.hpp"
#include "json.hpp"

// The JSON blueprint: global parameters, components, their ports and
// dependencies. Parsing is permissive (unknown keys are kept verbatim);
// semantic strictness lives in consistency_check().
namespace archloop::blueprint {

using ParameterTable = std::map<std::string, std::int64_t>;

/// A port width: either a literal or the name of a blueprint parameter.
struct WidthExpr {
  std::variant<std::int64_t, std::string> value;

  static WidthExpr literal(std::int64_t bits) { return WidthExpr{bits}; }
  static WidthExpr symbol(std::string name) { return WidthExpr{std::move(name)}; }

  bool is_symbol() const { return std::holds_alternative<std::string>(value); }
  std::string to_string() const;

  bool operator==(const WidthExpr&) const = default;
};

enum class Direction { kInput, kOutput };

std::string_view to_string(Direction d);

struct PortSpec {
  std::string name;
  Direction direction = Direction::kInput;
  WidthExpr width;
  nlohmann::json extra = nlohmann::json::object();

  bool operator==(const PortSpec&) const = default;
};

struct ComponentSpec {
  std::string name;
  std::string file;
  std::string description;
  std::vector<std::string> dependencies;
  std::string status;
  std::vector<PortSpec> interface;
  nlohmann::json extra = nlohmann::json::object();

  const PortSpec* find_port(std::string_view port) const;

  bool operator==(const ComponentSpec&) const = default;
};

struct Blueprint {
  std::string project_name;
  ParameterTable parameters;
  std::vector<ComponentSpec> components;
  nlohmann::json extra = nlohmann::json::object();

  const ComponentSpec* find(std::string_view name) const;

  bool operator==(const Blueprint&) const = default;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::string path,
             std::optional<std::size_t> byte_offset = std::nullopt);

  /// JSON pointer of the offending value ("" for the document root).
  const std::string& path() const noexcept { return path_; }
  /// Set for syntax errors.
  std::optional<std::size_t> byte_offset() const noexcept { return offset_; }

 private:
  std::string path_;
  std::optional<std::size_t> offset_;
};

class ResolveError : public Error {
 public:
  explicit ResolveError(const std::string& message)
      : Error("ResolveError", message) {}
};

class CycleError : public Error {
 public:
  explicit CycleError(std::vector<std::string> members);
  const std::vector<std::string>& members() const noexcept { return members_; }

 private:
  std::vector<std::string> members_;
};

class MissingDependencyError : public Error {
 public:
  MissingDependencyError(std::string component, std::string missing);
  const std::string& component() const noexcept { return component_; }
  const std::string& missing() const noexcept { return missing_; }

 private:
  std::string component_;
  std::string missing_;
};

Blueprint parse_blueprint(std::string_view text);
Blueprint parse_blueprint_json(const nlohmann::json& doc);

/// Deterministic pretty-printed JSON; parse_blueprint() of the result
/// compares equal to `bp`.
std::string emit_blueprint(const Blueprint& bp);
nlohmann::ordered_json to_json(const Blueprint& bp);

std::int64_t resolve_width(const WidthExpr& expr, const ParameterTable& table);

/// Topological order of component names. Each component appears after all of
/// its dependencies; among ready components the earliest declared goes first.
std::vector<std::string> dependency_order(const Blueprint& bp);

/// Components no other component depends on.
std::vector<std::string> top_level_components(const Blueprint& bp);

// ---------------------------------------------------------------------------
// Consistency rules

enum class Severity { kError, kWarning };

std::string_view to_string(Severity s);

struct BlueprintDiagnostic {
  std::string code;  // "R1".."R7"
  Severity severity = Severity::kError;
  std::optional<std::string> component;
  std::string message;

  bool operator==(const BlueprintDiagnostic&) const = default;
};

nlohmann::json to_json(const BlueprintDiagnostic& d);

/// Rule catalog:
///   R1 symbolic widths resolve; width parameters are >= 1      (error)
///   R2 every dependency names an existing component            (error)
///   R3 the dependency relation is acyclic                      (error)
///   R4 component names and per-component port names are unique (error)
///   R5 exactly one top-level component                         (error)
///   R6 decode/control logic requires OPCODE_WIDTH and
///      INSTRUCTION_WIDTH parameters                            (warning)
///   R7 name-matched output/input ports of connected components
///      resolve to the same width                               (warning)
/// Also flags component `file` values that are not bare relative paths (R4).
std::vector<BlueprintDiagnostic> consistency_check(const Blueprint& bp);

bool has_errors(const std::vector<BlueprintDiagnostic>& diags);

/// The shipped, fully specified reference blueprint.
std::string_view reference_blueprint_text();
Blueprint reference_blueprint();

}  // namespace archloop::blueprint

#endif  // ARCHLOOP_BLUEPRINT_HPP
