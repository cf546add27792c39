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

#include "archloop/genbackend.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdlib>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "archloop/assets.hpp"
#include "archloop/isa.hpp"
#include "archloop/paths.hpp"
#include "archloop/sysverify.hpp"

#include "httplib.h"

namespace archloop::gen {

using nlohmann::json;

namespace {

constexpr int kFixtureSchema = 1;

struct KindName {
  TaskKind kind;
  std::string_view name;
};

constexpr KindName kKindNames[] = {
    {TaskKind::kBlueprintPlan, "blueprint_plan"},
    {TaskKind::kComponentHdl, "component_hdl"},
    {TaskKind::kComponentTestbench, "component_testbench"},
    {TaskKind::kFix, "fix"},
    {TaskKind::kIntegrationHdl, "integration_hdl"},
    {TaskKind::kSystemTestbench, "system_testbench"},
};

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  std::string out;
  out.reserve(len * 2);
  for (unsigned i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

std::string normalize_text(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find('\n', start);
    std::string_view line =
        s.substr(start, end == std::string_view::npos ? s.npos : end - start);
    std::size_t keep = line.find_last_not_of(" \t\r");
    out.append(line.substr(0, keep == std::string_view::npos ? 0 : keep + 1));
    if (end == std::string_view::npos) break;
    out += '\n';
    start = end + 1;
  }
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

json normalize(const json& j) {
  if (j.is_object()) {
    json out = json::object();
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!it.key().empty() && it.key()[0] == '_') continue;
      out[it.key()] = normalize(it.value());
    }
    return out;
  }
  if (j.is_array()) {
    json out = json::array();
    for (const auto& v : j) out.push_back(normalize(v));
    return out;
  }
  if (j.is_string()) return normalize_text(j.get<std::string>());
  return j;
}

std::string snake_case(std::string_view name) {
  std::string out;
  for (std::size_t i = 0; i < name.size(); ++i) {
    char c = name[i];
    if (std::isupper(static_cast<unsigned char>(c))) {
      bool prev_lower = i > 0 && (std::islower(static_cast<unsigned char>(name[i - 1])) ||
                                  std::isdigit(static_cast<unsigned char>(name[i - 1])));
      bool next_lower = i + 1 < name.size() &&
                        std::islower(static_cast<unsigned char>(name[i + 1]));
      bool prev_upper = i > 0 && std::isupper(static_cast<unsigned char>(name[i - 1]));
      if (i > 0 && (prev_lower || (prev_upper && next_lower))) out += '_';
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      out += c;
    }
  }
  return out;
}

std::string file_stem(const std::string& file) {
  return std::filesystem::path(file).stem().string();
}

std::string test_module_for(const blueprint::ComponentSpec& c) {
  return "test_" + (c.file.empty() ? snake_case(c.name) : file_stem(c.file));
}

std::string test_name_for(const blueprint::ComponentSpec& c) {
  return (c.file.empty() ? snake_case(c.name) : file_stem(c.file)) + "_test";
}

std::string hdl_file_for(const blueprint::ComponentSpec& c) {
  return c.file.empty() ? snake_case(c.name) + ".sv" : c.file;
}

json component_json(const blueprint::Blueprint& bp,
                    const blueprint::ComponentSpec& c) {
  blueprint::Blueprint one;
  one.project_name = bp.project_name;
  one.components.push_back(c);
  return json(blueprint::to_json(one)["components"][0]);
}

blueprint::ComponentSpec component_from_context(const json& comp) {
  json doc = {{"projectName", "_"},
              {"parameters", json::object()},
              {"components", json::array({comp})}};
  return blueprint::parse_blueprint_json(doc).components.at(0);
}

blueprint::ParameterTable parameters_from_context(const json& ctx) {
  blueprint::ParameterTable t;
  if (auto it = ctx.find("parameters"); it != ctx.end() && it->is_object()) {
    for (auto p = it->begin(); p != it->end(); ++p) {
      t[p.key()] = p.value().get<std::int64_t>();
    }
  }
  return t;
}

std::string format_parameters(const blueprint::ParameterTable& t) {
  std::string out;
  for (const auto& [k, v] : t) out += fmt::format("  {} = {}\n", k, v);
  return out;
}

std::string format_ports(const blueprint::ComponentSpec& c,
                         const blueprint::ParameterTable& t) {
  std::string out;
  for (const auto& p : c.interface) {
    std::string width = p.width.to_string();
    if (p.width.is_symbol()) {
      auto it = t.find(width);
      if (it != t.end()) width += fmt::format(" ({})", it->second);
    }
    out += fmt::format("  {} {} {}\n", p.name, blueprint::to_string(p.direction),
                       width);
  }
  return out;
}

std::string describe_diagnostics(const json& diags) {
  std::string out;
  for (const auto& d : diags) {
    if (d.is_string()) {
      out += "  " + d.get<std::string>() + "\n";
      continue;
    }
    std::string where = d.value("file", std::string());
    if (d.contains("line") && !d["line"].is_null()) {
      where += ":" + std::to_string(d["line"].get<long long>());
    }
    std::string sev = d.value("severity", std::string("error"));
    std::string name = d.value("name", std::string());
    std::string msg = d.value("message", std::string());
    std::string code = d.value("tool_code", std::string());
    std::string line = sev;
    if (!code.empty()) line += "-" + code;
    if (!where.empty()) line += " " + where;
    if (!name.empty()) line += " " + name;
    if (!msg.empty()) line += ": " + msg;
    out += "  " + line + "\n";
  }
  return out;
}

std::uint64_t estimate_tokens(std::size_t bytes) { return (bytes + 3) / 4; }

// ---------------------------------------------------------------------------
// Template rendering

std::string sv_port_decl(const blueprint::PortSpec& p,
                         const blueprint::ParameterTable& t) {
  std::int64_t w = blueprint::resolve_width(p.width, t);
  std::string dir = p.direction == blueprint::Direction::kInput ? "input " : "output";
  if (w == 1) return fmt::format("{} logic {}", dir, p.name);
  return fmt::format("{} logic [{}:0] {}", dir, w - 1, p.name);
}

bool mentions(std::string_view body, std::string_view ident) {
  std::size_t pos = 0;
  auto is_ident = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  };
  while ((pos = body.find(ident, pos)) != std::string_view::npos) {
    bool left = pos == 0 || !is_ident(body[pos - 1]);
    std::size_t end = pos + ident.size();
    bool right = end >= body.size() || !is_ident(body[end]);
    if (left && right) return true;
    pos = end;
  }
  return false;
}

std::string generic_body(const blueprint::ComponentSpec& c) {
  std::string out;
  for (const auto& p : c.interface) {
    if (p.direction == blueprint::Direction::kOutput) {
      out += fmt::format("  assign {} = '0;\n", p.name);
    }
  }
  return out;
}

std::string generic_integration_body(const blueprint::ComponentSpec& top,
                                     const std::vector<blueprint::ComponentSpec>& subs,
                                     const blueprint::ParameterTable& t) {
  std::string decls, insts;
  std::set<std::string> declared;
  for (const auto& p : top.interface) declared.insert(p.name);
  for (const auto& s : subs) {
    for (const auto& p : s.interface) {
      if (!declared.insert(p.name).second) continue;
      std::int64_t w = blueprint::resolve_width(p.width, t);
      decls += w == 1 ? fmt::format("  logic {};\n", p.name)
                      : fmt::format("  logic [{}:0] {};\n", w - 1, p.name);
    }
    std::vector<std::string> conns;
    for (const auto& p : s.interface) conns.push_back(fmt::format(".{0}({0})", p.name));
    insts += fmt::format("\n  {} u_{} (\n    {});\n", s.name, snake_case(s.name),
                         fmt::join(conns, ",\n    "));
  }
  std::set<std::string> driven;
  for (const auto& s : subs) {
    for (const auto& p : s.interface) {
      if (p.direction == blueprint::Direction::kOutput) driven.insert(p.name);
    }
  }
  std::string tail;
  for (const auto& p : top.interface) {
    if (p.direction == blueprint::Direction::kOutput && !driven.count(p.name)) {
      tail += fmt::format("  assign {} = '0;\n", p.name);
    }
  }
  return decls + insts + (tail.empty() ? "" : "\n" + tail);
}

std::string render_module(const blueprint::ComponentSpec& c,
                          const blueprint::ParameterTable& t,
                          const std::string& body) {
  std::string out = fmt::format("// {}: {}\n", hdl_file_for(c), c.description);
  out += "// Generated by the archloop template backend.\n\n";
  out += fmt::format("module {} (\n", c.name);
  for (std::size_t i = 0; i < c.interface.size(); ++i) {
    out += "  " + sv_port_decl(c.interface[i], t);
    out += i + 1 < c.interface.size() ? ",\n" : "\n";
  }
  out += ");\n";
  std::string params;
  for (const auto& [k, v] : t) {
    if (mentions(body, k)) params += fmt::format("  localparam int {} = {};\n", k, v);
  }
  if (!params.empty()) out += params + "\n";
  out += body;
  out += "endmodule\n";
  return out;
}

std::string python_tuple_list(const blueprint::ComponentSpec& c,
                              const blueprint::ParameterTable& t,
                              blueprint::Direction dir) {
  std::vector<std::string> items;
  for (const auto& p : c.interface) {
    if (p.direction != dir) continue;
    items.push_back(fmt::format("(\"{}\", {})", p.name,
                                blueprint::resolve_width(p.width, t)));
  }
  return "[" + fmt::format("{}", fmt::join(items, ", ")) + "]";
}

std::map<std::string, std::string> base_vars(const blueprint::ComponentSpec& c,
                                             const blueprint::ParameterTable& t) {
  std::map<std::string, std::string> vars;
  for (const auto& [k, v] : t) vars[k] = std::to_string(v);
  vars["banner"] = "Generated by the archloop template backend.";
  vars["module"] = c.name;
  vars["test_module"] = test_module_for(c);
  vars["test_name"] = test_name_for(c);
  return vars;
}

std::string makefile_sources(const json& ctx) {
  std::vector<std::string> out;
  if (auto it = ctx.find("sources"); it != ctx.end()) {
    for (const auto& s : *it) out.push_back("$(PWD)/" + s.get<std::string>());
  }
  return fmt::format("{}", fmt::join(out, " "));
}

std::vector<GeneratedFile> render_component_hdl(const json& ctx) {
  auto c = component_from_context(ctx.at("component"));
  auto t = parameters_from_context(ctx);
  auto body = assets::find("hdl/" + c.name + ".sv");
  return {{hdl_file_for(c),
           render_module(c, t, body ? std::string(*body) : generic_body(c))}};
}

std::vector<GeneratedFile> render_integration(const json& ctx) {
  auto top = component_from_context(ctx.at("component"));
  auto t = parameters_from_context(ctx);
  std::vector<blueprint::ComponentSpec> subs;
  if (auto it = ctx.find("submodules"); it != ctx.end()) {
    for (const auto& s : *it) subs.push_back(component_from_context(s));
  }
  auto body = assets::find("hdl/" + top.name + ".sv");
  return {{hdl_file_for(top),
           render_module(top, t,
                         body ? std::string(*body)
                              : generic_integration_body(top, subs, t))}};
}

std::vector<GeneratedFile> render_testbench(const json& ctx) {
  auto c = component_from_context(ctx.at("component"));
  auto t = parameters_from_context(ctx);
  auto vars = base_vars(c, t);
  vars["inputs"] = python_tuple_list(c, t, blueprint::Direction::kInput);
  vars["outputs"] = python_tuple_list(c, t, blueprint::Direction::kOutput);
  vars["sources"] = makefile_sources(ctx);
  auto tb = assets::find("testbench/" + c.name + ".py");
  std::string py = render_template(tb ? *tb : assets::get("testbench/generic.py"), vars);
  return {{vars["test_module"] + ".py", py},
          {"Makefile", render_template(assets::get("testbench/Makefile.tmpl"), vars)}};
}

std::vector<GeneratedFile> render_system_testbench(const json& ctx) {
  auto top = component_from_context(ctx.at("component"));
  auto t = parameters_from_context(ctx);
  auto cfg = isa::IsaConfig::from_parameters(t);
  auto vars = base_vars(top, t);
  vars["test_module"] = "test_system";
  vars["test_name"] = "system_test";
  vars["sources"] = makefile_sources(ctx);
  vars["cycles"] = std::to_string(ctx.value("cycles", 256));
  vars["pc_digits"] = std::to_string((cfg.address_width + 3) / 4);
  vars["instr_digits"] = std::to_string(cfg.word_hex_digits());
  vars["data_digits"] = std::to_string((cfg.data_width + 3) / 4);
  vars["halt_word"] = fmt::format("0x{:X}", isa::encode(isa::Instruction::halt(), cfg));
  return {{"test_system.py", render_template(assets::get("testbench/system.py"), vars)},
          {"Makefile", render_template(assets::get("testbench/Makefile.tmpl"), vars)}};
}

std::vector<GeneratedFile> render_blueprint_plan(const json& ctx) {
  auto bp = blueprint::reference_blueprint();
  if (auto it = ctx.find("project_name"); it != ctx.end() && it->is_string() &&
                                          !it->get<std::string>().empty()) {
    bp.project_name = it->get<std::string>();
  }
  return {{"blueprint.json", blueprint::emit_blueprint(bp)}};
}

std::string comment_prefix(const std::string& path) {
  auto ext = std::filesystem::path(path).extension().string();
  if (ext == ".py" || path == "Makefile" || ext == ".mk") return "# ";
  return "// ";
}

std::vector<GeneratedFile> render_for(TaskKind kind, const json& ctx) {
  switch (kind) {
    case TaskKind::kBlueprintPlan: return render_blueprint_plan(ctx);
    case TaskKind::kComponentHdl: return render_component_hdl(ctx);
    case TaskKind::kComponentTestbench: return render_testbench(ctx);
    case TaskKind::kIntegrationHdl: return render_integration(ctx);
    case TaskKind::kSystemTestbench: return render_system_testbench(ctx);
    case TaskKind::kFix: break;
  }
  throw ConfigError("template backend cannot render a fix without a base kind");
}

std::vector<GeneratedFile> render_fix(const json& ctx) {
  TaskKind base = task_kind_from_string(ctx.at("regenerate").get<std::string>());
  std::string target = ctx.at("target").get<std::string>();
  auto files = render_for(base, ctx);
  auto it = std::find_if(files.begin(), files.end(),
                         [&](const GeneratedFile& f) { return f.path == target; });
  if (it == files.end()) {
    throw BackendError(BackendError::Kind::kMalformedResponse,
                       "template for " + std::string(to_string(base)) +
                           " does not produce " + target);
  }
  std::string prefix = comment_prefix(target);
  std::string header = fmt::format("{}Revision for attempt {} after {} failure:\n",
                                   prefix, ctx.value("attempt", 0u),
                                   ctx.value("stage", std::string("unknown")));
  std::string diag = describe_diagnostics(ctx.value("diagnostics", json::array()));
  std::size_t start = 0;
  while (start < diag.size()) {
    std::size_t end = diag.find('\n', start);
    header += prefix + diag.substr(start, end - start) + "\n";
    start = end + 1;
  }
  return {{target, header + it->content}};
}

// ---------------------------------------------------------------------------
// Remote helpers

struct Endpoint {
  std::string base;
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) {
    throw ConfigError("remote endpoint must be an http(s) URL: " + url);
  }
  return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

std::string default_filename(const GenerationTask& task) {
  const json& ctx = task.context;
  switch (task.kind) {
    case TaskKind::kFix: return ctx.value("target", std::string());
    case TaskKind::kBlueprintPlan: return "blueprint.json";
    case TaskKind::kSystemTestbench: return "test_system.py";
    default: break;
  }
  if (!ctx.contains("component")) return {};
  auto c = component_from_context(ctx["component"]);
  if (task.kind == TaskKind::kComponentTestbench) return test_module_for(c) + ".py";
  return hdl_file_for(c);
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(TaskKind k) {
  for (const auto& e : kKindNames) {
    if (e.kind == k) return e.name;
  }
  return "unknown";
}

TaskKind task_kind_from_string(std::string_view name) {
  for (const auto& e : kKindNames) {
    if (e.name == name) return e.kind;
  }
  throw ConfigError("unknown task kind '" + std::string(name) + "'");
}

std::string_view to_string(ModelClass c) {
  return c == ModelClass::kReasoning ? "reasoning" : "non_reasoning";
}

ModelRoute ModelRoute::defaults(std::string reasoning, std::string non_reasoning) {
  ModelRoute r;
  Entry big{reasoning, ModelClass::kReasoning};
  Entry small{non_reasoning, ModelClass::kNonReasoning};
  r.table[TaskKind::kBlueprintPlan] = big;
  r.table[TaskKind::kFix] = big;
  r.table[TaskKind::kIntegrationHdl] = big;
  r.table[TaskKind::kComponentHdl] = small;
  r.table[TaskKind::kComponentTestbench] = small;
  r.table[TaskKind::kSystemTestbench] = small;
  return r;
}

json to_json(const ModelRoute& r) {
  json j = json::object();
  for (const auto& [k, e] : r.table) {
    j[std::string(to_string(k))] = {{"model", e.model},
                                    {"class", std::string(to_string(e.model_class))}};
  }
  return j;
}

ModelRoute model_route_from_json(const json& j, ModelRoute base) {
  if (!j.is_object()) throw ConfigError("model routes must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    TaskKind k = task_kind_from_string(it.key());
    ModelRoute::Entry e = base.table.count(k) ? base.table[k] : ModelRoute::Entry{};
    if (it->is_string()) {
      e.model = it->get<std::string>();
    } else if (it->is_object()) {
      e.model = it->value("model", e.model);
      std::string cls = it->value("class", std::string(to_string(e.model_class)));
      if (cls == "reasoning") {
        e.model_class = ModelClass::kReasoning;
      } else if (cls == "non_reasoning") {
        e.model_class = ModelClass::kNonReasoning;
      } else {
        throw ConfigError("unknown model class '" + cls + "'");
      }
    } else {
      throw ConfigError("route for '" + it.key() + "' must be a string or object");
    }
    if (e.model.empty()) throw ConfigError("empty model id for '" + it.key() + "'");
    base.table[k] = e;
  }
  return base;
}

std::string route_model(TaskKind kind, const ModelRoute& route) {
  auto it = route.table.find(kind);
  if (it == route.table.end() || it->second.model.empty()) {
    throw ConfigError("no model route for task kind '" +
                      std::string(to_string(kind)) + "'");
  }
  return it->second.model;
}

UsageLedger accumulate_usage(UsageLedger ledger, const Usage& u) {
  Usage& m = ledger.per_model[u.model];
  m.model = u.model;
  m.prompt_tokens += u.prompt_tokens;
  m.completion_tokens += u.completion_tokens;
  ledger.prompt_tokens += u.prompt_tokens;
  ledger.completion_tokens += u.completion_tokens;
  return ledger;
}

json to_json(const Usage& u) {
  return {{"model", u.model},
          {"prompt_tokens", u.prompt_tokens},
          {"completion_tokens", u.completion_tokens}};
}

Usage usage_from_json(const json& j) {
  Usage u;
  u.model = j.value("model", std::string());
  u.prompt_tokens = j.value("prompt_tokens", std::uint64_t{0});
  u.completion_tokens = j.value("completion_tokens", std::uint64_t{0});
  return u;
}

json to_json(const UsageLedger& l) {
  json per = json::object();
  for (const auto& [model, u] : l.per_model) per[model] = to_json(u);
  return {{"per_model", per},
          {"prompt_tokens", l.prompt_tokens},
          {"completion_tokens", l.completion_tokens},
          {"total_tokens", l.total()}};
}

UsageLedger usage_ledger_from_json(const json& j) {
  UsageLedger l;
  if (auto it = j.find("per_model"); it != j.end()) {
    for (auto p = it->begin(); p != it->end(); ++p) {
      l.per_model[p.key()] = usage_from_json(p.value());
    }
  }
  l.prompt_tokens = j.value("prompt_tokens", std::uint64_t{0});
  l.completion_tokens = j.value("completion_tokens", std::uint64_t{0});
  return l;
}

json to_json(const GenerationTask& t) {
  return {{"kind", std::string(to_string(t.kind))},
          {"context", t.context},
          {"instructions", t.instructions}};
}

GenerationTask generation_task_from_json(const json& j) {
  GenerationTask t;
  t.kind = task_kind_from_string(j.at("kind").get<std::string>());
  t.context = j.value("context", json::object());
  t.instructions = j.value("instructions", std::string());
  return t;
}

json to_json(const GenerationResult& r) {
  json files = json::array();
  for (const auto& f : r.files) files.push_back({{"path", f.path}, {"content", f.content}});
  return {{"files", files}, {"usage", to_json(r.usage)}, {"backend_id", r.backend_id}};
}

GenerationResult generation_result_from_json(const json& j) {
  GenerationResult r;
  for (const auto& f : j.at("files")) {
    r.files.push_back({f.at("path").get<std::string>(), f.at("content").get<std::string>()});
  }
  r.usage = usage_from_json(j.value("usage", json::object()));
  r.backend_id = j.value("backend_id", std::string());
  return r;
}

void validate_task(const GenerationTask& task) {
  if (task.kind != TaskKind::kFix) return;
  auto it = task.context.find("diagnostics");
  if (it == task.context.end() || !it->is_array() || it->empty()) {
    throw ValidationError("fix task carries no diagnostics or test failures");
  }
}

std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& vars) {
  static const std::regex re(R"(\{\{\s*([A-Za-z_][A-Za-z0-9_]*)\s*\}\})");
  std::string in(tmpl);
  std::string out;
  auto begin = std::sregex_iterator(in.begin(), in.end(), re);
  std::size_t last = 0;
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    out.append(in, last, m.position(0) - last);
    auto v = vars.find(m[1].str());
    out += v != vars.end() ? v->second : m[0].str();
    last = m.position(0) + m.length(0);
  }
  out.append(in, last);
  return out;
}

// ---------------------------------------------------------------------------
// Task builders

namespace {

GenerationTask component_task(TaskKind kind, const blueprint::Blueprint& bp,
                              const blueprint::ComponentSpec& c,
                              std::string_view prompt,
                              std::map<std::string, std::string> extra = {}) {
  GenerationTask t;
  t.kind = kind;
  t.context["component"] = component_json(bp, c);
  t.context["parameters"] = bp.parameters;
  auto vars = base_vars(c, bp.parameters);
  vars["component"] = c.name;
  vars["file"] = hdl_file_for(c);
  vars["description"] = c.description;
  vars["parameters"] = format_parameters(bp.parameters);
  vars["ports"] = format_ports(c, bp.parameters);
  vars["test_file"] = test_module_for(c) + ".py";
  for (auto& [k, v] : extra) vars[k] = v;
  t.instructions = render_template(prompt, vars);
  return t;
}

std::string joined_lines(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += "  " + s + "\n";
  return out;
}

}  // namespace

GenerationTask make_component_hdl_task(const blueprint::Blueprint& bp,
                                       const blueprint::ComponentSpec& c) {
  return component_task(TaskKind::kComponentHdl, bp, c,
                        assets::get("prompts/component_hdl.txt"));
}

GenerationTask make_component_testbench_task(const blueprint::Blueprint& bp,
                                             const blueprint::ComponentSpec& c,
                                             const std::vector<std::string>& sources) {
  auto t = component_task(TaskKind::kComponentTestbench, bp, c,
                          assets::get("prompts/component_testbench.txt"));
  t.context["sources"] = sources;
  return t;
}

GenerationTask make_integration_task(const blueprint::Blueprint& bp,
                                     const blueprint::ComponentSpec& top) {
  std::string subs;
  json sub_json = json::array();
  for (const auto& dep : top.dependencies) {
    if (const auto* s = bp.find(dep)) {
      sub_json.push_back(component_json(bp, *s));
      subs += fmt::format("- {} ({})\n{}", s->name, hdl_file_for(*s),
                          format_ports(*s, bp.parameters));
    }
  }
  auto t = component_task(TaskKind::kIntegrationHdl, bp, top,
                          assets::get("prompts/integration_hdl.txt"),
                          {{"submodules", subs}});
  t.context["submodules"] = sub_json;
  return t;
}

GenerationTask make_system_testbench_task(const blueprint::Blueprint& bp,
                                          const blueprint::ComponentSpec& top,
                                          const std::vector<std::string>& sources,
                                          std::uint64_t cycles) {
  auto cfg = isa::IsaConfig::from_parameters(bp.parameters);
  auto t = component_task(
      TaskKind::kSystemTestbench, bp, top,
      assets::get("prompts/system_testbench.txt"),
      {{"cycles", std::to_string(cycles)},
       {"trace_header", std::string(sysverify::kTraceHeader)},
       {"halt_word", fmt::format("0x{:X}", isa::encode(isa::Instruction::halt(), cfg))},
       {"test_file", "test_system.py"},
       {"sources", joined_lines(sources)}});
  t.context["sources"] = sources;
  t.context["cycles"] = cycles;
  return t;
}

GenerationTask make_fix_task(const blueprint::Blueprint& bp,
                             const blueprint::ComponentSpec& c,
                             const FixRequest& fix) {
  std::string current = fix.current;
  if (current.size() > fix.max_context_bytes) {
    current = current.substr(0, fix.max_context_bytes) + "\n... (truncated)\n";
  }
  auto t = component_task(
      TaskKind::kFix, bp, c, assets::get("prompts/fix.txt"),
      {{"stage", fix.stage},
       {"attempt", std::to_string(fix.attempt)},
       {"max_attempts", std::to_string(fix.max_attempts)},
       {"diagnostics", describe_diagnostics(fix.diagnostics)},
       {"target", fix.target},
       {"current", current}});
  for (auto it = fix.base_context.begin(); it != fix.base_context.end(); ++it) {
    if (!t.context.contains(it.key())) t.context[it.key()] = it.value();
  }
  t.context["regenerate"] = std::string(to_string(fix.regenerate));
  t.context["stage"] = fix.stage;
  t.context["target"] = fix.target;
  t.context["current"] = current;
  t.context["diagnostics"] = fix.diagnostics;
  t.context["attempt"] = fix.attempt;
  return t;
}

GenerationTask make_blueprint_plan_task(std::string_view project_name,
                                        std::string_view brief) {
  GenerationTask t;
  t.kind = TaskKind::kBlueprintPlan;
  t.context["project_name"] = std::string(project_name);
  t.context["brief"] = std::string(brief);
  t.instructions = render_template(
      assets::get("prompts/blueprint_plan.txt"),
      {{"project_name", std::string(project_name)},
       {"brief", std::string(brief)},
       {"isa_table", isa::isa_table_json().dump(2)}});
  return t;
}

std::string task_hash(const GenerationTask& task) {
  json canonical = {{"kind", std::string(to_string(task.kind))},
                    {"context", normalize(task.context)},
                    {"instructions", normalize_text(task.instructions)}};
  return sha256_hex(canonical.dump());
}

// ---------------------------------------------------------------------------
// Backends

GenerationResult generate(const GenerationTask& task, Backend& backend) {
  validate_task(task);
  GenerationResult r = backend.generate(task);
  for (const auto& f : r.files) {
    if (!is_safe_relative_path(f.path)) throw PathEscapeError(f.path);
  }
  if (r.backend_id.empty()) r.backend_id = backend.id();
  return r;
}

GenerationResult TemplateBackend::generate(const GenerationTask& task) {
  GenerationResult r;
  r.backend_id = id();
  r.files = task.kind == TaskKind::kFix ? render_fix(task.context)
                                        : render_for(task.kind, task.context);
  std::size_t out_bytes = 0;
  for (const auto& f : r.files) out_bytes += f.content.size();
  r.usage.model = route_model(task.kind, route_);
  r.usage.prompt_tokens =
      estimate_tokens(task.instructions.size() + task.context.dump().size());
  r.usage.completion_tokens = estimate_tokens(out_bytes);
  return r;
}

std::optional<GenerationResult> FixtureStore::find(const GenerationTask& task) const {
  auto path = dir_ / (task_hash(task) + ".json");
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    if (e.not_found()) return std::nullopt;
    throw StoreError(e.what());
  }
  try {
    return generation_result_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw StoreError("corrupt fixture " + path.string() + ": " + e.what());
  }
}

std::string record_fixture(const GenerationTask& task, const GenerationResult& result,
                           const FixtureStore& store) {
  std::string hash = task_hash(task);
  json doc = to_json(result);
  doc["schema_version"] = kFixtureSchema;
  doc["task_hash"] = hash;
  doc["task"] = {{"kind", std::string(to_string(task.kind))},
                 {"instructions_sha256", sha256_hex(normalize_text(task.instructions))}};
  try {
    std::filesystem::create_directories(store.dir());
    write_file_atomic(store.dir() / (hash + ".json"), doc.dump(2) + "\n");
  } catch (const std::exception& e) {
    throw StoreError("cannot record fixture in " + store.dir().string() + ": " + e.what());
  }
  return hash;
}

GenerationResult ReplayBackend::generate(const GenerationTask& task) {
  auto found = store_.find(task);
  if (!found) throw ReplayMiss(task_hash(task));
  return *found;
}

GenerationResult RecordingBackend::generate(const GenerationTask& task) {
  GenerationResult r = inner_->generate(task);
  record_fixture(task, r, store_);
  return r;
}

RemoteConfig remote_config_from_json(const json& j) {
  RemoteConfig c;
  c.endpoint = j.value("endpoint", c.endpoint);
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  if (j.contains("routes")) c.route = model_route_from_json(j["routes"]);
  c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
  c.max_retries = j.value("max_retries", c.max_retries);
  c.initial_backoff = std::chrono::milliseconds(
      j.value("initial_backoff_ms", static_cast<long>(c.initial_backoff.count())));
  c.max_backoff = std::chrono::milliseconds(
      j.value("max_backoff_ms", static_cast<long>(c.max_backoff.count())));
  c.timeout = std::chrono::seconds(
      j.value("timeout_s", static_cast<long>(c.timeout.count())));
  if (c.max_in_flight == 0) throw ConfigError("max_in_flight must be >= 1");
  return c;
}

std::vector<GeneratedFile> extract_code_blocks(std::string_view text,
                                               std::string_view fallback) {
  static const std::regex fence(R"(```([^\n]*)\n([\s\S]*?)```)");
  static const std::regex name_re(R"(^(?:filename=|file=)?([A-Za-z0-9_./-]+\.[A-Za-z0-9]+|Makefile)$)");
  std::string s(text);
  std::vector<GeneratedFile> files;
  bool fallback_used = false;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), fence);
       it != std::sregex_iterator(); ++it) {
    std::string info = (*it)[1].str();
    std::replace(info.begin(), info.end(), ':', ' ');
    std::string name;
    std::istringstream words(info);
    std::string w;
    bool first = true;
    while (words >> w) {
      std::smatch m;
      // A bare first word without a dot is the language tag.
      if (std::regex_match(w, m, name_re) &&
          (!first || w.find('.') != std::string::npos || w == "Makefile")) {
        name = m[1].str();
      }
      first = false;
    }
    if (name.empty()) {
      if (fallback_used || fallback.empty()) continue;
      name = std::string(fallback);
      fallback_used = true;
    }
    files.push_back({name, (*it)[2].str()});
  }
  if (files.empty()) {
    throw BackendError(BackendError::Kind::kMalformedResponse,
                       "response contains no usable fenced code block");
  }
  return files;
}

RemoteBackend::RemoteBackend(RemoteConfig cfg)
    : cfg_(std::move(cfg)),
      slots_(static_cast<std::ptrdiff_t>(std::max(1u, cfg_.max_in_flight))) {
  split_endpoint(cfg_.endpoint);
}

GenerationResult RemoteBackend::generate(const GenerationTask& task) {
  const std::string model = route_model(task.kind, cfg_.route);
  std::string key;
  if (!cfg_.api_key_env.empty()) {
    if (const char* v = std::getenv(cfg_.api_key_env.c_str())) key = v;
  }
  json body = {
      {"model", model},
      {"temperature", 0},
      {"messages",
       json::array({{{"role", "system"}, {"content", std::string(assets::get("prompts/system.txt"))}},
                    {{"role", "user"}, {"content", task.instructions}}})}};
  const std::string payload = body.dump();
  Endpoint ep = split_endpoint(cfg_.endpoint);

  slots_.acquire();
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{slots_};

  std::chrono::milliseconds backoff = cfg_.initial_backoff;
  std::optional<std::chrono::milliseconds> retry_after;
  std::string last_error;
  for (unsigned attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) {
      auto wait = std::max(backoff, retry_after.value_or(std::chrono::milliseconds(0)));
      std::this_thread::sleep_for(std::min(wait, cfg_.max_backoff));
      backoff = std::min(backoff * 2, cfg_.max_backoff);
    }
    httplib::Client cli(ep.base);
    cli.set_connection_timeout(cfg_.timeout);
    cli.set_read_timeout(cfg_.timeout);
    cli.set_write_timeout(cfg_.timeout);
    httplib::Headers headers;
    if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);
    auto res = cli.Post(ep.path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      retry_after.reset();
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = fmt::format("HTTP {}", res->status);
      retry_after.reset();
      if (res->has_header("Retry-After")) {
        try {
          retry_after = std::chrono::seconds(std::stol(res->get_header_value("Retry-After")));
        } catch (const std::exception&) {
        }
      }
      continue;
    }
    if (res->status != 200) {
      throw BackendError(BackendError::Kind::kTransport,
                         fmt::format("HTTP {} from model endpoint", res->status));
    }
    json reply;
    std::string content;
    try {
      reply = json::parse(res->body);
      content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      throw BackendError(BackendError::Kind::kMalformedResponse,
                         std::string("unexpected response body: ") + e.what());
    }
    GenerationResult r;
    r.backend_id = id();
    r.files = extract_code_blocks(content, default_filename(task));
    r.usage.model = reply.value("model", model);
    if (auto u = reply.find("usage"); u != reply.end() && u->is_object()) {
      r.usage.prompt_tokens = u->value("prompt_tokens", std::uint64_t{0});
      r.usage.completion_tokens = u->value("completion_tokens", std::uint64_t{0});
    }
    return r;
  }
  throw BackendError(BackendError::Kind::kTransport,
                     "model endpoint unavailable after retries: " + last_error,
                     retry_after.value_or(backoff));
}

std::string hdl_file_name(const blueprint::ComponentSpec& c) { return hdl_file_for(c); }

}  // namespace archloop::gen
