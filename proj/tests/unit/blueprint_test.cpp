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

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

namespace archloop::blueprint {
namespace {

bool has_code(const std::vector<BlueprintDiagnostic>& diags, const std::string& code) {
  return std::any_of(diags.begin(), diags.end(),
                     [&](const auto& d) { return d.code == code; });
}

std::size_t index_of(const std::vector<std::string>& v, const std::string& s) {
  return static_cast<std::size_t>(std::find(v.begin(), v.end(), s) - v.begin());
}

TEST(ParseTest, ReferenceBlueprint) {
  Blueprint bp = reference_blueprint();
  EXPECT_EQ(bp.project_name, "Legv8SingleCycleProcessor");
  EXPECT_EQ(bp.parameters.at("DATA_WIDTH"), 8);
  EXPECT_EQ(bp.parameters.at("INSTRUCTION_WIDTH"), 16);
  EXPECT_EQ(bp.parameters.at("PC_INCREMENT_VAL"), 2);
  ASSERT_EQ(bp.components.size(), 11u);
  const ComponentSpec* pc = bp.find("ProgramCounter");
  ASSERT_NE(pc, nullptr);
  EXPECT_EQ(pc->file, "program_counter.sv");
  EXPECT_EQ(pc->status, "Validating");
  ASSERT_NE(pc->find_port("pc_next_addr"), nullptr);
  EXPECT_EQ(pc->find_port("pc_next_addr")->width, WidthExpr::symbol("ADDRESS_WIDTH"));
  EXPECT_EQ(pc->find_port("clk")->width, WidthExpr::literal(1));
}

TEST(ParseTest, MinimalDocument) {
  Blueprint bp = parse_blueprint(R"({"projectName":"x","parameters":{},"components":[]})");
  EXPECT_EQ(bp.project_name, "x");
  EXPECT_TRUE(bp.components.empty());
  EXPECT_TRUE(consistency_check(bp).empty());
  EXPECT_TRUE(dependency_order(bp).empty());
}

TEST(ParseTest, MissingParameters) {
  try {
    parse_blueprint(R"({"projectName":"x"})");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.path(), "/parameters");
    EXPECT_NE(std::string(e.what()).find("parameters"), std::string::npos);
  }
}

TEST(ParseTest, SyntaxErrorHasOffset) {
  try {
    parse_blueprint(R"({"projectName": "x", })");
    FAIL();
  } catch (const ParseError& e) {
    ASSERT_TRUE(e.byte_offset().has_value());
    EXPECT_GT(*e.byte_offset(), 10u);
  }
}

TEST(ParseTest, SchemaViolations) {
  EXPECT_THROW(parse_blueprint(R"({"projectName":"x","parameters":{"A":-1},"components":[]})"),
               ParseError);
  EXPECT_THROW(parse_blueprint(R"({"projectName":"x","parameters":{},"components":[{"name":"a",
      "interface":[{"name":"p","direction":"inout","width":1}]}]})"),
               ParseError);
  EXPECT_THROW(parse_blueprint(R"({"projectName":"x","parameters":{},"components":[{"name":"a",
      "interface":[{"name":"p","direction":"input","width":1.5}]}]})"),
               ParseError);
  EXPECT_THROW(parse_blueprint(R"({"projectName":1,"parameters":{},"components":[]})"), ParseError);
}

TEST(ParseTest, UnknownFieldsArePreserved) {
  Blueprint bp = parse_blueprint(R"({"projectName":"x","parameters":{},"isaPackage":"pkg",
      "components":[{"name":"a","owner":"me","interface":[{"name":"p","direction":"input",
      "width":2,"note":"n"}]}]})");
  EXPECT_EQ(bp.extra["isaPackage"], "pkg");
  EXPECT_EQ(bp.components[0].extra["owner"], "me");
  EXPECT_EQ(bp.components[0].interface[0].extra["note"], "n");
  EXPECT_EQ(parse_blueprint(emit_blueprint(bp)), bp);
}

TEST(EmitTest, RoundTripAndDeterminism) {
  Blueprint bp = reference_blueprint();
  std::string once = emit_blueprint(bp);
  EXPECT_EQ(parse_blueprint(once), bp);
  EXPECT_EQ(emit_blueprint(bp), once);
  EXPECT_EQ(emit_blueprint(parse_blueprint(once)), once);
}

TEST(EmitTest, EmptyComponents) {
  Blueprint bp{"x", {}, {}};
  EXPECT_NE(emit_blueprint(bp).find("\"components\": []"), std::string::npos);
}

TEST(ResolveWidthTest, Cases) {
  ParameterTable t{{"ADDRESS_WIDTH", 8}, {"ZERO_WIDTH", 0}};
  EXPECT_EQ(resolve_width(WidthExpr::symbol("ADDRESS_WIDTH"), t), 8);
  EXPECT_EQ(resolve_width(WidthExpr::literal(1), t), 1);
  EXPECT_THROW(resolve_width(WidthExpr::symbol("BUS_WIDTH"), t), ResolveError);
  EXPECT_THROW(resolve_width(WidthExpr::literal(0), t), ResolveError);
  EXPECT_THROW(resolve_width(WidthExpr::literal(-3), t), ResolveError);
  EXPECT_THROW(resolve_width(WidthExpr::symbol("ZERO_WIDTH"), t), ResolveError);
}

TEST(DependencyOrderTest, ReferenceTopModuleLast) {
  auto order = dependency_order(reference_blueprint());
  ASSERT_EQ(order.size(), 11u);
  EXPECT_EQ(order.back(), "Legv8SingleCycleProcessor");
  EXPECT_EQ(order.front(), "ProgramCounter");
}

Blueprint chain(std::vector<std::pair<std::string, std::vector<std::string>>> spec) {
  Blueprint bp;
  bp.project_name = "t";
  for (auto& [name, deps] : spec) {
    ComponentSpec c;
    c.name = name;
    c.file = name + ".sv";
    c.dependencies = deps;
    bp.components.push_back(c);
  }
  return bp;
}

TEST(DependencyOrderTest, Singleton) {
  EXPECT_EQ(dependency_order(chain({{"A", {}}})), std::vector<std::string>{"A"});
}

TEST(DependencyOrderTest, TwoCycle) {
  try {
    dependency_order(chain({{"A", {"B"}}, {"B", {"A"}}}));
    FAIL();
  } catch (const CycleError& e) {
    EXPECT_EQ(std::set<std::string>(e.members().begin(), e.members().end()),
              (std::set<std::string>{"A", "B"}));
  }
}

TEST(DependencyOrderTest, CycleReportsOnlyCycleMembers) {
  try {
    dependency_order(chain({{"X", {}}, {"A", {"B", "X"}}, {"B", {"C"}}, {"C", {"B"}}}));
    FAIL();
  } catch (const CycleError& e) {
    EXPECT_EQ(std::set<std::string>(e.members().begin(), e.members().end()),
              (std::set<std::string>{"B", "C"}));
  }
}

TEST(DependencyOrderTest, MissingDependency) {
  try {
    dependency_order(chain({{"A", {"Ghost"}}}));
    FAIL();
  } catch (const MissingDependencyError& e) {
    EXPECT_EQ(e.missing(), "Ghost");
  }
}

TEST(DependencyOrderTest, TiesFollowDeclarationOrder) {
  auto order = dependency_order(chain({{"Top", {"C", "A"}}, {"C", {}}, {"A", {}}, {"B", {}}}));
  EXPECT_EQ(order, (std::vector<std::string>{"C", "A", "Top", "B"}));
}

// Random DAGs: the order is a permutation respecting every edge, and stable.
TEST(DependencyOrderTest, PropertyTopologicalAndDeterministic) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 15);
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) names.push_back("c" + std::to_string(i));
    std::shuffle(names.begin(), names.end(), rng);
    std::vector<std::pair<std::string, std::vector<std::string>>> spec;
    for (int i = 0; i < n; ++i) {
      std::vector<std::string> deps;
      for (int j = 0; j < i; ++j) {
        if (rng() % 3 == 0) deps.push_back(names[j]);
      }
      spec.emplace_back(names[i], deps);
    }
    std::shuffle(spec.begin(), spec.end(), rng);
    Blueprint bp = chain(spec);
    auto order = dependency_order(bp);
    ASSERT_EQ(order.size(), static_cast<std::size_t>(n));
    ASSERT_EQ(std::set<std::string>(order.begin(), order.end()).size(),
              static_cast<std::size_t>(n));
    for (const auto& c : bp.components) {
      for (const auto& d : c.dependencies) {
        ASSERT_LT(index_of(order, d), index_of(order, c.name));
      }
    }
    ASSERT_EQ(dependency_order(bp), order);
  }
}

TEST(ConsistencyTest, ReferenceIsClean) {
  EXPECT_TRUE(consistency_check(reference_blueprint()).empty());
}

TEST(ConsistencyTest, UndefinedWidthSymbol) {
  Blueprint bp = reference_blueprint();
  bp.components[3].interface[2].width = WidthExpr::symbol("ISA_WIDTH");
  auto diags = consistency_check(bp);
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_EQ(diags[0].code, "R1");
  EXPECT_EQ(diags[0].severity, Severity::kError);
  EXPECT_EQ(diags[0].component, bp.components[3].name);
}

TEST(ConsistencyTest, DuplicateComponentName) {
  Blueprint bp = reference_blueprint();
  ComponentSpec dup = *bp.find("ALU");
  bp.components.insert(bp.components.begin(), dup);
  auto diags = consistency_check(bp);
  EXPECT_TRUE(has_code(diags, "R4"));
}

TEST(ConsistencyTest, FileMustBeBareRelative) {
  Blueprint bp = reference_blueprint();
  bp.components[0].file = "../escape.sv";
  EXPECT_TRUE(has_code(consistency_check(bp), "R4"));
}

TEST(ConsistencyTest, WarningsDoNotCountAsErrors) {
  Blueprint bp = reference_blueprint();
  bp.parameters.erase("OPCODE_WIDTH");
  bp.components[2].interface[0].width = WidthExpr::literal(4);
  auto diags = consistency_check(bp);
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_EQ(diags[0].code, "R6");
  EXPECT_FALSE(has_errors(diags));
}

TEST(ConsistencyTest, WidthParameterMustBePositive) {
  Blueprint bp = reference_blueprint();
  bp.parameters["JUMP_ADDR_WIDTH"] = 0;
  EXPECT_TRUE(has_code(consistency_check(bp), "R1"));
}

// One mutant per rule: each must trip its own code.
struct Mutant {
  const char* code;
  void (*mutate)(Blueprint&);
};

ComponentSpec& get(Blueprint& bp, const char* name) {
  for (auto& c : bp.components) {
    if (c.name == name) return c;
  }
  throw std::out_of_range(name);
}

const Mutant kMutants[] = {
    {"R1", [](Blueprint& bp) { get(bp, "ALU").interface[0].width = WidthExpr::symbol("BUS_WIDTH"); }},
    {"R2", [](Blueprint& bp) { get(bp, "Legv8SingleCycleProcessor").dependencies.push_back("Cache"); }},
    {"R3", [](Blueprint& bp) { get(bp, "ALU").dependencies.push_back("Legv8SingleCycleProcessor"); }},
    {"R4", [](Blueprint& bp) { get(bp, "Adder").interface.push_back(get(bp, "Adder").interface[0]); }},
    {"R5", [](Blueprint& bp) {
       ComponentSpec extra = get(bp, "Adder");
       extra.name = "Orphan";
       extra.file = "orphan.sv";
       bp.components.push_back(extra);
     }},
    {"R6", [](Blueprint& bp) { bp.parameters.erase("OPCODE_WIDTH"); }},
    {"R7", [](Blueprint& bp) { get(bp, "ALU").interface[2].width = WidthExpr::literal(2); }},
};

TEST(ConsistencyTest, MutationSuite) {
  for (const Mutant& m : kMutants) {
    Blueprint bp = reference_blueprint();
    m.mutate(bp);
    auto diags = consistency_check(bp);
    EXPECT_TRUE(has_code(diags, m.code)) << m.code;
  }
}

TEST(DiagnosticTest, Json) {
  BlueprintDiagnostic d{"R7", Severity::kWarning, "ALU", "msg"};
  auto j = to_json(d);
  EXPECT_EQ(j["code"], "R7");
  EXPECT_EQ(j["severity"], "warning");
  EXPECT_EQ(j["component"], "ALU");
}

}  // namespace
}  // namespace archloop::blueprint
