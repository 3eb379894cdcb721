#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fixtures.hpp"
#include "stegcost/costs.hpp"
#include "stegcost/dsl.hpp"
#include "stegcost/prng.hpp"
#include "stegcost/synthetic.hpp"

using namespace stegcost;
using namespace stegcost::dsl;

namespace {

const char* kMinimal =
    "fn compute_cost_v0(image) { return (recip(absconv(image, kb()), 1e-10), "
    "recip(absconv(image, kb()), 1e-10)) }";

DslProgram must_parse(std::string_view src) {
  ParseResult r = parse(src);
  INFO(format_diagnostics(r.diagnostics));
  REQUIRE(r.ok());
  return *r.program;
}

FaultKind fault_of(const Outcome& o) {
  REQUIRE(std::holds_alternative<RuntimeFault>(o));
  return std::get<RuntimeFault>(o).kind;
}

double max_rel(const RealMap& a, const RealMap& b, bool& same_support) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isinf(a[i]) || std::isinf(b[i])) {
      if (a[i] != b[i]) same_support = false;
      continue;
    }
    worst = std::max(worst, std::fabs(a[i] - b[i]) / std::max(std::fabs(b[i]), 1e-300));
  }
  return worst;
}

}  // namespace

TEST_CASE("minimal program parses") {
  const DslProgram p = must_parse(kMinimal);
  CHECK(p.function_name() == "compute_cost_v0");
  CHECK(p.ast.param == "image");
  CHECK(p.ast.lets.empty());
  CHECK(p.node_count > 0);
  CHECK(p.node_count <= kMaxNodeCount);
}

TEST_CASE("unknown builtin yields one positioned error") {
  const ParseResult r = parse("fn compute_cost_v0(image) {\n  let a = dct(image);\n  return (a, a);\n}");
  REQUIRE_FALSE(r.ok());
  REQUIRE(r.diagnostics.size() == 1);
  CHECK(r.diagnostics[0].line == 2);
  CHECK(r.diagnostics[0].column == 11);
  CHECK(r.diagnostics[0].message.find("dct") != std::string::npos);
}

TEST_CASE("diagnostics for common mistakes") {
  struct Case {
    const char* src;
    int line, column;
    const char* fragment;
  };
  const Case cases[] = {
      {"fn compute_cost(image) { return (image, image) ", 1, 48, "'}'"},
      {"fn compute_cost(image) { let a = conv(image); return (a, a) }", 1, 34, "expects 2"},
      {"fn compute_cost(image) { return (kb(), image) }", 1, 34, "maps"},
      {"fn compute_cost(image) { return (foo, image) }", 1, 34, "unknown identifier 'foo'"},
      {"fn cost(image) { return (image, image) }", 1, 1, "function name"},
      {"fn compute_cost(image, other) { return (image, image) }", 1, 22, "one parameter"},
      {"fn compute_cost(image) { let a = 1; let a = 2; return (image, image) }", 1, 37, "already bound"},
      {"fn compute_cost(image) { let a = 1.; return (image, image) }", 1, 34, "malformed number"},
      {"fn compute_cost(image) { let a = 1 $ 2; return (image, image) }", 1, 36, "unexpected character"},
      {"fn compute_cost(image) { let a = wsum([image], [kb()]); return (a, a) }", 1, 48, "list elements"},
      {"fn compute_cost(image) { let a = [[1, 2], [3]]; return (image, image) }", 1, 43, "entries"},
      {"fn compute_cost(image) { let kb = 1; return (image, image) }", 1, 26, "builtin"},
  };
  for (const Case& c : cases) {
    CAPTURE(c.src);
    const ParseResult r = parse(c.src);
    REQUIRE_FALSE(r.ok());
    REQUIRE_FALSE(r.diagnostics.empty());
    CHECK(r.diagnostics[0].line == c.line);
    CHECK(r.diagnostics[0].column == c.column);
    CHECK(r.diagnostics[0].message.find(c.fragment) != std::string::npos);
  }
}

TEST_CASE("infix operators and unary minus desugar to calls") {
  const DslProgram p = must_parse(
      "fn compute_cost(image) {\n"
      "  let a = -image + 2 * image / 4 - -3\n"
      "  return (abs(a), abs(a))\n"
      "}\n");
  CHECK(print(p) ==
        "fn compute_cost(image) {\n"
        "  let a = sub(add(mul(-1, image), div(mul(2, image), 4)), -3);\n"
        "  return (abs(a), abs(a));\n"
        "}\n");
}

TEST_CASE("print then parse round-trips every shipped program") {
  for (const std::string& name : shipped_program_names()) {
    CAPTURE(name);
    const DslProgram p = shipped_program(name);
    const std::string canon = print(p);
    const DslProgram again = must_parse(canon);
    CHECK(alpha_equivalent(p.ast, again.ast));
    CHECK(print(again) == canon);
    CHECK(canonical_length(p) == canon.size());
  }
}

TEST_CASE("alpha equivalence ignores binder names only") {
  const DslProgram a = must_parse("fn compute_cost(x) { let t = abs(x); return (t, t) }");
  const DslProgram b = must_parse("fn compute_cost(img) { let u = abs(img); return (u, u) }");
  const DslProgram c = must_parse("fn compute_cost(img) { let u = abs(img); return (u, img) }");
  const DslProgram d = must_parse("fn compute_cost_b(img) { let u = abs(img); return (u, u) }");
  CHECK(alpha_equivalent(a.ast, b.ast));
  CHECK_FALSE(alpha_equivalent(a.ast, c.ast));
  CHECK_FALSE(alpha_equivalent(b.ast, d.ast));
}

TEST_CASE("rename_version") {
  const std::string src =
      "# header comment\nfn compute_cost_adjusted(image) {  let a = abs(image)  # keep\n return (a, a) }";
  const std::string v0 = rename_version(src, 0);
  CHECK(v0 ==
        "# header comment\nfn compute_cost_adjusted_v0(image) {  let a = abs(image)  # keep\n return (a, a) }");
  CHECK(rename_version(v0, 0) == v0);
  const std::string v3 = "fn compute_cost_v3(image) { return (image, image) }";
  CHECK(rename_version(v3, 1) == "fn compute_cost_v1(image) { return (image, image) }");
  CHECK(rename_version(rename_version(v3, 12), 12) == rename_version(v3, 12));
  CHECK_THROWS_AS(rename_version("fn nope(", 0), std::invalid_argument);
  CHECK_THROWS_AS(rename_version(v3, -1), std::invalid_argument);
}

TEST_CASE("function name rules") {
  CHECK(valid_function_name("compute_cost"));
  CHECK(valid_function_name("compute_cost_v0"));
  CHECK(valid_function_name("compute_cost_adjusted_v12"));
  CHECK_FALSE(valid_function_name("compute_cost2"));
  CHECK_FALSE(valid_function_name("compute_Cost"));
  CHECK(strip_version("compute_cost_adjusted_v7") == "compute_cost_adjusted");
  CHECK(strip_version("compute_cost_adjusted") == "compute_cost_adjusted");
}

TEST_CASE("code block extraction") {
  CHECK(extract_code_block("Here you go:\n```scf\nfn a\n```\nEnjoy") == "fn a\n");
  CHECK(extract_code_block("```\nfirst\n```\n```\nsecond\n```") == "first\n");
  CHECK(extract_code_block("no fences") == "no fences");
  CHECK(extract_code_block("```scf\nunterminated") == "unterminated");
}

TEST_CASE("shipped transcriptions match native costs on every fixture") {
  REQUIRE(shipped_program_names().size() == 6);
  for (CostAlgorithm algo : kAllCostAlgorithms) {
    const DslProgram prog = shipped_program(algo);
    for (const auto& fx : fixtures::cover_fixtures()) {
      CAPTURE(algorithm_name(algo));
      CAPTURE(fx.name);
      const CostPair native = compute_cost(algo, fx.image);
      const CostPair dsl = interpret_or_throw(prog, fx.image);
      bool support = true;
      CHECK(max_rel(dsl.plus, native.plus, support) <= 1e-9);
      CHECK(max_rel(dsl.minus, native.minus, support) <= 1e-9);
      CHECK(support);
    }
  }
}

TEST_CASE("interpretation is pure") {
  const DslProgram prog = shipped_program("wow_evolved");
  const GrayImage img = synthetic_image(40, 40, 3);
  const CostPair a = interpret_or_throw(prog, img);
  const CostPair b = interpret_or_throw(prog, img);
  CHECK(a.plus == b.plus);
  CHECK(a.minus == b.minus);
}

TEST_CASE("runtime faults") {
  const GrayImage img = synthetic_image(24, 16, 4);

  SUBCASE("op limit") {
    Limits tight;
    tight.max_ops = 1000;
    CHECK(fault_of(interpret(shipped_program("hill"), img, tight)) == FaultKind::op_limit);
  }
  SUBCASE("kernel bound") {
    const DslProgram p = must_parse("fn compute_cost(x) { let a = conv(x, gauss(20, 4)); return (a, a) }");
    CHECK(fault_of(interpret(p, img)) == FaultKind::kernel_bound);
    Limits small;
    small.max_kernel = 9;
    CHECK(fault_of(interpret(shipped_program("hill"), img, small)) == FaultKind::kernel_bound);
  }
  SUBCASE("time budget") {
    Limits none;
    none.time_budget = std::chrono::milliseconds(-1);
    CHECK(fault_of(interpret(shipped_program("hill"), img, none)) == FaultKind::timeout);
  }
  SUBCASE("NaN") {
    const DslProgram p = must_parse("fn compute_cost(x) { let a = sqrt(x - 300); return (a, a) }");
    CHECK(fault_of(interpret(p, img)) == FaultKind::nan);
    const DslProgram q = must_parse("fn compute_cost(x) { let z = x * 0; let a = z / z; return (a, a) }");
    CHECK(fault_of(interpret(q, img)) == FaultKind::nan);
  }
  SUBCASE("dimension") {
    const DslProgram p = must_parse("fn compute_cost(x) { let a = x + transpose(x); return (a, a) }");
    CHECK(fault_of(interpret(p, img)) == FaultKind::dimension);
    const DslProgram q = must_parse("fn compute_cost(x) { let a = transpose(abs(x)); return (a, a) }");
    CHECK(fault_of(interpret(q, img)) == FaultKind::dimension);
  }
  SUBCASE("invalid arguments") {
    for (const char* body : {"avg(4)", "db8(3)", "gauss(-1, 4)", "avg(2.5)"}) {
      const DslProgram p = must_parse(std::string("fn compute_cost(x) { let a = conv(x, ") + body +
                                      "); return (a, a) }");
      CHECK(fault_of(interpret(p, img)) == FaultKind::invalid_argument);
    }
    const DslProgram w = must_parse("fn compute_cost(x) { let a = wsum([x, x], [1]); return (a, a) }");
    CHECK(fault_of(interpret(w, img)) == FaultKind::invalid_argument);
    const DslProgram s = must_parse("fn compute_cost(x) { let a = wet_boundary(x, x, 1, 0); return (a, a) }");
    CHECK(fault_of(interpret(s, img)) == FaultKind::invalid_argument);
  }
  SUBCASE("negative costs") {
    const DslProgram p = must_parse("fn compute_cost(x) { let a = x - 1000; return (a, a) }");
    CHECK(fault_of(interpret(p, img)) == FaultKind::invalid_cost);
  }
}

TEST_CASE("division by an all-zero map gives +inf costs, not a fault") {
  const GrayImage flat(12, 9, 77);
  const DslProgram p = must_parse(
      "fn compute_cost(x) { let r = absconv(x, kb()); let a = div(1, r); return (a, a) }");
  const CostPair c = interpret_or_throw(p, flat);
  for (double v : c.plus.values()) CHECK(v == kInf);
}

TEST_CASE("wet_boundary, floor_to_inf and clamp_top semantics") {
  GrayImage img(4, 1);
  img[0] = 0;
  img[1] = 5;
  img[2] = 250;
  img[3] = 255;
  const DslProgram p = must_parse(
      "fn compute_cost(x) { let c = x * 0 + 1;\n"
      "  return (wet_boundary(c, x, 6, 1), wet_boundary(c, x, 6, -1)) }");
  const CostPair c = interpret_or_throw(p, img);
  CHECK(c.plus[0] == 1);
  CHECK(c.plus[1] == 1);
  CHECK(c.plus[2] == kInf);
  CHECK(c.plus[3] == kInf);
  CHECK(c.minus[0] == kInf);
  CHECK(c.minus[1] == kInf);
  CHECK(c.minus[2] == 1);
  CHECK(c.minus[3] == 1);

  const DslProgram q = must_parse(
      "fn compute_cost(x) { let c = floor_to_inf(x, 5); return (c, clamp_top(x, 0.25)) }");
  const CostPair d = interpret_or_throw(q, img);
  CHECK(d.plus[0] == kInf);
  CHECK(d.plus[1] == 5);
  CHECK(d.minus[2] == 250);
  CHECK(d.minus[3] == kInf);
}

TEST_CASE("kernel literals and constructors") {
  const GrayImage img = synthetic_image(20, 20, 9);
  const DslProgram a = must_parse(
      "fn compute_cost(x) { let k = outer([1, 2, 1], [-1, 0, 1]); let r = absconv(x, k); return (r, r) }");
  const DslProgram b = must_parse(
      "fn compute_cost(x) { let k = [[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]]; let r = absconv(x, k); "
      "return (r, r) }");
  CHECK(interpret_or_throw(a, img).plus == interpret_or_throw(b, img).plus);
}

TEST_CASE("node count limit") {
  std::string expr = "1";
  for (int i = 0; i < 2100; ++i) expr = "add(" + expr + ", 1)";
  // Too deep for the parser before it is too large for the checker.
  ParseResult deep = parse("fn compute_cost(x) { let a = " + expr + "; return (x, x) }");
  CHECK_FALSE(deep.ok());

  std::string lets;
  for (int i = 0; i < 1400; ++i) lets += "let a" + std::to_string(i) + " = 1 + 2;\n";
  ParseResult wide = parse("fn compute_cost(x) {\n" + lets + "return (x, x) }");
  REQUIRE_FALSE(wide.ok());
  CHECK(wide.diagnostics.back().message.find("nodes") != std::string::npos);
}

TEST_CASE("fuzzed malformed sources always produce positioned diagnostics") {
  const std::string base = print(shipped_program("wow_evolved"));
  Xorshift64Star rng(2024);
  const std::string alphabet = "(){}[],;=+-*/#._ \nabcxyz0123456789\"'$@";
  int rejected = 0;
  for (int trial = 0; trial < 400; ++trial) {
    std::string s = base;
    const int edits = 1 + static_cast<int>(rng.below(4));
    for (int e = 0; e < edits; ++e) {
      const auto pos = static_cast<std::size_t>(rng.below(s.size()));
      switch (rng.below(3)) {
        case 0: s.erase(pos, 1 + rng.below(6)); break;
        case 1: s.insert(pos, 1, alphabet[rng.below(alphabet.size())]); break;
        default: s[pos] = alphabet[rng.below(alphabet.size())]; break;
      }
    }
    const ParseResult r = parse(s);
    CHECK(r.ok() == r.diagnostics.empty());
    if (!r.ok()) {
      ++rejected;
      CHECK_FALSE(r.program.has_value());
      for (const Diagnostic& d : r.diagnostics) {
        CHECK(d.line >= 1);
        CHECK(d.column >= 1);
        CHECK_FALSE(d.message.empty());
      }
    }
  }
  CHECK(rejected > 100);
}
