#pragma once
// Cost-pipeline language (.scf). One function of one image parameter, a
// sequence of `let` bindings and a `return (plus, minus)`. The grammar is in
// docs/dsl.md.

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "stegcost/costs.hpp"
#include "stegcost/image.hpp"

namespace stegcost::dsl {

inline constexpr int kMaxNodeCount = 4096;
inline constexpr int kMaxNestingDepth = 128;

struct SourcePos {
  int line = 1;
  int column = 1;
};

struct Diagnostic {
  enum class Severity { error, warning };
  Severity severity = Severity::error;
  int line = 0;
  int column = 0;
  std::string message;
};

using Diagnostics = std::vector<Diagnostic>;

/// "line:col: error: message", one per line.
std::string format_diagnostics(const Diagnostics& diags);

// AST.

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { number, name, call, list };
  Kind kind = Kind::number;
  double number = 0.0;
  std::string name;  // identifier, or callee for calls
  std::vector<ExprPtr> items;  // call arguments or list elements
  SourcePos pos;
};

struct LetBinding {
  std::string name;
  ExprPtr value;
  SourcePos pos;
};

struct Function {
  std::string name;
  std::string param;
  std::vector<LetBinding> lets;
  ExprPtr plus;
  ExprPtr minus;
  SourcePos pos;
};

/// Static types. An image is a map that may also be used where raw pixel
/// values are required (wet_boundary).
enum class Type { scalar, map, image, kernel, scalar_list, map_list };

std::string_view type_name(Type t);

struct DslProgram {
  std::string source;
  Function ast;
  int node_count = 0;

  const std::string& function_name() const { return ast.name; }
};

struct ParseResult {
  std::optional<DslProgram> program;
  Diagnostics diagnostics;

  bool ok() const { return program.has_value(); }
};

/// Lex, parse and type-check. Diagnostics are non-empty iff program is empty.
ParseResult parse(std::string_view source);

/// Canonical formatting: two-space indent, one binding per line, infix
/// operators written as calls, numbers in shortest round-trip form.
std::string print(const Function& fn);
inline std::string print(const DslProgram& p) { return print(p.ast); }

/// Character count of the canonical form (the program length l_k).
std::size_t canonical_length(const DslProgram& p);

/// Structural equality up to consistent renaming of the parameter and let
/// bindings. The function name is compared verbatim.
bool alpha_equivalent(const Function& a, const Function& b);

/// Function names accepted by the validator: compute_cost[_a-z]*(_v<digits>)?
bool valid_function_name(std::string_view name);

/// Base name with any _v<digits> suffix removed.
std::string strip_version(std::string_view name);

/// Replaces or appends the _v<digits> suffix of the function name in place;
/// every other byte of the source is kept. Throws std::invalid_argument if
/// the source does not parse.
std::string rename_version(std::string_view source, int k);

/// Contents of the first ``` fenced block (language tag dropped), else the
/// whole text.
std::string extract_code_block(std::string_view response);

// Interpretation.

struct Limits {
  /// Elementary work units: one per output pixel for elementwise steps, one
  /// per pixel and nonzero tap for convolutions.
  std::int64_t max_ops = 2'000'000'000;
  int max_kernel = kMaxKernelExtent;
  std::chrono::milliseconds time_budget{30'000};
};

enum class FaultKind { op_limit, kernel_bound, timeout, nan, dimension, invalid_argument, invalid_cost };

std::string_view fault_name(FaultKind k);

struct RuntimeFault {
  FaultKind kind = FaultKind::invalid_argument;
  SourcePos pos;
  std::string message;
};

using Outcome = std::variant<CostPair, RuntimeFault>;

/// Pure evaluation of prog on img. Costs come back with img's shape,
/// non-negative and NaN-free, or a fault.
Outcome interpret(const DslProgram& prog, const GrayImage& img, const Limits& limits = {});

/// interpret() that throws std::runtime_error on a fault.
CostPair interpret_or_throw(const DslProgram& prog, const GrayImage& img, const Limits& limits = {});

// Shipped transcriptions of the six native cost functions, keyed by stem:
// wow, wow_evolved, hill, hill_evolved, suniward, suniward_evolved.

std::vector<std::string> shipped_program_names();
std::string shipped_source(std::string_view name);
DslProgram shipped_program(std::string_view name);
DslProgram shipped_program(CostAlgorithm algo);

}  // namespace stegcost::dsl
