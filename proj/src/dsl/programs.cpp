#include <stdexcept>

#include "stegcost/dsl.hpp"
#include "stegcost/embedded.hpp"

namespace stegcost::dsl {

std::vector<std::string> shipped_program_names() {
  std::vector<std::string> names;
  for (const auto& p : embedded::shipped_programs()) names.emplace_back(p.name);
  return names;
}

std::string shipped_source(std::string_view name) {
  for (const auto& p : embedded::shipped_programs()) {
    if (p.name == name) return std::string(p.source);
  }
  throw std::invalid_argument("no shipped program named '" + std::string(name) + "'");
}

DslProgram shipped_program(std::string_view name) {
  ParseResult r = parse(shipped_source(name));
  if (!r.ok()) {
    throw std::logic_error("shipped program '" + std::string(name) + "' does not parse:\n" +
                           format_diagnostics(r.diagnostics));
  }
  return std::move(*r.program);
}

DslProgram shipped_program(CostAlgorithm algo) {
  switch (algo) {
    case CostAlgorithm::wow: return shipped_program("wow");
    case CostAlgorithm::wow_evolved: return shipped_program("wow_evolved");
    case CostAlgorithm::hill: return shipped_program("hill");
    case CostAlgorithm::hill_evolved: return shipped_program("hill_evolved");
    case CostAlgorithm::suniward: return shipped_program("suniward");
    case CostAlgorithm::suniward_evolved: return shipped_program("suniward_evolved");
  }
  throw std::invalid_argument("unknown cost algorithm");
}

}  // namespace stegcost::dsl
