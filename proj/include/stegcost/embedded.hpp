#pragma once

#include <string_view>
#include <vector>

namespace stegcost::embedded {

/// Contents of data/db8.txt, compiled in.
std::string_view db8_table();

struct ShippedProgram {
  std::string_view name;    // file stem, e.g. "hill"
  std::string_view source;  // contents of programs/<name>.scf
};

/// The DSL transcriptions under programs/.
const std::vector<ShippedProgram>& shipped_programs();

}  // namespace stegcost::embedded
