#include <regex>
#include <sstream>
#include <stdexcept>

#include "stegcost/evolve.hpp"

namespace stegcost::evolve {

std::string default_instruction() {
  return "The functions above are embedding cost functions for spatial-domain image steganography, "
         "written in the .scf cost language. Each takes a grayscale image and returns a pair "
         "(plus, minus) of non-negative cost maps for +1 and -1 pixel changes; +inf marks a pixel "
         "that must not change in that direction.\n"
         "Goal: complete the body of the last function so that stego images made with its costs are "
         "harder for a steganalysis detector to tell apart from their covers than those of the "
         "reference versions.\n"
         "Constraints: use only the builtins of the language, keep kernels at most 64 taps per side, "
         "keep costs finite in textured regions, and keep the parameter list unchanged.\n"
         "Output: a single fenced code block holding only the completed function, with the name "
         "given in its header. Try a more elaborate or unusual construction than the references "
         "rather than a small tweak.\n";
}

std::string build_prompt(const std::vector<PromptReference>& refs, const std::string& instruction) {
  if (refs.empty()) throw std::invalid_argument("a prompt needs at least one reference program");
  for (const PromptReference& r : refs)
    if (r.sub_index != refs.front().sub_index)
      throw std::invalid_argument("reference programs come from different sub-databases");

  const dsl::ParseResult first = dsl::parse(refs.front().source);
  if (!first.ok()) {
    throw std::invalid_argument("reference program does not parse:\n" +
                                dsl::format_diagnostics(first.diagnostics));
  }
  std::ostringstream out;
  out << "```scf\n";
  for (std::size_t k = 0; k < refs.size(); ++k) {
    std::string src = dsl::rename_version(refs[k].source, static_cast<int>(k));
    out << src;
    if (src.empty() || src.back() != '\n') out << '\n';
    out << '\n';
  }
  out << "fn " << dsl::strip_version(first.program->function_name()) << "_v" << refs.size() << '('
      << first.program->ast.param << ") {\n}\n```\n\n";
  out << instruction;
  return out.str();
}

std::optional<PromptParts> split_prompt(const std::string& prompt) {
  const std::string code = dsl::extract_code_block(prompt);
  // Chunks start at lines beginning with "fn "; comment lines just above a
  // header belong to that chunk's predecessor, which is harmless for parsing.
  std::vector<std::string> chunks;
  std::istringstream in(code);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("fn ", 0) == 0 || chunks.empty()) chunks.emplace_back();
    chunks.back() += line + '\n';
  }
  if (chunks.empty()) return std::nullopt;
  static const std::regex header(R"(fn\s+([A-Za-z_][A-Za-z0-9_]*)\s*\(\s*([A-Za-z_][A-Za-z0-9_]*)\s*\)\s*\{\s*\}\s*)");
  std::smatch m;
  if (!std::regex_match(chunks.back(), m, header)) return std::nullopt;
  PromptParts parts;
  parts.target_name = m[1];
  parts.param = m[2];
  for (std::size_t i = 0; i + 1 < chunks.size(); ++i)
    if (chunks[i].find("fn ") != std::string::npos) parts.references.push_back(chunks[i]);
  return parts;
}

}  // namespace stegcost::evolve
