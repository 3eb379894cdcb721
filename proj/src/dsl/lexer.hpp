#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "stegcost/dsl.hpp"

namespace stegcost::dsl::detail {

enum class Tok {
  ident, number, kw_fn, kw_let, kw_return,
  lparen, rparen, lbrace, rbrace, lbracket, rbracket,
  comma, semicolon, equals, plus, minus, star, slash,
  end
};

std::string_view token_name(Tok t);

struct Token {
  Tok kind = Tok::end;
  std::string_view text;
  std::size_t offset = 0;
  SourcePos pos;
  double number = 0.0;
};

/// Tokenizes source. On a lexical error, appends a diagnostic and returns
/// the tokens read so far followed by an end token.
std::vector<Token> lex(std::string_view source, Diagnostics& diags);

}  // namespace stegcost::dsl::detail
