#include "lexer.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace stegcost::dsl::detail {

std::string_view token_name(Tok t) {
  switch (t) {
    case Tok::ident: return "identifier";
    case Tok::number: return "number";
    case Tok::kw_fn: return "'fn'";
    case Tok::kw_let: return "'let'";
    case Tok::kw_return: return "'return'";
    case Tok::lparen: return "'('";
    case Tok::rparen: return "')'";
    case Tok::lbrace: return "'{'";
    case Tok::rbrace: return "'}'";
    case Tok::lbracket: return "'['";
    case Tok::rbracket: return "']'";
    case Tok::comma: return "','";
    case Tok::semicolon: return "';'";
    case Tok::equals: return "'='";
    case Tok::plus: return "'+'";
    case Tok::minus: return "'-'";
    case Tok::star: return "'*'";
    case Tok::slash: return "'/'";
    case Tok::end: return "end of input";
  }
  return "?";
}

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

std::vector<Token> lex(std::string_view src, Diagnostics& diags) {
  std::vector<Token> out;
  std::size_t i = 0;
  int line = 1, col = 1;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  auto fail = [&](const std::string& msg) {
    diags.push_back({Diagnostic::Severity::error, line, col, msg});
  };

  while (i < src.size()) {
    const char c = src[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.offset = i;
    t.pos = {line, col};
    std::size_t len = 1;
    if (ident_start(c)) {
      while (i + len < src.size() && ident_char(src[i + len])) ++len;
      t.text = src.substr(i, len);
      if (t.text == "fn") t.kind = Tok::kw_fn;
      else if (t.text == "let") t.kind = Tok::kw_let;
      else if (t.text == "return") t.kind = Tok::kw_return;
      else t.kind = Tok::ident;
    } else if (digit(c)) {
      len = 0;
      while (i + len < src.size() && digit(src[i + len])) ++len;
      if (i + len < src.size() && src[i + len] == '.') {
        ++len;
        if (i + len >= src.size() || !digit(src[i + len])) {
          fail("malformed number: expected digits after '.'");
          break;
        }
        while (i + len < src.size() && digit(src[i + len])) ++len;
      }
      if (i + len < src.size() && (src[i + len] == 'e' || src[i + len] == 'E')) {
        std::size_t j = len + 1;
        if (i + j < src.size() && (src[i + j] == '+' || src[i + j] == '-')) ++j;
        if (i + j >= src.size() || !digit(src[i + j])) {
          fail("malformed number: expected exponent digits");
          break;
        }
        while (i + j < src.size() && digit(src[i + j])) ++j;
        len = j;
      }
      if (i + len < src.size() && ident_char(src[i + len])) {
        fail("malformed number: unexpected '" + std::string(1, src[i + len]) + "'");
        break;
      }
      t.kind = Tok::number;
      t.text = src.substr(i, len);
      const auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
      if (ec != std::errc() || !std::isfinite(t.number)) {
        fail("number out of range: " + std::string(t.text));
        break;
      }
    } else {
      switch (c) {
        case '(': t.kind = Tok::lparen; break;
        case ')': t.kind = Tok::rparen; break;
        case '{': t.kind = Tok::lbrace; break;
        case '}': t.kind = Tok::rbrace; break;
        case '[': t.kind = Tok::lbracket; break;
        case ']': t.kind = Tok::rbracket; break;
        case ',': t.kind = Tok::comma; break;
        case ';': t.kind = Tok::semicolon; break;
        case '=': t.kind = Tok::equals; break;
        case '+': t.kind = Tok::plus; break;
        case '-': t.kind = Tok::minus; break;
        case '*': t.kind = Tok::star; break;
        case '/': t.kind = Tok::slash; break;
        default: {
          const auto u = static_cast<unsigned char>(c);
          char hex[8];
          std::snprintf(hex, sizeof hex, "0x%02X", static_cast<unsigned>(u));
          fail(std::isprint(u) ? "unexpected character '" + std::string(1, c) + "'"
                               : "unexpected byte " + std::string(hex));
          out.push_back(Token{Tok::end, {}, i, {line, col}, 0.0});
          return out;
        }
      }
      t.text = src.substr(i, 1);
    }
    out.push_back(t);
    advance(len);
  }
  out.push_back(Token{Tok::end, {}, src.size(), {line, col}, 0.0});
  return out;
}

}  // namespace stegcost::dsl::detail
