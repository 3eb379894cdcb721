#include <algorithm>
#include <cctype>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <stdexcept>

#include "lexer.hpp"
#include "stegcost/dsl.hpp"

namespace stegcost::dsl {

using detail::Tok;
using detail::Token;

std::string format_diagnostics(const Diagnostics& diags) {
  std::ostringstream out;
  for (const Diagnostic& d : diags) {
    out << d.line << ':' << d.column << ": "
        << (d.severity == Diagnostic::Severity::error ? "error" : "warning") << ": " << d.message
        << '\n';
  }
  return out.str();
}

std::string_view type_name(Type t) {
  switch (t) {
    case Type::scalar: return "scalar";
    case Type::map: return "map";
    case Type::image: return "image";
    case Type::kernel: return "kernel";
    case Type::scalar_list: return "scalar list";
    case Type::map_list: return "map list";
  }
  return "?";
}

bool valid_function_name(std::string_view name) {
  static const std::regex re("compute_cost[_a-z]*(_v[0-9]+)?");
  return std::regex_match(name.begin(), name.end(), re);
}

std::string strip_version(std::string_view name) {
  static const std::regex re("(.*)_v[0-9]+");
  std::match_results<std::string_view::const_iterator> m;
  if (std::regex_match(name.begin(), name.end(), m, re)) return m[1].str();
  return std::string(name);
}

namespace {

class SyntaxError : public std::exception {};

class Parser {
 public:
  Parser(std::vector<Token> toks, Diagnostics& diags) : toks_(std::move(toks)), diags_(diags) {}

  Function parse_function() {
    Function fn;
    fn.pos = peek().pos;
    expect(Tok::kw_fn, "a program starts with 'fn'");
    fn.name = std::string(expect(Tok::ident, "expected function name").text);
    expect(Tok::lparen, "expected '(' after function name");
    fn.param = std::string(expect(Tok::ident, "expected the image parameter name").text);
    if (peek().kind == Tok::comma) error(peek(), "the cost function takes exactly one parameter");
    expect(Tok::rparen, "expected ')' after the parameter");
    expect(Tok::lbrace, "expected '{' to open the function body");
    while (peek().kind == Tok::kw_let) {
      const Token& kw = next();
      LetBinding b;
      b.pos = kw.pos;
      b.name = std::string(expect(Tok::ident, "expected a name after 'let'").text);
      expect(Tok::equals, "expected '=' in let binding");
      b.value = expression();
      accept(Tok::semicolon);
      fn.lets.push_back(std::move(b));
    }
    if (peek().kind != Tok::kw_return) error(peek(), "expected 'let' or 'return'");
    next();
    expect(Tok::lparen, "return takes a pair '(plus, minus)'");
    fn.plus = expression();
    expect(Tok::comma, "return takes a pair '(plus, minus)'");
    fn.minus = expression();
    expect(Tok::rparen, "expected ')' closing the returned pair");
    accept(Tok::semicolon);
    expect(Tok::rbrace, "expected '}' after the return statement");
    if (peek().kind != Tok::end) error(peek(), "unexpected text after the function");
    return fn;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (t.kind != Tok::end) ++pos_;
    return t;
  }
  bool accept(Tok k) {
    if (peek().kind != k) return false;
    next();
    return true;
  }
  const Token& expect(Tok k, const std::string& msg) {
    if (peek().kind != k) error(peek(), msg);
    return next();
  }
  [[noreturn]] void error(const Token& at, const std::string& msg) {
    std::string text = msg;
    if (at.kind == Tok::end) {
      text += " (found end of input)";
    } else {
      text += " (found " + std::string(detail::token_name(at.kind));
      if (at.kind == Tok::ident || at.kind == Tok::number) text += " '" + std::string(at.text) + "'";
      text += ")";
    }
    diags_.push_back({Diagnostic::Severity::error, at.pos.line, at.pos.column, text});
    throw SyntaxError();
  }

  struct DepthGuard {
    Parser& p;
    explicit DepthGuard(Parser& parser) : p(parser) {
      if (++p.depth_ > kMaxNestingDepth) p.error(p.peek(), "expression nested too deeply");
    }
    ~DepthGuard() { --p.depth_; }
  };

  static ExprPtr make_call(std::string callee, std::vector<ExprPtr> args, SourcePos pos) {
    auto e = std::make_shared<Expr>();
    e->kind = Expr::Kind::call;
    e->name = std::move(callee);
    e->items = std::move(args);
    e->pos = pos;
    return e;
  }

  ExprPtr expression() {
    DepthGuard guard(*this);
    ExprPtr lhs = term();
    while (peek().kind == Tok::plus || peek().kind == Tok::minus) {
      const Token& op = next();
      ExprPtr rhs = term();
      lhs = make_call(op.kind == Tok::plus ? "add" : "sub", {lhs, rhs}, op.pos);
    }
    return lhs;
  }

  ExprPtr term() {
    ExprPtr lhs = unary();
    while (peek().kind == Tok::star || peek().kind == Tok::slash) {
      const Token& op = next();
      ExprPtr rhs = unary();
      lhs = make_call(op.kind == Tok::star ? "mul" : "div", {lhs, rhs}, op.pos);
    }
    return lhs;
  }

  ExprPtr unary() {
    DepthGuard guard(*this);
    if (peek().kind == Tok::minus) {
      const Token& op = next();
      ExprPtr operand = unary();
      if (operand->kind == Expr::Kind::number) {
        auto e = std::make_shared<Expr>(*operand);
        e->number = -operand->number;
        e->pos = op.pos;
        return e;
      }
      auto minus_one = std::make_shared<Expr>();
      minus_one->number = -1.0;
      minus_one->pos = op.pos;
      return make_call("mul", {minus_one, operand}, op.pos);
    }
    return primary();
  }

  ExprPtr primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::number: {
        next();
        auto e = std::make_shared<Expr>();
        e->kind = Expr::Kind::number;
        e->number = t.number;
        e->pos = t.pos;
        return e;
      }
      case Tok::ident: {
        next();
        auto e = std::make_shared<Expr>();
        e->name = std::string(t.text);
        e->pos = t.pos;
        if (accept(Tok::lparen)) {
          e->kind = Expr::Kind::call;
          if (peek().kind != Tok::rparen) {
            do {
              e->items.push_back(expression());
            } while (accept(Tok::comma));
          }
          expect(Tok::rparen, "expected ',' or ')' in argument list");
        } else {
          e->kind = Expr::Kind::name;
        }
        return e;
      }
      case Tok::lparen: {
        next();
        ExprPtr inner = expression();
        expect(Tok::rparen, "expected ')'");
        return inner;
      }
      case Tok::lbracket: {
        next();
        auto e = std::make_shared<Expr>();
        e->kind = Expr::Kind::list;
        e->pos = t.pos;
        if (peek().kind == Tok::rbracket) error(peek(), "empty list");
        do {
          e->items.push_back(expression());
        } while (accept(Tok::comma));
        expect(Tok::rbracket, "expected ',' or ']' in list");
        return e;
      }
      default:
        error(t, "expected an expression");
    }
  }

  std::vector<Token> toks_;
  Diagnostics& diags_;
  std::size_t pos_ = 0;
  int depth_ = 0;
};

// Type checking.

bool is_map(Type t) { return t == Type::map || t == Type::image; }
bool is_value(Type t) { return t == Type::scalar || is_map(t); }
Type widen(Type a, Type b) { return is_map(a) || is_map(b) ? Type::map : Type::scalar; }

const std::set<std::string, std::less<>>& builtin_names() {
  static const std::set<std::string, std::less<>> names = {
      "conv", "corr", "absconv", "abs", "sqrt", "pow", "recip", "add", "sub", "mul", "div",
      "min", "max", "wsum", "clamp_top", "floor_to_inf", "wet_boundary", "kb", "avg", "gauss",
      "db8", "outer", "flip", "transpose"};
  return names;
}

struct Signature {
  std::size_t arity;
  const char* usage;
};

const std::map<std::string, Signature, std::less<>>& signatures() {
  static const std::map<std::string, Signature, std::less<>> sigs = {
      {"conv", {2, "conv(map, kernel)"}},
      {"corr", {2, "corr(map, kernel)"}},
      {"absconv", {2, "absconv(map, kernel)"}},
      {"abs", {1, "abs(scalar|map|kernel)"}},
      {"sqrt", {1, "sqrt(scalar|map)"}},
      {"pow", {2, "pow(scalar|map, scalar)"}},
      {"recip", {2, "recip(scalar|map, eps)"}},
      {"add", {2, "add(a, b)"}},
      {"sub", {2, "sub(a, b)"}},
      {"mul", {2, "mul(a, b)"}},
      {"div", {2, "div(a, b)"}},
      {"min", {2, "min(scalar|map, scalar|map)"}},
      {"max", {2, "max(scalar|map, scalar|map)"}},
      {"wsum", {2, "wsum([maps], [weights])"}},
      {"clamp_top", {2, "clamp_top(map, fraction)"}},
      {"floor_to_inf", {2, "floor_to_inf(map, theta)"}},
      {"wet_boundary", {4, "wet_boundary(map, image, tau, sign)"}},
      {"kb", {0, "kb()"}},
      {"avg", {1, "avg(size)"}},
      {"gauss", {2, "gauss(sigma, L)"}},
      {"db8", {1, "db8(direction)"}},
      {"outer", {2, "outer([column], [row])"}},
      {"flip", {1, "flip(kernel)"}},
      {"transpose", {1, "transpose(kernel|map)"}},
  };
  return sigs;
}

class Checker {
 public:
  explicit Checker(Diagnostics& diags) : diags_(diags) {}

  void check(const Function& fn, int& nodes) {
    if (!valid_function_name(fn.name)) {
      report(fn.pos, "function name '" + fn.name + "' must match compute_cost[_a-z]*(_v<digits>)?");
    }
    if (builtin_names().count(fn.param)) report(fn.pos, "parameter name '" + fn.param + "' is a builtin");
    env_[fn.param] = Type::image;
    nodes = 1;
    for (const LetBinding& b : fn.lets) {
      ++nodes;
      const std::optional<Type> t = type_of(*b.value, nodes);
      if (builtin_names().count(b.name)) {
        report(b.pos, "cannot bind builtin name '" + b.name + "'");
      } else if (env_.count(b.name)) {
        report(b.pos, "'" + b.name + "' is already bound");
      } else if (t) {
        env_[b.name] = *t;
      } else {
        poisoned_.insert(b.name);
      }
    }
    for (const ExprPtr& side : {fn.plus, fn.minus}) {
      const std::optional<Type> t = type_of(*side, nodes);
      if (t && !is_map(*t)) {
        report(side->pos, "return values must be maps, got " + std::string(type_name(*t)));
      }
    }
    if (nodes > kMaxNodeCount) {
      report(fn.pos, "program has " + std::to_string(nodes) + " nodes; the limit is " +
                         std::to_string(kMaxNodeCount));
    }
  }

 private:
  void report(SourcePos pos, std::string msg) {
    diags_.push_back({Diagnostic::Severity::error, pos.line, pos.column, std::move(msg)});
  }

  std::optional<Type> type_of(const Expr& e, int& nodes) {
    ++nodes;
    switch (e.kind) {
      case Expr::Kind::number: return Type::scalar;
      case Expr::Kind::name: {
        if (auto it = env_.find(e.name); it != env_.end()) return it->second;
        if (poisoned_.count(e.name)) return std::nullopt;
        if (builtin_names().count(e.name)) {
          report(e.pos, "builtin '" + e.name + "' used without an argument list");
        } else {
          report(e.pos, "unknown identifier '" + e.name + "'");
        }
        return std::nullopt;
      }
      case Expr::Kind::list: return list_type(e, nodes);
      case Expr::Kind::call: return call_type(e, nodes);
    }
    return std::nullopt;
  }

  std::optional<Type> list_type(const Expr& e, int& nodes) {
    std::vector<std::optional<Type>> types;
    for (const ExprPtr& item : e.items) types.push_back(type_of(*item, nodes));
    if (std::any_of(types.begin(), types.end(), [](const auto& t) { return !t; })) return std::nullopt;
    if (std::all_of(types.begin(), types.end(), [](const auto& t) { return *t == Type::scalar; })) {
      return Type::scalar_list;
    }
    if (std::all_of(types.begin(), types.end(), [](const auto& t) { return is_map(*t); })) {
      return Type::map_list;
    }
    if (std::all_of(types.begin(), types.end(), [](const auto& t) { return *t == Type::scalar_list; })) {
      // Matrix literal: every row a list literal of the same length.
      std::size_t width = 0;
      for (const ExprPtr& row : e.items) {
        if (row->kind != Expr::Kind::list) {
          report(row->pos, "matrix rows must be written as list literals");
          return std::nullopt;
        }
        if (width == 0) width = row->items.size();
        if (row->items.size() != width) {
          report(row->pos, "matrix rows must all have " + std::to_string(width) + " entries");
          return std::nullopt;
        }
      }
      return Type::kernel;
    }
    report(e.pos, "list elements must be all scalars, all maps, or all rows of a matrix");
    return std::nullopt;
  }

  std::optional<Type> call_type(const Expr& e, int& nodes) {
    const auto sig = signatures().find(e.name);
    if (sig == signatures().end()) {
      for (const ExprPtr& a : e.items) type_of(*a, nodes);
      report(e.pos, env_.count(e.name) ? "'" + e.name + "' is not a function"
                                       : "unknown function '" + e.name + "'");
      return std::nullopt;
    }
    std::vector<Type> args;
    bool ok = true;
    for (const ExprPtr& a : e.items) {
      const std::optional<Type> t = type_of(*a, nodes);
      if (t) args.push_back(*t);
      else ok = false;
    }
    if (e.items.size() != sig->second.arity) {
      report(e.pos, "'" + e.name + "' expects " + std::to_string(sig->second.arity) + " argument" +
                        (sig->second.arity == 1 ? "" : "s") + ", got " +
                        std::to_string(e.items.size()));
      return std::nullopt;
    }
    if (!ok) return std::nullopt;
    const std::optional<Type> result = apply(e.name, args);
    if (!result) {
      std::string got;
      for (std::size_t i = 0; i < args.size(); ++i) {
        if (i) got += ", ";
        got += type_name(args[i]);
      }
      report(e.pos, "argument types (" + got + ") do not fit " + sig->second.usage);
    }
    return result;
  }

  static std::optional<Type> apply(std::string_view f, const std::vector<Type>& a) {
    const auto S = Type::scalar, K = Type::kernel;
    if (f == "conv" || f == "corr" || f == "absconv") {
      if (is_map(a[0]) && a[1] == K) return Type::map;
    } else if (f == "abs") {
      if (a[0] == K) return K;
      if (is_value(a[0])) return widen(a[0], S);
    } else if (f == "sqrt") {
      if (is_value(a[0])) return widen(a[0], S);
    } else if (f == "pow" || f == "recip") {
      if (is_value(a[0]) && a[1] == S) return widen(a[0], S);
    } else if (f == "add" || f == "sub") {
      if (a[0] == K && a[1] == K) return K;
      if (is_value(a[0]) && is_value(a[1])) return widen(a[0], a[1]);
    } else if (f == "mul") {
      if ((a[0] == K && a[1] == S) || (a[0] == S && a[1] == K)) return K;
      if (is_value(a[0]) && is_value(a[1])) return widen(a[0], a[1]);
    } else if (f == "div") {
      if (a[0] == K && a[1] == S) return K;
      if (is_value(a[0]) && is_value(a[1])) return widen(a[0], a[1]);
    } else if (f == "min" || f == "max") {
      if (is_value(a[0]) && is_value(a[1])) return widen(a[0], a[1]);
    } else if (f == "wsum") {
      if (a[0] == Type::map_list && a[1] == Type::scalar_list) return Type::map;
    } else if (f == "clamp_top" || f == "floor_to_inf") {
      if (is_map(a[0]) && a[1] == S) return Type::map;
    } else if (f == "wet_boundary") {
      if (is_map(a[0]) && a[1] == Type::image && a[2] == S && a[3] == S) return Type::map;
    } else if (f == "kb") {
      return K;
    } else if (f == "avg" || f == "db8") {
      if (a[0] == S) return K;
    } else if (f == "gauss") {
      if (a[0] == S && a[1] == S) return K;
    } else if (f == "outer") {
      if (a[0] == Type::scalar_list && a[1] == Type::scalar_list) return K;
    } else if (f == "flip") {
      if (a[0] == K) return K;
    } else if (f == "transpose") {
      if (a[0] == K) return K;
      if (is_map(a[0])) return Type::map;
    }
    return std::nullopt;
  }

  Diagnostics& diags_;
  std::map<std::string, Type, std::less<>> env_;
  std::set<std::string, std::less<>> poisoned_;
};

}  // namespace

ParseResult parse(std::string_view source) {
  ParseResult result;
  std::vector<Token> toks = detail::lex(source, result.diagnostics);
  if (!result.diagnostics.empty()) return result;
  Function fn;
  try {
    fn = Parser(std::move(toks), result.diagnostics).parse_function();
  } catch (const SyntaxError&) {
    return result;
  }
  int nodes = 0;
  Checker(result.diagnostics).check(fn, nodes);
  if (!result.diagnostics.empty()) return result;
  result.program = DslProgram{std::string(source), std::move(fn), nodes};
  return result;
}

std::string rename_version(std::string_view source, int k) {
  if (k < 0) throw std::invalid_argument("version index must be non-negative");
  const ParseResult parsed = parse(source);
  if (!parsed.ok()) {
    throw std::invalid_argument("cannot rename an invalid program:\n" +
                                format_diagnostics(parsed.diagnostics));
  }
  // Locate the name token: the identifier right after 'fn'.
  Diagnostics unused;
  const std::vector<Token> toks = detail::lex(source, unused);
  const Token& name = toks.at(1);
  std::string out(source.substr(0, name.offset));
  out += strip_version(name.text) + "_v" + std::to_string(k);
  out += source.substr(name.offset + name.text.size());
  return out;
}

std::string extract_code_block(std::string_view response) {
  const std::size_t open = response.find("```");
  if (open == std::string_view::npos) return std::string(response);
  const std::size_t body = response.find('\n', open);
  if (body == std::string_view::npos) return std::string(response);
  const std::size_t close = response.find("```", body + 1);
  const std::string_view inner =
      response.substr(body + 1, close == std::string_view::npos ? std::string_view::npos : close - body - 1);
  return std::string(inner);
}

}  // namespace stegcost::dsl
