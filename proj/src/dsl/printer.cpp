#include <charconv>
#include <map>

#include "stegcost/dsl.hpp"

namespace stegcost::dsl {

namespace {

void print_number(std::string& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

void print_expr(std::string& out, const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::number: print_number(out, e.number); return;
    case Expr::Kind::name: out += e.name; return;
    case Expr::Kind::call:
    case Expr::Kind::list: {
      if (e.kind == Expr::Kind::call) out += e.name + "(";
      else out += "[";
      for (std::size_t i = 0; i < e.items.size(); ++i) {
        if (i) out += ", ";
        print_expr(out, *e.items[i]);
      }
      out += e.kind == Expr::Kind::call ? ")" : "]";
      return;
    }
  }
}

using Renaming = std::map<std::string, std::string, std::less<>>;

bool expr_equivalent(const Expr& a, const Expr& b, const Renaming& ra, const Renaming& rb) {
  if (a.kind != b.kind || a.items.size() != b.items.size()) return false;
  switch (a.kind) {
    case Expr::Kind::number:
      return a.number == b.number;
    case Expr::Kind::name: {
      const auto ia = ra.find(a.name), ib = rb.find(b.name);
      if (ia == ra.end() || ib == rb.end()) return a.name == b.name;
      return ia->second == ib->second;
    }
    case Expr::Kind::call:
      if (a.name != b.name) return false;
      [[fallthrough]];
    case Expr::Kind::list:
      for (std::size_t i = 0; i < a.items.size(); ++i) {
        if (!expr_equivalent(*a.items[i], *b.items[i], ra, rb)) return false;
      }
      return true;
  }
  return false;
}

}  // namespace

std::string print(const Function& fn) {
  std::string out = "fn " + fn.name + "(" + fn.param + ") {\n";
  for (const LetBinding& b : fn.lets) {
    out += "  let " + b.name + " = ";
    print_expr(out, *b.value);
    out += ";\n";
  }
  out += "  return (";
  print_expr(out, *fn.plus);
  out += ", ";
  print_expr(out, *fn.minus);
  out += ");\n}\n";
  return out;
}

std::size_t canonical_length(const DslProgram& p) { return print(p.ast).size(); }

bool alpha_equivalent(const Function& a, const Function& b) {
  if (a.name != b.name || a.lets.size() != b.lets.size()) return false;
  // Binders map to their position: the parameter is #0, let i is #(i+1).
  Renaming ra{{a.param, "#0"}}, rb{{b.param, "#0"}};
  for (std::size_t i = 0; i < a.lets.size(); ++i) {
    if (!expr_equivalent(*a.lets[i].value, *b.lets[i].value, ra, rb)) return false;
    ra[a.lets[i].name] = "#" + std::to_string(i + 1);
    rb[b.lets[i].name] = "#" + std::to_string(i + 1);
  }
  return expr_equivalent(*a.plus, *b.plus, ra, rb) && expr_equivalent(*a.minus, *b.minus, ra, rb);
}

}  // namespace stegcost::dsl
