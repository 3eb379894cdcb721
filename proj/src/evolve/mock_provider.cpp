#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>

#include "stegcost/evolve.hpp"
#include "stegcost/llm.hpp"

namespace stegcost::evolve {

namespace {

using dsl::Expr;
using dsl::ExprPtr;

// A node together with where it sits: callee of the enclosing call (or
// "list" for list elements under a call) and argument index.
struct Site {
  const Expr* node;
  std::string parent;
  std::size_t arg;
};

void collect(const ExprPtr& e, const std::string& parent, std::size_t arg, std::vector<Site>& out) {
  out.push_back({e.get(), parent, arg});
  const std::string here = e->kind == Expr::Kind::call ? e->name : parent + "[]";
  for (std::size_t i = 0; i < e->items.size(); ++i) collect(e->items[i], here, i, out);
}

std::vector<Site> all_sites(const dsl::Function& fn) {
  std::vector<Site> out;
  for (const auto& let : fn.lets) collect(let.value, "", 0, out);
  collect(fn.plus, "", 0, out);
  collect(fn.minus, "", 0, out);
  return out;
}

// Copies fn, replacing the node `target` (compared by address) with f(node).
ExprPtr rewrite(const ExprPtr& e, const Expr* target, const std::function<ExprPtr(const Expr&)>& f) {
  if (e.get() == target) return f(*e);
  bool changed = false;
  std::vector<ExprPtr> items;
  for (const ExprPtr& it : e->items) {
    items.push_back(rewrite(it, target, f));
    changed = changed || items.back() != it;
  }
  if (!changed) return e;
  auto copy = std::make_shared<Expr>(*e);
  copy->items = std::move(items);
  return copy;
}

dsl::Function rewrite(const dsl::Function& fn, const Expr* target, const std::function<ExprPtr(const Expr&)>& f) {
  dsl::Function out = fn;
  for (auto& let : out.lets) let.value = rewrite(let.value, target, f);
  out.plus = rewrite(out.plus, target, f);
  out.minus = rewrite(out.minus, target, f);
  return out;
}

ExprPtr number(double v) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::number;
  e->number = v;
  return e;
}

ExprPtr call(std::string name, std::vector<ExprPtr> args) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::call;
  e->name = std::move(name);
  e->items = std::move(args);
  return e;
}

double four_digits(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return std::strtod(buf, nullptr);
}

bool is_weight(const Site& s) {
  if (s.node->kind != Expr::Kind::number) return false;
  const std::string& p = s.parent;
  if (p == "pow" || p == "recip" || p == "floor_to_inf" || p == "clamp_top") return s.arg == 1;
  if (p == "gauss") return s.arg == 0;
  if (p == "wsum[]") return true;
  return p == "mul" || p == "div" || p == "add" || p == "sub";
}

bool is_smoother(const Expr& e) {
  return e.kind == Expr::Kind::call && (e.name == "avg" || e.name == "gauss");
}

// Visits candidate indices in a seeded order and returns the first mutation
// that type-checks.
std::string first_valid(std::size_t count, Xorshift64Star& rng, const std::function<std::string(std::size_t)>& try_site) {
  if (count == 0) return "";
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  for (std::size_t i = count - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
  for (std::size_t i : order) {
    std::string s = try_site(i);
    if (!s.empty()) return s;
  }
  return "";
}

std::string finish(dsl::Function fn, const std::string& target_name) {
  fn.name = target_name;
  const std::string text = dsl::print(fn);
  return dsl::parse(text).ok() ? text : "";
}

}  // namespace

MockProvider::MockProvider(std::uint64_t seed, double fault_rate) : rng_(seed), fault_rate_(fault_rate) {}

std::string MockProvider::apply_rule(Rule rule, const std::string& source, const std::string& target_name,
                                     Xorshift64Star& rng) {
  const dsl::ParseResult parsed = dsl::parse(source);
  if (!parsed.ok()) return "";
  const dsl::Function& fn = parsed.program->ast;
  const std::vector<Site> sites = all_sites(fn);

  switch (rule) {
    case Rule::perturb_weight: {
      std::vector<const Site*> weights;
      for (const Site& s : sites)
        if (is_weight(s)) weights.push_back(&s);
      const double factor = std::exp((rng.uniform() - 0.5) * 0.5);
      return first_valid(weights.size(), rng, [&](std::size_t i) {
        const Expr* node = weights[i]->node;
        double v = four_digits(node->number * factor);
        if (weights[i]->parent == "clamp_top") v = std::min(v, 1.0);
        if (v == node->number) v = four_digits(node->number + (node->number == 0.0 ? 0.1 : node->number * 0.05));
        return finish(rewrite(fn, node, [v](const Expr&) { return number(v); }), target_name);
      });
    }
    case Rule::swap_kernel: {
      std::vector<const Expr*> smoothers;
      for (const Site& s : sites)
        if (is_smoother(*s.node)) smoothers.push_back(s.node);
      return first_valid(smoothers.size(), rng, [&](std::size_t i) {
        const Expr& k = *smoothers[i];
        if (k.items.empty() || k.items[0]->kind != Expr::Kind::number) return std::string();
        const double a = k.items[0]->number;
        ExprPtr replacement;
        if (k.name == "avg") {
          replacement = call("gauss", {number(four_digits(a / 4.0)), number(4)});
        } else {
          const double side = 2.0 * std::round(2.0 * a) + 1.0;
          replacement = call("avg", {number(std::max(1.0, side))});
        }
        return finish(rewrite(fn, &k, [&](const Expr&) { return replacement; }), target_name);
      });
    }
    case Rule::insert_smoothing: {
      const bool box = rng.uniform() < 0.5;
      return first_valid(fn.lets.size(), rng, [&](std::size_t i) {
        dsl::Function out = fn;
        ExprPtr kernel = box ? call("avg", {number(3)}) : call("gauss", {number(1), number(3)});
        out.lets[i].value = call("conv", {out.lets[i].value, kernel});
        return finish(out, target_name);
      });
    }
    case Rule::remove_smoothing: {
      std::vector<const Expr*> stages;
      for (const Site& s : sites)
        if (s.node->kind == Expr::Kind::call && s.node->name == "conv" && s.node->items.size() == 2 &&
            is_smoother(*s.node->items[1]))
          stages.push_back(s.node);
      return first_valid(stages.size(), rng, [&](std::size_t i) {
        return finish(rewrite(fn, stages[i], [](const Expr& e) { return e.items[0]; }), target_name);
      });
    }
    case Rule::malformed: {
      dsl::Function renamed = fn;
      renamed.name = target_name;
      std::string text = dsl::print(renamed);
      if (rng.uniform() < 0.5) return text.substr(0, 1 + rng.below(text.size() - 1));
      const std::size_t at = text.find("conv(");
      return at == std::string::npos ? text.substr(0, text.size() / 2) : text.replace(at, 4, "convolve");
    }
  }
  return "";
}

Generation MockProvider::generate(const std::string& prompt, int n) {
  Generation g;
  const std::optional<PromptParts> parts = split_prompt(prompt);
  if (!parts || parts->references.empty()) {
    for (int i = 0; i < n; ++i) g.errors.push_back("mock: prompt has no reference and placeholder");
    return g;
  }
  for (int i = 0; i < n; ++i) {
    const std::string& ref = parts->references[rng_.below(parts->references.size())];
    std::string body;
    if (rng_.uniform() < fault_rate_) {
      body = apply_rule(Rule::malformed, ref, parts->target_name, rng_);
    } else {
      const auto first = static_cast<int>(rng_.below(4));
      for (int k = 0; k < 4 && body.empty(); ++k)
        body = apply_rule(static_cast<Rule>((first + k) % 4), ref, parts->target_name, rng_);
    }
    g.responses.push_back("Here is the completed function.\n\n```scf\n" + body + "```\n");
  }
  return g;
}

Generation ReplayProvider::generate(const std::string&, int) {
  if (recorded_.empty()) throw std::runtime_error("replay: no recorded generation left");
  Generation g = std::move(recorded_.front());
  recorded_.pop_front();
  return g;
}

}  // namespace stegcost::evolve
