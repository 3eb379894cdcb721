#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <new>
#include <stdexcept>

#include "stegcost/conv.hpp"
#include "stegcost/costs.hpp"
#include "stegcost/dsl.hpp"

namespace stegcost::dsl {

std::string_view fault_name(FaultKind k) {
  switch (k) {
    case FaultKind::op_limit: return "op_limit";
    case FaultKind::kernel_bound: return "kernel_bound";
    case FaultKind::timeout: return "timeout";
    case FaultKind::nan: return "nan";
    case FaultKind::dimension: return "dimension";
    case FaultKind::invalid_argument: return "invalid_argument";
    case FaultKind::invalid_cost: return "invalid_cost";
  }
  return "?";
}

namespace {

using MapPtr = std::shared_ptr<const RealMap>;
using Value = std::variant<double, MapPtr, Kernel, std::vector<double>, std::vector<MapPtr>>;

struct Fault {
  RuntimeFault fault;
};

class Machine {
 public:
  Machine(const GrayImage& img, const Limits& limits)
      : limits_(limits),
        start_(std::chrono::steady_clock::now()),
        width_(img.width()),
        height_(img.height()) {}

  CostPair run(const Function& fn, MapPtr image) {
    env_[fn.param] = image;
    for (const LetBinding& b : fn.lets) env_[b.name] = eval(*b.value);
    CostPair out{finish(*fn.plus), finish(*fn.minus)};
    return out;
  }

 private:
  [[noreturn]] static void fail(FaultKind kind, SourcePos pos, std::string msg) {
    throw Fault{RuntimeFault{kind, pos, std::move(msg)}};
  }

  void charge(std::int64_t units, SourcePos pos) {
    ops_ += units;
    if (ops_ > limits_.max_ops) {
      fail(FaultKind::op_limit, pos,
           "work limit of " + std::to_string(limits_.max_ops) + " operations exceeded");
    }
  }

  void check_clock(SourcePos pos) const {
    if (std::chrono::steady_clock::now() - start_ > limits_.time_budget) {
      fail(FaultKind::timeout, pos, "time budget exceeded");
    }
  }

  void check_kernel_extent(double rows, double cols, SourcePos pos) const {
    if (rows > limits_.max_kernel || cols > limits_.max_kernel) {
      fail(FaultKind::kernel_bound, pos,
           "kernel larger than " + std::to_string(limits_.max_kernel) + " taps per side");
    }
  }

  Kernel make_kernel(int rows, int cols, std::vector<double> taps, SourcePos pos) const {
    check_kernel_extent(rows, cols, pos);
    for (double v : taps) {
      if (!std::isfinite(v)) fail(FaultKind::invalid_argument, pos, "kernel taps must be finite");
    }
    return Kernel(rows, cols, std::move(taps));
  }

  MapPtr checked(RealMap m, SourcePos pos) const {
    if (m.has_nan()) fail(FaultKind::nan, pos, "operation produced NaN");
    return std::make_shared<const RealMap>(std::move(m));
  }

  RealMap finish(const Expr& e) {
    const Value v = eval(e);
    const MapPtr* m = std::get_if<MapPtr>(&v);
    if (m == nullptr) fail(FaultKind::invalid_argument, e.pos, "returned value is not a map");
    if ((*m)->width() != width_ || (*m)->height() != height_) {
      fail(FaultKind::dimension, e.pos, "returned map does not have the image's shape");
    }
    for (double x : (*m)->values()) {
      if (std::isnan(x)) fail(FaultKind::nan, e.pos, "returned map contains NaN");
      if (x < 0.0) fail(FaultKind::invalid_cost, e.pos, "returned map contains negative costs");
    }
    return **m;
  }

  static double scalar(const Value& v) { return std::get<double>(v); }
  static const RealMap& map(const Value& v) { return *std::get<MapPtr>(v); }
  static const Kernel& kernel(const Value& v) { return std::get<Kernel>(v); }

  double integer_arg(const Value& v, SourcePos pos, const char* what) const {
    const double x = scalar(v);
    if (!(std::isfinite(x) && x == std::floor(x))) {
      fail(FaultKind::invalid_argument, pos, std::string(what) + " must be an integer");
    }
    return x;
  }

  // Elementwise application over scalars and maps with scalar broadcasting.
  Value elementwise(const Value& a, const Value& b, SourcePos pos,
                    const std::function<double(double, double)>& f) {
    const MapPtr* ma = std::get_if<MapPtr>(&a);
    const MapPtr* mb = std::get_if<MapPtr>(&b);
    if (!ma && !mb) {
      const double r = f(scalar(a), scalar(b));
      if (std::isnan(r)) fail(FaultKind::nan, pos, "operation produced NaN");
      return r;
    }
    if (ma && mb && !(*ma)->same_shape(**mb)) {
      fail(FaultKind::dimension, pos, "map shapes differ");
    }
    const RealMap& shape = ma ? **ma : **mb;
    charge(static_cast<std::int64_t>(shape.size()), pos);
    RealMap out(shape.width(), shape.height());
    const std::size_t n = out.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double x = ma ? (**ma)[i] : scalar(a);
      const double y = mb ? (**mb)[i] : scalar(b);
      out[i] = f(x, y);
    }
    return checked(std::move(out), pos);
  }

  Value unary(const Value& a, SourcePos pos, const std::function<double(double)>& f) {
    return elementwise(a, 0.0, pos, [&f](double x, double) { return f(x); });
  }

  Value eval(const Expr& e) {
    charge(1, e.pos);
    Value v = eval_node(e);
    check_clock(e.pos);
    return v;
  }

  Value eval_node(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::number: return e.number;
      case Expr::Kind::name: return env_.at(e.name);
      case Expr::Kind::list: return eval_list(e);
      case Expr::Kind::call: break;
    }
    std::vector<Value> args;
    args.reserve(e.items.size());
    for (const ExprPtr& a : e.items) args.push_back(eval(*a));
    return call(e.name, args, e.pos);
  }

  Value eval_list(const Expr& e) {
    std::vector<Value> items;
    for (const ExprPtr& item : e.items) items.push_back(eval(*item));
    if (std::holds_alternative<double>(items.front())) {
      std::vector<double> out;
      for (const Value& v : items) out.push_back(scalar(v));
      return out;
    }
    if (std::holds_alternative<MapPtr>(items.front())) {
      std::vector<MapPtr> out;
      for (const Value& v : items) out.push_back(std::get<MapPtr>(v));
      return out;
    }
    // Matrix literal.
    const auto rows = static_cast<int>(items.size());
    const auto cols = static_cast<int>(std::get<std::vector<double>>(items.front()).size());
    std::vector<double> taps;
    for (const Value& row : items) {
      const auto& r = std::get<std::vector<double>>(row);
      taps.insert(taps.end(), r.begin(), r.end());
    }
    return make_kernel(rows, cols, std::move(taps), e.pos);
  }

  Value convolve(const std::string& f, const Value& src, const Kernel& k, SourcePos pos) {
    check_kernel_extent(k.rows(), k.cols(), pos);
    const auto nnz = std::count_if(k.taps().begin(), k.taps().end(), [](double t) { return t != 0.0; });
    charge(static_cast<std::int64_t>(map(src).size()) * std::max<std::int64_t>(nnz, 1), pos);
    if (f == "conv") return checked(conv2_mirror(map(src), k), pos);
    if (f == "corr") return checked(corr2_mirror(map(src), k), pos);
    return checked(abs_conv2_mirror(map(src), k), pos);
  }

  Value call(const std::string& f, const std::vector<Value>& a, SourcePos pos) {
    if (f == "conv" || f == "corr" || f == "absconv") return convolve(f, a[0], kernel(a[1]), pos);
    if (f == "abs") {
      if (const Kernel* k = std::get_if<Kernel>(&a[0])) return k->abs();
      return unary(a[0], pos, [](double x) { return std::fabs(x); });
    }
    if (f == "sqrt") return unary(a[0], pos, [](double x) { return std::sqrt(x); });
    if (f == "pow") {
      const double p = scalar(a[1]);
      return unary(a[0], pos, [p](double x) { return std::pow(x, p); });
    }
    if (f == "recip") {
      const double eps = scalar(a[1]);
      return unary(a[0], pos, [eps](double x) { return 1.0 / (x + eps); });
    }
    if (f == "add" || f == "sub") {
      const double sign = f == "add" ? 1.0 : -1.0;
      if (const Kernel* k = std::get_if<Kernel>(&a[0])) {
        const Kernel& r = kernel(a[1]);
        if (k->rows() != r.rows() || k->cols() != r.cols()) {
          fail(FaultKind::dimension, pos, "kernel shapes differ");
        }
        std::vector<double> taps(k->taps().begin(), k->taps().end());
        for (std::size_t i = 0; i < taps.size(); ++i) taps[i] += sign * r.taps()[i];
        return make_kernel(k->rows(), k->cols(), std::move(taps), pos);
      }
      if (sign > 0) return elementwise(a[0], a[1], pos, [](double x, double y) { return x + y; });
      return elementwise(a[0], a[1], pos, [](double x, double y) { return x - y; });
    }
    if (f == "mul" || f == "div") {
      const bool kernel_first = std::holds_alternative<Kernel>(a[0]);
      if (kernel_first || std::holds_alternative<Kernel>(a[1])) {
        const Kernel& k = kernel(a[kernel_first ? 0 : 1]);
        const double s = scalar(a[kernel_first ? 1 : 0]);
        const double factor = f == "mul" ? s : 1.0 / s;
        std::vector<double> taps(k.taps().begin(), k.taps().end());
        for (double& t : taps) t *= factor;
        return make_kernel(k.rows(), k.cols(), std::move(taps), pos);
      }
      if (f == "mul") return elementwise(a[0], a[1], pos, [](double x, double y) { return x * y; });
      return elementwise(a[0], a[1], pos, [](double x, double y) { return x / y; });
    }
    if (f == "min") return elementwise(a[0], a[1], pos, [](double x, double y) { return std::min(x, y); });
    if (f == "max") return elementwise(a[0], a[1], pos, [](double x, double y) { return std::max(x, y); });
    if (f == "wsum") return wsum(std::get<std::vector<MapPtr>>(a[0]), std::get<std::vector<double>>(a[1]), pos);
    if (f == "clamp_top") {
      const double fraction = scalar(a[1]);
      if (!(fraction >= 0.0 && fraction <= 1.0)) {
        fail(FaultKind::invalid_argument, pos, "clamp_top fraction must lie in [0, 1]");
      }
      charge(static_cast<std::int64_t>(map(a[0]).size()), pos);
      return checked(clamp_top(map(a[0]), fraction), pos);
    }
    if (f == "floor_to_inf") {
      const double theta = scalar(a[1]);
      return unary(a[0], pos, [theta](double x) { return x < theta ? kInf : x; });
    }
    if (f == "wet_boundary") return wet_boundary(a, pos);
    if (f == "kb") return kb_kernel();
    if (f == "avg") {
      const double size = integer_arg(a[0], pos, "avg size");
      check_kernel_extent(size, size, pos);
      if (size < 1 || static_cast<long long>(size) % 2 == 0) {
        fail(FaultKind::invalid_argument, pos, "avg size must be a positive odd integer");
      }
      return avg_kernel(static_cast<int>(size));
    }
    if (f == "gauss") {
      const double sigma = scalar(a[0]), extent = scalar(a[1]);
      if (!(sigma > 0.0 && extent > 0.0 && std::isfinite(sigma * extent))) {
        fail(FaultKind::invalid_argument, pos, "gauss needs positive finite sigma and L");
      }
      const double side = 2.0 * std::ceil(extent * sigma - 0.5) + 1.0;
      check_kernel_extent(side, side, pos);
      return gaussian_kernel(sigma, extent);
    }
    if (f == "db8") {
      const double dir = integer_arg(a[0], pos, "db8 direction");
      if (dir < 0 || dir > 2) fail(FaultKind::invalid_argument, pos, "db8 direction must be 0, 1 or 2");
      return db8_bank().kernels[static_cast<std::size_t>(dir)];
    }
    if (f == "outer") {
      const auto& col = std::get<std::vector<double>>(a[0]);
      const auto& row = std::get<std::vector<double>>(a[1]);
      std::vector<double> taps;
      check_kernel_extent(static_cast<double>(col.size()), static_cast<double>(row.size()), pos);
      for (double c : col)
        for (double r : row) taps.push_back(c * r);
      return make_kernel(static_cast<int>(col.size()), static_cast<int>(row.size()), std::move(taps), pos);
    }
    if (f == "flip") return kernel(a[0]).flipped();
    if (f == "transpose") {
      if (const Kernel* k = std::get_if<Kernel>(&a[0])) return k->transposed();
      charge(static_cast<std::int64_t>(map(a[0]).size()), pos);
      return checked(map(a[0]).transposed(), pos);
    }
    fail(FaultKind::invalid_argument, pos, "unknown builtin '" + f + "'");
  }

  Value wsum(const std::vector<MapPtr>& maps, const std::vector<double>& weights, SourcePos pos) {
    if (maps.size() != weights.size()) {
      fail(FaultKind::invalid_argument, pos,
           "wsum got " + std::to_string(maps.size()) + " maps and " + std::to_string(weights.size()) +
               " weights");
    }
    const RealMap& first = *maps.front();
    RealMap out(first.width(), first.height(), 0.0);
    for (std::size_t k = 0; k < maps.size(); ++k) {
      if (!maps[k]->same_shape(first)) fail(FaultKind::dimension, pos, "map shapes differ");
      charge(static_cast<std::int64_t>(out.size()), pos);
      // A zero weight drops its map entirely, so 0 * inf never arises.
      if (weights[k] == 0.0) continue;
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += weights[k] * (*maps[k])[i];
    }
    return checked(std::move(out), pos);
  }

  Value wet_boundary(const std::vector<Value>& a, SourcePos pos) {
    const RealMap& costs = map(a[0]);
    const RealMap& pixels = map(a[1]);
    const double tau = scalar(a[2]);
    const double sign = scalar(a[3]);
    if (sign != 1.0 && sign != -1.0) fail(FaultKind::invalid_argument, pos, "wet_boundary sign must be 1 or -1");
    if (std::isnan(tau)) fail(FaultKind::nan, pos, "wet_boundary tau is NaN");
    if (!costs.same_shape(pixels)) fail(FaultKind::dimension, pos, "map shapes differ");
    charge(static_cast<std::int64_t>(costs.size()), pos);
    RealMap out = costs;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const bool wet = sign > 0 ? pixels[i] > 255.0 - tau : pixels[i] < tau;
      if (wet) out[i] = kInf;
    }
    return checked(std::move(out), pos);
  }

  const Limits& limits_;
  std::chrono::steady_clock::time_point start_;
  int width_;
  int height_;
  std::int64_t ops_ = 0;
  std::map<std::string, Value, std::less<>> env_;
};

}  // namespace

Outcome interpret(const DslProgram& prog, const GrayImage& img, const Limits& limits) {
  if (img.empty()) return RuntimeFault{FaultKind::dimension, prog.ast.pos, "empty image"};
  try {
    Machine m(img, limits);
    return m.run(prog.ast, std::make_shared<const RealMap>(RealMap::from_image(img)));
  } catch (const Fault& f) {
    return f.fault;
  } catch (const DimensionError& e) {
    return RuntimeFault{FaultKind::dimension, prog.ast.pos, e.what()};
  } catch (const std::bad_alloc&) {
    return RuntimeFault{FaultKind::op_limit, prog.ast.pos, "out of memory"};
  } catch (const std::invalid_argument& e) {
    return RuntimeFault{FaultKind::invalid_argument, prog.ast.pos, e.what()};
  } catch (const std::bad_variant_access&) {
    // The type checker rules this out for validated programs.
    return RuntimeFault{FaultKind::invalid_argument, prog.ast.pos, "argument of the wrong type"};
  }
}

CostPair interpret_or_throw(const DslProgram& prog, const GrayImage& img, const Limits& limits) {
  Outcome out = interpret(prog, img, limits);
  if (auto* fault = std::get_if<RuntimeFault>(&out)) {
    throw std::runtime_error(std::string(fault_name(fault->kind)) + " at " +
                             std::to_string(fault->pos.line) + ":" +
                             std::to_string(fault->pos.column) + ": " + fault->message);
  }
  return std::get<CostPair>(std::move(out));
}

}  // namespace stegcost::dsl
