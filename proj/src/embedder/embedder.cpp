#include "stegcost/embedder.hpp"

#include <cmath>
#include <string>

#include "stegcost/parallel.hpp"
#include "stegcost/prng.hpp"

namespace stegcost {

namespace {

const double kLog2Of3 = std::log2(3.0);

struct PixelProbs {
  double plus;
  double minus;
};

inline double gibbs_weight(double rho, double lambda) {
  if (std::isinf(rho)) return 0.0;
  return std::exp(-lambda * rho);
}

inline PixelProbs pixel_probs(double rho_plus, double rho_minus, double lambda) {
  const double wp = gibbs_weight(rho_plus, lambda);
  const double wm = gibbs_weight(rho_minus, lambda);
  const double z = 1.0 + wp + wm;
  return {wp / z, wm / z};
}

inline double xlog2x(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

inline double pixel_entropy(double p_plus, double p_minus) {
  const double p0 = std::max(0.0, 1.0 - p_plus - p_minus);
  return -xlog2x(p_plus) - xlog2x(p_minus) - xlog2x(p0);
}

void check_shapes(const CostPair& costs) {
  if (!costs.plus.same_shape(costs.minus)) throw DimensionError("cost maps differ in shape");
}

// Serial so the sum, and hence lambda, does not depend on the thread count.
double entropy_at(const CostPair& costs, double lambda) {
  double total = 0.0;
  for (std::size_t i = 0; i < costs.plus.size(); ++i) {
    const PixelProbs p = pixel_probs(costs.plus[i], costs.minus[i], lambda);
    total += pixel_entropy(p.plus, p.minus);
  }
  return total;
}

}  // namespace

RealMap ProbabilityMap::total() const {
  RealMap out = plus;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += minus[i];
  return out;
}

ProbabilityMap change_probabilities(const CostPair& costs, double lambda) {
  check_shapes(costs);
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be nonnegative");
  ProbabilityMap pm{RealMap(costs.plus.width(), costs.plus.height()),
                    RealMap(costs.plus.width(), costs.plus.height())};
  const auto n = static_cast<std::ptrdiff_t>(costs.plus.size());
  STEGCOST_OMP("omp parallel for schedule(static)")
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const PixelProbs p = pixel_probs(costs.plus[k], costs.minus[k], lambda);
    pm.plus[k] = p.plus;
    pm.minus[k] = p.minus;
  }
  return pm;
}

double payload_entropy(const ProbabilityMap& pm) {
  double total = 0.0;
  for (std::size_t i = 0; i < pm.plus.size(); ++i) total += pixel_entropy(pm.plus[i], pm.minus[i]);
  return total;
}

double payload_capacity(const CostPair& costs) { return entropy_at(costs, 0.0); }

LambdaSolution solve_lambda(const CostPair& costs, double alpha, double tol) {
  check_shapes(costs);
  if (!(alpha > 0.0)) throw std::invalid_argument("embedding rate must be positive");
  if (!(tol > 0.0)) throw std::invalid_argument("payload tolerance must be positive");
  const auto n = static_cast<double>(costs.plus.size());
  const double target = alpha * n;
  if (alpha > kLog2Of3 + 1e-12) {
    throw InfeasiblePayload("rate " + std::to_string(alpha) + " bpp exceeds the ternary limit log2(3)");
  }

  const double capacity = entropy_at(costs, 0.0);
  if (capacity <= 0.0) throw InfeasiblePayload("every pixel is wet; no payload can be embedded");
  // Within rounding of the maximum-entropy point, lambda = 0 is the answer.
  if (capacity <= target + 1e-12 * n) {
    if (capacity / n < alpha - tol) {
      throw InfeasiblePayload("rate " + std::to_string(alpha) + " bpp exceeds capacity " +
                              std::to_string(capacity / n) + " bpp");
    }
    return {0.0, capacity, 0};
  }

  int iterations = 0;
  double lo = 0.0;
  double hi = 1.0;
  double h_hi = entropy_at(costs, hi);
  while (h_hi > target) {
    lo = hi;
    hi *= 2.0;
    if (++iterations >= kMaxSolverIterations || !std::isfinite(hi)) {
      throw SolverError("could not bracket lambda within " + std::to_string(kMaxSolverIterations) +
                        " iterations");
    }
    h_hi = entropy_at(costs, hi);
  }

  double lambda = hi;
  double entropy = h_hi;
  while (entropy != target && iterations < kMaxSolverIterations && hi - lo > 1e-12 * hi) {
    const double mid = 0.5 * (lo + hi);
    const double h_mid = entropy_at(costs, mid);
    ++iterations;
    if (h_mid > target) {
      lo = mid;
    } else {
      hi = mid;
    }
    lambda = mid;
    entropy = h_mid;
  }
  if (std::fabs(entropy / n - alpha) > tol) {
    throw SolverError("lambda search ended " + std::to_string(std::fabs(entropy / n - alpha)) +
                      " bpp from the target after " + std::to_string(iterations) + " iterations");
  }
  return {lambda, entropy, iterations};
}

Simulation simulate_embedding(const GrayImage& cover, const ProbabilityMap& pm, std::uint64_t seed) {
  if (!pm.plus.same_shape(cover) || !pm.minus.same_shape(cover)) {
    throw DimensionError("probability map does not match the cover");
  }
  Xorshift64Star rng(seed);
  Simulation out{cover, 0};
  for (std::size_t i = 0; i < cover.size(); ++i) {
    const double u = rng.uniform();
    int delta = 0;
    if (u < pm.plus[i]) {
      delta = 1;
    } else if (u < pm.plus[i] + pm.minus[i]) {
      delta = -1;
    }
    if (delta == 0) continue;
    const int y = static_cast<int>(cover[i]) + delta;
    if (y < 0 || y > 255) {
      throw InvariantViolation("embedding change at pixel " + std::to_string(i) +
                               " leaves [0, 255]; the cost map failed to wet it");
    }
    out.stego[i] = static_cast<std::uint8_t>(y);
    ++out.realized_changes;
  }
  return out;
}

double distortion(const CostPair& costs, const GrayImage& cover, const GrayImage& stego) {
  if (!costs.plus.same_shape(cover) || !(cover.width() == stego.width() && cover.height() == stego.height())) {
    throw DimensionError("distortion inputs differ in shape");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < cover.size(); ++i) {
    const int d = static_cast<int>(stego[i]) - static_cast<int>(cover[i]);
    if (d == 0) continue;
    if (d > 1 || d < -1) {
      throw InvariantViolation("pixel " + std::to_string(i) + " changed by more than 1");
    }
    const double rho = d > 0 ? costs.plus[i] : costs.minus[i];
    if (std::isinf(rho)) {
      throw InvariantViolation("pixel " + std::to_string(i) + " changed in a wet direction");
    }
    total += rho;
  }
  return total;
}

StegoResult embed(const GrayImage& cover, const CostPair& costs, double alpha, std::uint64_t seed,
                  double tol) {
  const LambdaSolution sol = solve_lambda(costs, alpha, tol);
  const ProbabilityMap pm = change_probabilities(costs, sol.lambda);
  Simulation sim = simulate_embedding(cover, pm, seed);
  StegoResult out;
  out.total_distortion = distortion(costs, cover, sim.stego);
  out.stego = std::move(sim.stego);
  out.realized_changes = sim.realized_changes;
  out.target_bits = alpha * static_cast<double>(cover.size());
  out.entropy_bits = sol.entropy_bits;
  out.lambda = sol.lambda;
  return out;
}

}  // namespace stegcost
