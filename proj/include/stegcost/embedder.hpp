#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "stegcost/costs.hpp"
#include "stegcost/image.hpp"

namespace stegcost {

/// Per-pixel probabilities of a +1 and a -1 change.
struct ProbabilityMap {
  RealMap plus;
  RealMap minus;

  int width() const { return plus.width(); }
  int height() const { return plus.height(); }
  /// p_plus + p_minus per pixel.
  RealMap total() const;
};

/// Payload cannot be carried: every pixel is wet, or alpha exceeds capacity.
class InfeasiblePayload : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A change that the cost model forbids (wet direction, |y - x| > 1, out of range).
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Gibbs change probabilities
///   p_s = exp(-lambda rho_s) / (1 + exp(-lambda rho_+) + exp(-lambda rho_-)),
/// with an infinite cost always giving exactly zero.
ProbabilityMap change_probabilities(const CostPair& costs, double lambda);

/// Ternary Shannon entropy in bits, summed over pixels.
double payload_entropy(const ProbabilityMap& pm);

/// Maximum payload in bits: log2(3) per fully dry pixel, 1 per half-wet pixel.
double payload_capacity(const CostPair& costs);

struct LambdaSolution {
  double lambda = 0.0;
  double entropy_bits = 0.0;
  int iterations = 0;
};

inline constexpr double kDefaultPayloadTolerance = 1e-3;
inline constexpr int kMaxSolverIterations = 200;

/// Finds lambda >= 0 such that payload_entropy / n is alpha within tol bits
/// per pixel. Brackets by doubling from 1, then bisects until the bracket
/// collapses to relative width 1e-12, all within 200 iterations.
LambdaSolution solve_lambda(const CostPair& costs, double alpha, double tol = kDefaultPayloadTolerance);

struct Simulation {
  GrayImage stego;
  std::size_t realized_changes = 0;
};

/// Draws one uniform per pixel in raster order from Xorshift64Star(seed):
/// +1 if u < p_plus, -1 if u < p_plus + p_minus, else unchanged.
Simulation simulate_embedding(const GrayImage& cover, const ProbabilityMap& pm, std::uint64_t seed);

/// Additive distortion of the applied changes. Throws InvariantViolation on a
/// change larger than 1 or a change in a wet direction.
double distortion(const CostPair& costs, const GrayImage& cover, const GrayImage& stego);

struct StegoResult {
  GrayImage stego;
  std::size_t realized_changes = 0;
  double total_distortion = 0.0;
  double target_bits = 0.0;
  double entropy_bits = 0.0;
  double lambda = 0.0;
};

/// Payload-limited sender: solve lambda at alpha, simulate, measure distortion.
StegoResult embed(const GrayImage& cover, const CostPair& costs, double alpha, std::uint64_t seed,
                  double tol = kDefaultPayloadTolerance);

}  // namespace stegcost
