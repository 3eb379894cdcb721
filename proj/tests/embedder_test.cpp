#include <doctest.h>

#include <cmath>

#include "stegcost/costs.hpp"
#include "stegcost/embedder.hpp"
#include "stegcost/prng.hpp"
#include "stegcost/synthetic.hpp"

using namespace stegcost;

namespace {

CostPair uniform_costs(int w, int h, double v) { return {RealMap(w, h, v), RealMap(w, h, v)}; }

CostPair random_costs(int w, int h, std::uint64_t seed, double wet_fraction = 0.0) {
  Xorshift64Star rng(seed);
  CostPair c{RealMap(w, h), RealMap(w, h)};
  for (std::size_t i = 0; i < c.plus.size(); ++i) {
    c.plus[i] = 0.1 + 5.0 * rng.uniform();
    c.minus[i] = 0.1 + 5.0 * rng.uniform();
    if (rng.uniform() < wet_fraction) c.plus[i] = kInf;
    if (rng.uniform() < wet_fraction) c.minus[i] = kInf;
  }
  return c;
}

// Bisection with a fixed iteration count, independent of solve_lambda's loop.
double bisection_oracle(const CostPair& costs, double alpha) {
  const double target = alpha * static_cast<double>(costs.plus.size());
  double hi = 1.0;
  while (payload_entropy(change_probabilities(costs, hi)) > target) hi *= 2.0;
  double lo = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (payload_entropy(change_probabilities(costs, mid)) > target) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("change probabilities") {
  const ProbabilityMap p0 = change_probabilities(uniform_costs(4, 4, 2.0), 0.0);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(p0.plus[i] == doctest::Approx(1.0 / 3.0));
    CHECK(p0.minus[i] == doctest::Approx(1.0 / 3.0));
  }

  const ProbabilityMap wet = change_probabilities(uniform_costs(2, 2, kInf), 0.0);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(wet.plus[i] == 0.0);
    CHECK(wet.minus[i] == 0.0);
  }

  const ProbabilityMap half = change_probabilities(uniform_costs(3, 3, 1.0), std::log(2.0));
  for (std::size_t i = 0; i < 9; ++i) CHECK(half.plus[i] + half.minus[i] == doctest::Approx(0.5).epsilon(1e-14));

  // Symmetric costs reduce to the closed form 2e^{-l e}/(1 + 2e^{-l e}).
  const CostPair c = random_costs(8, 8, 3);
  CostPair sym{c.plus, c.plus};
  const ProbabilityMap ps = change_probabilities(sym, 0.7);
  for (std::size_t i = 0; i < 64; ++i) {
    const double e = std::exp(-0.7 * c.plus[i]);
    CHECK(ps.plus[i] + ps.minus[i] == doctest::Approx(2 * e / (1 + 2 * e)).epsilon(1e-14));
  }

  CHECK_THROWS(change_probabilities(c, -1.0));
}

TEST_CASE("probabilities are normalized and respect wet directions") {
  const CostPair c = random_costs(16, 16, 4, 0.2);
  for (double lambda : {0.0, 0.3, 2.0, 50.0}) {
    const ProbabilityMap pm = change_probabilities(c, lambda);
    for (std::size_t i = 0; i < c.plus.size(); ++i) {
      const double p0 = 1.0 - pm.plus[i] - pm.minus[i];
      CHECK(p0 >= -1e-12);
      CHECK(pm.plus[i] + pm.minus[i] + p0 == doctest::Approx(1.0).epsilon(1e-12));
      if (std::isinf(c.plus[i])) CHECK(pm.plus[i] == 0.0);
      if (std::isinf(c.minus[i])) CHECK(pm.minus[i] == 0.0);
    }
  }
}

TEST_CASE("payload entropy") {
  const ProbabilityMap zero{RealMap(5, 5, 0.0), RealMap(5, 5, 0.0)};
  CHECK(payload_entropy(zero) == 0.0);
  const ProbabilityMap third{RealMap(10, 10, 1.0 / 3.0), RealMap(10, 10, 1.0 / 3.0)};
  CHECK(payload_entropy(third) == doctest::Approx(100.0 * std::log2(3.0)).epsilon(1e-12));

  // Extended-precision summation in reverse order.
  const ProbabilityMap pm = change_probabilities(random_costs(32, 32, 5, 0.1), 0.8);
  long double total = 0.0L;
  for (std::size_t k = pm.plus.size(); k-- > 0;) {
    const long double p = pm.plus[k], m = pm.minus[k], z = 1.0L - p - m;
    for (long double q : {p, m, z})
      if (q > 0) total -= q * std::log2(q);
  }
  CHECK(payload_entropy(pm) == doctest::Approx(static_cast<double>(total)).epsilon(1e-12));
}

TEST_CASE("entropy decreases strictly in lambda") {
  const CostPair c = random_costs(16, 16, 6, 0.1);
  double prev = payload_entropy(change_probabilities(c, 0.0));
  for (double lambda = 0.05; lambda < 20.0; lambda *= 1.5) {
    const double h = payload_entropy(change_probabilities(c, lambda));
    CHECK(h < prev);
    prev = h;
  }
}

TEST_CASE("solve_lambda") {
  SUBCASE("maximum entropy point") {
    const LambdaSolution s = solve_lambda(uniform_costs(16, 16, 1.0), std::log2(3.0));
    CHECK(s.lambda == 0.0);
  }
  SUBCASE("tiny payload") {
    const CostPair c = random_costs(32, 32, 7);
    const LambdaSolution s = solve_lambda(c, 1e-5, 1e-3);
    CHECK(payload_entropy(change_probabilities(c, s.lambda)) <= 1e-3 * 1024.0);
    CHECK(s.lambda > 1.0);
  }
  SUBCASE("WOW costs at 0.4 bpp match the fixed-iteration bisection") {
    const GrayImage img = synthetic_image(256, 256, 21);
    const CostPair c = wow_cost(img);
    const LambdaSolution s = solve_lambda(c, 0.4, 1e-3);
    CHECK(s.iterations <= 200);
    const double n = static_cast<double>(img.size());
    CHECK(std::fabs(payload_entropy(change_probabilities(c, s.lambda)) / n - 0.4) <= 1e-3);
    const double oracle = bisection_oracle(c, 0.4);
    CHECK(std::fabs(s.lambda - oracle) / oracle <= 5e-7);
  }
  SUBCASE("infeasible payloads") {
    CHECK_THROWS_AS(solve_lambda(uniform_costs(4, 4, kInf), 0.1), InfeasiblePayload);
    CostPair half{RealMap(4, 4, kInf), RealMap(4, 4, 1.0)};
    CHECK_THROWS_AS(solve_lambda(half, 1.2), InfeasiblePayload);
    CHECK_THROWS_AS(solve_lambda(random_costs(4, 4, 1), 1.7), InfeasiblePayload);
  }
}

TEST_CASE("solved sender is equivariant to cost scaling") {
  const CostPair c = random_costs(32, 32, 8, 0.05);
  CostPair scaled = c;
  for (double& v : scaled.plus.values()) v *= 7.5;
  for (double& v : scaled.minus.values()) v *= 7.5;
  const auto a = solve_lambda(c, 0.3);
  const auto b = solve_lambda(scaled, 0.3);
  CHECK(b.lambda == doctest::Approx(a.lambda / 7.5).epsilon(1e-9));
  const ProbabilityMap pa = change_probabilities(c, a.lambda);
  const ProbabilityMap pb = change_probabilities(scaled, b.lambda);
  for (std::size_t i = 0; i < pa.plus.size(); ++i) CHECK(std::fabs(pa.plus[i] - pb.plus[i]) <= 1e-9);
}

TEST_CASE("simulate_embedding") {
  const GrayImage cover = synthetic_image(64, 64, 9);
  const ProbabilityMap none{RealMap(64, 64, 0.0), RealMap(64, 64, 0.0)};
  const Simulation s0 = simulate_embedding(cover, none, 1);
  CHECK(s0.stego == cover);
  CHECK(s0.realized_changes == 0);

  const CostPair c = hill_cost(cover);
  const ProbabilityMap pm = change_probabilities(c, solve_lambda(c, 0.4).lambda);
  const Simulation a = simulate_embedding(cover, pm, 77);
  const Simulation b = simulate_embedding(cover, pm, 77);
  CHECK(a.stego == b.stego);
  const Simulation d = simulate_embedding(cover, pm, 78);
  CHECK_FALSE(a.stego == d.stego);

  // Total change rate 0.5 everywhere: count within 4 sigma of Binomial(65536, 0.5).
  const GrayImage big(256, 256, 128);
  const ProbabilityMap halfpm{RealMap(256, 256, 0.25), RealMap(256, 256, 0.25)};
  const Simulation sh = simulate_embedding(big, halfpm, 5);
  const double sigma = std::sqrt(65536 * 0.25);
  CHECK(std::fabs(static_cast<double>(sh.realized_changes) - 32768.0) <= 4 * sigma);

  const ProbabilityMap bad{RealMap(1, 1, 1.0), RealMap(1, 1, 0.0)};
  CHECK_THROWS_AS(simulate_embedding(GrayImage(1, 1, 255), bad, 1), InvariantViolation);
}

TEST_CASE("the generator is the documented xorshift64*") {
  Xorshift64Star rng = Xorshift64Star::from_state(1);
  // x = 1: x ^= x>>12 -> 1; x ^= x<<25 -> 0x2000001; x ^= x>>27 -> 0x2000001.
  CHECK(rng.next() == 0x2000001ULL * 0x2545F4914F6CDD1DULL);
}

TEST_CASE("distortion") {
  const GrayImage cover = synthetic_image(16, 16, 10);
  const CostPair c = random_costs(16, 16, 11);
  CHECK(distortion(c, cover, cover) == 0.0);

  GrayImage one = cover;
  one[5] = static_cast<std::uint8_t>(one[5] + 1);
  CostPair fixed = c;
  fixed.plus[5] = 2.5;
  CHECK(distortion(fixed, cover, one) == 2.5);

  const ProbabilityMap pm = change_probabilities(c, 0.5);
  const Simulation sim = simulate_embedding(cover, pm, 3);
  double expected = 0.0;
  for (std::size_t i = 0; i < cover.size(); ++i) {
    if (sim.stego[i] > cover[i]) expected += c.plus[i];
    if (sim.stego[i] < cover[i]) expected += c.minus[i];
  }
  CHECK(distortion(c, cover, sim.stego) == doctest::Approx(expected).epsilon(1e-14));

  CostPair wet = c;
  wet.plus[5] = kInf;
  CHECK_THROWS_AS(distortion(wet, cover, one), InvariantViolation);
  GrayImage two = cover;
  two[3] = static_cast<std::uint8_t>(two[3] + 2);
  CHECK_THROWS_AS(distortion(c, cover, two), InvariantViolation);
}

TEST_CASE("wet pixels never change and change rate tracks expectation") {
  const GrayImage cover = synthetic_image(64, 64, 12);
  CostPair c = hill_cost(cover);
  for (int r = 10; r < 20; ++r)
    for (int q = 0; q < 64; ++q) {
      c.plus(r, q) = kInf;
      c.minus(r, q) = kInf;
    }
  const ProbabilityMap pm = change_probabilities(c, solve_lambda(c, 0.3).lambda);
  double expected = 0.0, var = 0.0;
  for (std::size_t i = 0; i < pm.plus.size(); ++i) {
    const double p = pm.plus[i] + pm.minus[i];
    expected += p;
    var += p * (1 - p);
  }
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const StegoResult r = embed(cover, c, 0.3, seed);
    total += static_cast<double>(r.realized_changes);
    for (int row = 10; row < 20; ++row)
      for (int q = 0; q < 64; ++q) CHECK(r.stego(row, q) == cover(row, q));
  }
  CHECK(std::fabs(total / 30.0 - expected) <= 4.0 * std::sqrt(var / 30.0));
}

TEST_CASE("embed reports a consistent result") {
  const GrayImage cover = synthetic_image(64, 64, 13);
  const CostPair c = suniward_cost(cover);
  const StegoResult r = embed(cover, c, 0.4, 99);
  CHECK(r.target_bits == doctest::Approx(0.4 * 4096));
  CHECK(std::fabs(r.entropy_bits - r.target_bits) <= 1e-3 * 4096);
  CHECK(r.total_distortion == doctest::Approx(distortion(c, cover, r.stego)));
  for (std::size_t i = 0; i < cover.size(); ++i) CHECK(std::abs(int(r.stego[i]) - int(cover[i])) <= 1);
}
