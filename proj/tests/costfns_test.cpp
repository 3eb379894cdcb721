#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "stegcost/conv.hpp"
#include "stegcost/costs.hpp"
#include "stegcost/synthetic.hpp"

using namespace stegcost;

namespace {

bool all_equal(const RealMap& m, double value) {
  return std::all_of(m.values().begin(), m.values().end(), [&](double v) { return v == value; });
}

void check_basic_invariants(const CostPair& cp, const GrayImage& img) {
  CHECK(cp.plus.same_shape(img));
  CHECK(cp.minus.same_shape(img));
  CHECK_FALSE(cp.plus.has_nan());
  CHECK_FALSE(cp.minus.has_nan());
  for (std::size_t i = 0; i < img.size(); ++i) {
    CHECK(cp.plus[i] >= 0.0);
    CHECK(cp.minus[i] >= 0.0);
    if (img[i] == 255) CHECK(std::isinf(cp.plus[i]));
    if (img[i] == 0) CHECK(std::isinf(cp.minus[i]));
  }
}

double mean_finite(const RealMap& m, int col_begin, int col_end) {
  double s = 0.0;
  int n = 0;
  for (int r = 0; r < m.height(); ++r)
    for (int c = col_begin; c < col_end; ++c)
      if (std::isfinite(m(r, c))) {
        s += m(r, c);
        ++n;
      }
  return n ? s / n : kInf;
}

}  // namespace

TEST_CASE("DB-8 bank structure") {
  const FilterBank bank = db8_bank();
  REQUIRE(bank.kernels.size() == 3);
  CHECK(bank.kernels[0].rows() == 16);
  CHECK(bank.kernels[2] == bank.kernels[2].transposed());
  CHECK(bank.kernels[0] == bank.kernels[1].transposed());
  for (const Kernel& k : bank.kernels) CHECK(std::fabs(k.sum()) <= 1e-10);
  double low_sum = 0.0;
  for (double v : db8_filters().lowpass) low_sum += v;
  CHECK(low_sum == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("wavelet table parsing and QMF validation") {
  const auto file = std::filesystem::path(STEGCOST_SOURCE_DIR) / "data" / "db8.txt";
  const WaveletFilters from_file = load_wavelet_table(file);
  CHECK(from_file.lowpass == db8_filters().lowpass);
  CHECK(from_file.highpass == db8_filters().highpass);

  CHECK_NOTHROW(make_wavelet_filters({0.5, 0.5}, {0.5, -0.5}));
  CHECK_THROWS_AS(make_wavelet_filters({0.5, 0.5}, {0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(parse_wavelet_table("lowpass\n1\nhighpass\nabc\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_wavelet_table("1.0\n"), std::invalid_argument);

  // A different orthogonal table (Haar) drops into the same bank constructor.
  const double s = 1.0 / std::sqrt(2.0);
  const FilterBank haar = wavelet_bank(make_wavelet_filters({s, s}, {s, -s}));
  CHECK(haar.kernels[2] == haar.kernels[2].transposed());
}

TEST_CASE("evolved WOW kernels match their definitions tap for tap") {
  const FilterBank b = wow_evolved_bank();
  REQUIRE(b.kernels.size() == 5);
  CHECK(b.kernels[0] == Kernel(2, 2, {0.25, 0.25, -0.25, -0.25}));
  CHECK(b.kernels[1] == Kernel(2, 2, {0.25, -0.25, 0.25, -0.25}));
  CHECK(b.kernels[2] == Kernel(2, 2, {0.25, -0.25, -0.25, 0.25}));
  CHECK(b.kernels[3] == Kernel(2, 2, {0.25, 0.25, 0.25, 0.25}));
  CHECK(b.kernels[4] == Kernel(2, 2, {2, 0, 0, 2}));
  const std::vector<double> d0 = {0.5, 0.5}, d1 = {0.5, -0.5};
  CHECK(b.kernels[0] == Kernel::outer(d1, d0));
  CHECK(b.kernels[1] == Kernel::outer(d0, d1));
  CHECK(b.kernels[2] == Kernel::outer(d1, d1));
  CHECK(b.kernels[3] == Kernel::outer(d0, d0));
}

TEST_CASE("algorithm names round trip") {
  for (CostAlgorithm a : kAllCostAlgorithms) CHECK(parse_algorithm(algorithm_name(a)) == a);
  CHECK_THROWS_AS(parse_algorithm("dct"), std::invalid_argument);
}

TEST_CASE("WOW") {
  const GrayImage flat(16, 16, 100);
  const CostPair c = wow_cost(flat);
  CHECK(all_equal(c.plus, kInf));
  CHECK(all_equal(c.minus, kInf));

  // One-pixel cells: the low-pass filter cancels the alternation, so two of
  // the three residuals vanish and every pixel is wet.
  for (int cell : {1, 2}) {
    const GrayImage board = checkerboard(8, 8, cell, 60, 180);
    const CostPair cb = wow_cost(board);
    const oracle::Pair expected = oracle::wow(board);
    const auto cmp = oracle::compare(cb.plus, expected.plus);
    CHECK(cmp.same_infinite_support);
    CHECK(cmp.max_rel <= 1e-9);
    if (cell == 1) CHECK(all_equal(cb.plus, kInf));
  }

  const GrayImage img = synthetic_image(32, 32, 7);
  const CostPair ci = wow_cost(img);
  for (double v : ci.plus.values()) CHECK(v > 0.0);
  check_basic_invariants(ci, img);
}

TEST_CASE("WOW-evolved") {
  const GrayImage flat(16, 16, 90);
  const CostPair c = wow_evolved_cost(flat);
  CHECK(all_equal(c.plus, kInf));
  CHECK(all_equal(c.minus, kInf));

  GrayImage img = synthetic_image(64, 64, 11, {0, 255, 1.0});
  img(3, 3) = 0;
  img(10, 10) = 255;
  const CostPair ce = wow_evolved_cost(img);
  check_basic_invariants(ce, img);
  CHECK(std::isinf(ce.minus[3 * 64 + 3]));
  CHECK(std::isinf(ce.plus[10 * 64 + 10]));

  const CostPair pre = wow_evolved_cost_unclamped(img);
  for (double v : pre.plus.values())
    if (std::isfinite(v)) CHECK(v >= 1e-12);

  // Clamp-only infinities: 5% of the finite entries within one rank step.
  for (const auto& [before, after] : {std::pair{&pre.plus, &ce.plus}, std::pair{&pre.minus, &ce.minus}}) {
    std::size_t finite = 0, clamped = 0;
    for (std::size_t i = 0; i < before->size(); ++i) {
      if (!std::isfinite((*before)[i])) continue;
      ++finite;
      if (std::isinf((*after)[i])) ++clamped;
    }
    const double frac = static_cast<double>(clamped) / static_cast<double>(finite);
    CHECK(std::fabs(frac - 0.05) <= 1.0 / static_cast<double>(finite));
  }

  const auto cmp = oracle::compare(ce.minus, oracle::wow_evolved(img).minus);
  CHECK(cmp.same_infinite_support);
  CHECK(cmp.max_rel <= 1e-9);
}

TEST_CASE("clamp_top threshold is the nearest-rank percentile") {
  RealMap m(10, 2);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = static_cast<double>(i + 1);
  m[0] = kInf;  // ignored when ranking
  // 19 finite values 2..20: rank ceil(0.95*19) = 19 -> threshold 20, nothing clamped.
  CHECK(nearest_rank_threshold(m, 0.05) == 20.0);
  // rank ceil(0.5*19) = 10 -> value 11.
  CHECK(nearest_rank_threshold(m, 0.5) == 11.0);
  const RealMap half = clamp_top(m, 0.5);
  CHECK(half[10] == 11.0);
  CHECK(std::isinf(half[11]));
  CHECK(clamp_top(m, 0.0) == m);
}

TEST_CASE("HILL and HILL-evolved") {
  const GrayImage flat(20, 20, 128);
  for (const CostPair& c : {hill_cost(flat), hill_evolved_cost(flat)}) {
    for (double v : c.plus.values()) CHECK(v == doctest::Approx(1e10).epsilon(1e-12));
  }

  const GrayImage img = synthetic_image(64, 64, 13);
  const CostPair h = hill_cost(img);
  check_basic_invariants(h, img);
  const auto cmp = oracle::compare(h.plus, oracle::hill(img, oracle::box(15)).plus);
  CHECK(cmp.max_rel <= 1e-9);
  const CostPair he = hill_evolved_cost(img);
  const auto cmp_e = oracle::compare(he.plus, oracle::hill(img, oracle::gaussian(3, 4)).plus);
  CHECK(cmp_e.max_rel <= 1e-9);

  // Transpose equivariance.
  const CostPair ht = hill_cost(img.transposed());
  const RealMap back = ht.plus.transposed();
  for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i] == doctest::Approx(h.plus[i]).epsilon(1e-12));
  const CostPair het = hill_evolved_cost(img.transposed());
  const RealMap back_e = het.plus.transposed();
  for (std::size_t i = 0; i < back_e.size(); ++i)
    CHECK(back_e[i] == doctest::Approx(he.plus[i]).epsilon(1e-12));

  // Only the final smoothing kernel differs.
  const CostPair forced = hill_cost_with_smoothing(img, gaussian_kernel(3.0, 4.0));
  CHECK(forced.plus == he.plus);
  CHECK(forced.minus == he.minus);
}

TEST_CASE("SUNIWARD and SUNIWARD-evolved") {
  const FilterBank bank = db8_bank();
  double abs_sum = 0.0, weighted = 0.0;
  const double alpha[3] = {1.0, 1.5, 1.0}, beta[3] = {0.5, 1.0, 0.5};
  for (int k = 0; k < 3; ++k) {
    const double s = bank.kernels[static_cast<std::size_t>(k)].abs().sum();
    abs_sum += s;
    weighted += beta[k] * alpha[k] * s;
  }
  const GrayImage flat(24, 24, 128);
  const CostPair sf = suniward_cost(flat), sef = suniward_evolved_cost(flat);
  for (double v : sf.plus.values()) CHECK(v == doctest::Approx(abs_sum).epsilon(1e-12));
  for (double v : sef.plus.values()) CHECK(v == doctest::Approx(weighted).epsilon(1e-12));

  GrayImage img = synthetic_image(48, 48, 17, {0, 255, 1.0});
  img(0, 0) = 250;
  img(0, 1) = 249;
  img(0, 2) = 5;
  img(0, 3) = 6;
  const CostPair se = suniward_evolved_cost(img);
  CHECK(std::isinf(se.plus[0]));
  CHECK(std::isfinite(se.plus[1]));
  CHECK(std::isinf(se.minus[2]));
  CHECK(std::isfinite(se.minus[3]));
  check_basic_invariants(se, img);

  const CostPair s = suniward_cost(img);
  check_basic_invariants(s, img);
  CHECK(oracle::compare(s.plus, oracle::suniward(img, {1, 1, 1}, {1, 1, 1}, 0).plus).max_rel <= 1e-9);
  CHECK(oracle::compare(se.plus, oracle::suniward(img, {1, 1.5, 1}, {0.5, 1, 0.5}, 5).plus).max_rel <= 1e-9);

  // Transpose equivariance: K0 and K1 swap, the sum does not care.
  const RealMap back = suniward_cost(img.transposed()).plus.transposed();
  for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i] == doctest::Approx(s.plus[i]).epsilon(1e-9));

  // Degenerate parameters reduce the evolved form to the original.
  SuniwardEvolvedParams unit;
  unit.alpha = {1, 1, 1};
  unit.beta = {1, 1, 1};
  unit.tau = 0;
  const CostPair degenerate = suniward_evolved_cost(img, unit);
  CHECK(degenerate.plus == s.plus);
  CHECK(degenerate.minus == s.minus);
}

TEST_CASE("every cost function prefers texture to flat regions") {
  const GrayImage img = flat_and_noise(64, 64, 120, 60, 200, 5);
  for (CostAlgorithm algo : kAllCostAlgorithms) {
    CAPTURE(algorithm_name(algo));
    const CostPair c = compute_cost(algo, img);
    check_basic_invariants(c, img);
    // Skip the 8 columns nearest the seam, where filters straddle both halves.
    const double flat_mean = mean_finite(c.plus, 0, 24);
    const double noise_mean = mean_finite(c.plus, 40, 64);
    CHECK(flat_mean > noise_mean);
  }
}

TEST_CASE("all six cost functions match the straight-line oracles on every fixture") {
  for (const auto& fx : fixtures::cover_fixtures()) {
    for (CostAlgorithm algo : kAllCostAlgorithms) {
      CAPTURE(fx.name);
      CAPTURE(algorithm_name(algo));
      const CostPair got = compute_cost(algo, fx.image);
      const oracle::Pair want = oracle::cost(algo, fx.image);
      for (const auto& [map, grid] : {std::pair{&got.plus, &want.plus}, std::pair{&got.minus, &want.minus}}) {
        const auto cmp = oracle::compare(*map, *grid);
        CHECK(cmp.same_infinite_support);
        CHECK(cmp.max_rel <= 1e-9);
      }
    }
  }
}
