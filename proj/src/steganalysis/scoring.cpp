#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#include "stegcost/embedder.hpp"
#include "stegcost/parallel.hpp"
#include "stegcost/prng.hpp"
#include "stegcost/steganalysis.hpp"

namespace stegcost {

FeatureCorpus FeatureCorpus::build(std::vector<GrayImage> images) {
  FeatureCorpus c;
  c.features = extract_features(images);
  c.images = std::move(images);
  return c;
}

std::uint64_t image_seed(const GrayImage& cover, std::uint64_t seed) {
  // FNV-1a over the shape and the pixels.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  auto feed = [&h](std::uint8_t byte) {
    h ^= byte;
    h *= 0x100000001B3ULL;
  };
  for (int v : {cover.width(), cover.height()})
    for (int k = 0; k < 4; ++k) feed(static_cast<std::uint8_t>(v >> (8 * k)));
  for (std::uint8_t p : cover.pixels()) feed(p);
  return derive_seed(seed, h);
}

std::vector<GrayImage> make_stegos(const CostFunction& costfn, const std::vector<GrayImage>& covers,
                                   double rate_bpp, std::uint64_t seed) {
  if (rate_bpp == 0.0) return covers;
  std::vector<GrayImage> out(covers.size());
  std::vector<std::exception_ptr> errors(covers.size());
  const auto n = static_cast<std::ptrdiff_t>(covers.size());
  STEGCOST_OMP("omp parallel for schedule(dynamic)")
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      const CostPair costs = costfn(covers[k]);
      out[k] = embed(covers[k], costs, rate_bpp, image_seed(covers[k], seed)).stego;
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (std::size_t k = 0; k < errors.size(); ++k) {
    if (!errors[k]) continue;
    try {
      std::rethrow_exception(errors[k]);
    } catch (const std::exception& e) {
      throw NonExecutable("cover " + std::to_string(k) + ": " + e.what());
    }
  }
  return out;
}

std::vector<double> pool_errors(const EvaluatorPool& pool, const CostFunction& costfn,
                                const FeatureCorpus& corpus, double rate_bpp, std::uint64_t seed) {
  if (pool.empty()) throw ConfigurationError("the evaluator pool is empty");
  if (corpus.size() == 0) throw ConfigurationError("the scoring corpus is empty");
  const std::vector<FeatureVector> stego = extract_features(make_stegos(costfn, corpus.images, rate_bpp, seed));
  std::vector<double> out;
  for (const Evaluator& e : pool.members()) out.push_back(detect_error(e, corpus.features, stego));
  return out;
}

double round_score(double pe) { return std::round(pe * 1e4) / 1e4; }

double combine_pool_errors(std::vector<double> errs) {
  if (errs.empty()) throw ConfigurationError("no pool errors to combine");
  // Summing in sorted order makes the mean independent of pool order.
  std::sort(errs.begin(), errs.end());
  const double total = std::accumulate(errs.begin(), errs.end(), 0.0);
  return round_score(total / static_cast<double>(errs.size()));
}

double preliminary_score(const EvaluatorPool& pool, const CostFunction& costfn, const FeatureCorpus& corpus,
                         double rate_bpp, std::uint64_t seed) {
  return combine_pool_errors(pool_errors(pool, costfn, corpus, rate_bpp, seed));
}

AccurateResult accurate_score(const CostFunction& costfn, const FeatureCorpus& corpus, double rate_bpp,
                              std::uint64_t seed, const AccurateOptions& opts) {
  const std::size_t n = corpus.size();
  if (n < 10) {
    throw ConfigurationError("accurate evaluation needs at least 10 covers for a 5:1:4 split, got " +
                             std::to_string(n));
  }
  if (opts.ridge_grid.empty()) throw ConfigurationError("empty ridge grid");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Xorshift64Star rng(derive_seed(seed, 0x5B11ULL));
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

  AccurateResult r;
  r.n_train = n * 5 / 10;
  r.n_validation = std::max<std::size_t>(1, n / 10);
  r.n_test = n - r.n_train - r.n_validation;

  const std::vector<FeatureVector> stego = extract_features(make_stegos(costfn, corpus.images, rate_bpp, seed));
  auto take = [&](std::size_t begin, std::size_t count, const std::vector<FeatureVector>& from) {
    std::vector<FeatureVector> out;
    for (std::size_t i = begin; i < begin + count; ++i) out.push_back(from[order[i]]);
    return out;
  };
  const auto train_c = take(0, r.n_train, corpus.features), train_s = take(0, r.n_train, stego);
  const auto val_c = take(r.n_train, r.n_validation, corpus.features);
  const auto val_s = take(r.n_train, r.n_validation, stego);
  const auto test_c = take(r.n_train + r.n_validation, r.n_test, corpus.features);
  const auto test_s = take(r.n_train + r.n_validation, r.n_test, stego);

  bool first = true;
  for (double ridge : opts.ridge_grid) {
    FldOptions fo;
    fo.ridge = ridge;
    fo.trained_on = opts.trained_on;
    fo.rate_bpp = rate_bpp;
    fo.seed = seed;
    Evaluator e = train_fld(train_c, train_s, fo);
    const double pe = detect_error(e, val_c, val_s);
    if (first || pe < r.validation_pe) {
      r.validation_pe = pe;
      r.evaluator = std::move(e);
      first = false;
    }
  }
  r.pe = detect_error(r.evaluator, test_c, test_s);
  return r;
}

EvaluatorPool initial_pool(const FeatureCorpus& corpus, double rate_bpp, std::uint64_t seed) {
  EvaluatorPool pool;
  const CostAlgorithm algos[] = {CostAlgorithm::wow, CostAlgorithm::hill, CostAlgorithm::suniward};
  for (std::size_t k = 0; k < 3; ++k) {
    const CostAlgorithm algo = algos[k];
    AccurateOptions opts;
    opts.trained_on = std::string(algorithm_name(algo));
    const CostFunction fn = [algo](const GrayImage& img) { return compute_cost(algo, img); };
    pool.add(accurate_score(fn, corpus, rate_bpp, derive_seed(seed, k), opts).evaluator);
  }
  return pool;
}

double relative_gain(double pe_evolved, double pe_original) {
  if (!(pe_original > 0.0)) throw std::domain_error("relative gain needs a positive original P_E");
  return (pe_evolved - pe_original) / pe_original;
}

}  // namespace stegcost
