#pragma once
// Feature-based cover/stego detectors and the detection-error metric.
//
// Feature spec version 1 (784 values). With D_h(i,j) = x(i,j+1) - x(i,j) and
// D_v(i,j) = x(i+1,j) - x(i,j), each truncated to [-3, 3]:
//   [0, 49)     pairs   (D_h(i,j), D_h(i,j+1))
//   [49, 98)    pairs   (D_v(i,j), D_v(i+1,j))
//   [98, 441)   triples (D_h(i,j), D_h(i,j+1), D_h(i,j+2))
//   [441, 784)  triples (D_v(i,j), D_v(i+1,j), D_v(i+2,j))
// Bin index is sum_k (d_k + 3) * 7^(m-1-k), first difference most
// significant. Each group is divided by its sample count; a group with no
// samples (image too narrow or short) stays all zero.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stegcost/costs.hpp"
#include "stegcost/image.hpp"

namespace stegcost {

inline constexpr int kFeatureSpecVersion = 1;
inline constexpr int kResidualTruncation = 3;
inline constexpr std::size_t kPairBins = 49;
inline constexpr std::size_t kTripleBins = 343;
inline constexpr std::size_t kFeatureDim = 2 * kPairBins + 2 * kTripleBins;

using FeatureVector = std::vector<double>;

FeatureVector extract_features(const GrayImage& img);

/// Parallel over images; output order follows input order.
std::vector<FeatureVector> extract_features(const std::vector<GrayImage>& imgs);

struct EvaluatorMetadata {
  std::string trained_on;
  double rate_bpp = 0.0;
  std::uint64_t train_seed = 0;
  int feature_spec_version = kFeatureSpecVersion;
  double ridge = 0.0;
  bool regularization_fallback = false;
  std::size_t n_train = 0;
};

/// Linear detector: score = weights . features; "stego" when score > threshold.
struct Evaluator {
  std::vector<double> weights;
  double threshold = 0.0;
  EvaluatorMetadata metadata;

  double project(const FeatureVector& f) const;
  bool says_stego(const FeatureVector& f) const { return project(f) > threshold; }
};

/// Append-only list of evaluators.
class EvaluatorPool {
 public:
  EvaluatorPool() = default;
  explicit EvaluatorPool(std::vector<Evaluator> members) : members_(std::move(members)) {}

  void add(Evaluator e) { members_.push_back(std::move(e)); }
  const std::vector<Evaluator>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }

 private:
  std::vector<Evaluator> members_;
};

struct FldOptions {
  /// Ridge term, relative: S + ridge * (trace(S) / d) * I.
  double ridge = 1e-2;
  std::string trained_on;
  double rate_bpp = 0.0;
  std::uint64_t seed = 0;
};

/// Fisher linear discriminant w = (S_w / (N - 2) + ridge term)^-1 (mu_stego - mu_cover).
/// A singular system, or zero within-class scatter, falls back to a unit ridge
/// (or w = mu_stego - mu_cover) and sets metadata.regularization_fallback.
/// Needs at least two samples per class.
Evaluator train_fld(const std::vector<FeatureVector>& covers, const std::vector<FeatureVector>& stegos,
                    const FldOptions& opts = {});

/// train_fld on extracted features of paired image lists.
Evaluator train_detector(const std::vector<GrayImage>& covers, const std::vector<GrayImage>& stegos,
                         std::uint64_t seed, FldOptions opts = {});

struct ThresholdSweep {
  double pe = 0.5;
  /// Decision boundary placed midway between the optimal candidate and the
  /// next larger score.
  double threshold = 0.0;
};

/// Exact minimum of (P_FA + P_MD) / 2 over the thresholds {-inf} U scores,
/// deciding "stego" when score > t.
ThresholdSweep sweep_threshold(const std::vector<double>& cover_scores,
                               const std::vector<double>& stego_scores);

double detect_error(const std::vector<double>& cover_scores, const std::vector<double>& stego_scores);
double detect_error(const Evaluator& e, const std::vector<FeatureVector>& covers,
                    const std::vector<FeatureVector>& stegos);
double detect_error(const Evaluator& e, const std::vector<GrayImage>& covers,
                    const std::vector<GrayImage>& stegos);

// Scoring of cost functions.

using CostFunction = std::function<CostPair(const GrayImage&)>;

/// The cost function failed (runtime fault, infeasible payload) on some cover.
class NonExecutable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Corpus too small, empty pool and similar setup errors.
class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Covers with their features computed once.
struct FeatureCorpus {
  std::vector<GrayImage> images;
  std::vector<FeatureVector> features;

  static FeatureCorpus build(std::vector<GrayImage> images);
  std::size_t size() const { return images.size(); }
};

/// Seed used to embed into `cover` for a batch seeded with `seed`. Derived
/// from the pixel content so results do not depend on corpus order.
std::uint64_t image_seed(const GrayImage& cover, std::uint64_t seed);

/// Simulated stegos at rate_bpp for every cover (rate 0 copies the covers).
/// Throws NonExecutable if the cost function or the sender fails.
std::vector<GrayImage> make_stegos(const CostFunction& costfn, const std::vector<GrayImage>& covers,
                                   double rate_bpp, std::uint64_t seed);

/// P_E of every pool member on the corpus and its stegos, in pool order.
std::vector<double> pool_errors(const EvaluatorPool& pool, const CostFunction& costfn,
                                const FeatureCorpus& corpus, double rate_bpp, std::uint64_t seed);

/// Mean of per-evaluator P_E, summed in sorted order, rounded to 4 decimals.
double combine_pool_errors(std::vector<double> errors);

/// combine_pool_errors(pool_errors(...)).
double preliminary_score(const EvaluatorPool& pool, const CostFunction& costfn, const FeatureCorpus& corpus,
                         double rate_bpp, std::uint64_t seed);

double round_score(double pe);

struct AccurateOptions {
  std::vector<double> ridge_grid{1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  std::string trained_on;
};

struct AccurateResult {
  double pe = 0.5;              // held-out test P_E
  double validation_pe = 0.5;   // P_E of the chosen ridge on the validation split
  Evaluator evaluator;          // trained on the train split
  std::size_t n_train = 0, n_validation = 0, n_test = 0;
};

/// Dedicated detector with a seeded 5:1:4 train/validation/test split of the
/// covers (at least 10). The ridge is picked on the validation split.
AccurateResult accurate_score(const CostFunction& costfn, const FeatureCorpus& corpus, double rate_bpp,
                              std::uint64_t seed, const AccurateOptions& opts = {});

/// Evaluators trained on WOW, HILL and SUNIWARD stegos at rate_bpp.
EvaluatorPool initial_pool(const FeatureCorpus& corpus, double rate_bpp, std::uint64_t seed);

/// (pe_evolved - pe_original) / pe_original; std::domain_error unless pe_original > 0.
double relative_gain(double pe_evolved, double pe_original);

// Evaluator files (JSON).

std::string evaluator_to_json(const Evaluator& e);
Evaluator evaluator_from_json(const std::string& text);
void save_evaluator(const Evaluator& e, const std::filesystem::path& path);
Evaluator load_evaluator(const std::filesystem::path& path);

}  // namespace stegcost
