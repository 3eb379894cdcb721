#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stegcost/image.hpp"

namespace stegcost {

/// Directional embedding costs: rho_plus for a +1 change, rho_minus for -1.
struct CostPair {
  RealMap plus;
  RealMap minus;
};

/// Ordered set of 2-D filters.
struct FilterBank {
  std::vector<Kernel> kernels;
  std::vector<double> weights;  // empty when unweighted
};

/// 1-D decomposition filters of an orthogonal wavelet.
struct WaveletFilters {
  std::vector<double> lowpass;
  std::vector<double> highpass;
};

/// Validates g[k] = (-1)^k h[N-1-k] to within 1e-15 and returns the pair.
/// Throws std::invalid_argument on mismatch.
WaveletFilters make_wavelet_filters(std::vector<double> lowpass, std::vector<double> highpass);

/// Parses the "lowpass ... highpass ..." text table format of data/db8.txt.
WaveletFilters parse_wavelet_table(std::string_view text);
WaveletFilters load_wavelet_table(const std::filesystem::path& path);

/// The shipped Daubechies-8 table.
const WaveletFilters& db8_filters();

/// {h g^T, g h^T, g g^T}: LH, HL, HH directional high-pass kernels.
FilterBank wavelet_bank(const WaveletFilters& filters);
FilterBank db8_bank();

/// The five 2x2 kernels of the evolved WOW bank (outer products of
/// d0 = (1,1)/2 and d1 = (1,-1)/2, plus 2I).
FilterBank wow_evolved_bank();

enum class CostAlgorithm { wow, wow_evolved, hill, hill_evolved, suniward, suniward_evolved };

inline constexpr std::array<CostAlgorithm, 6> kAllCostAlgorithms = {
    CostAlgorithm::wow,      CostAlgorithm::wow_evolved,      CostAlgorithm::hill,
    CostAlgorithm::hill_evolved, CostAlgorithm::suniward, CostAlgorithm::suniward_evolved};

/// CLI names: wow, wow-e, hill, hill-e, suni, suni-e.
std::string_view algorithm_name(CostAlgorithm algo);
CostAlgorithm parse_algorithm(std::string_view name);

// Wetting helpers.

/// rho_plus = +inf where x = 255, rho_minus = +inf where x = 0.
CostPair saturation_wet(const RealMap& rho, const GrayImage& img);

/// Top-fraction clamp on the finite entries of one cost map: entries strictly
/// above the nearest-rank (1 - fraction) percentile become +inf.
RealMap clamp_top(const RealMap& costs, double fraction);

/// Nearest-rank percentile threshold over finite entries; +inf if none.
double nearest_rank_threshold(const RealMap& costs, double fraction);

// Cost functions.

CostPair wow_cost(const GrayImage& img);
CostPair wow_cost(const GrayImage& img, const FilterBank& bank);

struct WowEvolvedParams {
  std::array<double, 5> weights{1.8, 1.4, 1.6, 1.0, 0.9};
  double power = -2.5;
  double sigma = 0.8;
  double extent = 4.0;
  double floor_theta = 1e-12;
  int tau = 1;
  double clamp_fraction = 0.05;
};

CostPair wow_evolved_cost(const GrayImage& img, const WowEvolvedParams& params = {});

/// Pre-clamp intermediate, exposed for the clamp-fraction checks.
CostPair wow_evolved_cost_unclamped(const GrayImage& img, const WowEvolvedParams& params = {});

inline constexpr double kHillEpsilon = 1e-10;

CostPair hill_cost(const GrayImage& img);
CostPair hill_evolved_cost(const GrayImage& img);

/// HILL with an arbitrary final smoothing filter; hill_cost uses a 15x15 box,
/// hill_evolved_cost a 25x25 Gaussian (sigma 3).
CostPair hill_cost_with_smoothing(const GrayImage& img, const Kernel& smoothing,
                                  double epsilon = kHillEpsilon);

inline constexpr double kSuniwardEpsilon = 1.0;

CostPair suniward_cost(const GrayImage& img);
CostPair suniward_cost(const GrayImage& img, const FilterBank& bank);

struct SuniwardEvolvedParams {
  std::array<double, 3> alpha{1.0, 1.5, 1.0};
  std::array<double, 3> beta{0.5, 1.0, 0.5};
  /// +1 wet where x >= 255 - tau, -1 wet where x <= tau.
  int tau = 5;
  double epsilon = kSuniwardEpsilon;
};

CostPair suniward_evolved_cost(const GrayImage& img, const SuniwardEvolvedParams& params = {});

CostPair compute_cost(CostAlgorithm algo, const GrayImage& img);

}  // namespace stegcost
