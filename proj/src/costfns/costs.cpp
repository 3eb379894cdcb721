#include "stegcost/costs.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "stegcost/conv.hpp"
#include "stegcost/embedded.hpp"

namespace stegcost {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

WaveletFilters make_wavelet_filters(std::vector<double> lowpass, std::vector<double> highpass) {
  if (lowpass.empty() || lowpass.size() != highpass.size()) {
    throw std::invalid_argument("wavelet table needs equal-length, non-empty lowpass and highpass");
  }
  if (lowpass.size() > static_cast<std::size_t>(kMaxKernelExtent)) {
    throw std::invalid_argument("wavelet filter longer than the kernel bound");
  }
  const std::size_t n = lowpass.size();
  for (std::size_t k = 0; k < n; ++k) {
    const double expected = (k % 2 == 0 ? 1.0 : -1.0) * lowpass[n - 1 - k];
    if (std::fabs(highpass[k] - expected) > 1e-15) {
      throw std::invalid_argument("wavelet table violates g[k] = (-1)^k h[N-1-k] at k = " +
                                  std::to_string(k));
    }
  }
  return WaveletFilters{std::move(lowpass), std::move(highpass)};
}

WaveletFilters parse_wavelet_table(std::string_view text) {
  std::vector<double> low;
  std::vector<double> high;
  std::vector<double>* section = nullptr;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line == "lowpass") {
      section = &low;
    } else if (line == "highpass") {
      section = &high;
    } else {
      if (section == nullptr) {
        throw std::invalid_argument("wavelet table line " + std::to_string(line_no) +
                                    ": coefficient before a section header");
      }
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
      if (ec != std::errc() || ptr != line.data() + line.size()) {
        throw std::invalid_argument("wavelet table line " + std::to_string(line_no) +
                                    ": not a number: " + line);
      }
      section->push_back(v);
    }
  }
  return make_wavelet_filters(std::move(low), std::move(high));
}

WaveletFilters load_wavelet_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open wavelet table " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_wavelet_table(buf.str());
}

const WaveletFilters& db8_filters() {
  static const WaveletFilters filters = parse_wavelet_table(embedded::db8_table());
  return filters;
}

FilterBank wavelet_bank(const WaveletFilters& f) {
  FilterBank bank;
  bank.kernels.push_back(Kernel::outer(f.lowpass, f.highpass));
  bank.kernels.push_back(Kernel::outer(f.highpass, f.lowpass));
  bank.kernels.push_back(Kernel::outer(f.highpass, f.highpass));
  return bank;
}

FilterBank db8_bank() {
  static const FilterBank bank = wavelet_bank(db8_filters());
  return bank;
}

FilterBank wow_evolved_bank() {
  FilterBank bank;
  bank.kernels = {
      Kernel(2, 2, {0.25, 0.25, -0.25, -0.25}),
      Kernel(2, 2, {0.25, -0.25, 0.25, -0.25}),
      Kernel(2, 2, {0.25, -0.25, -0.25, 0.25}),
      Kernel(2, 2, {0.25, 0.25, 0.25, 0.25}),
      Kernel(2, 2, {2.0, 0.0, 0.0, 2.0}),
  };
  return bank;
}

std::string_view algorithm_name(CostAlgorithm algo) {
  switch (algo) {
    case CostAlgorithm::wow: return "wow";
    case CostAlgorithm::wow_evolved: return "wow-e";
    case CostAlgorithm::hill: return "hill";
    case CostAlgorithm::hill_evolved: return "hill-e";
    case CostAlgorithm::suniward: return "suni";
    case CostAlgorithm::suniward_evolved: return "suni-e";
  }
  return "?";
}

CostAlgorithm parse_algorithm(std::string_view name) {
  for (CostAlgorithm a : kAllCostAlgorithms) {
    if (algorithm_name(a) == name) return a;
  }
  throw std::invalid_argument("unknown cost algorithm '" + std::string(name) +
                              "' (expected wow, wow-e, hill, hill-e, suni, suni-e)");
}

CostPair saturation_wet(const RealMap& rho, const GrayImage& img) {
  CostPair out{rho, rho};
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (img[i] == 255) out.plus[i] = kInf;
    if (img[i] == 0) out.minus[i] = kInf;
  }
  return out;
}

double nearest_rank_threshold(const RealMap& costs, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw std::invalid_argument("clamp fraction must lie in [0, 1]");
  std::vector<double> finite;
  finite.reserve(costs.size());
  for (double v : costs.values()) {
    if (std::isfinite(v)) finite.push_back(v);
  }
  if (finite.empty()) return kInf;
  const auto n = static_cast<double>(finite.size());
  // rank = ceil((1 - fraction) * n), guarded against representation noise.
  auto rank = static_cast<std::size_t>(std::ceil((1.0 - fraction) * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, finite.size());
  std::nth_element(finite.begin(), finite.begin() + static_cast<std::ptrdiff_t>(rank - 1), finite.end());
  return finite[rank - 1];
}

RealMap clamp_top(const RealMap& costs, double fraction) {
  const double threshold = nearest_rank_threshold(costs, fraction);
  RealMap out = costs;
  for (double& v : out.values()) {
    if (v > threshold) v = kInf;
  }
  return out;
}

CostPair wow_cost(const GrayImage& img) { return wow_cost(img, db8_bank()); }

CostPair wow_cost(const GrayImage& img, const FilterBank& bank) {
  const RealMap x = RealMap::from_image(img);
  RealMap rho(img.width(), img.height(), 0.0);
  for (const Kernel& k : bank.kernels) {
    const RealMap xi = corr2_mirror(abs_conv2_mirror(x, k), k.abs());
    for (std::size_t i = 0; i < rho.size(); ++i) rho[i] += 1.0 / xi[i];
  }
  return saturation_wet(rho, img);
}

CostPair wow_evolved_cost_unclamped(const GrayImage& img, const WowEvolvedParams& params) {
  const RealMap x = RealMap::from_image(img);
  const FilterBank bank = wow_evolved_bank();
  const Kernel g = gaussian_kernel(params.sigma, params.extent);
  RealMap xi_e(img.width(), img.height(), 0.0);
  for (std::size_t k = 0; k < bank.kernels.size(); ++k) {
    const RealMap xi_k = conv2_mirror(abs_conv2_mirror(x, bank.kernels[k]), g);
    for (std::size_t i = 0; i < xi_e.size(); ++i) {
      xi_e[i] += params.weights[k] * std::pow(xi_k[i], params.power);
    }
  }
  RealMap rho(img.width(), img.height());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const double r = xi_e[i] == 0.0 ? kInf : std::pow(xi_e[i], -1.0 / params.power);
    rho[i] = r < params.floor_theta ? kInf : r;
  }
  CostPair out{rho, rho};
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (img[i] > 255 - params.tau) out.plus[i] = kInf;
    if (img[i] < params.tau) out.minus[i] = kInf;
  }
  return out;
}

CostPair wow_evolved_cost(const GrayImage& img, const WowEvolvedParams& params) {
  CostPair out = wow_evolved_cost_unclamped(img, params);
  out.plus = clamp_top(out.plus, params.clamp_fraction);
  out.minus = clamp_top(out.minus, params.clamp_fraction);
  return out;
}

CostPair hill_cost_with_smoothing(const GrayImage& img, const Kernel& smoothing, double epsilon) {
  const RealMap x = RealMap::from_image(img);
  const RealMap xi = conv2_mirror(abs_conv2_mirror(x, kb_kernel()), avg_kernel(3));
  RealMap inv(img.width(), img.height());
  for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 / (xi[i] + epsilon);
  return saturation_wet(conv2_mirror(inv, smoothing), img);
}

CostPair hill_cost(const GrayImage& img) { return hill_cost_with_smoothing(img, avg_kernel(15)); }

CostPair hill_evolved_cost(const GrayImage& img) {
  return hill_cost_with_smoothing(img, gaussian_kernel(3.0, 4.0));
}

CostPair suniward_cost(const GrayImage& img) { return suniward_cost(img, db8_bank()); }

CostPair suniward_cost(const GrayImage& img, const FilterBank& bank) {
  const RealMap x = RealMap::from_image(img);
  RealMap rho(img.width(), img.height(), 0.0);
  for (const Kernel& k : bank.kernels) {
    RealMap inv = abs_conv2_mirror(x, k);
    for (double& v : inv.values()) v = 1.0 / (v + kSuniwardEpsilon);
    const RealMap xi = corr2_mirror(inv, k.abs());
    for (std::size_t i = 0; i < rho.size(); ++i) rho[i] += xi[i];
  }
  return saturation_wet(rho, img);
}

CostPair suniward_evolved_cost(const GrayImage& img, const SuniwardEvolvedParams& params) {
  const RealMap x = RealMap::from_image(img);
  const FilterBank bank = db8_bank();
  RealMap rho(img.width(), img.height(), 0.0);
  for (std::size_t k = 0; k < bank.kernels.size(); ++k) {
    RealMap inv = abs_conv2_mirror(x, bank.kernels[k]);
    for (double& v : inv.values()) v = 1.0 / (v + params.epsilon);
    const RealMap xi = corr2_mirror(inv, bank.kernels[k].abs().scaled(params.alpha[k]));
    for (std::size_t i = 0; i < rho.size(); ++i) rho[i] += params.beta[k] * xi[i];
  }
  CostPair out{rho, rho};
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (img[i] >= 255 - params.tau) out.plus[i] = kInf;
    if (img[i] <= params.tau) out.minus[i] = kInf;
  }
  return out;
}

CostPair compute_cost(CostAlgorithm algo, const GrayImage& img) {
  switch (algo) {
    case CostAlgorithm::wow: return wow_cost(img);
    case CostAlgorithm::wow_evolved: return wow_evolved_cost(img);
    case CostAlgorithm::hill: return hill_cost(img);
    case CostAlgorithm::hill_evolved: return hill_evolved_cost(img);
    case CostAlgorithm::suniward: return suniward_cost(img);
    case CostAlgorithm::suniward_evolved: return suniward_evolved_cost(img);
  }
  throw std::invalid_argument("unknown cost algorithm");
}

}  // namespace stegcost
