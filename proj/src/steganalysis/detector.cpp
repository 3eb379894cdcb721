// Eigen's own threading would make the solve depend on the thread count.
#define EIGEN_DONT_PARALLELIZE
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <numeric>
#include <sstream>

#include "stegcost/steganalysis.hpp"

namespace stegcost {

double Evaluator::project(const FeatureVector& f) const {
  if (f.size() != weights.size()) {
    throw std::invalid_argument("feature dimension " + std::to_string(f.size()) +
                                " does not match evaluator dimension " + std::to_string(weights.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += weights[i] * f[i];
  return s;
}

ThresholdSweep sweep_threshold(const std::vector<double>& cover_scores, const std::vector<double>& stego_scores) {
  if (cover_scores.empty() || stego_scores.empty()) {
    throw std::invalid_argument("detection error needs at least one cover and one stego score");
  }
  struct Entry {
    double score;
    bool stego;
  };
  std::vector<Entry> all;
  all.reserve(cover_scores.size() + stego_scores.size());
  for (double s : cover_scores) all.push_back({s, false});
  for (double s : stego_scores) all.push_back({s, true});
  std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) { return a.score < b.score; });

  const auto nc = static_cast<double>(cover_scores.size());
  const auto ns = static_cast<double>(stego_scores.size());
  // t = -inf: every cover is a false alarm, no stego is missed.
  std::size_t false_alarms = cover_scores.size();
  std::size_t misses = 0;
  ThresholdSweep best;
  best.pe = (static_cast<double>(false_alarms) / nc + static_cast<double>(misses) / ns) / 2.0;
  best.threshold = all.front().score - 1.0;
  for (std::size_t i = 0; i < all.size();) {
    const double t = all[i].score;
    std::size_t j = i;
    for (; j < all.size() && all[j].score == t; ++j) {
      if (all[j].stego) ++misses;
      else --false_alarms;
    }
    const double pe = (static_cast<double>(false_alarms) / nc + static_cast<double>(misses) / ns) / 2.0;
    if (pe < best.pe) {
      best.pe = pe;
      best.threshold = j < all.size() ? t + (all[j].score - t) / 2.0 : t;
    }
    i = j;
  }
  return best;
}

double detect_error(const std::vector<double>& cover_scores, const std::vector<double>& stego_scores) {
  return sweep_threshold(cover_scores, stego_scores).pe;
}

namespace {

std::vector<double> project_all(const Evaluator& e, const std::vector<FeatureVector>& feats) {
  std::vector<double> out;
  out.reserve(feats.size());
  for (const FeatureVector& f : feats) out.push_back(e.project(f));
  return out;
}

}  // namespace

double detect_error(const Evaluator& e, const std::vector<FeatureVector>& covers,
                    const std::vector<FeatureVector>& stegos) {
  return detect_error(project_all(e, covers), project_all(e, stegos));
}

double detect_error(const Evaluator& e, const std::vector<GrayImage>& covers, const std::vector<GrayImage>& stegos) {
  return detect_error(e, extract_features(covers), extract_features(stegos));
}

Evaluator train_fld(const std::vector<FeatureVector>& covers, const std::vector<FeatureVector>& stegos,
                    const FldOptions& opts) {
  if (covers.size() < 2 || stegos.size() < 2) {
    throw std::invalid_argument("FLD training needs at least two covers and two stegos");
  }
  if (!(opts.ridge >= 0.0)) throw std::invalid_argument("ridge must be non-negative");
  const std::size_t d = covers.front().size();
  if (d == 0) throw std::invalid_argument("empty feature vectors");
  auto to_matrix = [d](const std::vector<FeatureVector>& rows) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != d) throw std::invalid_argument("feature vectors differ in dimension");
      for (std::size_t k = 0; k < d; ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
    return m;
  };
  const Eigen::MatrixXd x0 = to_matrix(covers);
  const Eigen::MatrixXd x1 = to_matrix(stegos);
  const Eigen::VectorXd mu0 = x0.colwise().mean().transpose();
  const Eigen::VectorXd mu1 = x1.colwise().mean().transpose();
  const Eigen::MatrixXd c0 = x0.rowwise() - mu0.transpose();
  const Eigen::MatrixXd c1 = x1.rowwise() - mu1.transpose();
  const auto n = static_cast<double>(covers.size() + stegos.size());
  const Eigen::MatrixXd scatter = (c0.transpose() * c0 + c1.transpose() * c1) / (n - 2.0);
  const Eigen::VectorXd delta = mu1 - mu0;

  Evaluator e;
  e.metadata.trained_on = opts.trained_on;
  e.metadata.rate_bpp = opts.rate_bpp;
  e.metadata.train_seed = opts.seed;
  e.metadata.ridge = opts.ridge;
  e.metadata.n_train = covers.size() + stegos.size();

  Eigen::VectorXd w;
  const double scale = scatter.trace() / static_cast<double>(d);
  auto solve = [&](double ridge) -> bool {
    Eigen::MatrixXd a = scatter;
    a.diagonal().array() += ridge * scale;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success) return false;
    w = ldlt.solve(delta);
    return w.allFinite() && (a * w - delta).norm() <= 1e-6 * std::max(1.0, delta.norm());
  };
  if (!(scale > 0.0 && std::isfinite(scale))) {
    // No within-class spread at all: the mean difference is the best direction.
    w = delta;
    e.metadata.regularization_fallback = true;
  } else if (!solve(opts.ridge)) {
    e.metadata.regularization_fallback = true;
    if (!solve(std::max(1.0, opts.ridge))) w = delta;
  }
  e.weights.assign(w.data(), w.data() + w.size());
  e.threshold = sweep_threshold(project_all(e, covers), project_all(e, stegos)).threshold;
  return e;
}

Evaluator train_detector(const std::vector<GrayImage>& covers, const std::vector<GrayImage>& stegos,
                         std::uint64_t seed, FldOptions opts) {
  if (covers.size() != stegos.size()) throw std::invalid_argument("covers and stegos must be paired");
  opts.seed = seed;
  return train_fld(extract_features(covers), extract_features(stegos), opts);
}

// Serialization.

std::string evaluator_to_json(const Evaluator& e) {
  nlohmann::json j;
  j["format"] = "stegcost-evaluator";
  j["feature_spec_version"] = e.metadata.feature_spec_version;
  j["weights"] = e.weights;
  j["threshold"] = e.threshold;
  j["metadata"] = {
      {"trained_on", e.metadata.trained_on},
      {"rate_bpp", e.metadata.rate_bpp},
      {"train_seed", e.metadata.train_seed},
      {"feature_spec_version", e.metadata.feature_spec_version},
      {"ridge", e.metadata.ridge},
      {"regularization_fallback", e.metadata.regularization_fallback},
      {"n_train", e.metadata.n_train},
  };
  return j.dump();
}

Evaluator evaluator_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("format", "") != "stegcost-evaluator") throw std::invalid_argument("not an evaluator file");
  const int version = j.at("feature_spec_version").get<int>();
  if (version != kFeatureSpecVersion) {
    throw std::invalid_argument("evaluator uses feature spec version " + std::to_string(version) +
                                ", this build extracts version " + std::to_string(kFeatureSpecVersion));
  }
  Evaluator e;
  e.weights = j.at("weights").get<std::vector<double>>();
  e.threshold = j.at("threshold").get<double>();
  const auto& m = j.at("metadata");
  e.metadata.trained_on = m.at("trained_on").get<std::string>();
  e.metadata.rate_bpp = m.at("rate_bpp").get<double>();
  e.metadata.train_seed = m.at("train_seed").get<std::uint64_t>();
  e.metadata.feature_spec_version = m.at("feature_spec_version").get<int>();
  e.metadata.ridge = m.at("ridge").get<double>();
  e.metadata.regularization_fallback = m.at("regularization_fallback").get<bool>();
  e.metadata.n_train = m.at("n_train").get<std::size_t>();
  if (e.weights.size() != kFeatureDim) throw std::invalid_argument("evaluator weight dimension mismatch");
  return e;
}

void save_evaluator(const Evaluator& e, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << evaluator_to_json(e) << '\n';
}

Evaluator load_evaluator(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return evaluator_from_json(buf.str());
}

}  // namespace stegcost
