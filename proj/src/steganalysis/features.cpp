#include <algorithm>
#include <exception>

#include "stegcost/parallel.hpp"
#include "stegcost/steganalysis.hpp"

namespace stegcost {

namespace {

constexpr int kLevels = 2 * kResidualTruncation + 1;

int truncated(int d) { return std::clamp(d, -kResidualTruncation, kResidualTruncation) + kResidualTruncation; }

// Accumulates order-m co-occurrences of the truncated differences along one
// direction into out[offset, offset + 7^m), normalized by the sample count.
void cooccurrence(const GrayImage& img, bool vertical, int order, double* out) {
  const int w = img.width(), h = img.height();
  // Difference at (r, c) along the direction, then `order` of them in a row.
  const int span_r = vertical ? order : 0;
  const int span_c = vertical ? 0 : order;
  long long count = 0;
  for (int r = 0; r + span_r < h; ++r) {
    for (int c = 0; c + span_c < w; ++c) {
      int bin = 0;
      for (int k = 0; k < order; ++k) {
        const int r0 = vertical ? r + k : r, c0 = vertical ? c : c + k;
        const int r1 = vertical ? r0 + 1 : r0, c1 = vertical ? c0 : c0 + 1;
        bin = bin * kLevels + truncated(int{img(r1, c1)} - int{img(r0, c0)});
      }
      out[bin] += 1.0;
      ++count;
    }
  }
  if (count == 0) return;
  int bins = 1;
  for (int k = 0; k < order; ++k) bins *= kLevels;
  for (int b = 0; b < bins; ++b) out[b] /= static_cast<double>(count);
}

}  // namespace

FeatureVector extract_features(const GrayImage& img) {
  FeatureVector f(kFeatureDim, 0.0);
  double* p = f.data();
  cooccurrence(img, false, 2, p);
  cooccurrence(img, true, 2, p + kPairBins);
  cooccurrence(img, false, 3, p + 2 * kPairBins);
  cooccurrence(img, true, 3, p + 2 * kPairBins + kTripleBins);
  return f;
}

std::vector<FeatureVector> extract_features(const std::vector<GrayImage>& imgs) {
  std::vector<FeatureVector> out(imgs.size());
  const auto n = static_cast<std::ptrdiff_t>(imgs.size());
  STEGCOST_OMP("omp parallel for schedule(dynamic)")
  for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = extract_features(imgs[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace stegcost
