#include "swfr/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace swfr {

namespace {

struct SortedSample {
  std::vector<double> x;
  std::vector<double> w;  // normalized to sum 1
};

SortedSample sorted_normalized(const Vector& x, const Vector& w) {
  require(x.size() == w.size(), ErrorCode::shape_mismatch, "stats: sample/weight size mismatch");
  require(x.size() >= 1, ErrorCode::invalid_argument, "stats: empty sample");
  double total = w.sum();
  require(total > 0.0, ErrorCode::invalid_argument, "stats: weights must have positive sum");
  std::vector<int> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return x(a) < x(b); });
  SortedSample s;
  s.x.reserve(idx.size());
  s.w.reserve(idx.size());
  for (int i : idx) {
    s.x.push_back(x(i));
    s.w.push_back(w(i) / total);
  }
  return s;
}

}  // namespace

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double weighted_ks(const Vector& x, const Vector& w, const std::function<double(double)>& cdf) {
  SortedSample s = sorted_normalized(x, w);
  double sup = 0.0, cum = 0.0;
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    double f = cdf(s.x[i]);
    sup = std::max(sup, std::abs(cum - f));  // left limit
    cum += s.w[i];
    sup = std::max(sup, std::abs(cum - f));
  }
  return sup;
}

double weighted_ks2(const Vector& x1, const Vector& w1, const Vector& x2, const Vector& w2) {
  SortedSample a = sorted_normalized(x1, w1);
  SortedSample b = sorted_normalized(x2, w2);
  double ca = 0.0, cb = 0.0, sup = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.x.size() || j < b.x.size()) {
    double xa = i < a.x.size() ? a.x[i] : std::numeric_limits<double>::infinity();
    double xb = j < b.x.size() ? b.x[j] : std::numeric_limits<double>::infinity();
    double cut = std::min(xa, xb);
    while (i < a.x.size() && a.x[i] <= cut) ca += a.w[i++];
    while (j < b.x.size() && b.x[j] <= cut) cb += b.w[j++];
    sup = std::max(sup, std::abs(ca - cb));
  }
  return sup;
}

double weighted_w1(const Vector& x1, const Vector& w1, const Vector& x2, const Vector& w2) {
  SortedSample a = sorted_normalized(x1, w1);
  SortedSample b = sorted_normalized(x2, w2);
  // integrate |F_a - F_b| over the merged breakpoints
  std::vector<double> pts;
  pts.reserve(a.x.size() + b.x.size());
  pts.insert(pts.end(), a.x.begin(), a.x.end());
  pts.insert(pts.end(), b.x.begin(), b.x.end());
  std::sort(pts.begin(), pts.end());
  double ca = 0.0, cb = 0.0, dist = 0.0;
  std::size_t i = 0, j = 0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    while (i < a.x.size() && a.x[i] <= pts[k]) ca += a.w[i++];
    while (j < b.x.size() && b.x[j] <= pts[k]) cb += b.w[j++];
    dist += std::abs(ca - cb) * (pts[k + 1] - pts[k]);
  }
  return dist;
}

double weighted_mean(const Vector& x, const Vector& w) {
  require(x.size() == w.size() && x.size() >= 1, ErrorCode::shape_mismatch,
          "weighted_mean: bad shapes");
  return x.dot(w) / w.sum();
}

double weighted_std(const Vector& x, const Vector& w) {
  double mu = weighted_mean(x, w);
  double var = ((x.array() - mu).square() * w.array()).sum() / w.sum();
  return std::sqrt(var);
}

double ess(const Vector& w) {
  require(w.size() >= 1, ErrorCode::invalid_argument, "ess: empty weights");
  double s = w.sum();
  double s2 = w.squaredNorm();
  require(s2 > 0.0, ErrorCode::invalid_argument, "ess: all-zero weights");
  return s * s / s2;
}

}  // namespace swfr
