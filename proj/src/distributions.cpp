#include "swfr/distributions.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace swfr {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;  // log(2*pi)

double logsumexp(const std::vector<double>& v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}
}  // namespace

int dim(const DistributionSpec& spec) {
  return std::visit(
      [](const auto& s) -> int {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, StdNormalSpec>) return s.d;
        else if constexpr (std::is_same_v<T, GaussianMixtureSpec>) return s.d;
        else if constexpr (std::is_same_v<T, EightGaussiansSpec>) return 2;
        else if constexpr (std::is_same_v<T, MoonsSpec>) return 2;
        else return static_cast<int>(s.x.cols());
      },
      spec);
}

bool has_density(const DistributionSpec& spec) {
  return !std::holds_alternative<MoonsSpec>(spec) &&
         !std::holds_alternative<EmpiricalWeightedSpec>(spec);
}

GaussianMixtureSpec mixture_1d() {
  GaussianMixtureSpec m;
  m.d = 1;
  m.components.push_back({1.0 / 3.0, Vector::Constant(1, -3.0), 1.0});
  m.components.push_back({2.0 / 3.0, Vector::Constant(1, 3.0), 1.0});
  return m;
}

GaussianMixtureSpec eight_gaussians_mixture(const EightGaussiansSpec& s) {
  GaussianMixtureSpec m;
  m.d = 2;
  for (int k = 0; k < 8; ++k) {
    double ang = 2.0 * std::numbers::pi * k / 8.0;
    Vector mu(2);
    mu << s.radius * std::cos(ang), s.radius * std::sin(ang);
    m.components.push_back({1.0 / 8.0, mu, s.component_std * s.component_std});
  }
  return m;
}

namespace {

Matrix sample_mixture(const GaussianMixtureSpec& s, int count, Rng& rng) {
  Matrix out(count, s.d);
  for (int i = 0; i < count; ++i) {
    double u = rng.uniform();
    double acc = 0.0;
    const auto* comp = &s.components.back();
    for (const auto& cdef : s.components) {
      acc += cdef.weight;
      if (u <= acc) {
        comp = &cdef;
        break;
      }
    }
    double sd = std::sqrt(comp->variance);
    for (int j = 0; j < s.d; ++j) out(i, j) = comp->mean(j) + sd * rng.normal();
  }
  return out;
}

Matrix sample_moons(const MoonsSpec& s, int count, Rng& rng) {
  Matrix out(count, 2);
  for (int i = 0; i < count; ++i) {
    bool outer = rng.uniform() < 0.5;
    double t = std::numbers::pi * rng.uniform();
    double x, y;
    if (outer) {
      x = std::cos(t);
      y = std::sin(t);
    } else {
      x = 1.0 - std::cos(t);
      y = 0.5 - std::sin(t);
    }
    out(i, 0) = x + s.noise_std * rng.normal();
    out(i, 1) = y + s.noise_std * rng.normal();
  }
  return out;
}

}  // namespace

Matrix sample(const DistributionSpec& spec, int count, Rng& rng) {
  require(count >= 1, ErrorCode::invalid_argument, "sample: count must be >= 1");
  return std::visit(
      [&](const auto& s) -> Matrix {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, StdNormalSpec>) {
          Matrix out(count, s.d);
          for (int i = 0; i < count; ++i)
            for (int j = 0; j < s.d; ++j) out(i, j) = rng.normal();
          return out;
        } else if constexpr (std::is_same_v<T, GaussianMixtureSpec>) {
          return sample_mixture(s, count, rng);
        } else if constexpr (std::is_same_v<T, EightGaussiansSpec>) {
          GaussianMixtureSpec m = eight_gaussians_mixture(s);
          return sample_mixture(m, count, rng);
        } else if constexpr (std::is_same_v<T, MoonsSpec>) {
          return sample_moons(s, count, rng);
        } else {
          Matrix out(count, s.x.cols());
          for (int i = 0; i < count; ++i) {
            int idx = static_cast<int>(rng.uniform() * static_cast<double>(s.x.rows()));
            idx = std::min<int>(idx, static_cast<int>(s.x.rows()) - 1);
            out.row(i) = s.x.row(idx);
          }
          return out;
        }
      },
      spec);
}

WeightedBatch sample_weighted(const DistributionSpec& spec, int count, Rng& rng) {
  if (const auto* e = std::get_if<EmpiricalWeightedSpec>(&spec)) {
    // pass through the stored rows when the count matches; otherwise resample
    WeightedBatch b;
    if (count == e->x.rows()) {
      b.x = e->x;
      b.w = e->w;
    } else {
      b.x.resize(count, e->x.cols());
      b.w.resize(count);
      for (int i = 0; i < count; ++i) {
        int idx = static_cast<int>(rng.uniform() * static_cast<double>(e->x.rows()));
        idx = std::min<int>(idx, static_cast<int>(e->x.rows()) - 1);
        b.x.row(i) = e->x.row(idx);
        b.w(i) = e->w(idx);
      }
      b.w *= 1.0 / b.w.mean();
    }
    return b;
  }
  return {sample(spec, count, rng), Vector::Ones(count)};
}

double log_density(const DistributionSpec& spec, const Vector& x) {
  require(has_density(spec), ErrorCode::invalid_argument,
          "log_density: spec has no tractable density");
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, StdNormalSpec>) {
          require(x.size() == s.d, ErrorCode::shape_mismatch, "log_density: dimension mismatch");
          return -0.5 * x.squaredNorm() - 0.5 * s.d * kLog2Pi;
        } else if constexpr (std::is_same_v<T, GaussianMixtureSpec>) {
          require(x.size() == s.d, ErrorCode::shape_mismatch, "log_density: dimension mismatch");
          std::vector<double> terms;
          terms.reserve(s.components.size());
          for (const auto& c : s.components) {
            double q = (x - c.mean).squaredNorm() / c.variance;
            terms.push_back(std::log(c.weight) - 0.5 * q - 0.5 * s.d * kLog2Pi -
                            0.5 * s.d * std::log(c.variance));
          }
          return logsumexp(terms);
        } else if constexpr (std::is_same_v<T, EightGaussiansSpec>) {
          GaussianMixtureSpec m = eight_gaussians_mixture(s);
          return log_density(DistributionSpec{m}, x);
        } else {
          return 0.0;  // unreachable, guarded above
        }
      },
      spec);
}

EmpiricalWeightedSpec load_weighted_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io, "load_weighted_csv: cannot open " + path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::io,
          "load_weighted_csv: empty file " + path);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) header.push_back(tok);
  }
  require(header.size() >= 2 && header.back() == "w", ErrorCode::config,
          "load_weighted_csv: header must be x0..x{d-1},w");
  const int d = static_cast<int>(header.size()) - 1;
  for (int j = 0; j < d; ++j)
    require(header[j] == "x" + std::to_string(j), ErrorCode::config,
            "load_weighted_csv: unexpected header column " + header[j]);

  std::vector<double> vals;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    int cols = 0;
    while (std::getline(ss, tok, ',')) {
      vals.push_back(std::stod(tok));
      ++cols;
    }
    ++rows;
    require(cols == d + 1, ErrorCode::io,
            "load_weighted_csv: ragged row " + std::to_string(rows));
    double w = vals.back();
    require(std::isfinite(w) && w > 0.0, ErrorCode::invalid_argument,
            "load_weighted_csv: nonpositive or non-finite weight in row " + std::to_string(rows));
  }
  require(rows >= 1, ErrorCode::io, "load_weighted_csv: no data rows");

  EmpiricalWeightedSpec e;
  e.x.resize(rows, d);
  e.w.resize(rows);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < d; ++j) e.x(i, j) = vals[i * (d + 1) + j];
    e.w(i) = vals[i * (d + 1) + d];
  }
  e.w *= 1.0 / e.w.mean();
  return e;
}

void save_weighted_csv(const std::string& path, const Matrix& x, const Vector& w) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::io, "save_weighted_csv: cannot open " + path);
  for (int j = 0; j < x.cols(); ++j) out << "x" << j << ",";
  out << "w\n";
  out.precision(17);
  for (int i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < x.cols(); ++j) out << x(i, j) << ",";
    out << w(i) << "\n";
  }
}

}  // namespace swfr
