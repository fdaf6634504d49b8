#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

namespace testutil {

inline std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

// Standard normal quantile (Acklam's rational approximation, |err| < 1.2e-9).
inline double normal_quantile(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1 - plow;
  double q, r;
  if (p < plow) {
    q = std::sqrt(-2 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  if (p > phigh) {
    q = std::sqrt(-2 * std::log(1 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  q = p - 0.5;
  r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
         q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Wasserstein-1 between two weighted 1-D atom sets (exact, via the merged
// quantile functions).
struct WeightedAtoms {
  std::vector<double> values;
  std::vector<double> weights;  // must sum to 1
};

inline double wasserstein1(WeightedAtoms a, WeightedAtoms b) {
  auto sort_atoms = [](WeightedAtoms& w) {
    std::vector<size_t> idx(w.values.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](size_t i, size_t j) { return w.values[i] < w.values[j]; });
    WeightedAtoms out;
    for (size_t i : idx) {
      out.values.push_back(w.values[i]);
      out.weights.push_back(w.weights[i]);
    }
    w = out;
  };
  sort_atoms(a);
  sort_atoms(b);
  double dist = 0.0, mass_done = 0.0;
  size_t i = 0, j = 0;
  double ra = a.weights.empty() ? 0.0 : a.weights[0];
  double rb = b.weights.empty() ? 0.0 : b.weights[0];
  while (i < a.values.size() && j < b.values.size()) {
    const double m = std::min(ra, rb);
    dist += m * std::abs(a.values[i] - b.values[j]);
    ra -= m;
    rb -= m;
    mass_done += m;
    if (ra <= 1e-15 && i + 1 < a.values.size()) ra = a.weights[++i];
    else if (ra <= 1e-15) ++i;
    if (rb <= 1e-15 && j + 1 < b.values.size()) rb = b.weights[++j];
    else if (rb <= 1e-15) ++j;
  }
  (void)mass_done;
  return dist;
}

inline WeightedAtoms uniform_sample_atoms(const std::vector<double>& samples) {
  WeightedAtoms out;
  out.values = samples;
  out.weights.assign(samples.size(), 1.0 / samples.size());
  return out;
}

}  // namespace testutil
