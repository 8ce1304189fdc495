#pragma once

// Central-difference gradient checking over a ParameterStore<double>.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "morphoqg/params.hpp"

namespace morphoqg {

struct GradCheckEntry {
  std::string name;
  double max_abs_error = 0.0;
  double relative_error = 0.0;  // ||g_analytic - g_fd||_inf / (||g_fd||_inf + 1e-12)
  bool passed = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;

  bool passed() const {
    return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed; });
  }
  double max_relative_error() const {
    double m = 0.0;
    for (const auto& e : entries) m = std::max(m, e.relative_error);
    return m;
  }
};

/// Scalar objective over the store. When `with_grad` is true it must also
/// leave d(objective)/d(param) in every parameter's grad buffer.
using Objective = std::function<double(ParameterStore<double>&, bool with_grad)>;

inline GradCheckReport grad_check(ParameterStore<double>& store, const Objective& f,
                                  double eps = 1e-5, double tolerance = 1e-4) {
  store.zero_grad();
  f(store, true);
  std::map<std::string, std::vector<double>> analytic;
  for (const auto& [name, p] : store) analytic[name] = p.grad.values();

  GradCheckReport report;
  for (auto& [name, p] : store) {
    auto& w = p.value.values();
    const auto& ga = analytic[name];
    double max_diff = 0.0, max_fd = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double orig = w[i];
      w[i] = orig + eps;
      const double up = f(store, false);
      w[i] = orig - eps;
      const double down = f(store, false);
      w[i] = orig;
      const double fd = (up - down) / (2.0 * eps);
      max_diff = std::max(max_diff, std::abs(ga[i] - fd));
      max_fd = std::max(max_fd, std::abs(fd));
    }
    const double rel = max_diff / (max_fd + 1e-12);
    report.entries.push_back({name, max_diff, rel, rel < tolerance});
  }
  return report;
}

}  // namespace morphoqg
