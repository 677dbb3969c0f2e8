#pragma once

#include <charconv>
#include <cmath>
#include <cstring>
#include <map>
#include <string>
#include <vector>

namespace fmgraph {

inline constexpr int kReportVersion = 1;

/// Shortest decimal text that parses back to exactly `x`.
inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

/// One row of the per-iteration table. `val_rmse` is NaN on iterations
/// where validation was not evaluated.
struct IterationRecord {
  long iter = 0;
  double train_objective = 0.0;
  double val_rmse = std::nan("");
};

/**
 * Serialized record of one run. `timestamp` and `wall_seconds` are header
 * fields kept apart from the payload (config, metrics, iterations) so two
 * runs with identical config and seed have identical payloads.
 */
struct ExperimentReport {
  std::string timestamp;
  double wall_seconds = 0.0;
  std::map<std::string, std::string> config;
  std::map<std::string, double> metrics;
  std::vector<IterationRecord> iterations;
};

namespace detail {
inline bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }
}  // namespace detail

/// Payload equality: bitwise on doubles (NaN == NaN), headers ignored.
inline bool payload_equal(const ExperimentReport& a, const ExperimentReport& b) {
  if (a.config != b.config || a.metrics.size() != b.metrics.size() ||
      a.iterations.size() != b.iterations.size()) {
    return false;
  }
  for (auto ia = a.metrics.begin(), ib = b.metrics.begin(); ia != a.metrics.end(); ++ia, ++ib) {
    if (ia->first != ib->first || !detail::same_bits(ia->second, ib->second)) return false;
  }
  for (std::size_t i = 0; i < a.iterations.size(); ++i) {
    const auto& x = a.iterations[i];
    const auto& y = b.iterations[i];
    if (x.iter != y.iter || !detail::same_bits(x.train_objective, y.train_objective) ||
        !detail::same_bits(x.val_rmse, y.val_rmse)) {
      return false;
    }
  }
  return true;
}

}  // namespace fmgraph
