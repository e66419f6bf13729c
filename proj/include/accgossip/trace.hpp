#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace accgossip {

enum class Method { Pairwise, Shb, AccOpt1, AccOpt2 };

inline constexpr Method kAllMethods[] = {Method::Pairwise, Method::Shb, Method::AccOpt1,
                                         Method::AccOpt2};

/// Name used in configs, CSV and on the command line.
inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::Pairwise: return "pairwise";
    case Method::Shb: return "shb";
    case Method::AccOpt1: return "accgossip-opt1";
    case Method::AccOpt2: return "accgossip-opt2";
  }
  return "?";
}

inline std::optional<Method> parse_method(std::string_view name) {
  for (auto m : kAllMethods)
    if (method_name(m) == name) return m;
  // Matrix-form aliases.
  if (name == "rk") return Method::Pairwise;
  if (name == "accrk-opt1") return Method::AccOpt1;
  if (name == "accrk-opt2") return Method::AccOpt2;
  return std::nullopt;
}

inline bool is_accelerated(Method m) { return m == Method::AccOpt1 || m == Method::AccOpt2; }

struct TracePoint {
  std::size_t iteration = 0;
  double relative_error = 0.0;
};

struct TraceMeta {
  std::string topology;
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<std::pair<std::string, double>> params;
};

/// Relative error ||x^k - x*||^2 / ||x^0 - x*||^2 of one run.
struct Trace {
  std::string method;
  std::uint64_t seed = 0;
  std::vector<TracePoint> records;
  TraceMeta meta;

  /// First recorded iteration whose error is at or below `threshold`.
  std::optional<std::size_t> first_below(double threshold) const {
    for (const auto& r : records)
      if (r.relative_error <= threshold) return r.iteration;
    return std::nullopt;
  }
};

/// Squared distance to the consensus vector target * 1.
inline double consensus_distance_sq(const Eigen::VectorXd& x, double target) {
  return (x.array() - target).square().sum();
}

/// Tracks the relative error against the consensus point of x^0.
class RelativeError {
 public:
  explicit RelativeError(const Eigen::VectorXd& x0)
      : target_(x0.mean()), initial_(consensus_distance_sq(x0, target_)) {}

  double target() const noexcept { return target_; }
  double initial() const noexcept { return initial_; }

  double operator()(const Eigen::VectorXd& x) const {
    if (initial_ == 0.0) return 0.0;
    return consensus_distance_sq(x, target_) / initial_;
  }

 private:
  double target_;
  double initial_;
};

/// Which iterations get recorded: 0, every `every` steps, and the last.
struct RecordPolicy {
  std::size_t every = 1;

  bool due(std::size_t k, std::size_t last) const {
    return k == 0 || k == last || (every != 0 && k % every == 0);
  }
};

/// Default record interval: every step for n <= 100, else once per m steps.
inline std::size_t default_record_every(std::size_t n, std::size_t m) { return n <= 100 ? 1 : m; }

}  // namespace accgossip
