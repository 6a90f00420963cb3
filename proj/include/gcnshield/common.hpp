#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace gcnshield {

#ifdef GCNSHIELD_REAL_FLOAT32
using real_t = float;
#else
using real_t = double;
#endif

using Mat = Eigen::Matrix<real_t, Eigen::Dynamic, Eigen::Dynamic>;
using Vec = Eigen::Matrix<real_t, Eigen::Dynamic, 1>;
using SpMat = Eigen::SparseMatrix<real_t>;

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid data handed to a constructor or loader (bad endpoint, ragged rows, ...).
struct InputError : Error {
  using Error::Error;
};

/// Invalid configuration value (out-of-range parameter, class too small, ...).
struct ConfigError : Error {
  using Error::Error;
};

/// Malformed text input; carries file and 1-based line number.
struct ParseError : Error {
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what), file(file), line(line) {}
  std::string file;
  std::size_t line;
};

/// Raised when a training loss becomes non-finite.
struct TrainingDiverged : Error {
  TrainingDiverged(const std::string& what, int epoch)
      : Error(what + " (epoch " + std::to_string(epoch) + ")"), epoch(epoch) {}
  int epoch;
};

/// Raised when the DICE insertion pool cannot supply enough endpoints.
struct AttackInfeasible : Error {
  AttackInfeasible(int node, const std::string& what) : Error(what), node(node) {}
  int node;
};

/// Raised by statistics routines that cannot run on the given sample.
struct InsufficientData : Error {
  using Error::Error;
};

/// Raised when a metric is requested over an empty subset.
struct MetricUndefined : Error {
  using Error::Error;
};

/// Exact nonnegative rational, used where ceil(beta * d) must not suffer
/// float rounding (e.g. 0.1 * 10 rounding up to 2).
struct Ratio {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Ratio() = default;
  Ratio(std::int64_t n, std::int64_t d) : num(n), den(d) {
    if (den <= 0 || num < 0) throw ConfigError("Ratio requires num >= 0 and den > 0");
    const std::int64_t g = std::gcd(num, den);
    num /= g;
    den /= g;
  }

  /// Best rational reconstruction of a double via continued fractions,
  /// denominator capped at 10^9. Recovers decimal literals exactly
  /// (0.1 -> 1/10, 0.75 -> 3/4).
  static Ratio from_double(double x) {
    if (!(x >= 0.0) || x > 9e18) throw ConfigError("Ratio::from_double: value out of range");
    const std::int64_t max_den = 1000000000;
    std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double r = x;
    for (int it = 0; it < 64; ++it) {
      const double fl = std::floor(r);
      const auto a = static_cast<std::int64_t>(fl);
      if (q0 + a * q1 > max_den && q1 > 0) break;
      const std::int64_t p2 = a * p1 + p0;
      const std::int64_t q2 = a * q1 + q0;
      p0 = p1;
      q0 = q1;
      p1 = p2;
      q1 = q2;
      const double frac = r - fl;
      if (frac < 1e-15) break;
      r = 1.0 / frac;
    }
    return Ratio(p1, q1);
  }

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  /// ceil(this * d) in exact integer arithmetic, d >= 0.
  std::int64_t ceil_mul(std::int64_t d) const {
    return (num * d + den - 1) / den;
  }

  /// floor(this * d) in exact integer arithmetic, d >= 0.
  std::int64_t floor_mul(std::int64_t d) const {
    return (num * d) / den;
  }

  bool operator==(const Ratio& o) const { return num == o.num && den == o.den; }
};

/// Index of the largest entry; ties broken by lowest index.
inline int argmax_lowest(const Vec& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace gcnshield
