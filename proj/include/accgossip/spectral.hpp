#pragma once

// Spectral constants of the incidence system: smallest nonzero eigenvalues of
// A^T A, W = A^T A / m and L, the smoothness constant nu, and the per-iteration
// rates they imply.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "jacobi_eigen.hpp"
#include "topology.hpp"

namespace accgossip {

/// Raised when a matrix has no eigenvalue above the rank tolerance.
class ZeroMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SpectralConfig {
  /// Eigenvalues <= rank_tolerance_rel * (largest eigenvalue) count as zero.
  double rank_tolerance_rel = 1e-9;
  double symmetry_tolerance = 1e-10;
  std::size_t dense_cap = 2000;
};

namespace detail {

inline void check_symmetric(const Matrix& m, const SpectralConfig& cfg) {
  if (m.rows() != m.cols()) throw std::invalid_argument("matrix is not square");
  if (static_cast<std::size_t>(m.rows()) > cfg.dense_cap)
    throw std::invalid_argument("matrix dimension " + std::to_string(m.rows()) +
                                " exceeds dense cap " + std::to_string(cfg.dense_cap));
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > cfg.symmetry_tolerance)
    throw std::invalid_argument("matrix is not symmetric (max asymmetry " + std::to_string(asym) +
                                ")");
}

inline double relative_rank_tolerance(const Vector& ascending, const SpectralConfig& cfg) {
  const double top = ascending.size() > 0 ? ascending(ascending.size() - 1) : 0.0;
  return cfg.rank_tolerance_rel * std::max(top, 0.0);
}

}  // namespace detail

/// Smallest eigenvalue strictly greater than `rank_tolerance`.
inline double eig_min_plus(const Matrix& matrix, double rank_tolerance,
                           const SpectralConfig& cfg = {}) {
  if (rank_tolerance < 0.0) throw std::invalid_argument("rank tolerance must be nonnegative");
  detail::check_symmetric(matrix, cfg);
  const auto eig = jacobi_eigen(matrix, /*want_vectors=*/false);
  for (Eigen::Index k = 0; k < eig.values.size(); ++k)
    if (eig.values(k) > rank_tolerance) return eig.values(k);
  throw ZeroMatrixError("no eigenvalue above rank tolerance " + std::to_string(rank_tolerance));
}

/// Same, with the tolerance taken relative to the largest eigenvalue.
inline double eig_min_plus(const Matrix& matrix, const SpectralConfig& cfg = {}) {
  detail::check_symmetric(matrix, cfg);
  const auto eig = jacobi_eigen(matrix, /*want_vectors=*/false);
  const double tol = detail::relative_rank_tolerance(eig.values, cfg);
  for (Eigen::Index k = 0; k < eig.values.size(); ++k)
    if (eig.values(k) > tol && eig.values(k) > 0.0) return eig.values(k);
  throw ZeroMatrixError("matrix has no nonzero eigenvalue");
}

/// Eigenpairs of a PSD matrix restricted to its range (eigenvalues above the
/// rank tolerance). Gives pseudo-inverses and their square roots without
/// forming them densely.
struct RangeDecomposition {
  Matrix basis;   // n x r, orthonormal columns spanning the range
  Vector values;  // r positive eigenvalues, ascending

  static RangeDecomposition of(const Matrix& psd, const SpectralConfig& cfg = {}) {
    detail::check_symmetric(psd, cfg);
    const auto eig = jacobi_eigen(psd);
    const double tol = detail::relative_rank_tolerance(eig.values, cfg);
    Eigen::Index first = 0;
    while (first < eig.values.size() && !(eig.values(first) > tol && eig.values(first) > 0.0))
      ++first;
    const Eigen::Index r = eig.values.size() - first;
    if (r == 0) throw ZeroMatrixError("matrix has no nonzero eigenvalue");
    RangeDecomposition out;
    out.basis = eig.vectors.rightCols(r);
    out.values = eig.values.tail(r);
    return out;
  }

  Eigen::Index rank() const noexcept { return values.size(); }

  /// u^T (scale * M)^+ u.
  double pinv_quadratic(const Vector& u, double scale = 1.0) const {
    const Vector coords = basis.transpose() * u;
    return (coords.array().square() / (values.array() * scale)).sum();
  }

  Matrix pseudo_inverse() const {
    return basis * values.cwiseInverse().asDiagonal() * basis.transpose();
  }
};

/// Rayleigh-quotient maximum
///   nu = max_{u in Range(A^T)} u^T M u / u^T W u,
///   M = sum_i A_i^T A_i (A^T A)^+ A_i^T A_i,  W = A^T A / m,
/// reduced to the largest eigenvalue of W^{+/2} M W^{+/2} on Range(A^T).
inline double compute_nu(const IncidenceSystem& system, const RangeDecomposition& ata_range) {
  const Matrix& a = system.a();
  const double m = static_cast<double>(system.rows());
  // A_i^T A_i (A^T A)^+ A_i^T A_i = s_i A_i^T A_i with s_i = A_i (A^T A)^+ A_i^T.
  Vector s(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) s(i) = ata_range.pinv_quadratic(a.row(i).transpose());
  // Reduced coordinates: B = A Q_r, so M_r = B^T diag(s) B.
  const Matrix b = a * ata_range.basis;
  Matrix reduced = b.transpose() * s.asDiagonal() * b;
  const Vector w_inv_sqrt = (ata_range.values / m).cwiseSqrt().cwiseInverse();
  reduced = w_inv_sqrt.asDiagonal() * reduced * w_inv_sqrt.asDiagonal();
  reduced = 0.5 * (reduced + reduced.transpose());
  const auto eig = jacobi_eigen(reduced, /*want_vectors=*/false);
  return eig.values(eig.values.size() - 1);
}

inline double compute_nu(const IncidenceSystem& system, const SpectralConfig& cfg = {}) {
  const Matrix ata = system.a().transpose() * system.a();
  if (ata.cwiseAbs().maxCoeff() == 0.0) throw ZeroMatrixError("degenerate system: A = 0");
  return compute_nu(system, RangeDecomposition::of(ata, cfg));
}

struct SpectralSummary {
  double lambda_min_plus_ata = 0.0;
  double lambda_min_plus_w = 0.0;
  double lambda_min_plus_l = 0.0;
  double nu = 0.0;
  std::size_t m = 0;
  std::size_t n = 0;
};

inline SpectralSummary summarize(const IncidenceSystem& system, const SpectralConfig& cfg = {}) {
  const Matrix ata = system.a().transpose() * system.a();
  if (ata.cwiseAbs().maxCoeff() == 0.0) throw ZeroMatrixError("degenerate system: A = 0");
  const auto range = RangeDecomposition::of(ata, cfg);
  SpectralSummary out;
  out.m = system.rows();
  out.n = system.cols();
  out.lambda_min_plus_ata = range.values(0);
  out.lambda_min_plus_w = range.values(0) / static_cast<double>(out.m);
  out.lambda_min_plus_l = eig_min_plus(system.laplacian(), cfg);
  out.nu = compute_nu(system, range);
  return out;
}

struct TheoreticalRates {
  double lambda = 0.0;
  double rho = 0.0;           // RK: 1 - lambda_min^+(A^T A) / ||A||_F^2
  double sigma1 = 1.0;        // Option 1: 1 + sqrt(lambda) / (2m)
  double sigma2 = 1.0;        // Option 1: 1 - sqrt(lambda) / (2m)
  double option2_rate = 0.0;  // Option 2: 1 - sqrt(lambda_min^+(W) / nu)

  /// Asymptotic Option-1 decrease factor per iteration.
  double option1_factor() const { return 1.0 / (sigma1 * sigma1); }
};

/// Relative slack when comparing a user lambda to the computed
/// lambda_min^+(A^T A), which carries eigensolver round-off.
inline constexpr double kLambdaRangeSlack = 1e-10;

inline bool lambda_in_range(const SpectralSummary& summary, double lambda) {
  return lambda >= 0.0 && lambda <= summary.lambda_min_plus_ata * (1.0 + kLambdaRangeSlack);
}

/// `lambda` is the Option-1 parameter and must lie in [0, lambda_min^+(A^T A)].
/// Rows are unit-norm, so ||A||_F^2 = m.
inline TheoreticalRates rates(const SpectralSummary& summary, double lambda) {
  if (!lambda_in_range(summary, lambda))
    throw std::invalid_argument("lambda " + std::to_string(lambda) + " outside [0, " +
                                std::to_string(summary.lambda_min_plus_ata) + "]");
  const double m = static_cast<double>(summary.m);
  TheoreticalRates r;
  r.lambda = lambda;
  r.rho = std::max(0.0, 1.0 - summary.lambda_min_plus_ata / m);
  r.sigma1 = 1.0 + std::sqrt(lambda) / (2.0 * m);
  r.sigma2 = 1.0 - std::sqrt(lambda) / (2.0 * m);
  r.option2_rate = std::max(0.0, 1.0 - std::sqrt(summary.lambda_min_plus_w / summary.nu));
  return r;
}

inline TheoreticalRates rates(const SpectralSummary& summary) {
  return rates(summary, summary.lambda_min_plus_ata);
}

}  // namespace accgossip
