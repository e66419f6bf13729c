#pragma once

// Cyclic Jacobi eigensolver for dense real symmetric matrices.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace accgossip {

struct SymmetricEigen {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // column k pairs with values(k)
};

/// Diagonalizes `matrix` with cyclic-by-row Jacobi rotations. Sweeps stop
/// once the off-diagonal Frobenius norm drops below machine precision times
/// the matrix norm, or nothing was rotated in a whole sweep.
inline SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& matrix, bool want_vectors = true,
                                   int max_sweeps = 100) {
  const Eigen::Index n = matrix.rows();
  if (matrix.cols() != n) throw std::invalid_argument("jacobi_eigen: matrix is not square");

  Eigen::MatrixXd a = matrix;
  Eigen::MatrixXd v;
  if (want_vectors) v = Eigen::MatrixXd::Identity(n, n);

  const double total = a.squaredNorm();
  const double eps = std::numeric_limits<double>::epsilon();

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= eps * eps * total * 0.25) break;

    bool rotated = false;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        // Skip rotations that cannot change the diagonal in floating point.
        if (std::abs(apq) <= eps * 1e-3 * std::sqrt(std::abs(app * aqq)) && sweep > 3) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        rotated = true;
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::hypot(1.0, theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const double tau = s / (1.0 + c);

        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = a(q, p) = 0.0;
        for (Eigen::Index r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const double arp = a(r, p);
          const double arq = a(r, q);
          a(r, p) = a(p, r) = arp - s * (arq + tau * arp);
          a(r, q) = a(q, r) = arq + s * (arp - tau * arq);
        }
        if (want_vectors) {
          for (Eigen::Index r = 0; r < n; ++r) {
            const double vrp = v(r, p);
            const double vrq = v(r, q);
            v(r, p) = vrp - s * (vrq + tau * vrp);
            v(r, q) = vrq + s * (vrp - tau * vrq);
          }
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index l, Eigen::Index r) { return a(l, l) < a(r, r); });

  SymmetricEigen out;
  out.values.resize(n);
  if (want_vectors) out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto src = order[static_cast<std::size_t>(k)];
    out.values(k) = a(src, src);
    if (want_vectors) out.vectors.col(k) = v.col(src);
  }
  return out;
}

}  // namespace accgossip
