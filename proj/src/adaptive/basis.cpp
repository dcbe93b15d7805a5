#include <cmath>
#include <numbers>

#include "fdlink/adaptive.hpp"

namespace fdlink {

double window_weight(WindowShape shape, std::ptrdiff_t k, std::size_t half_window) {
  switch (shape) {
    case WindowShape::rectangular:
      return 1.0;
    case WindowShape::hann:
      // Raised cosine that is still positive at k = +/-Mo.
      return 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(k) /
                                   static_cast<double>(half_window + 1)));
  }
  return 1.0;
}

double BasisFunctions::eval(std::size_t p, double k) const {
  const std::size_t mo = half_window();
  const double t = mo == 0 ? 0.0 : k / static_cast<double>(mo);
  double acc = 0.0;
  double tn = 1.0;
  for (Eigen::Index n = 0; n < poly.cols(); ++n) {
    acc += poly(static_cast<Eigen::Index>(p), n) * tn;
    tn *= t;
  }
  return acc;
}

BasisFunctions legendre_basis(std::size_t order, std::size_t window_length, WindowShape window,
                              bool orthonormalize) {
  if (window_length == 0 || window_length % 2 == 0) {
    throw ParameterError("basis window length must be odd");
  }
  if (order > 0 && window_length < 2 * order + 1) {
    throw ParameterError("basis window too short for the requested order");
  }
  BasisFunctions basis;
  basis.order = order;
  basis.window_length = window_length;
  basis.window = window;
  basis.orthonormal = orthonormalize;

  const Eigen::Index P1 = static_cast<Eigen::Index>(order) + 1;
  basis.poly = Eigen::MatrixXd::Zero(P1, P1);
  basis.poly(0, 0) = 1.0;
  if (P1 > 1) basis.poly(1, 1) = 1.0;
  // (n+1) P_{n+1}(t) = (2n+1) t P_n(t) - n P_{n-1}(t)
  for (Eigen::Index n = 1; n + 1 < P1; ++n) {
    for (Eigen::Index j = 0; j < P1; ++j) {
      double v = -static_cast<double>(n) * basis.poly(n - 1, j);
      if (j > 0) v += static_cast<double>(2 * n + 1) * basis.poly(n, j - 1);
      basis.poly(n + 1, j) = v / static_cast<double>(n + 1);
    }
  }

  const std::size_t mo = basis.half_window();
  basis.weights.resize(window_length);
  for (std::size_t j = 0; j < window_length; ++j) {
    basis.weights[j] = window_weight(window, static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(mo), mo);
  }

  auto sample = [&](const Eigen::MatrixXd& poly) {
    Eigen::MatrixXd v(P1, static_cast<Eigen::Index>(window_length));
    for (std::size_t j = 0; j < window_length; ++j) {
      const double t = mo == 0 ? 0.0 : (static_cast<double>(j) - static_cast<double>(mo)) / mo;
      for (Eigen::Index p = 0; p < P1; ++p) {
        double acc = 0.0, tn = 1.0;
        for (Eigen::Index n = 0; n < P1; ++n) {
          acc += poly(p, n) * tn;
          tn *= t;
        }
        v(p, static_cast<Eigen::Index>(j)) = acc;
      }
    }
    return v;
  };

  if (orthonormalize) {
    const Eigen::Map<const Eigen::VectorXd> w(basis.weights.data(), static_cast<Eigen::Index>(window_length));
    Eigen::MatrixXd vals = sample(basis.poly);
    // Modified Gram-Schmidt on sampled rows, mirrored on the coefficients.
    for (Eigen::Index p = 0; p < P1; ++p) {
      for (Eigen::Index q = 0; q < p; ++q) {
        const double proj = (vals.row(p).array() * vals.row(q).array() * w.transpose().array()).sum();
        vals.row(p) -= proj * vals.row(q);
        basis.poly.row(p) -= proj * basis.poly.row(q);
      }
      const double nrm = std::sqrt((vals.row(p).array().square() * w.transpose().array()).sum());
      vals.row(p) /= nrm;
      basis.poly.row(p) /= nrm;
    }
  }
  basis.values = sample(basis.poly);
  return basis;
}

}  // namespace fdlink
