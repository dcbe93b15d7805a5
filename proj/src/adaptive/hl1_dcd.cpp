#include <algorithm>
#include <cmath>

#include "fdlink/adaptive.hpp"

namespace fdlink {

namespace {

// J(c) = 1/2 c^H R c - Re(c^H b) + tau sum w |c|, written with r = b - R c.
double objective(const Eigen::VectorXcd& c, const Eigen::VectorXcd& b, const Eigen::VectorXcd& r,
                 const Eigen::VectorXd& w, double tau) {
  double l1 = 0.0;
  for (Eigen::Index k = 0; k < c.size(); ++k) l1 += w(k) * std::abs(c(k));
  return -0.5 * c.dot(b).real() - 0.5 * c.dot(r).real() + tau * l1;
}

double pow2_ceil(double x) {
  if (!(x > 0.0)) return 1.0;
  return std::exp2(std::ceil(std::log2(x)));
}

}  // namespace

HomotopyResult h_l1_dcd_solve(const Eigen::MatrixXcd& R, const Eigen::VectorXcd& b,
                              const HomotopyConfig& cfg, const Eigen::VectorXd& prior_weights,
                              double noise_variance, HomotopyTrace* trace) {
  cfg.validate();
  const Eigen::Index n = R.rows();
  if (R.cols() != n || b.size() != n) throw ParameterError("homotopy system size mismatch");
  if (prior_weights.size() != 0 && prior_weights.size() != n) {
    throw ParameterError("reweighting vector has the wrong length");
  }
  const double scale = R.cwiseAbs().maxCoeff();
  if ((R - R.adjoint()).cwiseAbs().maxCoeff() > 1e-9 * std::max(scale, 1e-300)) {
    throw ParameterError("homotopy solver needs a Hermitian matrix");
  }

  HomotopyResult out;
  const Eigen::VectorXd w = prior_weights.size() == n ? prior_weights : Eigen::VectorXd::Ones(n);
  // Work with unit-diagonal columns so one threshold fits every basis order.
  Eigen::VectorXd inv_norm(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double dk = R(k, k).real();
    inv_norm(k) = dk > 0.0 ? 1.0 / std::sqrt(dk) : 0.0;
  }
  if (!(inv_norm.maxCoeff() > 0.0)) {
    out.coefficients = Eigen::VectorXcd::Zero(n);
    out.weights = (1.0 - cfg.mu_w) * w + cfg.mu_w * Eigen::VectorXd::Ones(n);
    return out;
  }
  const Eigen::MatrixXcd Rn = inv_norm.asDiagonal() * R * inv_norm.asDiagonal();
  const Eigen::VectorXcd bn = inv_norm.asDiagonal() * b;
  Eigen::VectorXd diag(n);
  for (Eigen::Index k = 0; k < n; ++k) diag(k) = inv_norm(k) > 0.0 ? 1.0 : 0.0;

  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(n);
  Eigen::VectorXcd r = bn;
  std::vector<char> in_support(static_cast<std::size_t>(n), 0);
  std::vector<Eigen::Index> support;

  const double sigma2 = cfg.noise_variance > 0.0 ? cfg.noise_variance : noise_variance;
  double tau = r.cwiseAbs().maxCoeff();
  // Without a noise estimate fall back to a small fraction of the start level.
  const double tau_min = sigma2 > 0.0 ? cfg.kappa * std::sqrt(sigma2) : 1e-4 * tau;
  tau = std::max(tau, tau_min);

  for (std::size_t stage = 0; stage < cfg.max_stages; ++stage) {
    bool changed = false;
    if (trace) trace->tau.push_back(tau);

    // Drop the support entry whose removal lowers the objective most.
    Eigen::Index worst = -1;
    double worst_f = 0.0;
    for (Eigen::Index k : support) {
      const double a = std::abs(c(k));
      const double f = 0.5 * a * a * diag(k) + (std::conj(c(k)) * r(k)).real() - tau * w(k) * a;
      if (f < worst_f) {
        worst_f = f;
        worst = k;
      }
    }
    if (worst >= 0) {
      r += c(worst) * Rn.col(worst);
      c(worst) = 0.0;
      in_support[static_cast<std::size_t>(worst)] = 0;
      support.erase(std::find(support.begin(), support.end(), worst));
      changed = true;
    }

    // Add the inactive entry with the largest predicted decrease.
    Eigen::Index best = -1;
    double best_g = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (in_support[static_cast<std::size_t>(k)] || diag(k) <= 0.0) continue;
      const double excess = std::abs(r(k)) - tau * w(k);
      if (excess <= 0.0) continue;
      const double g = excess * excess / diag(k);
      if (g > best_g) {
        best_g = g;
        best = k;
      }
    }
    if (best >= 0) {
      support.push_back(best);
      in_support[static_cast<std::size_t>(best)] = 1;
      changed = true;
    }

    // Leading DCD over real and imaginary parts of the support.
    if (!support.empty()) {
      double step = 0.0;
      for (Eigen::Index k : support) step = std::max(step, std::abs(r(k)) / diag(k));
      step = pow2_ceil(step);
      std::size_t updates = 0;
      int level = 0;
      while (updates < cfg.max_updates && level < cfg.ladder_levels) {
        bool success = false;
        for (Eigen::Index k : support) {
          for (int part = 0; part < 2 && updates < cfg.max_updates; ++part) {
            const cplx unit = part == 0 ? cplx(1.0) : cplx(0.0, 1.0);
            // Component of the residual along the chosen direction.
            const double g = (std::conj(unit) * r(k)).real();
            if (g == 0.0) continue;
            const double d = g > 0.0 ? step : -step;
            const cplx cn = c(k) + d * unit;
            const double dj =
                0.5 * d * d * diag(k) - d * g + tau * w(k) * (std::abs(cn) - std::abs(c(k)));
            if (dj < 0.0) {
              c(k) = cn;
              r -= (d * unit) * Rn.col(k);
              ++updates;
              ++out.updates;
              success = true;
              changed = true;
              if (trace) {
                trace->objective.push_back(objective(c, bn, r, w, tau));
                trace->objective_stage.push_back(stage);
              }
            }
          }
          if (updates >= cfg.max_updates) break;
        }
        if (!success) {
          step *= 0.5;
          ++level;
        }
      }
    }

    out.stages = stage + 1;
    const double tau_prev = tau;
    tau = std::max(cfg.gamma * tau, tau_min);
    if (tau_prev <= tau_min && !changed) break;
  }

  // Debias: exact least squares on the significant entries. Entries below the
  // noise level are dropped too, since the relative test alone keeps them.
  const double cmax = c.cwiseAbs().maxCoeff();
  const double floor = std::max(cfg.mu_d * cmax, std::sqrt(std::max(sigma2, 0.0)));
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (cmax > 0.0 && std::abs(c(k)) > floor) keep.push_back(k);
  }
  out.coefficients = Eigen::VectorXcd::Zero(n);
  if (!keep.empty()) {
    const auto m = static_cast<Eigen::Index>(keep.size());
    Eigen::MatrixXcd Rs(m, m);
    Eigen::VectorXcd bs(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      bs(i) = b(keep[static_cast<std::size_t>(i)]);
      for (Eigen::Index j = 0; j < m; ++j) Rs(i, j) = R(keep[static_cast<std::size_t>(i)], keep[static_cast<std::size_t>(j)]);
    }
    Eigen::LDLT<Eigen::MatrixXcd> ldlt(Rs);
    Eigen::VectorXcd xs = ldlt.solve(bs);
    if (ldlt.info() != Eigen::Success || !xs.allFinite()) {
      // Keep the biased homotopy values when the reduced system is degenerate.
      for (Eigen::Index k : keep) out.coefficients(k) = c(k) * inv_norm(k);
    } else {
      for (Eigen::Index i = 0; i < m; ++i) out.coefficients(keep[static_cast<std::size_t>(i)]) = xs(i);
    }
  }
  out.support.assign(keep.begin(), keep.end());

  Eigen::VectorXd target = Eigen::VectorXd::Ones(n);
  for (Eigen::Index k : keep) target(k) = cfg.support_weight;
  out.weights = (1.0 - cfg.mu_w) * w + cfg.mu_w * target;
  return out;
}

}  // namespace fdlink
