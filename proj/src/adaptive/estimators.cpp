#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "fdlink/adaptive.hpp"

namespace fdlink {

SlidingWindowConfig SlidingWindowConfig::delayed(std::size_t filter_length, std::size_t window_length,
                                                 double regularization) {
  SlidingWindowConfig cfg;
  cfg.filter_length = filter_length;
  cfg.window_length = window_length;
  cfg.delay = window_length / 2;
  cfg.regularization = regularization;
  return cfg;
}

void HomotopyConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ParameterError("homotopy gamma must lie in (0, 1)");
  if (!(mu_d > 0.0 && mu_d < 1.0)) throw ParameterError("debiasing threshold must lie in (0, 1)");
  if (!(mu_w > 0.0 && mu_w <= 1.0)) throw ParameterError("reweighting rate must lie in (0, 1]");
  if (max_stages == 0 || max_updates == 0) throw ParameterError("homotopy budgets must be positive");
  if (ladder_levels < 1) throw ParameterError("DCD ladder needs at least one level");
  if (!(kappa > 0.0)) throw ParameterError("kappa must be positive");
  if (noise_variance < 0.0) throw ParameterError("noise variance must be non-negative");
  if (!(support_weight > 0.0 && support_weight <= 1.0)) {
    throw ParameterError("support weight must lie in (0, 1]");
  }
}

Eigen::VectorXcd solve_normal_equations(const Eigen::MatrixXcd& R, const Eigen::VectorXcd& b,
                                        double regularization) {
  if (R.rows() != R.cols() || R.rows() != b.size()) throw ParameterError("normal equations size mismatch");
  if (regularization < 0.0) throw ParameterError("regularization must be non-negative");
  Eigen::MatrixXcd A = R;
  A.diagonal().array() += regularization;
  Eigen::LLT<Eigen::MatrixXcd> llt(A);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-13)) {
    throw SolverError("normal-equation matrix is singular; add regularization or lengthen the window");
  }
  return llt.solve(b);
}

double channel_nmse(const TimeVaryingChannel& estimate, const TimeVaryingChannel& truth,
                    std::size_t first, std::size_t last) {
  if (estimate.length() != truth.length()) throw ParameterError("channel lengths differ");
  last = std::min({last, estimate.instants(), truth.instants()});
  if (first >= last) throw ParameterError("empty comparison range");
  double err = 0.0, ref = 0.0;
  for (std::size_t i = first; i < last; ++i) {
    const auto e = estimate.taps_at(i);
    const auto t = truth.taps_at(i);
    for (std::size_t l = 0; l < truth.length(); ++l) {
      err += std::norm(e[l] - t[l]);
      ref += std::norm(t[l]);
    }
  }
  if (ref <= 0.0) throw ParameterError("reference channel has zero energy");
  return err / ref;
}

namespace {

using WindowSolver =
    std::function<Eigen::VectorXcd(const Eigen::MatrixXcd& R, const Eigen::VectorXcd& b, double energy)>;

struct WindowPlan {
  std::size_t filter_length;
  std::size_t delay;
  std::size_t stride;
  std::size_t recompute;
};

std::vector<std::size_t> plan_centers(std::size_t n, std::size_t mo, std::size_t stride) {
  std::vector<std::size_t> c;
  const std::size_t last = n - 1 - mo;
  for (std::size_t k = mo; k <= last; k += stride) c.push_back(k);
  if (c.back() != last) c.push_back(last);
  return c;
}

EstimatorOutput run_windowed(std::span<const cplx> desired, std::span<const cplx> regressor,
                             const BasisFunctions& basis, const WindowPlan& plan,
                             const WindowSolver& solve) {
  const std::size_t n = desired.size();
  const std::size_t L = plan.filter_length;
  const std::size_t M = basis.window_length;
  const std::size_t mo = basis.half_window();
  if (regressor.size() != n) throw ParameterError("desired and regressor lengths differ");
  if (L == 0) throw ParameterError("filter length must be positive");
  if (plan.stride == 0) throw ParameterError("solve stride must be positive");
  if (n < M) throw ParameterError("record shorter than the estimation window");
  if (plan.delay >= M) throw ParameterError("delay must be smaller than the window length");

  EstimatorOutput out;
  out.delay = plan.delay;
  out.order = basis.order;
  out.centers = plan_centers(n, mo, plan.stride);

  SlidingNormalEquations eq(desired, regressor, L, basis, plan.recompute);
  Eigen::MatrixXcd R;
  Eigen::VectorXcd b;
  out.coefficients.reserve(out.centers.size());
  for (std::size_t c : out.centers) {
    eq.seek(static_cast<std::ptrdiff_t>(c));
    eq.assemble(R, b);
    const Eigen::VectorXcd x = solve(R, b, eq.weighted_desired_energy());
    out.coefficients.emplace_back(x.data(), x.data() + x.size());
  }

  const std::size_t P1 = basis.order + 1;
  out.estimate = TimeVaryingChannel(n, L);
  const auto& centers = out.centers;
  std::vector<double> phi(P1);
  for (std::size_t i = 0; i < n; ++i) {
    // Window centre whose estimate describes instant i.
    const auto want = static_cast<std::ptrdiff_t>(i + plan.delay) - static_cast<std::ptrdiff_t>(mo);
    auto h = out.estimate.taps_at(i);
    if (basis.order == 0) {
      const auto lo = static_cast<std::ptrdiff_t>(centers.front());
      const auto hi = static_cast<std::ptrdiff_t>(centers.back());
      const std::ptrdiff_t c = std::clamp(want, lo, hi);
      auto it = std::upper_bound(centers.begin(), centers.end(), static_cast<std::size_t>(c));
      const std::size_t j = static_cast<std::size_t>(it - centers.begin()) - 1;
      const CVec& a = out.coefficients[j];
      if (j + 1 == centers.size() || static_cast<std::size_t>(c) == centers[j]) {
        std::copy(a.begin(), a.begin() + L, h.begin());
      } else {
        const CVec& bb = out.coefficients[j + 1];
        const double w = static_cast<double>(c - static_cast<std::ptrdiff_t>(centers[j])) /
                         static_cast<double>(centers[j + 1] - centers[j]);
        for (std::size_t l = 0; l < L; ++l) h[l] = (1.0 - w) * a[l] + w * bb[l];
      }
    } else {
      const auto wc = static_cast<std::size_t>(std::max<std::ptrdiff_t>(want, 0));
      auto it = std::lower_bound(centers.begin(), centers.end(), wc);
      std::size_t j = static_cast<std::size_t>(it - centers.begin());
      if (j == centers.size()) {
        j = centers.size() - 1;
      } else if (j > 0 && wc - centers[j - 1] <= centers[j] - wc) {
        --j;
      }
      const double k = static_cast<double>(want - static_cast<std::ptrdiff_t>(centers[j]));
      for (std::size_t p = 0; p < P1; ++p) phi[p] = basis.eval(p, k);
      const CVec& a = out.coefficients[j];
      for (std::size_t l = 0; l < L; ++l) {
        cplx acc{};
        for (std::size_t p = 0; p < P1; ++p) acc += phi[p] * a[p * L + l];
        h[l] = acc;
      }
    }
  }

  double res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto h = out.estimate.taps_at(i);
    cplx y{};
    const std::size_t lmax = std::min(L, i + 1);
    for (std::size_t l = 0; l < lmax; ++l) y += h[l] * regressor[i - l];
    res += std::norm(desired[i] - y);
  }
  out.residual_power = res / static_cast<double>(n);
  return out;
}

WindowSolver direct_solver(double eps) {
  return [eps](const Eigen::MatrixXcd& R, const Eigen::VectorXcd& b, double) {
    return solve_normal_equations(R, b, eps);
  };
}

void check_window(std::size_t M) {
  if (M == 0 || M % 2 == 0) throw ParameterError("window length must be odd");
}

}  // namespace

EstimatorOutput srls_estimate(std::span<const cplx> desired, std::span<const cplx> regressor,
                              const SlidingWindowConfig& cfg) {
  check_window(cfg.window_length);
  const auto basis = legendre_basis(0, cfg.window_length, WindowShape::rectangular);
  return run_windowed(desired, regressor, basis,
                      {cfg.filter_length, 0, cfg.solve_stride, cfg.recompute_interval},
                      direct_solver(cfg.regularization));
}

EstimatorOutput srlsd_estimate(std::span<const cplx> desired, std::span<const cplx> regressor,
                               const SlidingWindowConfig& cfg) {
  check_window(cfg.window_length);
  const auto basis = legendre_basis(0, cfg.window_length, WindowShape::rectangular);
  return run_windowed(desired, regressor, basis,
                      {cfg.filter_length, cfg.delay, cfg.solve_stride, cfg.recompute_interval},
                      direct_solver(cfg.regularization));
}

EstimatorOutput srls_l_estimate(std::span<const cplx> desired, std::span<const cplx> regressor,
                                const BemConfig& bem, double regularization) {
  check_window(bem.window_length);
  const auto basis = legendre_basis(bem.order, bem.window_length, bem.window, bem.orthonormalize);
  return run_windowed(desired, regressor, basis,
                      {bem.filter_length, basis.half_window(), bem.solve_stride, bem.recompute_interval},
                      direct_solver(regularization));
}

EstimatorOutput hsrls_l_dcd_estimate(std::span<const cplx> desired, std::span<const cplx> regressor,
                                     const BemConfig& bem, const HomotopyConfig& hcfg,
                                     double regularization) {
  hcfg.validate();
  check_window(bem.window_length);
  const auto basis = legendre_basis(bem.order, bem.window_length, bem.window, bem.orthonormalize);
  const double weight_sum = std::accumulate(basis.weights.begin(), basis.weights.end(), 0.0);

  Eigen::VectorXd weights;
  double noise = hcfg.noise_variance;
  auto solver = [&](const Eigen::MatrixXcd& R, const Eigen::VectorXcd& b, double energy) {
    Eigen::MatrixXcd A = R;
    A.diagonal().array() += regularization;
    HomotopyResult r = h_l1_dcd_solve(A, b, hcfg, weights, noise);
    weights = r.weights;
    if (hcfg.noise_variance <= 0.0) {
      // Weighted residual of this window is the noise guess for the next one.
      const double j = energy - 2.0 * r.coefficients.dot(b).real() +
                       r.coefficients.dot(R * r.coefficients).real();
      noise = std::max(j, 0.0) / weight_sum;
    }
    return r.coefficients;
  };
  EstimatorOutput out = run_windowed(
      desired, regressor, basis,
      {bem.filter_length, basis.half_window(), bem.solve_stride, bem.recompute_interval}, solver);
  out.reweighting = RVec(weights.data(), weights.data() + weights.size());
  return out;
}

}  // namespace fdlink
