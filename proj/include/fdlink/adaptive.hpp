#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "fdlink/channel.hpp"
#include "fdlink/types.hpp"

namespace fdlink {

enum class WindowShape { rectangular, hann };

/// Basis functions phi_p(k) of a polynomial basis expansion on the window
/// k = -Mo..Mo (Mo = (M-1)/2), together with the window weights w(k).
///
/// Each phi_p is kept as polynomial coefficients in t = k / Mo so it can be
/// evaluated off the sample grid (interpolation between solved windows).
struct BasisFunctions {
  std::size_t order = 0;
  std::size_t window_length = 1;
  WindowShape window = WindowShape::rectangular;
  bool orthonormal = false;
  Eigen::MatrixXd poly;    // (P+1) x (P+1): poly(p, n) multiplies t^n
  Eigen::MatrixXd values;  // (P+1) x M: column j holds phi_p(j - Mo)
  RVec weights;            // w(k), k = -Mo..Mo

  std::size_t half_window() const { return (window_length - 1) / 2; }
  double eval(std::size_t p, double k) const;
};

/// Window weight w(k) for k in [-Mo, Mo].
double window_weight(WindowShape shape, std::ptrdiff_t k, std::size_t half_window);

/// Legendre polynomials P_p(k/Mo), p = 0..P. With `orthonormalize` the rows
/// are Gram-Schmidt orthonormalised under the window weights (phi_0 stays
/// constant; values at 0 no longer follow the Legendre values).
BasisFunctions legendre_basis(std::size_t order, std::size_t window_length,
                              WindowShape window = WindowShape::hann, bool orthonormalize = false);

/// Sliding-window least squares (SRLS / SRLSd) parameters.
struct SlidingWindowConfig {
  std::size_t filter_length = 20;
  std::size_t window_length = 1001;  // odd
  std::size_t delay = 0;             // T; SRLSd uses floor(M/2)
  double regularization = 0.0;
  std::size_t solve_stride = 1;
  std::size_t recompute_interval = 1024;

  static SlidingWindowConfig delayed(std::size_t filter_length, std::size_t window_length,
                                     double regularization = 0.0);
};

/// Basis-expansion (SRLS-L family) parameters.
struct BemConfig {
  std::size_t filter_length = 100;
  std::size_t order = 2;
  std::size_t window_length = 1001;  // odd
  WindowShape window = WindowShape::hann;
  bool orthonormalize = false;
  std::size_t solve_stride = 1;
  std::size_t recompute_interval = 1024;
};

/// Homotopy l1 / dichotomous coordinate descent parameters.
struct HomotopyConfig {
  double gamma = 0.5;           // tau reduction factor per stage, (0, 1)
  double mu_d = 1e-4;           // debiasing threshold relative to max |c|, (0, 1)
  double mu_w = 0.5;            // reweighting rate, (0, 1]
  std::size_t max_stages = 48;  // homotopy stages per solve
  std::size_t max_updates = 16; // successful DCD updates per stage (N_u)
  int ladder_levels = 4;        // step-size halvings per stage
  double kappa = 3.0;           // tau_min = kappa * noise level in b
  double noise_variance = 0.0;  // > 0 fixes the noise floor, 0 estimates it
  double support_weight = 0.01; // reweighting target inside the support

  void validate() const;
};

/// Per-instant channel estimate plus the solved window data behind it.
struct EstimatorOutput {
  TimeVaryingChannel estimate;
  std::size_t delay = 0;                 // estimate at i describes instant i (after T-alignment)
  std::vector<std::size_t> centers;      // solved window centres
  std::vector<CVec> coefficients;        // per centre, index p * L + l
  RVec reweighting;                      // final w~ (homotopy estimators)
  double residual_power = 0.0;           // mean |d(i) - h(i)^T s(i)|^2
  std::size_t order = 0;
};

/// Normal equations of the window centred at `center`, maintained by
/// sliding updates with periodic exact recomputation.
///
/// For basis functions phi_p and weights w the system is
///   R[(p,l),(q,m)] = sum_k w(k) phi_p(k) phi_q(k) conj(u(c+k-l)) u(c+k-m)
///   b[(p,l)]       = sum_k w(k) phi_p(k) conj(u(c+k-l)) d(c+k)
/// with u, d zero outside the record. Only the first Gram row is tracked per
/// centre; the Toeplitz shift R_c(l, m) = R_{c-l}(0, m-l) supplies the rest.
class SlidingNormalEquations {
 public:
  SlidingNormalEquations(std::span<const cplx> desired, std::span<const cplx> regressor,
                         std::size_t filter_length, const BasisFunctions& basis,
                         std::size_t recompute_interval = 1024);

  /// Move to a centre >= the current one.
  void seek(std::ptrdiff_t center);
  std::ptrdiff_t center() const { return center_; }

  void assemble(Eigen::MatrixXcd& R, Eigen::VectorXcd& b) const;
  /// sum_k w(k) |d(c+k)|^2 for the current centre.
  double weighted_desired_energy() const;
  std::size_t dimension() const { return (order_ + 1) * L_; }

 private:
  cplx u(std::ptrdiff_t m) const;
  cplx d(std::ptrdiff_t m) const;
  void compute_exact(std::ptrdiff_t c, cplx* gram_row, cplx* bmom, cplx* emom) const;
  void slide(const cplx* from, cplx* to, std::ptrdiff_t c, std::size_t channels,
             const cplx* z_out, const cplx* z_in, std::size_t lags) const;
  void step();
  std::size_t window_restart_gap() const;
  std::size_t slot(std::ptrdiff_t c) const;

  std::span<const cplx> desired_, regressor_;
  std::size_t L_, order_, mo_, recompute_interval_;
  std::size_t degree_gram_, degree_b_;       // moments per family
  std::vector<cplx> rho_, alpha_;            // family ratio and weight
  std::vector<double> binom_;                // binomial shift, (2P+1)^2
  std::vector<cplx> gram_coef_;              // [p][q][family][n]
  std::vector<cplx> b_coef_;                 // [p][family][n]
  std::vector<cplx> ring_;                   // [slot][family*n][lag]
  std::vector<cplx> bmom_, emom_;
  std::ptrdiff_t center_ = 0;
  bool started_ = false;
  std::size_t since_exact_ = 0;
};

/// Conventional sliding-window RLS: estimate at i from the window ending at i.
EstimatorOutput srls_estimate(std::span<const cplx> desired, std::span<const cplx> regressor,
                              const SlidingWindowConfig& cfg);

/// Delayed SRLS: the window ending at i + T is assigned to instant i.
EstimatorOutput srlsd_estimate(std::span<const cplx> desired, std::span<const cplx> regressor,
                               const SlidingWindowConfig& cfg);

/// Legendre basis-expansion SRLS: per window solve (R + eps I) c = b and
/// output h(i) = sum_p c_p phi_p(0) at the window centre.
EstimatorOutput srls_l_estimate(std::span<const cplx> desired, std::span<const cplx> regressor,
                                const BemConfig& bem, double regularization);

struct HomotopyTrace {
  std::vector<double> tau;        // tau per stage
  std::vector<double> objective;  // LS-l1 objective after each DCD update
  std::vector<std::size_t> objective_stage;  // stage index of each objective entry
};

struct HomotopyResult {
  Eigen::VectorXcd coefficients;
  std::vector<std::size_t> support;
  Eigen::VectorXd weights;  // w~ after reweighting
  std::size_t stages = 0;
  std::size_t updates = 0;
};

/// Homotopy l1 solver with leading DCD refinement, debiasing and reweighting.
/// `prior_weights` is the reweighting vector from the previous window (ones
/// when empty). Throws ParameterError if R is not Hermitian.
HomotopyResult h_l1_dcd_solve(const Eigen::MatrixXcd& R, const Eigen::VectorXcd& b,
                              const HomotopyConfig& cfg,
                              const Eigen::VectorXd& prior_weights = Eigen::VectorXd(),
                              double noise_variance = 0.0, HomotopyTrace* trace = nullptr);

/// SRLS-L with the sparse homotopy solver in place of the direct solve; the
/// reweighting vector is carried from window to window.
EstimatorOutput hsrls_l_dcd_estimate(std::span<const cplx> desired, std::span<const cplx> regressor,
                                     const BemConfig& bem, const HomotopyConfig& hcfg,
                                     double regularization = 0.0);

/// Solve (R + eps I) x = b by Cholesky; throws SolverError when singular.
Eigen::VectorXcd solve_normal_equations(const Eigen::MatrixXcd& R, const Eigen::VectorXcd& b,
                                        double regularization);

/// Normalised squared error sum|est - truth|^2 / sum|truth|^2 over [first, last).
double channel_nmse(const TimeVaryingChannel& estimate, const TimeVaryingChannel& truth,
                    std::size_t first = 0, std::size_t last = static_cast<std::size_t>(-1));

}  // namespace fdlink
