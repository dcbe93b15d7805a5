#include <cmath>
#include <numbers>

#include "fdlink/adaptive.hpp"

namespace fdlink {

namespace {

double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

}  // namespace

SlidingNormalEquations::SlidingNormalEquations(std::span<const cplx> desired,
                                               std::span<const cplx> regressor,
                                               std::size_t filter_length,
                                               const BasisFunctions& basis,
                                               std::size_t recompute_interval)
    : desired_(desired),
      regressor_(regressor),
      L_(filter_length),
      order_(basis.order),
      mo_(basis.half_window()),
      recompute_interval_(std::max<std::size_t>(recompute_interval, 1)) {
  if (L_ == 0) throw ParameterError("filter length must be positive");
  if (mo_ == 0 && order_ > 0) throw ParameterError("window of one sample supports order 0 only");

  // The window is a sum of families alpha_f * rho_f^k so that every weight
  // w(k) phi_p(k) phi_q(k) is a combination of rho^k t^n terms.
  if (basis.window == WindowShape::rectangular) {
    rho_ = {cplx(1.0)};
    alpha_ = {cplx(1.0)};
  } else {
    const double theta = std::numbers::pi / static_cast<double>(mo_ + 1);
    rho_ = {cplx(1.0), std::polar(1.0, theta), std::polar(1.0, -theta)};
    alpha_ = {cplx(0.5), cplx(0.25), cplx(0.25)};
  }
  const std::size_t F = rho_.size();
  const std::size_t P1 = order_ + 1;
  degree_gram_ = 2 * order_ + 1;
  degree_b_ = P1;

  binom_.assign(degree_gram_ * degree_gram_, 0.0);
  const double inv_mo = mo_ == 0 ? 0.0 : 1.0 / static_cast<double>(mo_);
  for (std::size_t n = 0; n < degree_gram_; ++n) {
    for (std::size_t j = 0; j <= n; ++j) {
      binom_[n * degree_gram_ + j] = binomial(n, j) * std::pow(-inv_mo, static_cast<double>(n - j));
    }
  }

  gram_coef_.assign(P1 * P1 * F * degree_gram_, cplx{});
  for (std::size_t p = 0; p < P1; ++p) {
    for (std::size_t q = 0; q < P1; ++q) {
      std::vector<double> prod(degree_gram_, 0.0);
      for (std::size_t a = 0; a < P1; ++a) {
        for (std::size_t b = 0; b < P1; ++b) prod[a + b] += basis.poly(p, a) * basis.poly(q, b);
      }
      for (std::size_t f = 0; f < F; ++f) {
        for (std::size_t n = 0; n < degree_gram_; ++n) {
          gram_coef_[((p * P1 + q) * F + f) * degree_gram_ + n] = alpha_[f] * prod[n];
        }
      }
    }
  }
  b_coef_.assign(P1 * F * degree_b_, cplx{});
  for (std::size_t p = 0; p < P1; ++p) {
    for (std::size_t f = 0; f < F; ++f) {
      for (std::size_t n = 0; n < degree_b_; ++n) {
        b_coef_[(p * F + f) * degree_b_ + n] = alpha_[f] * basis.poly(p, n);
      }
    }
  }

  ring_.assign(L_ * F * degree_gram_ * L_, cplx{});
  bmom_.assign(F * degree_b_ * L_, cplx{});
  emom_.assign(F, cplx{});
}

cplx SlidingNormalEquations::u(std::ptrdiff_t m) const {
  return (m >= 0 && static_cast<std::size_t>(m) < regressor_.size()) ? regressor_[m] : cplx{};
}

cplx SlidingNormalEquations::d(std::ptrdiff_t m) const {
  return (m >= 0 && static_cast<std::size_t>(m) < desired_.size()) ? desired_[m] : cplx{};
}

std::size_t SlidingNormalEquations::slot(std::ptrdiff_t c) const {
  const auto L = static_cast<std::ptrdiff_t>(L_);
  return static_cast<std::size_t>(((c % L) + L) % L);
}

void SlidingNormalEquations::compute_exact(std::ptrdiff_t c, cplx* gram_row, cplx* bmom,
                                           cplx* emom) const {
  const std::size_t F = rho_.size();
  const std::size_t NG = F * degree_gram_;
  const std::size_t NB = F * degree_b_;
  std::fill(gram_row, gram_row + NG * L_, cplx{});
  std::fill(bmom, bmom + NB * L_, cplx{});
  std::fill(emom, emom + F, cplx{});

  const auto mo = static_cast<std::ptrdiff_t>(mo_);
  std::vector<cplx> wt(NG), z(L_), y(L_);
  for (std::ptrdiff_t k = -mo; k <= mo; ++k) {
    const std::ptrdiff_t m = c + k;
    const cplx um = u(m);
    const cplx dm = d(m);
    if (um == cplx{} && dm == cplx{}) continue;
    const double t = mo_ == 0 ? 0.0 : static_cast<double>(k) / static_cast<double>(mo_);
    for (std::size_t f = 0; f < F; ++f) {
      const cplx rk = f == 0 ? cplx(1.0) : std::pow(rho_[f], static_cast<double>(k));
      double tn = 1.0;
      for (std::size_t n = 0; n < degree_gram_; ++n) {
        wt[f * degree_gram_ + n] = rk * tn;
        tn *= t;
      }
    }
    if (um != cplx{}) {
      const cplx cu = std::conj(um);
      for (std::size_t lag = 0; lag < L_; ++lag) z[lag] = cu * u(m - static_cast<std::ptrdiff_t>(lag));
      for (std::size_t ch = 0; ch < NG; ++ch) {
        cplx* row = gram_row + ch * L_;
        const cplx w = wt[ch];
        for (std::size_t lag = 0; lag < L_; ++lag) row[lag] += w * z[lag];
      }
    }
    if (dm != cplx{}) {
      for (std::size_t l = 0; l < L_; ++l) y[l] = std::conj(u(m - static_cast<std::ptrdiff_t>(l))) * dm;
      for (std::size_t f = 0; f < F; ++f) {
        for (std::size_t n = 0; n < degree_b_; ++n) {
          cplx* row = bmom + (f * degree_b_ + n) * L_;
          const cplx w = wt[f * degree_gram_ + n];
          for (std::size_t l = 0; l < L_; ++l) row[l] += w * y[l];
        }
        emom[f] += wt[f * degree_gram_] * std::norm(dm);
      }
    }
  }
}

// Re-centre moments sum_k rho^k t_k^n z(c+k) from centre c to c+1:
//   nu_j = mu_j - rho^-Mo (-1)^j z_out + rho^(Mo+1) ((Mo+1)/Mo)^j z_in
//   mu_n(c+1) = rho^-1 sum_j C(n,j) (-1/Mo)^(n-j) nu_j
void SlidingNormalEquations::slide(const cplx* from, cplx* to, std::ptrdiff_t /*c*/,
                                   std::size_t degree, const cplx* z_out, const cplx* z_in,
                                   std::size_t lags) const {
  const std::size_t F = rho_.size();
  const double t_in = mo_ == 0 ? 0.0 : static_cast<double>(mo_ + 1) / static_cast<double>(mo_);
  std::vector<cplx> nu(degree * lags);
  for (std::size_t f = 0; f < F; ++f) {
    const cplx e_out = f == 0 ? cplx(1.0) : std::pow(rho_[f], -static_cast<double>(mo_));
    const cplx e_in = f == 0 ? cplx(1.0) : std::pow(rho_[f], static_cast<double>(mo_ + 1));
    const cplx rho_inv = std::conj(rho_[f]);
    double sgn = 1.0, tin = 1.0;
    for (std::size_t j = 0; j < degree; ++j) {
      const cplx a = -e_out * sgn;
      const cplx b = e_in * tin;
      const cplx* src = from + (f * degree + j) * lags;
      cplx* dst = nu.data() + j * lags;
      for (std::size_t lag = 0; lag < lags; ++lag) dst[lag] = src[lag] + a * z_out[lag] + b * z_in[lag];
      sgn = -sgn;
      tin *= t_in;
    }
    for (std::size_t n = 0; n < degree; ++n) {
      cplx* out = to + (f * degree + n) * lags;
      std::fill(out, out + lags, cplx{});
      for (std::size_t j = 0; j <= n; ++j) {
        const cplx coef = rho_inv * binom_[n * degree_gram_ + j];
        const cplx* src = nu.data() + j * lags;
        for (std::size_t lag = 0; lag < lags; ++lag) out[lag] += coef * src[lag];
      }
    }
  }
}

void SlidingNormalEquations::step() {
  const std::size_t F = rho_.size();
  const std::size_t NG = F * degree_gram_;
  const std::ptrdiff_t c = center_;
  const std::ptrdiff_t next = c + 1;
  cplx* target = ring_.data() + slot(next) * NG * L_;

  if (++since_exact_ >= recompute_interval_) {
    compute_exact(next, target, bmom_.data(), emom_.data());
    since_exact_ = 0;
    center_ = next;
    return;
  }

  const auto mo = static_cast<std::ptrdiff_t>(mo_);
  const std::ptrdiff_t m_out = c - mo;
  const std::ptrdiff_t m_in = c + mo + 1;
  std::vector<cplx> z_out(L_), z_in(L_);
  const cplx uo = std::conj(u(m_out)), ui = std::conj(u(m_in));
  for (std::size_t lag = 0; lag < L_; ++lag) {
    z_out[lag] = uo * u(m_out - static_cast<std::ptrdiff_t>(lag));
    z_in[lag] = ui * u(m_in - static_cast<std::ptrdiff_t>(lag));
  }
  std::vector<cplx> scratch(NG * L_);
  slide(ring_.data() + slot(c) * NG * L_, scratch.data(), c, degree_gram_, z_out.data(), z_in.data(), L_);
  std::copy(scratch.begin(), scratch.end(), target);

  const cplx d_out = d(m_out), d_in = d(m_in);
  for (std::size_t l = 0; l < L_; ++l) {
    z_out[l] = std::conj(u(m_out - static_cast<std::ptrdiff_t>(l))) * d_out;
    z_in[l] = std::conj(u(m_in - static_cast<std::ptrdiff_t>(l))) * d_in;
  }
  std::vector<cplx> bnew(bmom_.size());
  slide(bmom_.data(), bnew.data(), c, degree_b_, z_out.data(), z_in.data(), L_);
  bmom_.swap(bnew);

  const cplx e_out = std::norm(d_out), e_in = std::norm(d_in);
  std::vector<cplx> enew(F);
  slide(emom_.data(), enew.data(), c, 1, &e_out, &e_in, 1);
  emom_.swap(enew);

  center_ = next;
}

void SlidingNormalEquations::seek(std::ptrdiff_t target) {
  const auto L = static_cast<std::ptrdiff_t>(L_);
  const std::ptrdiff_t restart_gap = L + static_cast<std::ptrdiff_t>(window_restart_gap());
  if (!started_ || target < center_ || target - center_ > restart_gap) {
    const std::size_t NG = rho_.size() * degree_gram_;
    const std::ptrdiff_t first = target - (L - 1);
    compute_exact(first, ring_.data() + slot(first) * NG * L_, bmom_.data(), emom_.data());
    center_ = first;
    since_exact_ = 0;
    started_ = true;
  }
  while (center_ < target) step();
}

std::size_t SlidingNormalEquations::window_restart_gap() const {
  // An exact recompute costs about M / degree slides.
  return (2 * mo_ + 1) / degree_gram_;
}

void SlidingNormalEquations::assemble(Eigen::MatrixXcd& R, Eigen::VectorXcd& b) const {
  const std::size_t F = rho_.size();
  const std::size_t NG = F * degree_gram_;
  const std::size_t P1 = order_ + 1;
  const auto n = static_cast<Eigen::Index>(P1 * L_);
  R.resize(n, n);
  b.resize(n);

  std::vector<cplx> x(L_);
  for (std::size_t l = 0; l < L_; ++l) {
    const cplx* row = ring_.data() + slot(center_ - static_cast<std::ptrdiff_t>(l)) * NG * L_;
    const std::size_t lags = L_ - l;
    for (std::size_t p = 0; p < P1; ++p) {
      for (std::size_t q = p; q < P1; ++q) {
        std::fill(x.begin(), x.begin() + lags, cplx{});
        const cplx* coef = gram_coef_.data() + (p * P1 + q) * NG;
        for (std::size_t ch = 0; ch < NG; ++ch) {
          const cplx a = coef[ch];
          if (a == cplx{}) continue;
          const cplx* src = row + ch * L_;
          for (std::size_t dl = 0; dl < lags; ++dl) x[dl] += a * src[dl];
        }
        x[0] = cplx(x[0].real(), 0.0);
        const auto pl = static_cast<Eigen::Index>(p * L_ + l);
        const auto ql = static_cast<Eigen::Index>(q * L_ + l);
        for (std::size_t dl = 0; dl < lags; ++dl) {
          const auto m = static_cast<Eigen::Index>(dl);
          const cplx v = x[dl];
          R(pl, ql + m) = v;
          R(ql + m, pl) = std::conj(v);
          if (p != q) {
            R(ql, pl + m) = v;
            R(pl + m, ql) = std::conj(v);
          }
        }
      }
    }
  }

  for (std::size_t p = 0; p < P1; ++p) {
    for (std::size_t l = 0; l < L_; ++l) {
      cplx acc{};
      for (std::size_t f = 0; f < F; ++f) {
        for (std::size_t k = 0; k < degree_b_; ++k) {
          acc += b_coef_[(p * F + f) * degree_b_ + k] * bmom_[(f * degree_b_ + k) * L_ + l];
        }
      }
      b(static_cast<Eigen::Index>(p * L_ + l)) = acc;
    }
  }
}

double SlidingNormalEquations::weighted_desired_energy() const {
  cplx acc{};
  for (std::size_t f = 0; f < rho_.size(); ++f) acc += alpha_[f] * emom_[f];
  return acc.real();
}

}  // namespace fdlink
