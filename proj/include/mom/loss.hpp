#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace mom {

/// Loss value and its gradients with respect to the three embeddings.
struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad_r;
  std::vector<double> grad_p;
  std::vector<double> grad_n;
};

namespace detail {

inline LossGrad zero_loss(std::size_t d) {
  return {0.0, std::vector<double>(d, 0.0), std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
}

}  // namespace detail

/// |z_r - z_p|^2 + [m - |z_r - z_n|]_+^2
inline LossGrad contrastive_loss(std::span<const double> zr, std::span<const double> zp, std::span<const double> zn,
                                 double margin) {
  const std::size_t d = zr.size();
  auto out = detail::zero_loss(d);
  double dp2 = 0.0, dn2 = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    dp2 += (zr[i] - zp[i]) * (zr[i] - zp[i]);
    dn2 += (zr[i] - zn[i]) * (zr[i] - zn[i]);
  }
  const double dn = std::sqrt(dn2);
  const double hinge = std::max(margin - dn, 0.0);
  out.loss = dp2 + hinge * hinge;
  // At dn = 0 the direction is undefined; the zero subgradient is used.
  const double push = (hinge > 0.0 && dn > 0.0) ? 2.0 * hinge / dn : 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double pull = 2.0 * (zr[i] - zp[i]);
    const double away = push * (zr[i] - zn[i]);
    out.grad_r[i] = pull - away;
    out.grad_p[i] = -pull;
    out.grad_n[i] = away;
  }
  return out;
}

enum class TripletForm {
  standard,  // [m + |z_r - z_p|^2 - |z_r - z_n|^2]_+
  literal,   // [m + |z_r - z_p|^2 - |z_r - z_n|]_+^2
};

inline LossGrad triplet_loss(std::span<const double> zr, std::span<const double> zp, std::span<const double> zn,
                             double margin, TripletForm form = TripletForm::standard) {
  const std::size_t d = zr.size();
  auto out = detail::zero_loss(d);
  double dp2 = 0.0, dn2 = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    dp2 += (zr[i] - zp[i]) * (zr[i] - zp[i]);
    dn2 += (zr[i] - zn[i]) * (zr[i] - zn[i]);
  }
  if (form == TripletForm::standard) {
    const double h = margin + dp2 - dn2;
    if (h <= 0.0) return out;
    out.loss = h;
    for (std::size_t i = 0; i < d; ++i) {
      out.grad_r[i] = 2.0 * (zn[i] - zp[i]);
      out.grad_p[i] = -2.0 * (zr[i] - zp[i]);
      out.grad_n[i] = 2.0 * (zr[i] - zn[i]);
    }
    return out;
  }
  const double dn = std::sqrt(dn2);
  const double h = margin + dp2 - dn;
  if (h <= 0.0) return out;
  out.loss = h * h;
  const double inv_dn = dn > 0.0 ? 1.0 / dn : 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double pull = 2.0 * (zr[i] - zp[i]);
    const double away = (zr[i] - zn[i]) * inv_dn;
    out.grad_r[i] = 2.0 * h * (pull - away);
    out.grad_p[i] = -2.0 * h * pull;
    out.grad_n[i] = 2.0 * h * away;
  }
  return out;
}

/// Scales the loss and every gradient by `weight`.
inline LossGrad apply_weight(LossGrad lg, double weight) {
  lg.loss *= weight;
  for (auto* g : {&lg.grad_r, &lg.grad_p, &lg.grad_n})
    for (auto& v : *g) v *= weight;
  return lg;
}

}  // namespace mom
