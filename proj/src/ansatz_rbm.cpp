#include <algorithm>
#include <cmath>

#include "ansatz_impl.hpp"
#include "qrotor/activation.hpp"
#include "qrotor/error.hpp"

namespace qrotor {

RbmAnsatz::RbmAnsatz(const Lattice& lattice, const RbmHyper& hyper)
    : Ansatz(lattice), hyper_(hyper) {
  const std::size_t n = lattice.num_sites();
  std::vector<int> neighbors;
  if (hyper_.convolutional) {
    if (hyper_.conv_channels < 1) throw ConfigError("rbm: conv_channels must be >= 1");
    neighbors = conv_neighbors(lattice, hyper_.kernel_size, taps_);
    num_hidden_ = static_cast<std::size_t>(hyper_.conv_channels) * n;
  } else {
    if (hyper_.hidden < 0) throw ConfigError("rbm: hidden must be >= 0");
    num_hidden_ = hyper_.hidden == 0 ? n : static_cast<std::size_t>(hyper_.hidden);
  }

  std::size_t offset = 0;
  a_offset_ = offset;
  if (hyper_.visible_bias) offset += 2 * n;
  b_offset_ = offset;
  if (hyper_.hidden_bias) offset += 2 * num_hidden_;
  w_offset_ = offset;
  offset += hyper_.convolutional ? static_cast<std::size_t>(hyper_.conv_channels) * taps_
                                 : n * num_hidden_;
  num_params_ = offset;

  links_.resize(num_hidden_);
  if (hyper_.convolutional) {
    for (int c = 0; c < hyper_.conv_channels; ++c) {
      for (std::size_t s = 0; s < n; ++s) {
        auto& row = links_[c * n + s];
        for (int o = 0; o < taps_; ++o) {
          const int j = neighbors[s * taps_ + o];
          if (j >= 0) row.push_back({j, static_cast<int>(w_offset_ + c * taps_ + o)});
        }
        std::stable_sort(row.begin(), row.end(),
                         [](const Link& a, const Link& b) { return a.visible < b.visible; });
      }
    }
  } else {
    for (std::size_t k = 0; k < num_hidden_; ++k)
      for (std::size_t j = 0; j < n; ++j)
        links_[k].push_back({static_cast<int>(j), static_cast<int>(w_offset_ + j * num_hidden_ + k)});
  }
}

std::vector<ParamBlock> RbmAnsatz::layout() const {
  std::vector<ParamBlock> blocks;
  const int n = static_cast<int>(num_sites());
  const int nh = static_cast<int>(num_hidden_);
  if (hyper_.visible_bias) blocks.push_back({"a", {n, 2}, a_offset_});
  if (hyper_.hidden_bias) blocks.push_back({"b", {nh, 2}, b_offset_});
  if (hyper_.convolutional)
    blocks.push_back({"w_kernel", {hyper_.conv_channels, taps_}, w_offset_});
  else
    blocks.push_back({"w", {n, nh}, w_offset_});
  return blocks;
}

void RbmAnsatz::hidden_fields(std::span<const cplx> alpha, std::span<const double> c,
                              std::span<const double> s, std::vector<cplx>& x,
                              std::vector<cplx>& y) const {
  x.assign(num_hidden_, cplx{0.0, 0.0});
  y.assign(num_hidden_, cplx{0.0, 0.0});
  for (std::size_t k = 0; k < num_hidden_; ++k) {
    cplx xk{0.0, 0.0}, yk{0.0, 0.0};
    if (hyper_.hidden_bias) {
      xk = alpha[b_offset_ + 2 * k];
      yk = alpha[b_offset_ + 2 * k + 1];
    }
    for (const Link& l : links_[k]) {
      xk += alpha[l.param] * c[l.visible];
      yk += alpha[l.param] * s[l.visible];
    }
    x[k] = xk;
    y[k] = yk;
  }
}

namespace {
struct Trig {
  std::vector<double> c, s;
  explicit Trig(std::span<const double> theta) : c(theta.size()), s(theta.size()) {
    for (std::size_t k = 0; k < theta.size(); ++k) {
      c[k] = std::cos(theta[k]);
      s[k] = std::sin(theta[k]);
    }
  }
};
}  // namespace

cplx RbmAnsatz::log_psi(std::span<const cplx> alpha, std::span<const double> theta) const {
  check_sizes(alpha, theta);
  const Trig t(theta);
  std::vector<cplx> x, y;
  hidden_fields(alpha, t.c, t.s, x, y);
  cplx acc{0.0, 0.0};
  if (hyper_.visible_bias)
    for (std::size_t j = 0; j < num_sites(); ++j)
      acc += alpha[a_offset_ + 2 * j] * t.c[j] + alpha[a_offset_ + 2 * j + 1] * t.s[j];
  for (std::size_t k = 0; k < num_hidden_; ++k) acc += log_I0_of_square(x[k] * x[k] + y[k] * y[k]);
  return acc;
}

cplx RbmAnsatz::log_derivatives(std::span<const cplx> alpha, std::span<const double> theta,
                                std::span<cplx> out) const {
  check_sizes(alpha, theta);
  const Trig t(theta);
  std::vector<cplx> x, y;
  hidden_fields(alpha, t.c, t.s, x, y);
  std::fill(out.begin(), out.end(), cplx{0.0, 0.0});
  cplx acc{0.0, 0.0};
  if (hyper_.visible_bias) {
    for (std::size_t j = 0; j < num_sites(); ++j) {
      acc += alpha[a_offset_ + 2 * j] * t.c[j] + alpha[a_offset_ + 2 * j + 1] * t.s[j];
      out[a_offset_ + 2 * j] = t.c[j];
      out[a_offset_ + 2 * j + 1] = t.s[j];
    }
  }
  for (std::size_t k = 0; k < num_hidden_; ++k) {
    const cplx u = x[k] * x[k] + y[k] * y[k];
    acc += log_I0_of_square(u);
    const cplx two_fp = 2.0 * log_I0_of_square_d(u);
    if (hyper_.hidden_bias) {
      out[b_offset_ + 2 * k] = two_fp * x[k];
      out[b_offset_ + 2 * k + 1] = two_fp * y[k];
    }
    for (const Link& l : links_[k])
      out[l.param] += two_fp * (x[k] * t.c[l.visible] + y[k] * t.s[l.visible]);
  }
  return acc;
}

cplx RbmAnsatz::angle_gradient(std::span<const cplx> alpha, std::span<const double> theta,
                               std::span<cplx> grad) const {
  check_sizes(alpha, theta);
  const Trig t(theta);
  std::vector<cplx> x, y;
  hidden_fields(alpha, t.c, t.s, x, y);
  std::fill(grad.begin(), grad.end(), cplx{0.0, 0.0});
  cplx acc{0.0, 0.0};
  if (hyper_.visible_bias) {
    for (std::size_t j = 0; j < num_sites(); ++j) {
      const cplx ax = alpha[a_offset_ + 2 * j], ay = alpha[a_offset_ + 2 * j + 1];
      acc += ax * t.c[j] + ay * t.s[j];
      grad[j] += -ax * t.s[j] + ay * t.c[j];
    }
  }
  for (std::size_t k = 0; k < num_hidden_; ++k) {
    const cplx u = x[k] * x[k] + y[k] * y[k];
    acc += log_I0_of_square(u);
    const cplx two_fp = 2.0 * log_I0_of_square_d(u);
    for (const Link& l : links_[k]) {
      const int j = l.visible;
      grad[j] += two_fp * alpha[l.param] * (-x[k] * t.s[j] + y[k] * t.c[j]);
    }
  }
  return acc;
}

void RbmAnsatz::angle_derivatives(std::span<const cplx> alpha, std::span<const double> theta,
                                  AngleDerivatives& out) const {
  check_sizes(alpha, theta);
  const std::size_t n = num_sites();
  const Trig t(theta);
  std::vector<cplx> x, y;
  hidden_fields(alpha, t.c, t.s, x, y);
  out.grad.assign(n, cplx{0.0, 0.0});
  out.hess_diag.assign(n, cplx{0.0, 0.0});
  cplx acc{0.0, 0.0};
  if (hyper_.visible_bias) {
    for (std::size_t j = 0; j < n; ++j) {
      const cplx ax = alpha[a_offset_ + 2 * j], ay = alpha[a_offset_ + 2 * j + 1];
      acc += ax * t.c[j] + ay * t.s[j];
      out.grad[j] += -ax * t.s[j] + ay * t.c[j];
      out.hess_diag[j] += -ax * t.c[j] - ay * t.s[j];
    }
  }
  for (std::size_t k = 0; k < num_hidden_; ++k) {
    const cplx u = x[k] * x[k] + y[k] * y[k];
    acc += log_I0_of_square(u);
    const cplx fp = log_I0_of_square_d(u);
    const cplx fpp = log_I0_of_square_dd(u);
    const auto& links = links_[k];
    for (std::size_t i = 0; i < links.size();) {
      // Links sharing a visible site act through their summed weight.
      const int j = links[i].visible;
      cplx w{0.0, 0.0};
      for (; i < links.size() && links[i].visible == j; ++i) w += alpha[links[i].param];
      const cplx du = 2.0 * w * (-x[k] * t.s[j] + y[k] * t.c[j]);
      const cplx d2u = 2.0 * (w * w - w * (x[k] * t.c[j] + y[k] * t.s[j]));
      out.grad[j] += fp * du;
      out.hess_diag[j] += fpp * du * du + fp * d2u;
    }
  }
  out.log_psi = acc;
}

}  // namespace qrotor
