#include <algorithm>
#include <cmath>

#include "ansatz_impl.hpp"
#include "qrotor/activation.hpp"
#include "qrotor/error.hpp"

namespace qrotor {

std::vector<int> conv_neighbors(const Lattice& lattice, int kernel_size, int& taps) {
  if (kernel_size < 1 || kernel_size % 2 == 0)
    throw ConfigError("conv: kernel_size must be a positive odd number");
  const int r = kernel_size / 2;
  const int n = static_cast<int>(lattice.num_sites());
  const bool two_d = lattice.num_dims() == 2;
  taps = two_d ? kernel_size * kernel_size : kernel_size;
  std::vector<int> nb(static_cast<std::size_t>(n) * taps, -1);
  for (int s = 0; s < n; ++s) {
    int o = 0;
    for (int dy = two_d ? -r : 0; dy <= (two_d ? r : 0); ++dy)
      for (int dx = -r; dx <= r; ++dx) nb[s * taps + o++] = lattice.shift(s, dx, dy);
  }
  return nb;
}

struct CnnAnsatz::Workspace {
  // Per layer, channel-major [c * N + site].
  std::vector<std::vector<cplx>> h, z, adj, d1, d2;
  std::vector<cplx> out_adjoint;  // d ln psi / d h_{D-1}
};

namespace {
CnnHyper normalized(CnnHyper h) {
  if (h.depth < 1) throw ConfigError("cnn: depth must be >= 1");
  if (h.fourier_modes < 1) throw ConfigError("cnn: fourier_modes must be >= 1");
  if (h.channels < 0) throw ConfigError("cnn: channels must be >= 0");
  return h;
}
}  // namespace

CnnAnsatz::CnnAnsatz(const Lattice& lattice, const CnnHyper& hyper)
    : Ansatz(lattice), hyper_(normalized(hyper)) {
  const int n = static_cast<int>(lattice.num_sites());
  const int depth = hyper_.depth;
  hidden_channels_ = hyper_.channels == 0 ? 2 * hyper_.fourier_modes : hyper_.channels;
  neighbor_ = conv_neighbors(lattice, hyper_.kernel_size, taps_);
  prefactor_ = 1.0 / std::sqrt(2.0 * hyper_.fourier_modes * n);

  w_offset_.assign(depth + 1, 0);
  b_offset_.assign(depth + 1, 0);
  std::size_t offset = 0;
  for (int d = 1; d < depth; ++d) {
    w_offset_[d] = offset;
    offset += static_cast<std::size_t>(channels(d)) * channels(d - 1) * taps_;
    b_offset_[d] = offset;
    offset += channels(d);
  }
  w_offset_[depth] = offset;
  offset += static_cast<std::size_t>(channels(depth - 1)) * taps_;
  num_params_ = offset;

  active_.resize(n);
  std::vector<char> prev(n), next(n);
  for (int k = 0; k < n; ++k) {
    active_[k].resize(depth);
    active_[k][0] = {k};
    std::fill(prev.begin(), prev.end(), 0);
    prev[k] = 1;
    for (int d = 1; d < depth; ++d) {
      std::fill(next.begin(), next.end(), 0);
      for (int s = 0; s < n; ++s)
        for (int o = 0; o < taps_; ++o) {
          const int t = neighbor_[s * taps_ + o];
          if (t >= 0 && prev[t]) next[s] = 1;
        }
      for (int s = 0; s < n; ++s)
        if (next[s]) active_[k][d].push_back(s);
      std::swap(prev, next);
    }
  }
}

std::vector<ParamBlock> CnnAnsatz::layout() const {
  std::vector<ParamBlock> blocks;
  for (int d = 1; d < hyper_.depth; ++d) {
    blocks.push_back({"w" + std::to_string(d), {channels(d), channels(d - 1), taps_}, w_offset_[d]});
    blocks.push_back({"b" + std::to_string(d), {channels(d)}, b_offset_[d]});
  }
  blocks.push_back({"w_out", {channels(hyper_.depth - 1), taps_}, w_offset_[hyper_.depth]});
  return blocks;
}

std::vector<std::size_t> CnnAnsatz::output_layer_params() const {
  std::vector<std::size_t> idx(num_params_ - w_offset_[hyper_.depth]);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = w_offset_[hyper_.depth] + i;
  return idx;
}

cplx CnnAnsatz::forward(std::span<const cplx> alpha, std::span<const double> theta,
                        Workspace& ws) const {
  const int n = static_cast<int>(num_sites());
  const int depth = hyper_.depth;
  ws.h.resize(depth);
  ws.z.resize(depth);
  ws.h[0].assign(static_cast<std::size_t>(channels(0)) * n, cplx{});
  for (int m = 1; m <= hyper_.fourier_modes; ++m) {
    cplx* hc = ws.h[0].data() + static_cast<std::size_t>(2 * (m - 1)) * n;
    cplx* hs = hc + n;
    for (int k = 0; k < n; ++k) {
      hc[k] = std::cos(m * theta[k]);
      hs[k] = std::sin(m * theta[k]);
    }
  }

  for (int d = 1; d < depth; ++d) {
    const int cin = channels(d - 1), cout = channels(d);
    const cplx* w = alpha.data() + w_offset_[d];
    const cplx* b = alpha.data() + b_offset_[d];
    const auto& hin = ws.h[d - 1];
    auto& z = ws.z[d];
    z.assign(static_cast<std::size_t>(cout) * n, cplx{});
    for (int c = 0; c < cout; ++c) {
      for (int s = 0; s < n; ++s) {
        cplx acc = b[c];
        const int* nb = neighbor_.data() + s * taps_;
        for (int ci = 0; ci < cin; ++ci) {
          const cplx* wk = w + (static_cast<std::size_t>(c) * cin + ci) * taps_;
          const cplx* hrow = hin.data() + static_cast<std::size_t>(ci) * n;
          for (int o = 0; o < taps_; ++o)
            if (nb[o] >= 0) acc += wk[o] * hrow[nb[o]];
        }
        z[static_cast<std::size_t>(c) * n + s] = acc;
      }
    }
    ws.h[d].resize(z.size());
    std::transform(z.begin(), z.end(), ws.h[d].begin(), poly_log_I0);
  }

  // ln psi is linear in the last features; A[c][t] = d ln psi / d h_{D-1}[c][t].
  const int clast = channels(depth - 1);
  const cplx* wout = alpha.data() + w_offset_[depth];
  ws.out_adjoint.assign(static_cast<std::size_t>(clast) * n, cplx{});
  for (int c = 0; c < clast; ++c)
    for (int s = 0; s < n; ++s) {
      const int* nb = neighbor_.data() + s * taps_;
      for (int o = 0; o < taps_; ++o)
        if (nb[o] >= 0) ws.out_adjoint[static_cast<std::size_t>(c) * n + nb[o]] += prefactor_ * wout[c * taps_ + o];
    }
  cplx acc{0.0, 0.0};
  const auto& hl = ws.h[depth - 1];
  for (std::size_t i = 0; i < hl.size(); ++i) acc += ws.out_adjoint[i] * hl[i];
  return acc;
}

void CnnAnsatz::backward(std::span<const cplx> alpha, std::span<const double> theta,
                         Workspace& ws, std::span<cplx> out, std::span<cplx> grad) const {
  const int n = static_cast<int>(num_sites());
  const int depth = hyper_.depth;
  const bool want_params = !out.empty();
  ws.adj.resize(depth);
  ws.adj[depth - 1] = ws.out_adjoint;

  if (want_params) {
    std::fill(out.begin(), out.end(), cplx{0.0, 0.0});
    const int clast = channels(depth - 1);
    cplx* ow = out.data() + w_offset_[depth];
    for (int c = 0; c < clast; ++c) {
      const cplx* hrow = ws.h[depth - 1].data() + static_cast<std::size_t>(c) * n;
      for (int s = 0; s < n; ++s) {
        const int* nb = neighbor_.data() + s * taps_;
        for (int o = 0; o < taps_; ++o)
          if (nb[o] >= 0) ow[c * taps_ + o] += prefactor_ * hrow[nb[o]];
      }
    }
  }

  std::vector<cplx> adj_z;
  for (int d = depth - 1; d >= 1; --d) {
    const int cin = channels(d - 1), cout = channels(d);
    const cplx* w = alpha.data() + w_offset_[d];
    const auto& z = ws.z[d];
    const auto& hin = ws.h[d - 1];
    adj_z.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) adj_z[i] = ws.adj[d][i] * poly_I1_over_I0(z[i]);

    auto& adj_in = ws.adj[d - 1];
    adj_in.assign(static_cast<std::size_t>(cin) * n, cplx{});
    for (int c = 0; c < cout; ++c) {
      for (int s = 0; s < n; ++s) {
        const cplx a = adj_z[static_cast<std::size_t>(c) * n + s];
        if (want_params) out[b_offset_[d] + c] += a;
        const int* nb = neighbor_.data() + s * taps_;
        for (int ci = 0; ci < cin; ++ci) {
          const std::size_t wbase = (static_cast<std::size_t>(c) * cin + ci) * taps_;
          const cplx* hrow = hin.data() + static_cast<std::size_t>(ci) * n;
          cplx* arow = adj_in.data() + static_cast<std::size_t>(ci) * n;
          for (int o = 0; o < taps_; ++o) {
            if (nb[o] < 0) continue;
            if (want_params) out[w_offset_[d] + wbase + o] += a * hrow[nb[o]];
            arow[nb[o]] += a * w[wbase + o];
          }
        }
      }
    }
  }

  if (!grad.empty()) {
    const auto& a0 = ws.adj[0];
    for (int k = 0; k < n; ++k) {
      cplx g{0.0, 0.0};
      for (int m = 1; m <= hyper_.fourier_modes; ++m) {
        const std::size_t cc = static_cast<std::size_t>(2 * (m - 1)) * n;
        const std::size_t cs = cc + n;
        g += a0[cc + k] * (-m * std::sin(m * theta[k])) + a0[cs + k] * (m * std::cos(m * theta[k]));
      }
      grad[k] = g;
    }
  }
}

cplx CnnAnsatz::log_psi(std::span<const cplx> alpha, std::span<const double> theta) const {
  check_sizes(alpha, theta);
  thread_local Workspace ws;
  return forward(alpha, theta, ws);
}

cplx CnnAnsatz::log_derivatives(std::span<const cplx> alpha, std::span<const double> theta,
                                std::span<cplx> out) const {
  check_sizes(alpha, theta);
  thread_local Workspace ws;
  const cplx v = forward(alpha, theta, ws);
  backward(alpha, theta, ws, out, {});
  return v;
}

cplx CnnAnsatz::angle_gradient(std::span<const cplx> alpha, std::span<const double> theta,
                               std::span<cplx> grad) const {
  check_sizes(alpha, theta);
  thread_local Workspace ws;
  const cplx v = forward(alpha, theta, ws);
  backward(alpha, theta, ws, {}, grad);
  return v;
}

void CnnAnsatz::angle_derivatives(std::span<const cplx> alpha, std::span<const double> theta,
                                  AngleDerivatives& out) const {
  check_sizes(alpha, theta);
  thread_local Workspace ws;
  const int n = static_cast<int>(num_sites());
  const int depth = hyper_.depth;
  out.log_psi = forward(alpha, theta, ws);
  out.grad.assign(n, cplx{});
  out.hess_diag.assign(n, cplx{});

  ws.d1.resize(depth);
  ws.d2.resize(depth);
  for (int d = 0; d < depth; ++d) {
    ws.d1[d].assign(static_cast<std::size_t>(channels(d)) * n, cplx{});
    ws.d2[d].assign(static_cast<std::size_t>(channels(d)) * n, cplx{});
  }

  // Forward-mode second-order jets, one site at a time. Only sites inside
  // theta_k's receptive field carry nonzero tangents.
  for (int k = 0; k < n; ++k) {
    for (int m = 1; m <= hyper_.fourier_modes; ++m) {
      const std::size_t cc = static_cast<std::size_t>(2 * (m - 1)) * n + k;
      const std::size_t cs = cc + n;
      const double cm = std::cos(m * theta[k]), sm = std::sin(m * theta[k]);
      ws.d1[0][cc] = -m * sm;
      ws.d1[0][cs] = m * cm;
      ws.d2[0][cc] = -(m * m) * cm;
      ws.d2[0][cs] = -(m * m) * sm;
    }
    for (int d = 1; d < depth; ++d) {
      const int cin = channels(d - 1), cout = channels(d);
      const cplx* w = alpha.data() + w_offset_[d];
      for (int s : active_[k][d]) {
        const int* nb = neighbor_.data() + s * taps_;
        for (int c = 0; c < cout; ++c) {
          cplx dz{0.0, 0.0}, d2z{0.0, 0.0};
          for (int ci = 0; ci < cin; ++ci) {
            const cplx* wk = w + (static_cast<std::size_t>(c) * cin + ci) * taps_;
            const cplx* r1 = ws.d1[d - 1].data() + static_cast<std::size_t>(ci) * n;
            const cplx* r2 = ws.d2[d - 1].data() + static_cast<std::size_t>(ci) * n;
            for (int o = 0; o < taps_; ++o) {
              if (nb[o] < 0) continue;
              dz += wk[o] * r1[nb[o]];
              d2z += wk[o] * r2[nb[o]];
            }
          }
          const std::size_t i = static_cast<std::size_t>(c) * n + s;
          const cplx zz = ws.z[d][i];
          const cplx fp = poly_I1_over_I0(zz);
          ws.d1[d][i] = fp * dz;
          ws.d2[d][i] = poly_log_I0_dd(zz) * dz * dz + fp * d2z;
        }
      }
    }
    const int clast = channels(depth - 1);
    cplx g{0.0, 0.0}, h{0.0, 0.0};
    for (int t : active_[k][depth - 1])
      for (int c = 0; c < clast; ++c) {
        const std::size_t i = static_cast<std::size_t>(c) * n + t;
        g += ws.out_adjoint[i] * ws.d1[depth - 1][i];
        h += ws.out_adjoint[i] * ws.d2[depth - 1][i];
      }
    out.grad[k] = g;
    out.hess_diag[k] = h;

    for (int d = 0; d < depth; ++d)
      for (int s : active_[k][d])
        for (int c = 0; c < channels(d); ++c) {
          const std::size_t i = static_cast<std::size_t>(c) * n + s;
          ws.d1[d][i] = cplx{};
          ws.d2[d][i] = cplx{};
        }
  }
}

}  // namespace qrotor
