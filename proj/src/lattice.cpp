#include "qrotor/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>

#include "qrotor/error.hpp"

namespace qrotor {

namespace {
// cos(pi/2) is not exactly zero in floating point; resultants below this are
// cancellation residue and count as an exact zero.
constexpr double kResultantFloor = 1e-12;
}  // namespace

double wrap_angle(double x) {
  if (!std::isfinite(x)) throw NumericalError("wrap_angle: non-finite input");
  if (x >= -kPi && x < kPi) return x;
  double r = std::fmod(x + kPi, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  r -= kPi;
  if (r >= kPi) r -= kTwoPi;
  if (r < -kPi) r = -kPi;
  return r;
}

Lattice::Lattice(std::vector<int> dims, std::vector<bool> periodic)
    : dims_(std::move(dims)), periodic_(std::move(periodic)),
      cache_(std::make_shared<PlaquetteCache>()) {
  if (dims_.empty() || dims_.size() > 2)
    throw ConfigError("lattice: only 1 or 2 dimensions are supported");
  if (periodic_.size() != dims_.size())
    throw ConfigError("lattice: one periodic flag per dimension is required");
  num_sites_ = 1;
  for (std::size_t d = 0; d < dims_.size(); ++d) {
    if (dims_[d] < 1) throw ConfigError("lattice: extents must be >= 1");
    // Extents 1 and 2 would produce self-bonds or doubled bonds under wrapping.
    if (periodic_[d] && dims_[d] < 3)
      throw ConfigError("lattice: periodic dimensions need extent >= 3");
    num_sites_ *= static_cast<std::size_t>(dims_[d]);
  }

  std::set<std::pair<int, int>> unique;
  const int n = static_cast<int>(num_sites_);
  for (int s = 0; s < n; ++s) {
    for (const auto& [dx, dy] : {std::pair{1, 0}, std::pair{0, 1}}) {
      if (dy != 0 && dims_.size() == 1) continue;
      const int t = shift(s, dx, dy);
      if (t < 0 || t == s) continue;
      unique.insert({std::min(s, t), std::max(s, t)});
    }
  }
  bonds_.assign(unique.begin(), unique.end());
}

int Lattice::shift(int s, int dx, int dy) const {
  auto [row, col] = coords(s);
  col += dx;
  row += dy;
  const int nc = cols();
  const int nr = rows();
  if (col < 0 || col >= nc) {
    if (!periodic_x()) return -1;
    col = ((col % nc) + nc) % nc;
  }
  if (row < 0 || row >= nr) {
    if (!periodic_y()) return -1;
    row = ((row % nr) + nr) % nr;
  }
  return site(row, col);
}

const std::vector<Plaquette>& Lattice::plaquettes(int ell) const {
  if (dims_.size() != 2) throw ConfigError("plaquettes: requires a 2D lattice");
  if (ell < 1 || ell > std::min(rows(), cols()) - 1)
    throw ConfigError("plaquettes: edge length " + std::to_string(ell) + " out of range");

  std::lock_guard lock(cache_->mutex);
  if (auto it = cache_->loops.find(ell); it != cache_->loops.end()) return it->second;

  const int max_x = periodic_x() ? cols() : cols() - ell;
  const int max_y = periodic_y() ? rows() : rows() - ell;
  std::vector<Plaquette> loops;
  loops.reserve(static_cast<std::size_t>(max_x) * max_y);
  const std::array<std::array<int, 2>, 4> dirs{{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};
  for (int y0 = 0; y0 < max_y; ++y0) {
    for (int x0 = 0; x0 < max_x; ++x0) {
      Plaquette p;
      int s = site(y0, x0);
      p.sites.push_back(s);
      for (const auto& d : dirs) {
        for (int i = 0; i < ell; ++i) {
          s = shift(s, d[0], d[1]);
          p.sites.push_back(s);
          p.steps.push_back(d);
        }
      }
      loops.push_back(std::move(p));
    }
  }
  return cache_->loops.emplace(ell, std::move(loops)).first->second;
}

Lattice build_lattice(std::vector<int> dims, std::vector<bool> periodic) {
  return Lattice(std::move(dims), std::move(periodic));
}

SiteCircularStats circular_site_stats(std::span<const double> samples, std::size_t n_sites,
                                      std::span<const double> weights) {
  if (n_sites == 0 || samples.size() % n_sites != 0)
    throw ConfigError("circular_site_stats: sample buffer does not match site count");
  const std::size_t n = samples.size() / n_sites;
  if (n == 0) throw ConfigError("circular_site_stats: need at least one sample");
  if (!weights.empty() && weights.size() != n)
    throw ConfigError("circular_site_stats: weight count mismatch");

  std::vector<double> cx(n_sites, 0.0), sy(n_sites, 0.0);
  double wsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    wsum += w;
    const double* row = samples.data() + i * n_sites;
    for (std::size_t k = 0; k < n_sites; ++k) {
      cx[k] += w * std::cos(row[k]);
      sy[k] += w * std::sin(row[k]);
    }
  }

  SiteCircularStats out;
  out.mean_direction.resize(n_sites);
  out.resultant.resize(n_sites);
  out.variance.resize(n_sites);
  for (std::size_t k = 0; k < n_sites; ++k) {
    const double mx = cx[k] / wsum, my = sy[k] / wsum;
    double r = std::min(1.0, std::hypot(mx, my));
    if (r < kResultantFloor) r = 0.0;
    out.mean_direction[k] = std::atan2(my, mx);
    out.resultant[k] = r;
    out.variance[k] = r > 0.0 ? -2.0 * std::log(r) : std::numeric_limits<double>::infinity();
  }
  return out;
}

}  // namespace qrotor
