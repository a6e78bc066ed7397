#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

namespace qrotor {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Maps any finite angle onto [-pi, pi). Values already in range are
/// returned unchanged, which makes the map idempotent bit-for-bit.
double wrap_angle(double x);

/// One l x l square loop on a 2D lattice, traversed counterclockwise
/// (+x, +y, -x, -y). `sites` has 4l+1 entries and ends where it starts;
/// `steps` holds the 4l unwrapped unit displacements (dx, dy).
struct Plaquette {
  std::vector<int> sites;
  std::vector<std::array<int, 2>> steps;
};

/// Hypercubic lattice in one or two dimensions.
///
/// Site indexing is row-major: for dims = {rows, cols} the site at
/// (row, col) has index row * cols + col. The x direction runs along
/// columns and y along rows. A 1D lattice of extent L is a single row.
/// Bonds are stored once as (k, l) with k < l.
class Lattice {
 public:
  Lattice(std::vector<int> dims, std::vector<bool> periodic);

  std::size_t num_sites() const { return num_sites_; }
  std::size_t num_dims() const { return dims_.size(); }
  const std::vector<int>& dims() const { return dims_; }
  const std::vector<bool>& periodic() const { return periodic_; }
  const std::vector<std::pair<int, int>>& bonds() const { return bonds_; }

  int rows() const { return dims_.size() == 2 ? dims_[0] : 1; }
  int cols() const { return dims_.back(); }
  bool periodic_x() const { return periodic_.back(); }
  bool periodic_y() const { return dims_.size() == 2 && periodic_[0]; }

  int site(int row, int col) const { return row * cols() + col; }
  std::array<int, 2> coords(int site) const { return {site / cols(), site % cols()}; }

  /// Site reached from `site` after moving (dx, dy); -1 when the move
  /// leaves an open boundary.
  int shift(int site, int dx, int dy) const;

  /// All l x l loops. Enumerated on first request and cached; safe to call
  /// concurrently. Throws for 1D lattices or l outside [1, extent-1].
  const std::vector<Plaquette>& plaquettes(int ell) const;

 private:
  std::vector<int> dims_;
  std::vector<bool> periodic_;
  std::size_t num_sites_ = 0;
  std::vector<std::pair<int, int>> bonds_;

  struct PlaquetteCache {
    std::mutex mutex;
    std::map<int, std::vector<Plaquette>> loops;
  };
  std::shared_ptr<PlaquetteCache> cache_;
};

Lattice build_lattice(std::vector<int> dims, std::vector<bool> periodic);

struct SiteCircularStats {
  std::vector<double> mean_direction;  ///< angle of the mean unit vector
  std::vector<double> resultant;       ///< R_k = |<n_k>| in [0, 1]
  std::vector<double> variance;        ///< -2 ln R_k; +inf when R_k == 0
};

/// Per-site circular statistics of row-major samples (n_samples x n_sites).
/// Optional weights are normalized internally. An exactly vanishing
/// resultant reports variance = +infinity rather than throwing.
SiteCircularStats circular_site_stats(std::span<const double> samples, std::size_t n_sites,
                                      std::span<const double> weights = {});

}  // namespace qrotor
