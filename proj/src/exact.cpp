#include "qrotor/exact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "qrotor/error.hpp"

namespace qrotor {

TruncatedBasis::TruncatedBasis(std::size_t n_sites, int M) : n_sites_(n_sites), M_(M) {
  if (n_sites < 1) throw ConfigError("basis: need at least one site");
  if (M < 0) throw ConfigError("basis: cutoff M must be >= 0");
  double d = 1.0;
  for (std::size_t k = 0; k < n_sites; ++k) d *= local_dim();
  if (d > static_cast<double>(kMaxBasisDim)) {
    std::ostringstream msg;
    msg << "basis: (2M+1)^N = " << d << " exceeds the guard " << kMaxBasisDim;
    throw GuardExceeded(msg.str());
  }
  dim_ = static_cast<std::size_t>(d);
  strides_.resize(n_sites);
  std::size_t s = 1;
  for (std::size_t k = n_sites; k-- > 0;) {
    strides_[k] = s;
    s *= static_cast<std::size_t>(local_dim());
  }
}

std::size_t TruncatedBasis::encode(std::span<const int> m) const {
  if (m.size() != n_sites_) throw ConfigError("basis: multi-index length mismatch");
  std::size_t idx = 0;
  for (std::size_t k = 0; k < n_sites_; ++k) {
    if (m[k] < -M_ || m[k] > M_) throw ConfigError("basis: quantum number outside [-M, M]");
    idx += static_cast<std::size_t>(m[k] + M_) * strides_[k];
  }
  return idx;
}

std::vector<int> TruncatedBasis::decode(std::size_t index) const {
  if (index >= dim_) throw ConfigError("basis: index out of range");
  std::vector<int> m(n_sites_);
  for (std::size_t k = 0; k < n_sites_; ++k) m[k] = quantum_number(index, k);
  return m;
}

int TruncatedBasis::quantum_number(std::size_t index, std::size_t k) const {
  return static_cast<int>((index / strides_[k]) % static_cast<std::size_t>(local_dim())) - M_;
}

namespace {

void check_lattice(const TruncatedBasis& basis, const Lattice& lattice) {
  if (basis.n_sites() != lattice.num_sites())
    throw ConfigError("exact: basis and lattice have different site counts");
}

}  // namespace

SparseMatrix build_bond_operator(const TruncatedBasis& basis, const Lattice& lattice) {
  check_lattice(basis, lattice);
  const int M = basis.cutoff();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(basis.dim() * lattice.bonds().size() * 2);
  for (std::size_t i = 0; i < basis.dim(); ++i) {
    for (const auto& [k, l] : lattice.bonds()) {
      const int mk = basis.quantum_number(i, k), ml = basis.quantum_number(i, l);
      const std::size_t sk = basis.stride(k), sl = basis.stride(l);
      // L+_k L-_l and its conjugate; each ordered pair of states is produced once.
      if (mk < M && ml > -M) trip.emplace_back(i + sk - sl, i, 0.5);
      if (mk > -M && ml < M) trip.emplace_back(i - sk + sl, i, 0.5);
    }
  }
  SparseMatrix B(static_cast<Eigen::Index>(basis.dim()), static_cast<Eigen::Index>(basis.dim()));
  B.setFromTriplets(trip.begin(), trip.end());
  return B;
}

SparseMatrix build_hamiltonian(const TruncatedBasis& basis, const Lattice& lattice, double g,
                               double J) {
  if (!(g > 0.0) || !(J > 0.0)) throw ConfigError("hamiltonian: need g > 0 and J > 0");
  SparseMatrix H = build_bond_operator(basis, lattice) * (-J);
  std::vector<Eigen::Triplet<double>> diag;
  diag.reserve(basis.dim());
  for (std::size_t i = 0; i < basis.dim(); ++i) {
    double m2 = 0.0;
    for (std::size_t k = 0; k < basis.n_sites(); ++k) {
      const int m = basis.quantum_number(i, k);
      m2 += m * m;
    }
    diag.emplace_back(i, i, 0.5 * g * J * m2);
  }
  SparseMatrix K(H.rows(), H.cols());
  K.setFromTriplets(diag.begin(), diag.end());
  SparseMatrix out = H + K;
  out.makeCompressed();
  return out;
}

DenseState initial_product_state(const TruncatedBasis& basis) {
  DenseState c = DenseState::Zero(static_cast<Eigen::Index>(basis.dim()));
  std::vector<int> zeros(basis.n_sites(), 0);
  c[static_cast<Eigen::Index>(basis.encode(zeros))] = 1.0;
  return c;
}

ExactEvolver::ExactEvolver(SparseMatrix H, std::size_t dense_limit)
    : H_(std::move(H)), dense_(static_cast<std::size_t>(H_.rows()) <= dense_limit) {
  if (dense_) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(H_)};
    if (es.info() != Eigen::Success)
      throw NumericalError("exact: eigendecomposition failed", "eig_failure");
    evals_ = es.eigenvalues();
    evecs_ = es.eigenvectors();
  }
  // Gershgorin bound on the spectral radius, used to size Krylov substeps.
  for (Eigen::Index r = 0; r < H_.outerSize(); ++r) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(H_, r); it; ++it) s += std::abs(it.value());
    norm_bound_ = std::max(norm_bound_, s);
  }
}

DenseState ExactEvolver::evolve(const DenseState& c0, double t) const {
  if (c0.size() != H_.rows()) throw ConfigError("exact: state dimension mismatch");
  if (dense_) {
    const Eigen::VectorXcd y = evecs_.transpose().cast<cplx>() * c0;
    Eigen::VectorXcd phase(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i)
      phase[i] = std::exp(cplx(0.0, -evals_[i] * t)) * y[i];
    return evecs_.cast<cplx>() * phase;
  }
  const double max_tau = norm_bound_ > 0.0 ? 8.0 / norm_bound_ : std::abs(t);
  DenseState v = c0;
  double done = 0.0;
  const double total = std::abs(t), sign = t < 0.0 ? -1.0 : 1.0;
  while (done < total) {
    const double tau = std::min(max_tau, total - done);
    v = krylov_step(v, sign * tau);
    done += tau;
  }
  return v;
}

DenseState ExactEvolver::krylov_step(const DenseState& v, double tau) const {
  constexpr int kMaxKrylov = 40;
  const double beta0 = v.norm();
  if (beta0 == 0.0) return v;
  const Eigen::Index n = v.size();
  const int m = static_cast<int>(std::min<Eigen::Index>(kMaxKrylov, n));
  Eigen::MatrixXcd V(n, m);
  Eigen::VectorXd alpha(m), beta(m);
  V.col(0) = v / beta0;
  int used = m;
  for (int j = 0; j < m; ++j) {
    Eigen::VectorXcd w = H_ * V.col(j);
    alpha[j] = V.col(j).dot(w).real();
    // Full reorthogonalization keeps the basis unitary to roundoff.
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i <= j; ++i) w -= V.col(i).dot(w) * V.col(i);
    if (j + 1 == m) break;
    beta[j] = w.norm();
    if (beta[j] < 1e-13 * std::max(1.0, norm_bound_)) {
      used = j + 1;
      break;
    }
    V.col(j + 1) = w / beta[j];
  }
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(used, used);
  for (int j = 0; j < used; ++j) {
    T(j, j) = alpha[j];
    if (j + 1 < used) T(j, j + 1) = T(j + 1, j) = beta[j];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  Eigen::VectorXcd e1 = es.eigenvectors().row(0).transpose().cast<cplx>();
  for (int i = 0; i < used; ++i) e1[i] *= std::exp(cplx(0.0, -es.eigenvalues()[i] * tau));
  const Eigen::VectorXcd coeff = es.eigenvectors().cast<cplx>() * e1;
  return beta0 * (V.leftCols(used) * coeff);
}

std::pair<double, DenseState> ground_state(const SparseMatrix& H, std::size_t dense_limit) {
  const Eigen::Index n = H.rows();
  if (static_cast<std::size_t>(n) <= dense_limit) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(H), Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success)
      throw NumericalError("exact: eigendecomposition failed", "eig_failure");
    return {es.eigenvalues()[0], es.eigenvectors().col(0).cast<cplx>()};
  }
  // Restarted Lanczos on the lowest Ritz vector.
  constexpr int kBlock = 80;
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n).normalized();
  double theta = 0.0;
  for (int restart = 0; restart < 200; ++restart) {
    Eigen::MatrixXd V(n, kBlock);
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(kBlock, kBlock);
    V.col(0) = x;
    int used = kBlock;
    for (int j = 0; j < kBlock; ++j) {
      Eigen::VectorXd w = H * V.col(j);
      T(j, j) = V.col(j).dot(w);
      for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i <= j; ++i) w -= V.col(i).dot(w) * V.col(i);
      if (j + 1 == kBlock) break;
      const double b = w.norm();
      if (b < 1e-12) {
        used = j + 1;
        break;
      }
      T(j, j + 1) = T(j + 1, j) = b;
      V.col(j + 1) = w / b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T.topLeftCorner(used, used));
    theta = es.eigenvalues()[0];
    x = (V.leftCols(used) * es.eigenvectors().col(0)).normalized();
    if ((H * x - theta * x).norm() < 1e-10 * std::max(1.0, std::abs(theta))) break;
  }
  return {theta, x.cast<cplx>()};
}

namespace {

// Contracts tensor axis k (extent shape[k]) with T (rows x shape[k]).
std::vector<cplx> apply_axis(const std::vector<cplx>& in, std::vector<std::size_t>& shape,
                             std::size_t k, const Eigen::MatrixXcd& T) {
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < k; ++i) outer *= shape[i];
  for (std::size_t i = k + 1; i < shape.size(); ++i) inner *= shape[i];
  const std::size_t a = shape[k], b = static_cast<std::size_t>(T.rows());
  std::vector<cplx> out(outer * b * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t r = 0; r < b; ++r)
      for (std::size_t j = 0; j < a; ++j) {
        const cplx t = T(r, j);
        const cplx* src = in.data() + (o * a + j) * inner;
        cplx* dst = out.data() + (o * b + r) * inner;
        for (std::size_t i = 0; i < inner; ++i) dst[i] += t * src[i];
      }
  shape[k] = b;
  return out;
}

// Signed frequency of DFT slot j on a Q-point grid.
int grid_frequency(std::size_t j, std::size_t Q) {
  return j < (Q + 1) / 2 ? static_cast<int>(j) : static_cast<int>(j) - static_cast<int>(Q);
}

double grid_angle(std::size_t j, std::size_t Q) {
  return -kPi + kTwoPi * static_cast<double>(j) / static_cast<double>(Q);
}

void check_grid(std::size_t N, std::size_t Q) {
  double total = 1.0;
  for (std::size_t k = 0; k < N; ++k) total *= static_cast<double>(Q);
  if (total > 1e7) throw GuardExceeded("exact: Q^N exceeds 1e7 grid points");
}

}  // namespace

DenseConversion vqs_to_dense(const VariationalState& state, const TruncatedBasis& basis,
                             std::size_t Q) {
  const std::size_t N = basis.n_sites();
  if (state.num_sites() != N) throw ConfigError("vqs_to_dense: site count mismatch");
  if (Q < static_cast<std::size_t>(basis.local_dim()))
    throw ConfigError("vqs_to_dense: need Q >= 2M+1");
  check_grid(N, Q);

  const SampleSet grid = uniform_grid(N, Q);
  std::vector<cplx> lp(grid.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    lp[i] = log_psi(state, grid.row(i));
    top = std::max(top, lp[i].real());
  }
  std::vector<cplx> f(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) f[i] = std::exp(lp[i] - top);

  Eigen::MatrixXcd T(Q, Q);
  for (std::size_t r = 0; r < Q; ++r)
    for (std::size_t j = 0; j < Q; ++j)
      T(r, j) = std::exp(cplx(0.0, grid_frequency(r, Q) * grid_angle(j, Q)));
  std::vector<std::size_t> shape(N, Q);
  for (std::size_t k = 0; k < N; ++k) f = apply_axis(f, shape, k, T);

  const int M = basis.cutoff();
  const int top_freq = static_cast<int>(Q / 2);
  DenseConversion out;
  out.coefficients = DenseState::Zero(static_cast<Eigen::Index>(basis.dim()));
  double total = 0.0, kept = 0.0, shell = 0.0;
  std::vector<int> m(N);
  std::vector<std::size_t> idx(N, 0);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double w = std::norm(f[i]);
    total += w;
    bool inside = true, on_shell = false;
    for (std::size_t k = 0; k < N; ++k) {
      m[k] = grid_frequency(idx[k], Q);
      inside = inside && std::abs(m[k]) <= M;
      on_shell = on_shell || std::abs(m[k]) == top_freq;
    }
    if (on_shell) shell += w;
    if (inside) {
      kept += w;
      out.coefficients[static_cast<Eigen::Index>(basis.encode(m))] = f[i];
    }
    for (std::size_t k = N; k-- > 0;) {
      if (++idx[k] < Q) break;
      idx[k] = 0;
    }
  }
  out.truncated_mass = std::max(0.0, 1.0 - kept / total);
  out.top_shell_mass = shell / total;
  out.coefficients /= out.coefficients.norm();
  if (out.truncated_mass > 1e-6) {
    std::ostringstream msg;
    msg << "vqs_to_dense: " << out.truncated_mass << " of the weight lies outside |m| <= " << M;
    out.warnings.push_back(msg.str());
  }
  if (out.top_shell_mass > 1e-6) {
    std::ostringstream msg;
    msg << "vqs_to_dense: aliasing estimate " << out.top_shell_mass << " on the top grid shell";
    out.warnings.push_back(msg.str());
  }
  return out;
}

SampleSet dense_to_grid(const DenseState& c, const TruncatedBasis& basis, std::size_t Q) {
  const std::size_t N = basis.n_sites();
  if (static_cast<std::size_t>(c.size()) != basis.dim())
    throw ConfigError("dense_to_grid: state dimension mismatch");
  check_grid(N, Q);
  const int M = basis.cutoff(), d = basis.local_dim();
  Eigen::MatrixXcd T(Q, d);
  for (std::size_t j = 0; j < Q; ++j)
    for (int a = 0; a < d; ++a) T(j, a) = std::exp(cplx(0.0, -(a - M) * grid_angle(j, Q)));
  std::vector<cplx> f(c.data(), c.data() + c.size());
  std::vector<std::size_t> shape(N, static_cast<std::size_t>(d));
  for (std::size_t k = 0; k < N; ++k) f = apply_axis(f, shape, k, T);

  SampleSet set = uniform_grid(N, Q);
  set.weights.resize(set.size());
  double total = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i) total += set.weights[i] = std::norm(f[i]);
  for (auto& w : set.weights) w /= total;
  return set;
}

std::pair<double, double> site_direction(const DenseState& c, const TruncatedBasis& basis,
                                         std::size_t k) {
  const int M = basis.cutoff();
  const std::size_t s = basis.stride(k);
  cplx lp = 0.0;  // <c| L+_k |c>
  for (std::size_t i = 0; i < basis.dim(); ++i)
    if (basis.quantum_number(i, k) < M)
      lp += std::conj(c[static_cast<Eigen::Index>(i + s)]) * c[static_cast<Eigen::Index>(i)];
  const double n2 = c.squaredNorm();
  return {lp.real() / n2, -lp.imag() / n2};
}

ExactObservables exact_observables(const DenseState& c, const TruncatedBasis& basis,
                                   const SparseMatrix& H, const SparseMatrix& B, double J) {
  const double n2 = c.squaredNorm();
  const double N = static_cast<double>(basis.n_sites());
  ExactObservables o;
  o.energy = c.dot(H.cast<cplx>() * c).real() / n2;
  o.e_pot = -J / N * c.dot(B.cast<cplx>() * c).real() / n2;
  for (std::size_t k = 0; k < basis.n_sites(); ++k) {
    const auto [cx, sy] = site_direction(c, basis, k);
    o.mag_x += cx / N;
    o.mag_y += sy / N;
  }
  return o;
}

double exact_fidelity(const DenseState& a, const DenseState& b) {
  return std::norm(a.dot(b)) / (a.squaredNorm() * b.squaredNorm());
}

}  // namespace qrotor
