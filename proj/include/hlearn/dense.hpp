#pragma once

#include <atomic>
#include <cmath>
#include <complex>
#include <cstdio>
#include <vector>

#include <Eigen/Dense>

#include "hlearn/errors.hpp"
#include "hlearn/hamiltonian.hpp"
#include "hlearn/pauli.hpp"

namespace hlearn {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

namespace detail {
inline std::atomic<int>& dense_cap_storage() {
  static std::atomic<int> cap{12};
  return cap;
}
}  // namespace detail

inline int dense_cap() { return detail::dense_cap_storage().load(); }

/// Raise or lower the dense qubit cap (at most 14; above 12 a 2^n x 2^n matrix needs > 256 MiB).
inline void set_dense_cap(int cap) {
  if (cap < 1 || cap > 14) throw ParameterError("set_dense_cap: cap must lie in [1, 14]");
  if (cap > 12) std::fprintf(stderr, "warning: dense cap %d needs several GiB per operator\n", cap);
  detail::dense_cap_storage().store(cap);
}

inline void check_capacity(int n) {
  if (n > dense_cap()) {
    throw CapacityError("dense simulation of " + std::to_string(n) + " qubits exceeds cap " +
                        std::to_string(dense_cap()));
  }
}

/// A 2^n x 2^n complex operator; basis index bit q is qubit q.
struct DenseOperator {
  int n = 0;
  Matrix m;

  DenseOperator() = default;
  DenseOperator(int qubits, Matrix mat) : n(qubits), m(std::move(mat)) {
    const Eigen::Index dim = Eigen::Index{1} << n;
    if (m.rows() != dim || m.cols() != dim) throw DimensionError("DenseOperator: size is not 2^n");
  }

  static DenseOperator identity(int n) {
    check_capacity(n);
    const Eigen::Index dim = Eigen::Index{1} << n;
    return {n, Matrix::Identity(dim, dim)};
  }

  Eigen::Index dim() const { return m.rows(); }
};

/// Normalized Frobenius norm ‖M‖_F / sqrt(2^n).
inline double normalized_frobenius(const Matrix& m) {
  return m.norm() / std::sqrt(static_cast<double>(m.rows()));
}

/// P|x> = i^{#Y} (-1)^{|x & z|} |x ^ xmask>.
inline cplx pauli_amplitude(const PauliString& p, Mask x) {
  const int power = popcount(p.x_mask() & p.z_mask()) + 2 * (popcount(x & p.z_mask()) % 2);
  return Phase(power).value();
}

inline DenseOperator dense_pauli(const PauliString& p) {
  check_capacity(p.num_qubits());
  const Mask dim = Mask{1} << p.num_qubits();
  Matrix m = Matrix::Zero(dim, dim);
  for (Mask x = 0; x < dim; ++x) m(x ^ p.x_mask(), x) = pauli_amplitude(p, x);
  return {p.num_qubits(), std::move(m)};
}

inline DenseOperator dense_from_sum(const SparsePauliSum& h) {
  const int n = h.num_qubits();
  check_capacity(n);
  const Mask dim = Mask{1} << n;
  Matrix m = Matrix::Zero(dim, dim);
  for (const auto& [p, c] : h) {
    for (Mask x = 0; x < dim; ++x) m(x ^ p.x_mask(), x) += c * pauli_amplitude(p, x);
  }
  return {n, std::move(m)};
}

/// (1/2^n) tr(O·Q) in O(2^n) using the permutation structure of Q.
inline cplx pauli_coefficient_complex(const DenseOperator& o, const PauliString& q) {
  if (q.num_qubits() != o.n) throw DimensionError("pauli_coefficient: qubit count mismatch");
  const Mask dim = Mask{1} << o.n;
  cplx acc = 0.0;
  // tr(OQ) = Σ_x O(x, x^xmask)·Q(x^xmask, x)
  for (Mask x = 0; x < dim; ++x) acc += o.m(x, x ^ q.x_mask()) * pauli_amplitude(q, x);
  return acc / static_cast<double>(dim);
}

inline double real_checked(cplx v, const char* what, double tol = 1e-10) {
  if (std::abs(v.imag()) > tol) {
    throw NumericalError(std::string(what) + ": imaginary part " + std::to_string(v.imag()) +
                         " exceeds tolerance");
  }
  return v.real();
}

inline double pauli_coefficient(const DenseOperator& o, const PauliString& q) {
  return real_checked(pauli_coefficient_complex(o, q), "pauli_coefficient");
}

/// Eigendecomposition of a dense Hamiltonian, reused for every evolution time.
class HermitianSpectrum {
 public:
  HermitianSpectrum() = default;
  explicit HermitianSpectrum(const SparsePauliSum& h) : n_(h.num_qubits()) {
    const DenseOperator dense = dense_from_sum(h);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(dense.m);
    if (solver.info() != Eigen::Success) throw NumericalError("HermitianSpectrum: eigensolver failed");
    values_ = solver.eigenvalues();
    vectors_ = solver.eigenvectors();
  }

  int num_qubits() const { return n_; }

  /// e^{-iHt}.
  DenseOperator evolution(double t) const {
    Vector phases(values_.size());
    for (Eigen::Index a = 0; a < values_.size(); ++a) phases(a) = std::polar(1.0, -values_(a) * t);
    return {n_, vectors_ * phases.asDiagonal() * vectors_.adjoint()};
  }

 private:
  int n_ = 0;
  Eigen::VectorXd values_;
  Matrix vectors_;
};

/// e^{-iHt} via Hermitian eigendecomposition.
inline DenseOperator expm_hermitian(const SparsePauliSum& h, double t) {
  return HermitianSpectrum(h).evolution(t);
}

inline bool is_unitary(const DenseOperator& u, double tol = 1e-10) {
  const Matrix d = u.m.adjoint() * u.m - Matrix::Identity(u.dim(), u.dim());
  return d.norm() <= tol;
}

/// (e^{-iHt} e^{iH0 t})^s: H is the unknown Hamiltonian, H0 the current estimate.
struct AlternatingSpec {
  SparsePauliSum h;
  SparsePauliSum h0;
  double t = 0.0;
  int s = 0;

  void validate() const {
    h.check_n(h0);
    if (!(t > 0.0) || !std::isfinite(t)) throw ParameterError("AlternatingSpec: t must be positive");
    if (s < 0) throw ParameterError("AlternatingSpec: s must be non-negative");
  }
};

inline Matrix matrix_power(const Matrix& base, int s) {
  Matrix result = Matrix::Identity(base.rows(), base.cols());
  Matrix b = base;
  while (s > 0) {
    if (s & 1) result = result * b;
    s >>= 1;
    if (s > 0) b = b * b;
  }
  return result;
}

inline DenseOperator alternating_unitary(const HermitianSpectrum& h, const HermitianSpectrum& h0,
                                         double t, int s) {
  if (h.num_qubits() != h0.num_qubits()) throw DimensionError("alternating_unitary: n mismatch");
  const int n = h.num_qubits();
  if (s == 0) return DenseOperator::identity(n);
  const Matrix slice = h.evolution(t).m * h0.evolution(-t).m;
  return {n, matrix_power(slice, s)};
}

inline DenseOperator alternating_unitary(const AlternatingSpec& spec) {
  spec.validate();
  check_capacity(spec.h.num_qubits());
  if (spec.s == 0) return DenseOperator::identity(spec.h.num_qubits());
  return alternating_unitary(HermitianSpectrum(spec.h), HermitianSpectrum(spec.h0), spec.t, spec.s);
}

/// Z† P Z, the Heisenberg-picture observable.
inline DenseOperator heisenberg(const DenseOperator& z, const PauliString& p) {
  if (p.num_qubits() != z.n) throw DimensionError("heisenberg: qubit count mismatch");
  return {z.n, z.m.adjoint() * dense_pauli(p).m * z.m};
}

/// (1/2^n) tr(P Z Q Z†).
inline double exact_mu(const PauliString& p, const DenseOperator& z, const PauliString& q) {
  require_same_n(p, q);
  return real_checked(pauli_coefficient_complex(heisenberg(z, p), q), "exact_mu");
}

struct PauliDecomposition {
  double identity = 0.0;
  SparsePauliSum terms;
};

/// c_Q = (1/2^n) tr(O Q) for every Q with weight <= max_weight; O must be Hermitian.
inline PauliDecomposition pauli_decompose(const DenseOperator& o, int max_weight) {
  check_capacity(o.n);
  PauliDecomposition out{0.0, SparsePauliSum(o.n)};
  for (const auto& q : enumerate_paulis(o.n, max_weight)) {
    const double c = real_checked(pauli_coefficient_complex(o, q), "pauli_decompose");
    if (q.is_identity()) {
      out.identity = c;
    } else {
      out.terms.add(q, c);
    }
  }
  return out;
}

/// (1/√N)‖e^{iHt} X e^{-iHt} - X - [iHt, X]‖_F.
inline double first_order_residual(const SparsePauliSum& h, const SparsePauliSum& x, double t) {
  h.check_n(x);
  const HermitianSpectrum spec(h);
  const Matrix u = spec.evolution(t).m;  // e^{-iHt}
  const Matrix xd = dense_from_sum(x).m;
  const Matrix hd = dense_from_sum(h).m;
  const Matrix conj = u.adjoint() * xd * u;
  const Matrix first = cplx(0.0, t) * (hd * xd - xd * hd);
  return normalized_frobenius(conj - xd - first);
}

/// (t²/2)·(1/√N)‖[H, X]_2‖_F.
inline double first_order_bound(const SparsePauliSum& h, const SparsePauliSum& x, double t) {
  return 0.5 * t * t * coefficient_norm(nested_commutator(h, x, 2));
}

/// Σ_{k<=m} [iHt, X]_k / k!, with [iHt, X]_k = t^k·nested_commutator(H, X, k).
inline SparsePauliSum hadamard_partial_sum(const SparsePauliSum& h, const SparsePauliSum& x,
                                           double t, int m) {
  if (m < 0) throw ParameterError("hadamard_partial_sum: m must be >= 0");
  SparsePauliSum acc = x;
  SparsePauliSum term = x;
  double factor = 1.0;
  for (int k = 1; k <= m; ++k) {
    term = commutator_sum(h, term);
    factor *= t / k;
    acc += term.scaled(factor);
  }
  return acc;
}

/// (1/√N)‖e^{iHt} X e^{-iHt} - Σ_{k<=m} [iHt, X]_k/k!‖_F.
inline double hadamard_truncation_error(const SparsePauliSum& h, const SparsePauliSum& x, double t,
                                        int m) {
  const Matrix u = expm_hermitian(h, t).m;
  const Matrix conj = u.adjoint() * dense_from_sum(x).m * u;
  return normalized_frobenius(conj - dense_from_sum(hadamard_partial_sum(h, x, t, m)).m);
}

struct TrotterResidual {
  double residual = 0.0;
  double envelope = 0.0;
};

/// Distance of Z†PZ from its first-order expansion P + i·s·t·[H - H0, P], together with the
/// η s t² Λ + η² s² t² envelope (η = local 2-norm of H - H0, Λ = the larger local 1-norm).
inline TrotterResidual trotter_residual(const AlternatingSpec& spec, const PauliString& p) {
  spec.validate();
  const DenseOperator z = alternating_unitary(spec);
  const SparsePauliSum delta = spec.h - spec.h0;
  const double st = spec.s * spec.t;
  const Matrix expected =
      dense_pauli(p).m + dense_from_sum(commutator_sum(delta, single_term(p))).m * st;
  TrotterResidual out;
  out.residual = normalized_frobenius(heisenberg(z, p).m - expected);
  const double eta = local_norm_2(delta);
  const double lambda = std::max(local_norm_1(spec.h), local_norm_1(spec.h0));
  out.envelope = eta * spec.s * spec.t * spec.t * lambda + eta * eta * st * st;
  return out;
}

}  // namespace hlearn
