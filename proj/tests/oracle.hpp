#pragma once

// Brute-force reference implementations used only by the tests. They build matrices from
// Kronecker products of explicit 2x2 blocks and never call the library's dense engine.

#include <complex>
#include <string>

#include <Eigen/Dense>

#include "hlearn/hamiltonian.hpp"
#include "hlearn/pauli.hpp"

namespace oracle {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;

inline Mat letter(char c) {
  Mat m(2, 2);
  switch (c) {
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, cplx(0, -1), cplx(0, 1), 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    default: m << 1, 0, 0, 1; break;
  }
  return m;
}

inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

// Leftmost letter is the most significant tensor factor.
inline Mat pauli(const std::string& word) {
  Mat m = Mat::Identity(1, 1);
  for (char c : word) m = kron(m, letter(c));
  return m;
}

inline Mat pauli(const hlearn::PauliString& p) { return pauli(p.str()); }

inline Mat hamiltonian(const hlearn::SparsePauliSum& h) {
  const Eigen::Index dim = Eigen::Index{1} << h.num_qubits();
  Mat m = Mat::Zero(dim, dim);
  for (const auto& [p, c] : h) m += c * pauli(p);
  return m;
}

inline cplx phase_value(hlearn::Phase ph) {
  const cplx table[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return table[ph.power()];
}

// Single-qubit eigenvector of letter c with eigenvalue v.
inline Eigen::VectorXcd eigvec(char c, int v) {
  Eigen::VectorXcd out(2);
  const double r = 1.0 / std::sqrt(2.0);
  switch (c) {
    case 'X': out << r, v * r; break;
    case 'Y': out << r, cplx(0, v * r); break;
    default: out << (v > 0 ? 1.0 : 0.0), (v > 0 ? 0.0 : 1.0); break;
  }
  return out;
}

inline Eigen::VectorXcd product_state(const std::string& letters, const std::string& signs) {
  Eigen::VectorXcd psi = Eigen::VectorXcd::Ones(1);
  for (std::size_t i = 0; i < letters.size(); ++i) {
    const Eigen::VectorXcd v = eigvec(letters[i], signs[i] == '-' ? -1 : 1);
    Eigen::VectorXcd next(psi.size() * 2);
    for (Eigen::Index a = 0; a < psi.size(); ++a) {
      next(2 * a) = psi(a) * v(0);
      next(2 * a + 1) = psi(a) * v(1);
    }
    psi = next;
  }
  return psi;
}

// Sign string for a prep, most significant qubit first.
inline std::string sign_string(const hlearn::EigenPrep& prep) {
  std::string s;
  for (int q = prep.num_qubits() - 1; q >= 0; --q) s += prep.sign(q) < 0 ? '-' : '+';
  return s;
}

inline Eigen::VectorXcd product_state(const hlearn::EigenPrep& prep) {
  return product_state(prep.basis.str(), sign_string(prep));
}

// e^{-iHt} by a truncated Taylor series with scaling and squaring.
inline Mat expm_taylor(const Mat& h, double t) {
  const double norm = h.norm() * std::abs(t);
  int squarings = 0;
  while (norm / std::ldexp(1.0, squarings) > 0.1) ++squarings;
  const Mat a = cplx(0, -t / std::ldexp(1.0, squarings)) * h;
  Mat term = Mat::Identity(h.rows(), h.cols());
  Mat sum = term;
  for (int k = 1; k <= 20; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

}  // namespace oracle
