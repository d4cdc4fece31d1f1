#pragma once

#include <array>
#include <bit>
#include <complex>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hlearn/errors.hpp"

namespace hlearn {

/// Hard cap on qubit count for any PauliString (dense oracles need 2^n vectors).
inline constexpr int kMaxQubits = 16;

using Mask = std::uint32_t;

inline constexpr Mask low_bits(int n) { return n >= 32 ? ~Mask{0} : ((Mask{1} << n) - 1); }

inline int popcount(Mask m) { return std::popcount(m); }

/// A power of i, stored mod 4.
class Phase {
 public:
  constexpr Phase() = default;
  constexpr explicit Phase(int power) : power_(((power % 4) + 4) % 4) {}

  static constexpr Phase one() { return Phase(0); }
  static constexpr Phase i() { return Phase(1); }
  static constexpr Phase minus_one() { return Phase(2); }
  static constexpr Phase minus_i() { return Phase(3); }

  constexpr int power() const { return power_; }
  constexpr bool is_real() const { return power_ % 2 == 0; }

  // +1 or -1; only meaningful when is_real().
  constexpr int sign() const { return power_ == 0 ? 1 : -1; }

  std::complex<double> value() const {
    constexpr std::array<std::complex<double>, 4> table{
        std::complex<double>{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    return table[static_cast<std::size_t>(power_)];
  }

  constexpr Phase operator*(Phase other) const { return Phase(power_ + other.power_); }
  constexpr bool operator==(const Phase&) const = default;

  std::string str() const {
    constexpr std::array<const char*, 4> names{"+1", "+i", "-1", "-i"};
    return names[static_cast<std::size_t>(power_)];
  }

 private:
  int power_ = 0;
};

enum class PauliLetter : std::uint8_t { I, X, Y, Z };

inline char letter_char(PauliLetter l) {
  constexpr std::array<char, 4> chars{'I', 'X', 'Y', 'Z'};
  return chars[static_cast<std::size_t>(l)];
}

/// n-qubit Pauli word in the symplectic (x, z) encoding: I=(0,0) X=(1,0) Y=(1,1) Z=(0,1).
/// Bit q of each mask is qubit q; text renders qubit n-1 first.
class PauliString {
 public:
  PauliString() = default;

  explicit PauliString(int n) : n_(check_n(n)) {}

  PauliString(int n, Mask x, Mask z) : n_(check_n(n)), x_(x), z_(z) {
    if (((x | z) & ~low_bits(n)) != 0) {
      throw ParameterError("PauliString: mask bits set beyond qubit count " + std::to_string(n));
    }
  }

  static PauliString single(int n, int qubit, PauliLetter letter) {
    PauliString p(n);
    return p.with_letter(qubit, letter);
  }

  /// Parses a word over {I,X,Y,Z}, most-significant qubit first ("XZI" has X on qubit 2).
  static PauliString parse(std::string_view text) {
    const int n = static_cast<int>(text.size());
    if (n > kMaxQubits) {
      throw ParseError("PauliString: word longer than " + std::to_string(kMaxQubits) + " qubits");
    }
    Mask x = 0;
    Mask z = 0;
    for (int j = 0; j < n; ++j) {
      const Mask bit = Mask{1} << (n - 1 - j);
      switch (text[static_cast<std::size_t>(j)]) {
        case 'I': break;
        case 'X': x |= bit; break;
        case 'Y': x |= bit; z |= bit; break;
        case 'Z': z |= bit; break;
        default:
          throw ParseError("PauliString: invalid letter in '" + std::string(text) + "'");
      }
    }
    return PauliString(n, x, z);
  }

  int num_qubits() const { return n_; }
  Mask x_mask() const { return x_; }
  Mask z_mask() const { return z_; }
  Mask support_mask() const { return x_ | z_; }
  int weight() const { return popcount(support_mask()); }
  bool is_identity() const { return (x_ | z_) == 0; }

  std::vector<int> support() const {
    std::vector<int> out;
    for (int q = 0; q < n_; ++q) {
      if ((support_mask() >> q) & 1U) out.push_back(q);
    }
    return out;
  }

  PauliLetter letter(int q) const {
    const bool xb = (x_ >> q) & 1U;
    const bool zb = (z_ >> q) & 1U;
    if (xb && zb) return PauliLetter::Y;
    if (xb) return PauliLetter::X;
    if (zb) return PauliLetter::Z;
    return PauliLetter::I;
  }

  PauliString with_letter(int q, PauliLetter l) const {
    if (q < 0 || q >= n_) throw ParameterError("PauliString: qubit index out of range");
    const Mask bit = Mask{1} << q;
    Mask x = x_ & ~bit;
    Mask z = z_ & ~bit;
    if (l == PauliLetter::X || l == PauliLetter::Y) x |= bit;
    if (l == PauliLetter::Z || l == PauliLetter::Y) z |= bit;
    return PauliString(n_, x, z);
  }

  /// Restriction to the qubits in `keep` (identity elsewhere).
  PauliString restricted(Mask keep) const { return PauliString(n_, x_ & keep, z_ & keep); }

  bool commutes_with(const PauliString& other) const {
    return popcount((x_ & other.z_) ^ (z_ & other.x_)) % 2 == 0;
  }

  std::string str() const {
    std::string s(static_cast<std::size_t>(n_), 'I');
    for (int q = 0; q < n_; ++q) s[static_cast<std::size_t>(n_ - 1 - q)] = letter_char(letter(q));
    return s;
  }

  // Canonical order: lexicographic on (z_mask, x_mask); qubit count first so mixed n never ties.
  friend std::strong_ordering operator<=>(const PauliString& a, const PauliString& b) {
    if (auto c = a.n_ <=> b.n_; c != 0) return c;
    if (auto c = a.z_ <=> b.z_; c != 0) return c;
    return a.x_ <=> b.x_;
  }
  friend bool operator==(const PauliString&, const PauliString&) = default;

 private:
  static int check_n(int n) {
    if (n < 0 || n > kMaxQubits) {
      throw ParameterError("PauliString: qubit count must lie in [0, " +
                           std::to_string(kMaxQubits) + "], got " + std::to_string(n));
    }
    return n;
  }

  int n_ = 0;
  Mask x_ = 0;
  Mask z_ = 0;
};

inline void require_same_n(const PauliString& p, const PauliString& q) {
  if (p.num_qubits() != q.num_qubits()) {
    throw DimensionError("Pauli operands on " + std::to_string(p.num_qubits()) + " and " +
                         std::to_string(q.num_qubits()) + " qubits");
  }
}

/// dense(P)·dense(Q) = phase·dense(R).
inline std::pair<Phase, PauliString> mul(const PauliString& p, const PauliString& q) {
  require_same_n(p, q);
  const Mask x1 = p.x_mask(), z1 = p.z_mask(), x2 = q.x_mask(), z2 = q.z_mask();
  // Cyclic products XY, YZ, ZX pick up +i; the reversed ones -i.
  const Mask pos = (x1 & ~z1 & x2 & z2) | (x1 & z1 & ~x2 & z2) | (~x1 & z1 & x2 & ~z2);
  const Mask neg = (x1 & z1 & x2 & ~z2) | (~x1 & z1 & x2 & z2) | (x1 & ~z1 & ~x2 & z2);
  const Phase phase(popcount(pos) - popcount(neg));
  return {phase, PauliString(p.num_qubits(), x1 ^ x2, z1 ^ z2)};
}

/// [P, Q] = 2·phase·R when P and Q anticommute; nullopt when they commute.
inline std::optional<std::pair<Phase, PauliString>> commutator(const PauliString& p,
                                                               const PauliString& q) {
  require_same_n(p, q);
  if (p.commutes_with(q)) return std::nullopt;
  return mul(p, q);
}

/// P ⊆ Q: every qubit of P is identity or equals Q's letter there.
inline bool subset(const PauliString& p, const PauliString& q) {
  require_same_n(p, q);
  const Mask s = p.support_mask();
  return (p.x_mask() ^ (q.x_mask() & s)) == 0 && (p.z_mask() ^ (q.z_mask() & s)) == 0 &&
         (s & ~q.support_mask()) == 0;
}

/// Product eigenstate |A, v>: one non-identity basis letter and one sign per qubit.
/// `signs` bit q set means v_q = -1.
struct EigenPrep {
  PauliString basis;
  Mask signs = 0;

  EigenPrep() = default;
  EigenPrep(PauliString b, Mask s) : basis(b), signs(s) {
    if (basis.support_mask() != low_bits(basis.num_qubits())) {
      throw ParameterError("EigenPrep: basis must be non-identity on every qubit, got " +
                           basis.str());
    }
    if ((signs & ~low_bits(basis.num_qubits())) != 0) {
      throw ParameterError("EigenPrep: sign bits beyond qubit count");
    }
  }

  int num_qubits() const { return basis.num_qubits(); }
  int sign(int q) const { return ((signs >> q) & 1U) ? -1 : 1; }
  friend bool operator==(const EigenPrep&, const EigenPrep&) = default;
};

/// v^{supp S} for a ±1 vector stored as a sign mask.
inline int sign_product(Mask signs, Mask support) { return popcount(signs & support) % 2 ? -1 : 1; }

/// <A, v| Q |A, v> = v^{supp Q} [Q ⊆ A].
inline double eig_expect(const EigenPrep& prep, const PauliString& q) {
  require_same_n(prep.basis, q);
  if (!subset(q, prep.basis)) return 0.0;
  return sign_product(prep.signs, q.support_mask());
}

/// All n-qubit Paulis with weight in [min_weight, max_weight], canonical order.
inline std::vector<PauliString> enumerate_paulis(int n, int max_weight, int min_weight = 0) {
  std::vector<PauliString> out;
  const Mask full = low_bits(n);
  // z-major iteration yields canonical order directly.
  for (Mask z = 0;; ++z) {
    for (Mask x = 0;; ++x) {
      const int w = popcount(x | z);
      if (w >= min_weight && w <= max_weight) out.emplace_back(n, x, z);
      if (x == full) break;
    }
    if (z == full) break;
  }
  return out;
}

/// All single-qubit (weight exactly 1) Paulis, canonical order.
inline std::vector<PauliString> one_local_paulis(int n) { return enumerate_paulis(n, 1, 1); }

struct PauliHash {
  std::size_t operator()(const PauliString& p) const noexcept {
    const std::uint64_t key = (std::uint64_t{p.z_mask()} << 32) ^ p.x_mask() ^
                              (std::uint64_t(p.num_qubits()) << 58);
    return std::hash<std::uint64_t>{}(key);
  }
};

}  // namespace hlearn
