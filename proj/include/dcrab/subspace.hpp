#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace dcrab {

using Complex = std::complex<double>;
using BitString = std::uint32_t;

/// Qubit n (1-based) is stored in bit n-1, so qubit 1 is the least
/// significant bit.
constexpr BitString qubit_mask(int qubit) { return BitString{1} << (qubit - 1); }

constexpr int kMaxSubspaceQubits = 24;
constexpr int kMaxFullSpaceQubits = 10;

std::uint64_t binomial(int n, int k);

/// All N-bit strings of Hamming weight a, ascending. Ascending order for a
/// fixed weight is colexicographic order, so rank() is the combinatorial
/// number system and needs no lookup table.
class SubspaceBasis {
 public:
  SubspaceBasis(int n_qubits, int excitations, std::vector<BitString> states);

  int n_qubits() const { return n_qubits_; }
  int excitations() const { return excitations_; }
  std::size_t dim() const { return states_.size(); }
  const std::vector<BitString>& states() const { return states_; }

  BitString unrank(std::size_t index) const { return states_.at(index); }
  /// Throws DomainError when `bits` is not a weight-a string of this basis.
  std::size_t rank(BitString bits) const;
  bool contains(BitString bits) const;

 private:
  int n_qubits_;
  int excitations_;
  std::vector<BitString> states_;
};

SubspaceBasis enumerate_subspace(int n_qubits, int excitations);

/// Dense complex square matrix, Hermitian to 1e-12 entrywise.
class HermitianOperator {
 public:
  static constexpr double kTolerance = 1e-12;

  explicit HermitianOperator(Eigen::MatrixXcd matrix);

  Eigen::Index dim() const { return matrix_.rows(); }
  const Eigen::MatrixXcd& matrix() const { return matrix_; }
  Complex operator()(Eigen::Index i, Eigen::Index j) const { return matrix_(i, j); }

  bool is_real() const;
  bool is_diagonal() const;

 private:
  Eigen::MatrixXcd matrix_;
};

/// Normalized amplitude vector, |<psi|psi> - 1| <= 1e-10.
class StateVector {
 public:
  static constexpr double kNormTolerance = 1e-10;

  explicit StateVector(Eigen::VectorXcd amplitudes);

  Eigen::Index dim() const { return amplitudes_.size(); }
  const Eigen::VectorXcd& amplitudes() const { return amplitudes_; }
  Complex operator[](Eigen::Index i) const { return amplitudes_(i); }

 private:
  Eigen::VectorXcd amplitudes_;
};

/// J * sum_n (X_n X_{n+1} + Y_n Y_{n+1} + delta * Z_n Z_{n+1}) on the span of
/// `basis`. delta = 1 is the isotropic chain; other values are a hook for the
/// XXZ family and are only exercised by the controllability diagnostics.
HermitianOperator build_heisenberg(const SubspaceBasis& basis, double coupling = 1.0,
                                   double zz_anisotropy = 1.0);

/// Z on the actuator qubit (1-based), Z|0> = +|0>.
HermitianOperator build_local_z(const SubspaceBasis& basis, int actuator);

/// S_z = (1/2) sum_n Z_n on the span of `basis` (diagonal, value N/2 - a).
HermitianOperator build_collective_sz(const SubspaceBasis& basis);

StateVector dicke_state(const SubspaceBasis& basis);
StateVector product_state(const SubspaceBasis& basis, BitString bits);

/// |1...1 0...0>: qubits 1..a excited.
BitString default_initial_bits(int n_qubits, int excitations);

/// |<psi|target>|^2.
double fidelity(const StateVector& psi, const StateVector& target);

// Full 2^N-space constructions. These are the brute-force oracle for the
// subspace-restricted builders above and deliberately share no code with them.

struct FullSpaceOperators {
  HermitianOperator heisenberg;
  HermitianOperator local_z;
};

FullSpaceOperators full_space_operators(int n_qubits, double coupling, int actuator);

/// P^T A P where P selects the basis states of `basis` from the full space.
HermitianOperator project_to_subspace(const HermitianOperator& full, const SubspaceBasis& basis);
Eigen::VectorXcd embed_in_full_space(const Eigen::VectorXcd& amplitudes, const SubspaceBasis& basis);

/// <S_exc> = sum_b |psi_b|^2 popcount(b) for a full-space state.
double excitation_expectation(const Eigen::VectorXcd& full_state, int n_qubits);

}  // namespace dcrab
