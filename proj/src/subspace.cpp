#include "dcrab/subspace.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "dcrab/errors.hpp"

namespace dcrab {

std::uint64_t binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) {
    return 0;
  }
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (int i = 1; i <= k; ++i) {
    result = result * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  }
  return result;
}

SubspaceBasis::SubspaceBasis(int n_qubits, int excitations, std::vector<BitString> states)
    : n_qubits_(n_qubits), excitations_(excitations), states_(std::move(states)) {}

bool SubspaceBasis::contains(BitString bits) const {
  if (n_qubits_ < 32 && (bits >> n_qubits_) != 0) {
    return false;
  }
  return std::popcount(bits) == excitations_;
}

std::size_t SubspaceBasis::rank(BitString bits) const {
  if (!contains(bits)) {
    throw DomainError("bit string " + std::to_string(bits) + " is not a weight-" +
                      std::to_string(excitations_) + " string on " + std::to_string(n_qubits_) +
                      " qubits");
  }
  std::size_t index = 0;
  int seen = 0;
  for (int position = 0; position < n_qubits_; ++position) {
    if ((bits >> position) & 1U) {
      ++seen;
      index += binomial(position, seen);
    }
  }
  return index;
}

SubspaceBasis enumerate_subspace(int n_qubits, int excitations) {
  if (n_qubits < 1) {
    throw DomainError("need at least one qubit");
  }
  if (n_qubits > kMaxSubspaceQubits) {
    throw CapacityError("enumerate_subspace: N = " + std::to_string(n_qubits) + " exceeds " +
                        std::to_string(kMaxSubspaceQubits));
  }
  if (excitations < 0 || excitations > n_qubits) {
    throw DomainError("excitation number " + std::to_string(excitations) +
                      " outside [0, " + std::to_string(n_qubits) + "]");
  }
  std::vector<BitString> states;
  states.reserve(binomial(n_qubits, excitations));
  if (excitations == 0) {
    states.push_back(0);
    return {n_qubits, excitations, std::move(states)};
  }
  const std::uint64_t limit = std::uint64_t{1} << n_qubits;
  std::uint64_t v = (std::uint64_t{1} << excitations) - 1;
  // Gosper's hack: next larger integer with the same popcount.
  while (v < limit) {
    states.push_back(static_cast<BitString>(v));
    const std::uint64_t c = v & (~v + 1);
    const std::uint64_t r = v + c;
    v = (((r ^ v) >> 2) / c) | r;
  }
  return {n_qubits, excitations, std::move(states)};
}

HermitianOperator::HermitianOperator(Eigen::MatrixXcd matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols()) {
    throw DomainError("HermitianOperator: matrix is not square");
  }
  const double deviation =
      matrix_.size() == 0 ? 0.0 : (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
  if (!(deviation <= kTolerance)) {
    throw DomainError("HermitianOperator: deviation from Hermiticity " +
                      std::to_string(deviation));
  }
}

bool HermitianOperator::is_real() const {
  return matrix_.size() == 0 || matrix_.imag().cwiseAbs().maxCoeff() == 0.0;
}

bool HermitianOperator::is_diagonal() const {
  for (Eigen::Index j = 0; j < matrix_.cols(); ++j) {
    for (Eigen::Index i = 0; i < matrix_.rows(); ++i) {
      if (i != j && matrix_(i, j) != Complex{}) {
        return false;
      }
    }
  }
  return true;
}

StateVector::StateVector(Eigen::VectorXcd amplitudes) : amplitudes_(std::move(amplitudes)) {
  const double norm2 = amplitudes_.squaredNorm();
  if (!(std::abs(norm2 - 1.0) <= kNormTolerance)) {
    throw DomainError("StateVector: <psi|psi> = " + std::to_string(norm2));
  }
}

HermitianOperator build_heisenberg(const SubspaceBasis& basis, double coupling,
                                   double zz_anisotropy) {
  const auto dim = static_cast<Eigen::Index>(basis.dim());
  const int n = basis.n_qubits();
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const BitString b = basis.unrank(static_cast<std::size_t>(i));
    double diagonal = 0.0;
    for (int bond = 0; bond + 1 < n; ++bond) {
      const bool left = (b >> bond) & 1U;
      const bool right = (b >> (bond + 1)) & 1U;
      diagonal += (left == right) ? 1.0 : -1.0;
      if (left != right) {
        // XX + YY = 2 (s+ s- + s- s+) swaps 01 <-> 10 with amplitude 2.
        const BitString flipped = b ^ (BitString{3} << bond);
        h(static_cast<Eigen::Index>(basis.rank(flipped)), i) = 2.0 * coupling;
      }
    }
    h(i, i) = coupling * zz_anisotropy * diagonal;
  }
  return HermitianOperator(std::move(h));
}

HermitianOperator build_local_z(const SubspaceBasis& basis, int actuator) {
  if (actuator < 1 || actuator > basis.n_qubits()) {
    throw DomainError("actuator qubit " + std::to_string(actuator) + " outside [1, " +
                      std::to_string(basis.n_qubits()) + "]");
  }
  const auto dim = static_cast<Eigen::Index>(basis.dim());
  Eigen::MatrixXcd z = Eigen::MatrixXcd::Zero(dim, dim);
  const BitString mask = qubit_mask(actuator);
  for (Eigen::Index i = 0; i < dim; ++i) {
    z(i, i) = (basis.unrank(static_cast<std::size_t>(i)) & mask) ? -1.0 : 1.0;
  }
  return HermitianOperator(std::move(z));
}

HermitianOperator build_collective_sz(const SubspaceBasis& basis) {
  const auto dim = static_cast<Eigen::Index>(basis.dim());
  Eigen::MatrixXcd sz = Eigen::MatrixXcd::Zero(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const int ones = std::popcount(basis.unrank(static_cast<std::size_t>(i)));
    sz(i, i) = 0.5 * (basis.n_qubits() - 2 * ones);
  }
  return HermitianOperator(std::move(sz));
}

StateVector dicke_state(const SubspaceBasis& basis) {
  const auto dim = static_cast<Eigen::Index>(basis.dim());
  return StateVector(Eigen::VectorXcd::Constant(dim, 1.0 / std::sqrt(static_cast<double>(dim))));
}

StateVector product_state(const SubspaceBasis& basis, BitString bits) {
  if (std::popcount(bits) != basis.excitations()) {
    throw DomainError("product_state: bit string has weight " +
                      std::to_string(std::popcount(bits)) + ", subspace has a = " +
                      std::to_string(basis.excitations()));
  }
  Eigen::VectorXcd amplitudes = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.dim()));
  amplitudes(static_cast<Eigen::Index>(basis.rank(bits))) = 1.0;
  return StateVector(std::move(amplitudes));
}

BitString default_initial_bits(int n_qubits, int excitations) {
  if (excitations < 0 || excitations > n_qubits) {
    throw DomainError("default_initial_bits: a outside [0, N]");
  }
  return excitations == 0 ? 0 : (BitString{1} << excitations) - 1;
}

double fidelity(const StateVector& psi, const StateVector& target) {
  if (psi.dim() != target.dim()) {
    throw DomainError("fidelity: dimension mismatch " + std::to_string(psi.dim()) + " vs " +
                      std::to_string(target.dim()));
  }
  return std::norm(target.amplitudes().dot(psi.amplitudes()));
}

namespace {

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

// Pauli `p` on `qubit`, identity elsewhere. The leftmost Kronecker factor is
// qubit N so that qubit 1 lands on the least significant index bit.
Eigen::MatrixXcd embed_pauli(const Eigen::Matrix2cd& p, int qubit, int n_qubits) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
  for (int k = n_qubits; k >= 1; --k) {
    out = kron(out, k == qubit ? Eigen::MatrixXcd(p) : Eigen::MatrixXcd::Identity(2, 2));
  }
  return out;
}

}  // namespace

FullSpaceOperators full_space_operators(int n_qubits, double coupling, int actuator) {
  if (n_qubits < 1 || n_qubits > kMaxFullSpaceQubits) {
    throw CapacityError("full_space_operators: N = " + std::to_string(n_qubits) +
                        " outside [1, " + std::to_string(kMaxFullSpaceQubits) + "]");
  }
  if (actuator < 1 || actuator > n_qubits) {
    throw DomainError("full_space_operators: actuator outside [1, N]");
  }
  const Complex i{0.0, 1.0};
  Eigen::Matrix2cd x, y, z;
  x << 0, 1, 1, 0;
  y << 0, -i, i, 0;
  z << 1, 0, 0, -1;

  const Eigen::Index dim = Eigen::Index{1} << n_qubits;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
  for (int n = 1; n < n_qubits; ++n) {
    h += embed_pauli(x, n, n_qubits) * embed_pauli(x, n + 1, n_qubits);
    h += embed_pauli(y, n, n_qubits) * embed_pauli(y, n + 1, n_qubits);
    h += embed_pauli(z, n, n_qubits) * embed_pauli(z, n + 1, n_qubits);
  }
  h *= coupling;
  return {HermitianOperator(std::move(h)), HermitianOperator(embed_pauli(z, actuator, n_qubits))};
}

HermitianOperator project_to_subspace(const HermitianOperator& full, const SubspaceBasis& basis) {
  const auto dim = static_cast<Eigen::Index>(basis.dim());
  if (full.dim() != (Eigen::Index{1} << basis.n_qubits())) {
    throw DomainError("project_to_subspace: operator is not on the full 2^N space");
  }
  Eigen::MatrixXcd out(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      out(i, j) = full(basis.unrank(static_cast<std::size_t>(i)),
                       basis.unrank(static_cast<std::size_t>(j)));
    }
  }
  return HermitianOperator(std::move(out));
}

Eigen::VectorXcd embed_in_full_space(const Eigen::VectorXcd& amplitudes,
                                     const SubspaceBasis& basis) {
  if (amplitudes.size() != static_cast<Eigen::Index>(basis.dim())) {
    throw DomainError("embed_in_full_space: dimension mismatch");
  }
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(Eigen::Index{1} << basis.n_qubits());
  for (Eigen::Index i = 0; i < amplitudes.size(); ++i) {
    out(basis.unrank(static_cast<std::size_t>(i))) = amplitudes(i);
  }
  return out;
}

double excitation_expectation(const Eigen::VectorXcd& full_state, int n_qubits) {
  if (full_state.size() != (Eigen::Index{1} << n_qubits)) {
    throw DomainError("excitation_expectation: state is not on the full 2^N space");
  }
  double total = 0.0;
  for (Eigen::Index b = 0; b < full_state.size(); ++b) {
    total += std::norm(full_state(b)) * std::popcount(static_cast<std::uint64_t>(b));
  }
  return total;
}

}  // namespace dcrab
