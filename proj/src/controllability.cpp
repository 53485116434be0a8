#include "dcrab/controllability.hpp"

#include <deque>
#include <vector>
#include <ostream>
#include <string>

#include "dcrab/errors.hpp"
#include "dcrab/subspace.hpp"

namespace dcrab {

namespace {

double real_inner(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return (a.real().array() * b.real().array()).sum() + (a.imag().array() * b.imag().array()).sum();
}

}  // namespace

LieBasis::LieBasis(Eigen::Index dim_space) : dim_space_(dim_space) {
  if (dim_space < 1) throw DomainError("LieBasis: dimension must be >= 1");
  if (dim_space > kMaxLieDimension) {
    throw CapacityError("LieBasis: matrix dimension " + std::to_string(dim_space) + " exceeds " +
                        std::to_string(kMaxLieDimension));
  }
}

bool LieBasis::try_add(const Eigen::MatrixXcd& candidate, double tol) {
  if (elements_.size() >= static_cast<std::size_t>(dim_space_ * dim_space_)) return false;
  Eigen::MatrixXcd r = candidate;
  for (int pass = 0; pass < 2; ++pass) {
    for (const Eigen::MatrixXcd& e : elements_) r -= real_inner(e, r) * e;
  }
  const double norm = r.norm();
  if (!(norm > tol)) return false;
  elements_.push_back(r / norm);
  return true;
}

LieBasis dla_closure(const std::vector<Eigen::MatrixXcd>& generators, double tol) {
  if (generators.empty()) throw DomainError("dla_dimension: no generators");
  const Eigen::Index d = generators.front().rows();
  LieBasis basis(d);
  for (const Eigen::MatrixXcd& g : generators) {
    if (g.rows() != d || g.cols() != d) {
      throw DomainError("dla_dimension: generators must be square and of equal size");
    }
    if ((g + g.adjoint()).cwiseAbs().maxCoeff() > 1e-10) {
      throw DomainError("dla_dimension: generator is not skew-Hermitian");
    }
  }

  // Commutators are taken between the accepted (unit-scaled) commutators
  // themselves. Commuting the orthonormalized directions instead amplifies
  // rounding error by 1/residual at every nesting level.
  std::vector<Eigen::MatrixXcd> words;
  std::deque<std::size_t> pending;
  const auto accept = [&](const Eigen::MatrixXcd& m) {
    if (!basis.try_add(m, tol)) return;
    words.push_back(m / m.norm());
    pending.push_back(words.size() - 1);
  };
  for (const Eigen::MatrixXcd& g : generators) accept(g);
  const std::size_t full = static_cast<std::size_t>(d * d);
  while (!pending.empty() && basis.size() < full) {
    const std::size_t i = pending.front();
    pending.pop_front();
    // A new word meets all earlier words here; later ones meet it when they
    // are processed themselves.
    for (std::size_t j = 0; j < words.size() && basis.size() < full; ++j) {
      if (j == i) continue;
      const Eigen::MatrixXcd commutator = words[i] * words[j] - words[j] * words[i];
      accept(commutator);
    }
  }
  return basis;
}

int dla_dimension(const std::vector<Eigen::MatrixXcd>& generators, double tol) {
  return static_cast<int>(dla_closure(generators, tol).size());
}

ControllabilityVerdict verify_subspace_controllability(int n_qubits, int excitations,
                                                       int actuator, double zz_anisotropy) {
  const SubspaceBasis basis = enumerate_subspace(n_qubits, excitations);
  const auto d = static_cast<int>(basis.dim());
  if (d > kMaxLieDimension) {
    throw CapacityError("verify_subspace_controllability: subspace dimension " +
                        std::to_string(d) + " exceeds " + std::to_string(kMaxLieDimension));
  }
  const Complex minus_i{0.0, -1.0};
  const std::vector<Eigen::MatrixXcd> generators{
      minus_i * build_heisenberg(basis, 1.0, zz_anisotropy).matrix(),
      minus_i * build_local_z(basis, actuator).matrix()};
  const int found = dla_dimension(generators);
  return {n_qubits, excitations, d, found, found >= d * d - 1, d > 20};
}

void write_verdict_csv(std::ostream& out, const std::vector<ControllabilityVerdict>& verdicts) {
  out << "N,a,d,dla_dim,verdict\n";
  for (const auto& v : verdicts) {
    out << v.n_qubits << ',' << v.excitations << ',' << v.dim << ',' << v.dla_dim << ','
        << (v.controllable ? "CONTROLLABLE" : "NOT_CONTROLLABLE")
        << (v.numerical ? " (numerical)" : "") << '\n';
  }
}

}  // namespace dcrab
