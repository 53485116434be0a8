#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dcrab {

constexpr int kMaxLieDimension = 36;

/// Orthonormal (Frobenius, real inner product Re tr(A^dag B)) basis of a real
/// span of skew-Hermitian matrices.
class LieBasis {
 public:
  explicit LieBasis(Eigen::Index dim_space);

  Eigen::Index dim_space() const { return dim_space_; }
  std::size_t size() const { return elements_.size(); }
  const std::vector<Eigen::MatrixXcd>& elements() const { return elements_; }

  /// Projects out the current span (two Gram-Schmidt passes). If the
  /// remainder has Frobenius norm above `tol` it is normalized, appended and
  /// true is returned.
  bool try_add(const Eigen::MatrixXcd& candidate, double tol);

 private:
  Eigen::Index dim_space_;
  std::vector<Eigen::MatrixXcd> elements_;
};

/// Dimension of the real Lie algebra generated by `generators` (which must
/// be skew-Hermitian d x d): orthonormalize the generators, then keep
/// commuting every new element with every basis element, breadth first,
/// until no commutator adds a direction above `tol`.
int dla_dimension(const std::vector<Eigen::MatrixXcd>& generators, double tol = 1e-8);

/// Same closure, returning the basis.
LieBasis dla_closure(const std::vector<Eigen::MatrixXcd>& generators, double tol = 1e-8);

struct ControllabilityVerdict {
  int n_qubits;
  int excitations;
  int dim;
  int dla_dim;
  bool controllable;
  /// Set for d > 20, where numerical rank decisions get delicate.
  bool numerical;
};

/// DLA of {-i H_XXX, -i Z_actuator} restricted to the weight-a subspace;
/// controllable when the dimension reaches d^2 - 1. `zz_anisotropy` = 0 gives
/// the XX chain used as a negative control.
ControllabilityVerdict verify_subspace_controllability(int n_qubits, int excitations,
                                                       int actuator = 1,
                                                       double zz_anisotropy = 1.0);

/// `N,a,d,dla_dim,verdict` rows.
void write_verdict_csv(std::ostream& out, const std::vector<ControllabilityVerdict>& verdicts);

}  // namespace dcrab
