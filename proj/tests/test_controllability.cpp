#include <sstream>

#include <gtest/gtest.h>

#include "dcrab/controllability.hpp"
#include "dcrab/errors.hpp"
#include "dcrab/subspace.hpp"

namespace dcrab {
namespace {

const Complex kMinusI{0.0, -1.0};

Eigen::MatrixXcd pauli(char which) {
  Eigen::MatrixXcd m(2, 2);
  switch (which) {
    case 'x':
      m << 0, 1, 1, 0;
      break;
    case 'y':
      m << 0, Complex(0, -1), Complex(0, 1), 0;
      break;
    default:
      m << 1, 0, 0, -1;
  }
  return m;
}

TEST(Dla, SuTwoFromXAndY) {
  EXPECT_EQ(dla_dimension({kMinusI * pauli('x'), kMinusI * pauli('y')}), 3);
}

TEST(Dla, SingleGeneratorIsAbelian) { EXPECT_EQ(dla_dimension({kMinusI * pauli('z')}), 1); }

TEST(Dla, TwoQubitSingleExcitation) {
  const SubspaceBasis basis = enumerate_subspace(2, 1);
  EXPECT_EQ(dla_dimension({kMinusI * build_heisenberg(basis).matrix(),
                           kMinusI * build_local_z(basis, 1).matrix()}),
            4);
}

TEST(Dla, BasisIsOrthonormalAndSkewHermitian) {
  const SubspaceBasis basis = enumerate_subspace(4, 2);
  const LieBasis lie = dla_closure({kMinusI * build_heisenberg(basis).matrix(),
                                    kMinusI * build_local_z(basis, 1).matrix()});
  ASSERT_LE(lie.size(), 36u);
  for (std::size_t i = 0; i < lie.size(); ++i) {
    const Eigen::MatrixXcd& a = lie.elements()[i];
    EXPECT_LE((a + a.adjoint()).cwiseAbs().maxCoeff(), 1e-10);
    for (std::size_t j = 0; j < lie.size(); ++j) {
      const double inner = (a.adjoint() * lie.elements()[j]).trace().real();
      EXPECT_NEAR(inner, i == j ? 1.0 : 0.0, 1e-10);
    }
  }
}

TEST(Dla, InvariantUnderGeneratorRemixing) {
  const SubspaceBasis basis = enumerate_subspace(5, 2);
  const Eigen::MatrixXcd h = kMinusI * build_heisenberg(basis, 1.0, 0.0).matrix();
  const Eigen::MatrixXcd z = kMinusI * build_local_z(basis, 1).matrix();
  const int reference = dla_dimension({h, z});
  const double c = std::cos(0.7), s = std::sin(0.7);
  EXPECT_EQ(dla_dimension({c * h + s * z, -s * h + c * z}), reference);
  EXPECT_EQ(dla_dimension({z, h}), reference);
  EXPECT_EQ(dla_dimension({h, z, h + z}), reference);
}

TEST(Dla, NeverExceedsSquare) {
  for (int n = 2; n <= 5; ++n) {
    for (int a = 1; a < n; ++a) {
      const ControllabilityVerdict v = verify_subspace_controllability(n, a);
      EXPECT_LE(v.dla_dim, v.dim * v.dim);
    }
  }
}

TEST(Dla, RejectsBadGenerators) {
  EXPECT_THROW(dla_dimension({}), DomainError);
  EXPECT_THROW(dla_dimension({pauli('x')}), DomainError);
  EXPECT_THROW(dla_dimension({kMinusI * pauli('x'), Eigen::MatrixXcd::Zero(3, 3)}), DomainError);
  EXPECT_THROW(dla_dimension({Eigen::MatrixXcd::Zero(37, 37)}), CapacityError);
}

TEST(Verdict, Examples) {
  const ControllabilityVerdict w3 = verify_subspace_controllability(3, 1);
  EXPECT_TRUE(w3.controllable);
  EXPECT_EQ(w3.dim, 3);
  EXPECT_GE(w3.dla_dim, 8);
  const ControllabilityVerdict d42 = verify_subspace_controllability(4, 2);
  EXPECT_TRUE(d42.controllable);
  EXPECT_EQ(d42.dim, 6);
  EXPECT_GE(d42.dla_dim, 35);
  const ControllabilityVerdict trivial = verify_subspace_controllability(2, 0);
  EXPECT_EQ(trivial.dim, 1);
  EXPECT_TRUE(trivial.controllable);
  EXPECT_FALSE(d42.numerical);
}

TEST(Verdict, XxChainLosesControlAboveOneExcitation) {
  for (int n = 4; n <= 5; ++n) {
    EXPECT_FALSE(verify_subspace_controllability(n, 2, 1, 0.0).controllable) << n;
    EXPECT_TRUE(verify_subspace_controllability(n, 1, 1, 0.0).controllable) << n;
  }
}

TEST(Verdict, LargeSubspacesAreLabelledNumerical) {
  const ControllabilityVerdict v = verify_subspace_controllability(6, 3);
  EXPECT_EQ(v.dim, 20);
  EXPECT_FALSE(v.numerical);
  EXPECT_THROW(verify_subspace_controllability(9, 3), CapacityError);
}

TEST(Verdict, CsvTable) {
  std::ostringstream out;
  write_verdict_csv(out, {{3, 1, 3, 9, true, false}, {4, 2, 6, 15, false, false},
                          {8, 1, 28, 784, true, true}});
  EXPECT_EQ(out.str(),
            "N,a,d,dla_dim,verdict\n3,1,3,9,CONTROLLABLE\n4,2,6,15,NOT_CONTROLLABLE\n"
            "8,1,28,784,CONTROLLABLE (numerical)\n");
}

}  // namespace
}  // namespace dcrab
