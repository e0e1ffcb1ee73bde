#include "generators.hpp"

#include "qfilt/statespace.hpp"

#include <doctest.h>

using namespace qfilt;

namespace {
const cplx I(0.0, 1.0);
}

TEST_CASE("pauli products") {
  CHECK((sigma_x() * sigma_y()).matrix().isApprox((I * sigma_z()).matrix()));
  CHECK((sigma_y() * sigma_z()).matrix().isApprox((I * sigma_x()).matrix()));
  CHECK((sigma_z() * sigma_x()).matrix().isApprox((I * sigma_y()).matrix()));
  CHECK((sigma_x() * sigma_x()) == Operator::identity(2));
  const Operator s = pauli(Vec3(1, 2, 3));
  CHECK(s.is_hermitian());
  // sigma(l)^2 = |l|^2 I
  CHECK((s * s).matrix().isApprox(14.0 * Matrix::Identity(2, 2)));
}

TEST_CASE("operator dimension is restricted to 2 or 4") {
  CHECK_THROWS_AS(Operator(Matrix::Zero(3, 3)), std::invalid_argument);
  CHECK_NOTHROW(Operator(Matrix::Zero(4, 4)));
}

TEST_CASE("bloch round trip over random vectors in the ball") {
  for (std::uint64_t c = 0; c < 200; ++c) {
    auto rng = gen::stream(c);
    const Vec3 r = gen::in_ball(rng);
    const DensityMatrix rho = bloch_to_density(BlochVector(r));
    CHECK(rho.trace() == doctest::Approx(1.0).epsilon(1e-14));
    const Vec3 back = density_to_bloch(rho).vec();
    CHECK((back - r).norm() < 1e-12);
    // purity (1 + |r|^2) / 2
    CHECK(rho.purity() == doctest::Approx(0.5 * (1.0 + r.squaredNorm())).epsilon(1e-12));
  }
}

TEST_CASE("density matrix validation") {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 1.2;
  m(1, 1) = -0.2;
  CHECK_THROWS(DensityMatrix(Operator(m)));
  Matrix nh = Matrix::Identity(2, 2) * 0.5;
  nh(0, 1) = 0.1;
  CHECK_THROWS(DensityMatrix(Operator(nh)));
  Matrix two = Matrix::Identity(2, 2);
  CHECK_THROWS(DensityMatrix(Operator(two)));
  CHECK_NOTHROW(DensityMatrix(Operator(two), TraceContract::positive));
  CHECK_THROWS(BlochVector(0.8, 0.8, 0.0));
}

TEST_CASE("entropies") {
  const DensityMatrix mixed(Operator(Matrix(0.5 * Matrix::Identity(2, 2))));
  CHECK(von_neumann_entropy(mixed) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(von_neumann_entropy(mixed, LogBase::nats) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  Vector v(2);
  v << 0.6, 0.8;
  const DensityMatrix pure = DensityMatrix::pure(StateVector(v));
  CHECK(std::abs(von_neumann_entropy(pure)) < 1e-12);
  Eigen::VectorXd p(2);
  p << 0.25, 0.75;
  const double h = -(0.25 * std::log2(0.25) + 0.75 * std::log2(0.75));
  CHECK(shannon_entropy(p) == doctest::Approx(h).epsilon(1e-14));
}

TEST_CASE("expm agrees with a Taylor series oracle") {
  for (std::uint64_t c = 0; c < 50; ++c) {
    auto rng = gen::stream(1000 + c);
    for (int dim : {2, 4}) {
      const Matrix a = gen::complex_matrix(rng, dim, 0.7);
      const Matrix e = expm(a);
      CHECK((e - gen::taylor_exp(a)).cwiseAbs().maxCoeff() < 1e-11);
    }
  }
}

TEST_CASE("unitary evolution from a Hermitian generator") {
  auto rng = gen::stream(77);
  const Operator h = gen::hermitian(rng, 4);
  const Operator u = expm(Operator(Matrix(-I * h.matrix())));
  CHECK(u.is_unitary(1e-11));
}

TEST_CASE("kron and partial structure") {
  const Operator k = kron(sigma_z(), Operator::identity(2));
  CHECK(k.dim() == 4);
  CHECK(k(0, 0) == cplx(1));
  CHECK(k(2, 2) == cplx(-1));
  CHECK(commutator(sigma_x(), sigma_y()).matrix().isApprox((2.0 * I * sigma_z()).matrix()));
  CHECK(anticommutator(sigma_x(), sigma_y()).is_zero());
}

TEST_CASE("bloch components are linear in rho") {
  for (std::uint64_t c = 0; c < 50; ++c) {
    auto rng = gen::stream(3000 + c);
    const Operator a = gen::density(rng, 2), b = gen::density(rng, 2);
    const Vec3 lhs = bloch_components(0.3 * a + 0.7 * b);
    const Vec3 rhs = 0.3 * bloch_components(a) + 0.7 * bloch_components(b);
    CHECK((lhs - rhs).norm() < 1e-14);
    // Tr(sigma(r) rho) = r . bloch(rho)
    const Vec3 r = gen::in_ball(rng);
    CHECK(std::abs(expectation(pauli(r), a).real() - r.dot(bloch_components(a))) < 1e-13);
  }
}
