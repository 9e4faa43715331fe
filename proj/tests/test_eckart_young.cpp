#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "riplab/eckart_young.hpp"
#include "riplab/rng.hpp"

using namespace riplab;

namespace {

Matrix random_orthogonal(Rng& rng, Eigen::Index n) {
  Matrix g(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  return qr.householderQ() * Matrix::Identity(n, n);
}

Vector random_spectrum(Rng& rng, Eigen::Index n, bool descending) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = std::abs(rng.normal());
  std::sort(v.data(), v.data() + n);
  if (descending) v.reverseInPlace();
  return v;
}

Matrix rotation_block(Eigen::Index n, Eigen::Index a, Eigen::Index b, double angle) {
  Matrix q = Matrix::Identity(n, n);
  q(a, a) = std::cos(angle);
  q(b, b) = std::cos(angle);
  q(a, b) = -std::sin(angle);
  q(b, a) = std::sin(angle);
  return q;
}

}  // namespace

TEST_CASE("frozen spectra instances match the stated optima") {
  {
    Vector s(3), d(2);
    s << 3, 2, 1;
    d << 0, 0;
    const EySolution sol = solve_regularized_ey(ey_instance_from_spectra(s, d));
    CHECK(sol.value == Catch::Approx(1.0).margin(1e-12));
    CHECK(sol.w(0) == Catch::Approx(3.0).margin(1e-12));
    CHECK(sol.w(1) == Catch::Approx(2.0).margin(1e-12));
    Matrix expected = Matrix::Zero(3, 3);
    expected(0, 0) = 3.0;
    expected(1, 1) = 2.0;
    CHECK((sol.Y_star * sol.Y_star.transpose() - expected).norm() <= 1e-12);
  }
  {
    Vector s(2), d(2);
    s << 2, 1;
    d << 0, 3;
    const EySolution sol = solve_regularized_ey(ey_instance_from_spectra(s, d));
    CHECK(sol.value == Catch::Approx(1.0).margin(1e-12));
    CHECK(sol.w(0) == Catch::Approx(2.0).margin(1e-12));
    CHECK(sol.w(1) == Catch::Approx(0.0).margin(1e-12));
  }
  {
    Vector s(2), d(2);
    s << 2, 1;
    d << 1, 1;
    const EySolution sol = solve_regularized_ey(ey_instance_from_spectra(s, d));
    CHECK(sol.value == Catch::Approx(4.0).margin(1e-12));
    CHECK(sol.w(0) == Catch::Approx(1.0).margin(1e-12));
    CHECK(sol.w(1) == Catch::Approx(0.0).margin(1e-12));
  }
}

TEST_CASE("value and minimizer agree through the objective on matrix instances") {
  Rng rng(101);
  for (int trial = 0; trial < 12; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform_index(5));
    const Eigen::Index r = 1 + static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::size_t>(n)));
    const Matrix u = random_orthogonal(rng, n);
    const Matrix v = random_orthogonal(rng, r);
    const Vector s = random_spectrum(rng, n, true);
    const Vector d = random_spectrum(rng, r, false);
    const Matrix a = u * s.asDiagonal() * u.transpose();
    const Matrix b = v * d.asDiagonal() * v.transpose();

    const EyInstance inst = ey_instance_from_matrices(a, b);
    CHECK((inst.s - s).norm() <= 1e-10 * std::max(1.0, s.norm()));
    CHECK((inst.d - d).norm() <= 1e-10 * std::max(1.0, d.norm()));

    const EySolution sol = solve_regularized_ey(inst);
    const double phi = ey_objective(a, b, sol.Y_star);
    CHECK(std::abs(phi - sol.value) <= 1e-10 * std::max(1.0, std::abs(sol.value)));
  }
}

TEST_CASE("matrix instances decompose deterministically") {
  Rng rng(103);
  const Matrix u = random_orthogonal(rng, 4);
  const Vector s = random_spectrum(rng, 4, true);
  const Matrix a = u * s.asDiagonal() * u.transpose();
  const Matrix b = Matrix::Identity(2, 2) * 0.5;

  const EyInstance first = ey_instance_from_matrices(a, b);
  const EyInstance second = ey_instance_from_matrices(a, b);
  CHECK((first.s - second.s).norm() == 0.0);
  CHECK((first.a_basis - second.a_basis).norm() == 0.0);
  CHECK((first.b_basis - second.b_basis).norm() == 0.0);

  Matrix skew = a;
  skew(0, 1) += 1.0;
  CHECK_THROWS_AS(ey_instance_from_matrices(skew, b), ValidationError);
  CHECK_THROWS_AS(ey_instance_from_matrices(-Matrix::Identity(3, 3), b), ValidationError);
  CHECK_THROWS_AS(ey_instance_from_matrices(Matrix::Identity(2, 2), Matrix::Identity(3, 3)),
                  ValidationError);
}

TEST_CASE("spectra orderings are enforced") {
  Vector asc(2), desc(2), neg(2);
  asc << 1, 2;
  desc << 2, 1;
  neg << -1, 0;
  CHECK_THROWS_AS(ey_instance_from_spectra(asc, asc), ValidationError);
  CHECK_THROWS_AS(ey_instance_from_spectra(desc, desc), ValidationError);
  CHECK_THROWS_AS(ey_instance_from_spectra(neg.reverse().eval(), asc), ValidationError);
  CHECK_THROWS_AS(ey_instance_from_spectra(desc, neg), ValidationError);
  Vector one(1);
  one << 1;
  CHECK_THROWS_AS(ey_instance_from_spectra(one, asc), ValidationError);
}

TEST_CASE("zero regularizer recovers the truncated spectrum error exactly") {
  Rng rng(107);
  const Vector s = random_spectrum(rng, 5, true);
  for (Eigen::Index r = 1; r <= 5; ++r) {
    const EySolution sol = solve_regularized_ey(ey_instance_from_spectra(s, Vector::Zero(r)));
    double tail = 0.0;
    for (Eigen::Index i = r; i < 5; ++i) tail += s(i) * s(i);
    CHECK(sol.value == tail);
  }
}

TEST_CASE("closed form matches the descent oracle") {
  Rng rng(109);
  for (int trial = 0; trial < 8; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform_index(3));
    const Eigen::Index r = 1 + static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::size_t>(n)));
    const Matrix u = random_orthogonal(rng, n);
    const Matrix v = random_orthogonal(rng, r);
    const Matrix a = u * random_spectrum(rng, n, true).asDiagonal() * u.transpose();
    const Matrix b = v * random_spectrum(rng, r, false).asDiagonal() * v.transpose();

    const double closed = solve_regularized_ey(ey_instance_from_matrices(a, b)).value;
    const double oracle = ey_descent_oracle(a, b, 1000 + static_cast<std::uint64_t>(trial), 8, 4000);
    CHECK(oracle >= closed - 1e-9);
    CHECK(oracle <= closed + 1e-6);
  }
}

TEST_CASE("oracle handles the degenerate corners") {
  const Matrix zero = Matrix::Zero(3, 3);
  const Matrix b_small = Matrix::Identity(2, 2) * 0.25;
  CHECK(ey_descent_oracle(zero, b_small, 5, 4, 2000) <= 1e-6);

  Vector s(3), d(2);
  s << 1.5, 1.0, 0.25;
  d << 2.0, 3.0;
  const Matrix a = s.asDiagonal();
  const Matrix b = d.asDiagonal();
  const double closed = solve_regularized_ey(ey_instance_from_spectra(s, d)).value;
  CHECK(closed == Catch::Approx(s.squaredNorm()).margin(1e-12));
  CHECK(std::abs(ey_descent_oracle(a, b, 6, 4, 2000) - closed) <= 1e-6);
}

TEST_CASE("closed form is monotone in the regularizer spectrum") {
  Rng rng(113);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform_index(4));
    const Eigen::Index r = 1 + static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::size_t>(n)));
    const Vector s = random_spectrum(rng, n, true);
    Vector d = random_spectrum(rng, r, false);
    const double base = solve_regularized_ey(ey_instance_from_spectra(s, d)).value;

    d(static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::size_t>(r)))) +=
        std::abs(rng.normal());
    std::sort(d.data(), d.data() + r);
    const double bumped = solve_regularized_ey(ey_instance_from_spectra(s, d)).value;
    CHECK(bumped >= base - 1e-12);
  }
}

TEST_CASE("already diagonal gram passes through canonicalization unchanged") {
  Rng rng(127);
  const Eigen::Index n = 4, r = 3;
  const Matrix u = random_orthogonal(rng, n);
  Vector s(n), d(r);
  s << 3.0, 2.2, 1.5, 0.4;
  d << 0.2, 0.2, 0.7;
  const Matrix smat = u * s.asDiagonal() * u.transpose();
  const Matrix dmat = d.asDiagonal();

  Matrix x = Matrix::Zero(n, r);
  for (Eigen::Index i = 0; i < r; ++i) x.col(i) = u.col(i) * std::sqrt(s(i) - d(i));
  REQUIRE(((smat - x * x.transpose()) * x - x * dmat).norm() <= 1e-10);

  const Matrix y = canonicalize_to_diagonal_gram(x, smat, dmat);
  CHECK((y - x).norm() == 0.0);
}

TEST_CASE("column rotations are undone to a diagonal gram") {
  Rng rng(131);
  const Eigen::Index n = 4, r = 3;
  const Matrix u = random_orthogonal(rng, n);
  Vector s(n), d(r);
  s << 3.0, 2.2, 1.5, 0.4;
  d << 0.2, 0.2, 0.7;
  const Matrix smat = u * s.asDiagonal() * u.transpose();
  const Matrix dmat = d.asDiagonal();

  Matrix x0 = Matrix::Zero(n, r);
  for (Eigen::Index i = 0; i < r; ++i) x0.col(i) = u.col(i) * std::sqrt(s(i) - d(i));
  const Matrix x = x0 * rotation_block(r, 0, 1, 0.7);
  REQUIRE(((smat - x * x.transpose()) * x - x * dmat).norm() <= 1e-10);
  REQUIRE(std::abs((x.transpose() * x)(0, 1)) > 1e-3);

  const Matrix y = canonicalize_to_diagonal_gram(x, smat, dmat);
  const Matrix gram = y.transpose() * y;
  for (Eigen::Index j = 0; j < r; ++j)
    for (Eigen::Index i = 0; i < r; ++i)
      if (i != j) CHECK(std::abs(gram(i, j)) <= 1e-8);
  CHECK((y * y.transpose() - x * x.transpose()).norm() <= 1e-8);
  CHECK(std::abs((dmat * gram).trace() - (dmat * (x.transpose() * x)).trace()) <= 1e-8);
  CHECK(std::abs(ey_objective(smat, dmat, y) - ey_objective(smat, dmat, x)) <= 1e-8);
}

TEST_CASE("repeated eigenvalue mixtures canonicalize to a scaled permutation") {
  Vector s(4), d(2);
  s << 2.0, 2.0, 1.0, 0.5;
  d << 0.3, 0.3;
  const Matrix smat = s.asDiagonal();
  const Matrix dmat = d.asDiagonal();
  const double w = 2.0 - 0.3;

  Matrix x0 = Matrix::Zero(4, 2);
  x0(0, 0) = std::sqrt(w);
  x0(1, 1) = std::sqrt(w);
  const Matrix x = rotation_block(4, 0, 1, 0.6) * x0 * rotation_block(2, 0, 1, 0.9);
  REQUIRE((smat * x - x * (dmat + x.transpose() * x)).norm() <= 1e-10);
  REQUIRE_FALSE(is_scaled_permutation(x, 1e-8));

  const Matrix y = canonicalize_to_scaled_permutation(x, smat, dmat);
  CHECK(is_scaled_permutation(y, 1e-8));
  CHECK((y.transpose() * y - x.transpose() * x).norm() <= 1e-8);
  CHECK(std::abs((smat * (y * y.transpose())).trace() - (smat * (x * x.transpose())).trace()) <=
        1e-8);
  CHECK(std::abs(ey_objective(smat, dmat, y) - ey_objective(smat, dmat, x)) <= 1e-8);
}

TEST_CASE("stationary oracle factors canonicalize to a scaled permutation") {
  Vector s(4), d(2);
  s << 2.0, 2.0, 1.0, 0.5;
  d << 0.3, 0.3;
  const Matrix a = s.asDiagonal();
  const Matrix b = d.asDiagonal();

  const EyDescentResult run = ey_descent_search(a, b, 2024, 6, 6000);
  const Matrix& x = run.minimizer;
  const double resid = (a * x - x * (b + x.transpose() * x)).norm();
  REQUIRE(resid <= 1e-8);

  const Matrix x1 = canonicalize_to_diagonal_gram(x, a, b);
  const Matrix y = canonicalize_to_scaled_permutation(x1, a, b);
  CHECK(is_scaled_permutation(y, 1e-8));
  CHECK(std::abs(ey_objective(a, b, y) - ey_objective(a, b, x)) <= 1e-8);
  CHECK(std::abs(ey_objective(a, b, y) - run.value) <= 1e-8);
  CHECK(run.value == Catch::Approx(solve_regularized_ey(ey_instance_from_matrices(a, b)).value).margin(1e-8));
}

TEST_CASE("canonicalization rejects malformed input") {
  Rng rng(137);
  Vector s(3), d(2);
  s << 2.0, 1.0, 0.5;
  d << 0.1, 0.4;
  const Matrix smat = s.asDiagonal();
  const Matrix dmat = d.asDiagonal();

  Matrix x(3, 2);
  for (Eigen::Index j = 0; j < 2; ++j)
    for (Eigen::Index i = 0; i < 3; ++i) x(i, j) = rng.normal();
  CHECK_THROWS_AS(canonicalize_to_diagonal_gram(x, smat, dmat), ValidationError);
  CHECK_THROWS_AS(canonicalize_to_scaled_permutation(x, smat, dmat), ValidationError);

  Matrix off_d = dmat;
  off_d(0, 1) = 0.2;
  CHECK_THROWS_AS(canonicalize_to_diagonal_gram(Matrix::Zero(3, 2), smat, off_d),
                  ValidationError);
  CHECK_THROWS_AS(canonicalize_to_diagonal_gram(Matrix::Zero(2, 2), smat, dmat),
                  ValidationError);

  // A stationary point whose gram is not diagonal is rejected by the
  // permutation form until the gram has been diagonalized.
  Vector s4(4), d3(3);
  s4 << 3.0, 2.2, 1.5, 0.4;
  d3 << 0.2, 0.2, 0.7;
  Matrix x0 = Matrix::Zero(4, 3);
  for (Eigen::Index i = 0; i < 3; ++i) x0(i, i) = std::sqrt(s4(i) - d3(i));
  const Matrix mixed = x0 * rotation_block(3, 0, 1, 0.7);
  CHECK_THROWS_AS(
      canonicalize_to_scaled_permutation(mixed, Matrix(s4.asDiagonal()), Matrix(d3.asDiagonal())),
      ValidationError);
}
