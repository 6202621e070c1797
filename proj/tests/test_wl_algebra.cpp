// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The starris Authors

#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "oracles.hpp"
#include "starris/wl_algebra.hpp"

using namespace starris;
using starris::testing::random_complex;
using starris::testing::random_real;

namespace {
const cdouble I{0.0, 1.0};
}

TEST_CASE("real_decompose small cases") {
  ComplexMatrix one(1, 1);
  one(0, 0) = 1.0;
  CHECK(real_decompose(one).isApprox(RealMatrix::Identity(2, 2)));

  ComplexMatrix j(1, 1);
  j(0, 0) = I;
  RealMatrix rot(2, 2);
  rot << 0, -1, 1, 0;
  CHECK((real_decompose(j) - rot).norm() == 0.0);
}

TEST_CASE("real_decompose is a ring homomorphism") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const ComplexMatrix a = random_complex(rng, 2, 3);
    const ComplexMatrix a2 = random_complex(rng, 2, 3);
    const ComplexMatrix b = random_complex(rng, 3, 2);
    CHECK((real_decompose(a * b) - real_decompose(a) * real_decompose(b)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((real_decompose(a + a2) - real_decompose(a) - real_decompose(a2)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("det of the real form is |det|^2") {
  std::mt19937_64 rng(12);
  for (int n = 1; n <= 5; ++n) {
    const ComplexMatrix a = random_complex(rng, n, n);
    const double expected = std::norm(a.determinant());
    CHECK(real_decompose(a).determinant() == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("wl_real_decompose small cases") {
  CHECK(wl_real_decompose(WidelyLinearMap::identity(3)).isApprox(RealMatrix::Identity(6, 6)));

  WidelyLinearMap conj{ComplexMatrix::Zero(1, 1), ComplexMatrix::Ones(1, 1)};
  RealMatrix expected(2, 2);
  expected << 1, 0, 0, -1;
  CHECK((wl_real_decompose(conj) - expected).norm() == 0.0);

  WidelyLinearMap bad{ComplexMatrix::Zero(2, 2), ComplexMatrix::Zero(2, 3)};
  CHECK_THROWS_AS(wl_real_decompose(bad), DimensionMismatch);
}

TEST_CASE("wl_real_decompose matches complex evaluation") {
  std::mt19937_64 rng(13);
  const WidelyLinearMap scalar{random_complex(rng, 1, 1), random_complex(rng, 1, 1)};
  const WidelyLinearMap wide{random_complex(rng, 3, 2), random_complex(rng, 3, 2)};
  for (const auto* w : {&scalar, &wide}) {
    const RealMatrix r = wl_real_decompose(*w);
    for (int rep = 0; rep < 100; ++rep) {
      const ComplexVector x = random_complex(rng, w->cols(), 1);
      const ComplexVector y = testing::widely_linear(w->gamma1, w->gamma2, x);
      CHECK((r * real_stack(x) - testing::stack(y)).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("composition rule of widely-linear maps") {
  std::mt19937_64 rng(14);
  for (int rep = 0; rep < 20; ++rep) {
    const WidelyLinearMap outer{random_complex(rng, 2, 3), random_complex(rng, 2, 3)};
    const WidelyLinearMap inner{random_complex(rng, 3, 4), random_complex(rng, 3, 4)};
    const WidelyLinearMap c = compose(outer, inner);
    // closed form: (G1 L1 + G2 conj(L2), G1 L2 + G2 conj(L1))
    CHECK((c.gamma1 - (outer.gamma1 * inner.gamma1 + outer.gamma2 * inner.gamma2.conjugate())).norm() <= 1e-12);
    CHECK((wl_real_decompose(c) - wl_real_decompose(outer) * wl_real_decompose(inner)).cwiseAbs().maxCoeff() <=
          1e-12);
    const ComplexVector x = random_complex(rng, 4, 1);
    CHECK((c.apply(x) - outer.apply(inner.apply(x))).norm() <= 1e-12);
  }
  const WidelyLinearMap a{random_complex(rng, 2, 3), random_complex(rng, 2, 3)};
  CHECK_THROWS_AS(compose(a, a), DimensionMismatch);
}

TEST_CASE("stack and unstack round trip") {
  std::mt19937_64 rng(15);
  const ComplexVector x = random_complex(rng, 5, 1);
  CHECK((complex_unstack(real_stack(x)) - x).norm() == 0.0);
}

TEST_CASE("logdet2") {
  CHECK(logdet2(RealMatrix::Identity(2, 2)) == 0.0);
  CHECK(logdet2(RealMatrix::Constant(1, 1, 4.0)) == doctest::Approx(2.0).epsilon(1e-15));

  std::mt19937_64 rng(16);
  for (int rep = 0; rep < 10; ++rep) {
    const RealMatrix a = random_real(rng, 6, 6);
    const RealMatrix s = a * a.transpose() + 0.1 * RealMatrix::Identity(6, 6);
    const RealVector ev = Eigen::SelfAdjointEigenSolver<RealMatrix>(s).eigenvalues();
    double expected = 0.0;
    for (double v : ev) expected += std::log2(v);
    CHECK(std::abs(logdet2(s) - expected) <= 1e-9);
    // determinant oracle from a partial-pivot LU
    CHECK(std::abs(logdet2(s) - std::log2(s.partialPivLu().determinant())) <= 1e-9);
  }

  CHECK_THROWS_AS(logdet2(RealMatrix::Zero(3, 3)), NonPositiveDefinite);
  CHECK_THROWS_AS(logdet2(-RealMatrix::Identity(3, 3)), NonPositiveDefinite);
}

TEST_CASE("logdet2 of A A^T + I is finite") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 1 + rep % 7;
    const RealMatrix a = random_real(rng, n, n + 2) * std::pow(10.0, rep % 9 - 4);
    CHECK(std::isfinite(logdet2(a * a.transpose() + RealMatrix::Identity(n, n))));
  }
}

TEST_CASE("eigen floor on a singular matrix") {
  RealMatrix s = RealMatrix::Zero(3, 3);
  s(0, 0) = 3.0;
  const double floor = 1e-12 * 3.0 / 3.0;
  CHECK(logdet2(s) == doctest::Approx(std::log2(3.0) + 2.0 * std::log2(floor)));
}

TEST_CASE("solve_psd") {
  std::mt19937_64 rng(18);
  const RealMatrix b = random_real(rng, 4, 3);
  CHECK((solve_psd(RealMatrix::Identity(4, 4), b) - b).norm() <= 1e-15);

  const RealMatrix two = 2.0 * RealMatrix::Identity(2, 2);
  CHECK(solve_psd(two, RealMatrix::Identity(2, 2)).isApprox(0.5 * RealMatrix::Identity(2, 2)));

  for (int rep = 0; rep < 10; ++rep) {
    const RealMatrix a = random_real(rng, 8, 8);
    const RealMatrix s = a * a.transpose() + 1e-3 * RealMatrix::Identity(8, 8);
    const RealMatrix rhs = random_real(rng, 8, 5);
    const RealMatrix x = solve_psd(s, rhs);
    CHECK((s * x - rhs).norm() / rhs.norm() <= 1e-9);
  }
  CHECK_THROWS_AS(solve_psd(RealMatrix::Zero(2, 2), b.topRows(2)), NonPositiveDefinite);
}

TEST_CASE("psd_sqrt clamps negative eigenvalues") {
  std::mt19937_64 rng(19);
  const RealMatrix a = random_real(rng, 5, 5);
  const RealMatrix s = a * a.transpose();
  const RealMatrix r = psd_sqrt(s);
  CHECK((r * r - s).norm() <= 1e-10 * s.norm());
  CHECK((r - r.transpose()).norm() <= 1e-14 * r.norm());

  RealMatrix d = RealMatrix::Zero(2, 2);
  d(0, 0) = 4.0;
  d(1, 1) = -1.0;
  const RealMatrix rd = psd_sqrt(d);
  CHECK(rd(0, 0) == doctest::Approx(2.0));
  CHECK(std::abs(rd(1, 1)) <= 1e-15);
}

TEST_CASE("is_psd") {
  CHECK(is_psd(RealMatrix::Identity(3, 3)));
  CHECK(is_psd(RealMatrix::Zero(3, 3)));
  RealMatrix s = RealMatrix::Identity(2, 2);
  s(1, 1) = -1e-12;
  CHECK(is_psd(s));
  s(1, 1) = -1e-6;
  CHECK_FALSE(is_psd(s));
  RealMatrix asym = RealMatrix::Identity(2, 2);
  asym(0, 1) = 0.5;
  CHECK_FALSE(is_psd(asym));
}
