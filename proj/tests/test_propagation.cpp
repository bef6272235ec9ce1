#include <doctest.h>

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "oracles.hpp"
#include "spic/propagation.hpp"

using namespace spic;

namespace {

struct Instance {
  Graph graph;
  oracle::Dense a;
};

Instance random_instance(Rng& rng, std::int64_t n, std::int64_t d = 4) {
  const auto edges = oracle::random_connected_edges(n, n, rng);
  return {oracle::make_graph(n, edges, d, 2, rng), oracle::adjacency(n, edges)};
}

Matrix random_matrix(std::int64_t r, std::int64_t c, Rng& rng) {
  Matrix m(r, c);
  for (std::int64_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
  return m;
}

}  // namespace

TEST_CASE("k = 0 returns the input unchanged") {
  Rng rng(1);
  const auto inst = random_instance(rng, 15);
  const Embedding e = propagate(build_dad(inst.graph), inst.graph.features(), 0, false);
  CHECK(e.values == inst.graph.features());
  CHECK(e.k == 0);
}

TEST_CASE("identity aggregator is a fixed point up to the shift") {
  Rng rng(2);
  const Matrix x = random_matrix(10, 3, rng);
  CHECK(propagate(build_identity(10), x, 7, false).values == x);
  const Matrix y = propagate(build_identity(10).with_shift(1), x, 3, false).values;
  CHECK((y - 8.0 * x).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("sparse propagation matches dense powers") {
  Rng rng(5);
  for (int t = 0; t < 10; ++t) {
    const auto n = 5 + static_cast<std::int64_t>(rng.below(60));
    const auto inst = random_instance(rng, n);
    const Matrix& x = inst.graph.features();
    for (int beta : {0, 1}) {
      for (int k : {1, 2, 5}) {
        const auto dad = build_dad(inst.graph).with_shift(beta);
        const auto da = build_da(inst.graph).with_shift(beta);
        const oracle::Dense want_dad = oracle::dense_power_apply(oracle::dense_dad(inst.a), beta, k, x);
        const oracle::Dense want_da = oracle::dense_power_apply(oracle::dense_da(inst.a), beta, k, x);
        CHECK(oracle::relative_frobenius(propagate(dad, x, k, false).values, want_dad) <= 1e-12);
        CHECK(oracle::relative_frobenius(propagate(da, x, k, false).values, want_da) <= 1e-12);
      }
    }
  }
}

TEST_CASE("shift consistency: (I + M) x = x + M x") {
  Rng rng(9);
  const auto inst = random_instance(rng, 30);
  const Matrix& x = inst.graph.features();
  const auto agg = build_dad(inst.graph);
  const Matrix mx = propagate(agg, x, 1, false).values;
  const Matrix shifted = propagate(agg.with_shift(1), x, 1, false).values;
  CHECK((shifted - (x + mx)).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("propagation is linear in the input") {
  Rng rng(10);
  const auto inst = random_instance(rng, 25);
  const auto agg = build_da(inst.graph).with_shift(1);
  const Matrix x = random_matrix(25, 3, rng), y = random_matrix(25, 3, rng);
  const double a = 0.7, b = -1.3;
  const Matrix lhs = propagate(agg, a * x + b * y, 4, false).values;
  const Matrix rhs = a * propagate(agg, x, 4, false).values + b * propagate(agg, y, 4, false).values;
  CHECK(oracle::relative_frobenius(lhs, rhs) <= 1e-12);
}

TEST_CASE("normalization keeps column directions") {
  Rng rng(11);
  const auto inst = random_instance(rng, 30);
  const auto agg = build_dad(inst.graph).with_shift(1);
  const Matrix& x = inst.graph.features();
  const Embedding raw = propagate(agg, x, 6, false);
  const Embedding norm = propagate(agg, x, 6, true);
  CHECK(norm.normalized);
  for (std::int64_t c = 0; c < x.cols(); ++c) {
    const double cosine = raw.values.col(c).dot(norm.values.col(c)) / (raw.values.col(c).norm() * norm.values.col(c).norm());
    CHECK(cosine == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(norm.values.col(c).cwiseAbs().maxCoeff() == doctest::Approx(1.0));
  }
  CHECK_FALSE(default_normalize(5));
  CHECK(default_normalize(6));
}

TEST_CASE("unnormalized overflow is reported") {
  Matrix x = Matrix::Constant(3, 1, 1e300);
  const auto agg = build_identity(3).with_shift(1);
  CHECK_THROWS_WITH_AS(propagate(agg, x, 40, false), doctest::Contains("non-finite"), Error);
  CHECK_NOTHROW(propagate(agg, x, 40, true));
}

TEST_CASE("APPNP closed forms") {
  Rng rng(12);
  const auto inst = random_instance(rng, 20);
  const Matrix& x = inst.graph.features();
  const auto agg = build_dad(inst.graph);
  const oracle::Dense s = oracle::dense_dad(inst.a);
  const double alpha = 0.1;

  const Matrix one = appnp_propagate(agg, x, alpha, 1).values;
  CHECK(oracle::relative_frobenius(one, (1 - alpha) * s * x + alpha * x) <= 1e-12);

  const oracle::Dense three = alpha * x + alpha * (1 - alpha) * s * x + alpha * std::pow(1 - alpha, 2) * s * s * x +
                              std::pow(1 - alpha, 3) * s * s * s * x;
  CHECK(oracle::relative_frobenius(appnp_propagate(agg, x, alpha, 3).values, three) <= 1e-12);

  const Matrix near_one = appnp_propagate(agg, x, 0.999, 10).values;
  CHECK(oracle::relative_frobenius(near_one, x) <= 5e-3);
}

TEST_CASE("APPNP rejects alpha outside (0,1)") {
  const auto agg = build_identity(3);
  const Matrix x = Matrix::Ones(3, 1);
  for (double alpha : {0.0, 1.0, 1.5, -0.1})
    CHECK_THROWS_WITH_AS(appnp_propagate(agg, x, alpha, 5), "alpha must be in (0,1)", Error);
}

TEST_CASE("polynomial propagation") {
  Rng rng(13);
  const auto inst = random_instance(rng, 18);
  const Matrix& x = inst.graph.features();
  const auto agg = build_da(inst.graph).with_shift(1);

  const std::vector<double> just_x{1.0};
  CHECK(polynomial_propagate(agg, x, just_x).values == x);
  const std::vector<double> just_s{0.0, 1.0};
  CHECK((polynomial_propagate(agg, x, just_s).values - propagate(agg, x, 1, false).values).cwiseAbs().maxCoeff() <=
        1e-14);

  const std::vector<double> theta{0.3, -0.2, 0.5, 0.1};
  const oracle::Dense s = agg.dense_operator();
  const oracle::Dense want = 0.3 * x + -0.2 * s * x + 0.5 * s * s * x + 0.1 * s * s * s * x;
  CHECK(oracle::relative_frobenius(polynomial_propagate(agg, x, theta).values, want) <= 1e-12);
}

TEST_CASE("APPNP equals the polynomial with its closed-form coefficients") {
  Rng rng(14);
  for (int t = 0; t < 5; ++t) {
    const auto inst = random_instance(rng, 10 + static_cast<std::int64_t>(rng.below(40)));
    const Matrix& x = inst.graph.features();
    const auto agg = build_dad(inst.graph);
    for (int iters : {1, 4, 10}) {
      const auto theta = appnp_coefficients(0.15, iters);
      CHECK(oracle::relative_frobenius(appnp_propagate(agg, x, 0.15, iters).values,
                                       polynomial_propagate(agg, x, theta).values) <= 1e-10);
    }
  }
  const auto theta = appnp_coefficients(0.2, 8);
  double sum = 0.0;
  for (double v : theta) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("spectral oracle") {
  SUBCASE("identity") {
    const auto spec = spectral_oracle(build_identity(4));
    for (std::int64_t i = 0; i < 4; ++i) CHECK(spec.eigenvalues[i] == doctest::Approx(1.0));
    CHECK(spec.spectral_gap() == doctest::Approx(1.0));
  }
  SUBCASE("triangle DAD has spectrum {1, 0, 0}") {
    Labels l;
    l.num_classes = 1;
    l.single.assign(3, 0);
    const Graph g(symmetric_adjacency(3, oracle::Edges{{0, 1}, {1, 2}, {0, 2}}), Matrix::Ones(3, 1), l,
                  std::vector<Role>(3, Role::Train));
    const auto spec = spectral_oracle(build_dad(g));
    CHECK(spec.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(spec.eigenvalues[1]) <= 1e-12);
    CHECK(std::abs(spec.eigenvalues[2]) <= 1e-12);
    CHECK(std::abs(spec.eigenvectors.col(0).sum()) == doctest::Approx(std::sqrt(3.0)));
  }
  SUBCASE("reconstruction and coefficients on random symmetric operators") {
    Rng rng(15);
    for (int t = 0; t < 5; ++t) {
      const auto inst = random_instance(rng, 10 + static_cast<std::int64_t>(rng.below(50)));
      const auto agg = build_dad(inst.graph).with_shift(1);
      Vector v0(agg.size());
      for (auto& v : v0) v = rng.uniform(-1, 1);
      const auto spec = spectral_oracle(agg, v0);
      const oracle::Dense rebuilt =
          spec.eigenvectors * spec.eigenvalues.asDiagonal() * spec.eigenvectors.transpose();
      CHECK(oracle::relative_frobenius(rebuilt, agg.dense_operator()) <= 1e-10);
      CHECK((spec.eigenvectors * spec.coefficients - v0).norm() <= 1e-10);
      for (std::int64_t i = 1; i < spec.eigenvalues.size(); ++i)
        CHECK(std::abs(spec.eigenvalues[i - 1]) >= std::abs(spec.eigenvalues[i]));
      // shifted spectrum sits in (0, 2]
      CHECK(spec.eigenvalues[0] == doctest::Approx(2.0).epsilon(1e-10));
      CHECK(spec.eigenvalues.minCoeff() > 0.0);
    }
  }
  SUBCASE("asymmetric DA is accepted and has real spectrum") {
    Rng rng(16);
    const auto inst = random_instance(rng, 20);
    const auto spec = spectral_oracle(build_da(inst.graph));
    CHECK(spec.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK_FALSE(spec.symmetric);
  }
  SUBCASE("size limit") {
    CHECK_THROWS_AS(spectral_oracle(build_identity(50), std::nullopt, 20), Error);
  }
}

TEST_CASE("convergence report") {
  Rng rng(17);
  const auto inst = random_instance(rng, 40);
  const auto agg = build_dad(inst.graph).with_shift(1);
  const auto spec = spectral_oracle(agg);

  SUBCASE("starting at the dominant eigenvector gives similarity 1 throughout") {
    const Vector x1 = spec.eigenvectors.col(0);
    for (double s : convergence_report(agg, spec, x1, 10)) CHECK(s == doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("similarity increases towards 1 from a random start") {
    Vector v0(agg.size());
    for (auto& v : v0) v = rng.uniform(0.0, 1.0);
    const auto sims = convergence_report(agg, v0, 200);
    REQUIRE(sims.size() == 201);
    for (std::size_t k = 1; k < sims.size(); ++k) CHECK(sims[k] >= sims[k - 1] - 1e-12);
    CHECK(sims.back() == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("a start orthogonal to the dominant eigenvector is rejected") {
    const Vector v0 = spec.eigenvectors.col(1);
    CHECK_THROWS_WITH_AS(convergence_report(agg, spec, v0, 5), doctest::Contains("orthogonal"), Error);
  }
}

#ifdef _OPENMP
TEST_CASE("results do not depend on the thread count") {
  Rng rng(18);
  const auto inst = random_instance(rng, 3000, 16);
  const auto agg = build_da(inst.graph).with_shift(1);
  const int before = omp_get_max_threads();
  omp_set_num_threads(1);
  const Matrix one = propagate(agg, inst.graph.features(), 8, true).values;
  omp_set_num_threads(4);
  const Matrix four = propagate(agg, inst.graph.features(), 8, true).values;
  omp_set_num_threads(before);
  CHECK(one == four);
}
#endif
