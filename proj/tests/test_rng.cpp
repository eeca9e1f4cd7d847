#include "crloc/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace crloc;

TEST_SUITE("rng") {

TEST_CASE("derive_seed is deterministic and collision-free over a large range") {
  std::set<uint64_t> seen;
  for (uint64_t i = 0; i < 100000; ++i) seen.insert(derive_seed(42, i));
  CHECK(seen.size() == 100000);
  CHECK(derive_seed(42, 7) == derive_seed(42, 7));
  CHECK(derive_seed(42, 7) != derive_seed(43, 7));
}

TEST_CASE("uniform stays in [0,1) and reproduces per seed") {
  Rng a(123), b(123);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(u == b.uniform());
  }
}

TEST_CASE("normal moments match a standard Gaussian") {
  Rng rng(7);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum2 += z * z;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("exponential has the requested scale") {
  Rng rng(9);
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += rng.exponential(10.0);
  CHECK(std::abs(sum / n - 10.0) < 0.15);
}

}  // TEST_SUITE
