#include <cmath>
#include <numbers>

#include "doctest.h"
#include "support/fixtures.hpp"
#include "uprop/textdist.hpp"

using namespace uprop;
using namespace uprop::textdist;

TEST_SUITE("textdist") {

TEST_CASE("identical strings have zero distance") {
  CHECK(decision_distance("answer(220)", "answer(220)") == 0.0);
  CHECK(decision_distance("", "") == 0.0);
}

TEST_CASE("empty vs non-empty is maximal") {
  CHECK(decision_distance("", "abc") == 1.0);
  CHECK(decision_distance("abc", "") == 1.0);
}

TEST_CASE("worked normalized distance") {
  // lev("ls /etc", "ls /usr") = 3 substitutions over max length 7
  CHECK(levenshtein("ls /etc", "ls /usr") == 3);
  CHECK(decision_distance("ls /etc", "ls /usr") ==
        doctest::Approx(3.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("surrounding whitespace is trimmed, case is preserved") {
  CHECK(decision_distance("  ls /etc \n", "ls /etc") == 0.0);
  CHECK(decision_distance("LS", "ls") == 1.0);
}

TEST_CASE("unicode scalars count as single symbols") {
  // two-byte UTF-8 scalars; one substitution over length two
  CHECK(levenshtein("\xc3\xa9\xc3\xa8", "\xc3\xa9\xc3\xa9") == 1);
  CHECK(decision_distance("\xc3\xa9\xc3\xa8", "\xc3\xa9\xc3\xa9") ==
        doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("levenshtein matches the full-matrix reference") {
  Rng rng(20240551);
  const char* alphabet = "abcd []/";
  for (int iter = 0; iter < 400; ++iter) {
    std::string a, b;
    for (std::size_t i = rng.uniform_index(12); i-- > 0;) {
      a += alphabet[rng.uniform_index(8)];
    }
    for (std::size_t i = rng.uniform_index(12); i-- > 0;) {
      b += alphabet[rng.uniform_index(8)];
    }
    CHECK(levenshtein(a, b) == testsupport::levenshtein_reference(a, b));
  }
}

TEST_CASE("distance is symmetric, bounded, and zero on the diagonal") {
  Rng rng(7);
  for (int iter = 0; iter < 300; ++iter) {
    std::string a = testsupport::random_action(rng);
    std::string b = testsupport::random_action(rng);
    double dab = decision_distance(a, b);
    double dba = decision_distance(b, a);
    CHECK(dab == dba);
    CHECK(dab >= 0.0);
    CHECK(dab <= 1.0);
    CHECK(decision_distance(a, a) == 0.0);
  }
}

TEST_CASE("kernel closed forms") {
  CHECK(gaussian_kernel(0.0, 1) ==
        doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi))
            .epsilon(1e-12));
  CHECK(gaussian_kernel(0.0, 10) ==
        doctest::Approx(std::pow(2.0 * std::numbers::pi, -5.0))
            .epsilon(1e-12));
  CHECK(gaussian_kernel(1.0, 2) ==
        doctest::Approx(std::exp(-1.0) / (2.0 * std::numbers::pi))
            .epsilon(1e-12));
}

TEST_CASE("kernel rejects tau = 0") {
  CHECK_THROWS_AS(gaussian_kernel(0.5, 0), InputError);
}

TEST_CASE("kernel power identity and strict monotonicity") {
  Rng rng(99);
  for (int tau = 1; tau <= 20; ++tau) {
    for (int iter = 0; iter < 20; ++iter) {
      double x = 2.0 * rng.uniform();
      CHECK(gaussian_kernel(x, tau) ==
            doctest::Approx(std::pow(gaussian_kernel(x, 1), tau))
                .epsilon(1e-12));
    }
  }
  for (int iter = 0; iter < 200; ++iter) {
    double x1 = rng.uniform();
    double x2 = x1 + 1e-6 + rng.uniform();
    int tau = 1 + static_cast<int>(rng.uniform_index(15));
    CHECK(gaussian_kernel(x1, tau) > gaussian_kernel(x2, tau));
  }
}

}  // TEST_SUITE
