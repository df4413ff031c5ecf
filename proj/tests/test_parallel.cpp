#include <cmath>

#include "doctest.h"
#include "support/fixtures.hpp"
#include "uprop/oracle.hpp"

using namespace uprop;
using namespace uprop::oracle;

namespace {

// A table big enough for the parallel enumeration to matter: horizon 6 over
// 4-action alphabets gives 4096 trajectories and 1365 history entries.
ProcessTable medium_table() {
  Rng rng(31415);
  ProcessTable t;
  t.horizon = 6;
  for (int step = 0; step < t.horizon; ++step) {
    t.alphabets.push_back({"a", "b", "c", "d"});
  }
  std::vector<std::string> history;
  std::function<void(int)> fill = [&](int step) {
    std::vector<double> probs(4);
    double total = 0.0;
    for (double& p : probs) {
      p = rng.uniform() + 0.05;
      total += p;
    }
    for (double& p : probs) p /= total;
    double sum = probs[0] + probs[1] + probs[2] + probs[3];
    probs[0] += 1.0 - sum;
    t.conditionals[history_key(history)] = probs;
    if (step + 1 < t.horizon) {
      for (const std::string& a : t.alphabets[step]) {
        history.push_back(a);
        fill(step + 1);
        history.pop_back();
      }
    }
  };
  fill(0);
  return t;
}

}  // namespace

TEST_SUITE("parallel") {

TEST_CASE("parallel enumeration matches the serial reference") {
  ProcessTable t = medium_table();
  validate_table(t);
  double serial = exact_total_entropy_serial(t);
  double parallel = exact_total_entropy(t);
  CHECK(parallel == doctest::Approx(serial).epsilon(1e-9));
  CHECK(serial > 0.0);
}

TEST_CASE("parallel enumeration matches serial on the worked fixture") {
  ProcessTable t = testsupport::worked_table();
  CHECK(exact_total_entropy(t) ==
        doctest::Approx(exact_total_entropy_serial(t)).epsilon(1e-12));
}

TEST_CASE("per-TDP totals are bit-identical across serial and parallel") {
  // Each TDP draws from its own derived stream, so the kernels must agree
  // exactly, not just to reduction tolerance.
  ProcessTable t = testsupport::worked_table();
  TdpTotals serial =
      per_tdp_totals_serial(t, 400, 10, 99, estimators::PmiMode::kCalibrated);
  TdpTotals parallel =
      per_tdp_totals(t, 400, 10, 99, estimators::PmiMode::kCalibrated);
  REQUIRE(serial.exact_path.size() == parallel.exact_path.size());
  for (std::size_t z = 0; z < serial.exact_path.size(); ++z) {
    CHECK(serial.exact_path[z] == parallel.exact_path[z]);
    CHECK(serial.kernel_path[z] == parallel.kernel_path[z]);
  }
}

TEST_CASE("convergence sampling is prefix-nested across grid entries") {
  ProcessTable t = testsupport::worked_table();
  TdpTotals small =
      per_tdp_totals(t, 100, 10, 5, estimators::PmiMode::kCalibrated);
  TdpTotals large =
      per_tdp_totals(t, 300, 10, 5, estimators::PmiMode::kCalibrated);
  for (std::size_t z = 0; z < small.exact_path.size(); ++z) {
    CHECK(small.exact_path[z] == large.exact_path[z]);
    CHECK(small.kernel_path[z] == large.kernel_path[z]);
  }
}

}  // TEST_SUITE
