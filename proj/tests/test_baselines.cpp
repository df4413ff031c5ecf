#include <cmath>

#include "doctest.h"
#include "support/fixtures.hpp"
#include "uprop/baselines.hpp"

using namespace uprop;
using namespace uprop::baselines;
using testsupport::make_decision;
using testsupport::make_step;
using testsupport::make_tdp;

TEST_SUITE("baselines") {

TEST_CASE("identical actions form one cluster") {
  StepRecord step = make_step({make_decision("Search[A]", -1.0),
                               make_decision("Search[A]", -1.0),
                               make_decision("Search[A]", -1.0)},
                              0);
  ClusterPartition p = cluster_samples(step, 0.7);
  REQUIRE(p.clusters.size() == 1);
  CHECK(p.clusters[0].size() == 3);
}

TEST_CASE("greedy clustering splits distant actions") {
  StepRecord step = make_step({make_decision("Search[A]", -1.0),
                               make_decision("Search[A]", -1.0),
                               make_decision("Finish[B]", -1.0)},
                              0);
  ClusterPartition p = cluster_samples(step, 0.7);
  REQUIRE(p.clusters.size() == 2);
  CHECK(p.clusters[0] == std::vector<std::size_t>{0, 1});
  CHECK(p.clusters[1] == std::vector<std::size_t>{2});
}

TEST_CASE("a single sample is a singleton cluster") {
  StepRecord step = make_step({make_decision("x", -1.0)}, 0);
  ClusterPartition p = cluster_samples(step, 0.7);
  REQUIRE(p.clusters.size() == 1);
  CHECK(p.clusters[0] == std::vector<std::size_t>{0});
}

TEST_CASE("PE matches the intrinsic arithmetic") {
  StepRecord step =
      make_step({make_decision("a", -1.0), make_decision("a", -3.0)}, 0);
  CHECK(baseline_step(Method::kPe, step, 0.7) ==
        doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("SE on the worked cluster fixture") {
  // probs e^-1, e^-1, e^-2; clusters {0,1} and {2}
  StepRecord step = make_step({make_decision("Search[A]", -1.0),
                               make_decision("Search[A]", -1.0),
                               make_decision("Finish[B]", -2.0)},
                              0);
  double expected = -(std::log(2.0 * std::exp(-1.0)) + std::log(std::exp(-2.0))) / 2.0;
  CHECK(expected == doctest::Approx(1.15343).epsilon(1e-5));
  CHECK(baseline_step(Method::kSe, step, 0.7) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("SE probabilities are clamped into (0, 1]") {
  // Duplicated certain samples would push the cluster probability past 1.
  StepRecord step =
      make_step({make_decision("a", 0.0), make_decision("a", 0.0)}, 0);
  CHECK(baseline_step(Method::kSe, step, 0.7) == 0.0);
}

TEST_CASE("LS is zero on identical actions") {
  StepRecord step = make_step({make_decision("Search[A]", -1.0),
                               make_decision("Search[A]", -2.0),
                               make_decision("Search[A]", -3.0)},
                              0);
  CHECK(baseline_step(Method::kLs, step, 0.7) == 0.0);
}

TEST_CASE("PPL is the mean per-token perplexity") {
  StepRecord step = make_step(
      {make_decision("a", -2.0, 2), make_decision("b", -3.0, 3)}, 0);
  double expected = (std::exp(1.0) + std::exp(1.0)) / 2.0;
  CHECK(baseline_step(Method::kPpl, step, 0.7) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("aggregation worked values") {
  double v[] = {1.0, 2.0, 3.0};
  CHECK(aggregate_tdp(v, Aggregation::kAvg) ==
        doctest::Approx(2.0).epsilon(1e-12));
  CHECK(aggregate_tdp(v, Aggregation::kRms) ==
        doctest::Approx(std::sqrt(14.0 / 3.0)).epsilon(1e-12));
  double c[] = {0.7, 0.7, 0.7};
  CHECK(aggregate_tdp(c, Aggregation::kAvg) ==
        doctest::Approx(aggregate_tdp(c, Aggregation::kRms)).epsilon(1e-12));
}

TEST_CASE("AVG never exceeds RMS") {
  Rng rng(404);
  for (int iter = 0; iter < 300; ++iter) {
    std::size_t n = 1 + rng.uniform_index(8);
    std::vector<double> v(n);
    for (double& x : v) x = 5.0 * rng.uniform();
    CHECK(aggregate_tdp(v, Aggregation::kAvg) <=
          aggregate_tdp(v, Aggregation::kRms) + 1e-12);
  }
}

TEST_CASE("SE with singleton clusters degenerates to PE") {
  // Distant actions put every sample in its own cluster.
  StepRecord step = make_step({make_decision("aaaaaaaa", -1.0),
                               make_decision("bbbbbbbb", -2.0),
                               make_decision("cccccccc", -0.5)},
                              0);
  ClusterPartition p = cluster_samples(step, 0.99);
  REQUIRE(p.clusters.size() == 3);
  CHECK(baseline_step(Method::kSe, step, 0.99) ==
        doctest::Approx(baseline_step(Method::kPe, step, 0.99))
            .epsilon(1e-12));
}

TEST_CASE("ranges: DEG, LS, SD in [0,1]; entropies nonnegative; PPL >= 1") {
  Rng rng(808);
  for (int iter = 0; iter < 200; ++iter) {
    int n = 2 + static_cast<int>(rng.uniform_index(6));
    std::vector<Decision> samples;
    for (int i = 0; i < n; ++i) {
      samples.push_back(testsupport::random_decision(rng));
    }
    StepRecord step =
        make_step(std::move(samples),
                  static_cast<int>(rng.uniform_index(n)));
    for (Method m : {Method::kDeg, Method::kLs, Method::kSd}) {
      double v = baseline_step(m, step, 0.7);
      CHECK(v >= -1e-12);
      CHECK(v <= 1.0 + 1e-12);
    }
    CHECK(baseline_step(Method::kPe, step, 0.7) >= 0.0);
    CHECK(baseline_step(Method::kSe, step, 0.7) >= 0.0);
    CHECK(baseline_step(Method::kSentSar, step, 0.7) >= 0.0);
    CHECK(baseline_step(Method::kPpl, step, 0.7) >= 1.0);
  }
}

TEST_CASE("pairwise methods reject a single sample") {
  StepRecord step = make_step({make_decision("a", -1.0)}, 0);
  for (Method m : {Method::kLs, Method::kDeg, Method::kSd, Method::kSentSar}) {
    CHECK_THROWS_AS(baseline_step(m, step, 0.7), InputError);
  }
  CHECK_NOTHROW(baseline_step(Method::kPe, step, 0.7));
  CHECK_NOTHROW(baseline_step(Method::kSe, step, 0.7));
  CHECK_NOTHROW(baseline_step(Method::kPpl, step, 0.7));
}

TEST_CASE("task value is the mean of per-TDP aggregates") {
  TaskRecord task;
  task.task_id = "t";
  task.tdps.push_back(make_tdp({make_step(
      {make_decision("a", -1.0), make_decision("a", -1.0)}, 0)}));
  task.tdps.push_back(make_tdp({make_step(
      {make_decision("a", -3.0), make_decision("a", -3.0)}, 0)}));
  // Single-step TDPs: aggregates are the step PE values 1 and 3.
  CHECK(baseline_task(task, Method::kPe, Aggregation::kAvg, 0.7) ==
        doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("one TDP, one step: task value is the step value") {
  TaskRecord task;
  task.task_id = "t";
  StepRecord step =
      make_step({make_decision("a", -1.2), make_decision("a", -1.2)}, 0);
  task.tdps.push_back(make_tdp({step}));
  CHECK(baseline_task(task, Method::kPe, Aggregation::kRms, 0.7) ==
        doctest::Approx(baseline_step(Method::kPe, step, 0.7))
            .epsilon(1e-12));
}

TEST_CASE("method and aggregation names round-trip") {
  for (Method m : {Method::kPpl, Method::kLs, Method::kPe, Method::kSe,
                   Method::kDeg, Method::kSd, Method::kSentSar}) {
    Method parsed;
    REQUIRE(parse_method(method_name(m), parsed));
    CHECK(parsed == m);
  }
  Aggregation agg;
  CHECK(parse_aggregation("avg", agg));
  Method unused;
  CHECK(!parse_method("nope", unused));
}

}  // TEST_SUITE
