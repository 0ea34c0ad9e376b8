#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "motility/classical.hpp"
#include "motility/error.hpp"
#include "motility/log.hpp"
#include "motility/rng.hpp"

using namespace motility;
using namespace motility::classical;

namespace {

Dataset2D make(const std::vector<std::vector<double>>& rows, const std::vector<double>& y) {
  Dataset2D d(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < d.cols; ++j) d.at(i, j) = rows[i][j];
  d.y = y;
  return d;
}

double training_mae(const Model& m, const Dataset2D& d) {
  const auto p = m.predict(d);
  double s = 0;
  for (std::size_t i = 0; i < d.rows; ++i) s += std::abs(p[i] - d.y[i]);
  return s / d.rows;
}

Dataset2D friedman(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset2D d(n, 5);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 5; ++j) d.at(i, j) = rng.uniform();
    d.y[i] = 10 * std::sin(3.141592653589793 * d.at(i, 0) * d.at(i, 1)) + 20 * std::pow(d.at(i, 2) - 0.5, 2) +
             10 * d.at(i, 3) + 5 * d.at(i, 4) + rng.normal();
  }
  return d;
}

}  // namespace

TEST_CASE("zeror predicts the training mean") {
  const auto m = fit_zeror(make({{1}, {2}}, {10, 30}));
  CHECK(m.predict(std::vector<double>{99}) == 20.0);
  CHECK(fit_zeror(make({{0}}, {50})).predict(std::vector<double>{1}) == 50.0);
  CHECK_THROWS_AS(fit_zeror(Dataset2D{}), Error);
}

TEST_CASE("simple linear regression picks the best attribute") {
  Rng rng(3);
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  for (int i = 0; i < 20; ++i) {
    const double target = rng.uniform(0, 100);
    rows.push_back({rng.uniform(0, 1), rng.uniform(0, 1), target});
    y.push_back(target);
  }
  const auto d = make(rows, y);
  const auto m = fit_simple_linear(d);
  CHECK(m.attribute == 2);
  CHECK(training_mae(m, d) == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));

  const auto line = fit_simple_linear(make({{1}, {2}, {3}}, {2, 4, 6}));
  CHECK(line.slope == doctest::Approx(2.0));
  CHECK(line.intercept == doctest::Approx(0.0).scale(1.0));

  WarningCapture capture;
  const auto flat = fit_simple_linear(make({{1}, {2}, {3}}, {7, 7, 7}));
  CHECK(flat.predict(std::vector<double>{10}) == 7.0);
  CHECK(capture.count() == 1);
}

TEST_CASE("elastic net reduces to least squares without penalty") {
  const auto d = make({{1}, {2}, {3}}, {2, 4, 6});
  const auto m = fit_elastic_net(d, {0.0, 0.5, 1000, 1e-10});
  CHECK(m.coefficients[0] == doctest::Approx(2.0));
  CHECK(m.intercept == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("elastic net shrinks to the mean under a huge penalty") {
  const auto d = friedman(50, 1);
  const auto m = fit_elastic_net(d, {1e6, 0.5});
  for (double c : m.coefficients) CHECK(c == 0.0);
  const double mean = std::accumulate(d.y.begin(), d.y.end(), 0.0) / d.rows;
  CHECK(m.predict(d.row(0)) == doctest::Approx(mean));
}

TEST_CASE("lasso soft-thresholds a weak feature to zero") {
  // z = (-1.2247, 0, 1.2247), centred y = (-0.1, 0.2, -0.1): covariance 0
  const auto d = make({{1}, {2}, {3}}, {1.0, 1.3, 1.0});
  const auto m = fit_elastic_net(d, {0.05, 1.0});
  CHECK(m.coefficients[0] == 0.0);
  // y = x: covariance (1/n) sum z y = sqrt(2/3) = 0.8165, so the cut sits there
  const auto strong = make({{1}, {2}, {3}}, {1, 2, 3});
  CHECK(fit_elastic_net(strong, {0.8, 1.0}).coefficients[0] > 0.0);
  CHECK(fit_elastic_net(strong, {0.82, 1.0}).coefficients[0] == 0.0);
}

TEST_CASE("elastic net objective never increases") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto d = friedman(40, seed);
    ElasticNetTrace trace;
    fit_elastic_net(d, {0.05, 0.3, 500, 1e-9}, &trace);
    REQUIRE(trace.objective.size() >= 2);
    for (std::size_t i = 1; i < trace.objective.size(); ++i)
      CHECK(trace.objective[i] <= trace.objective[i - 1] + 1e-12);
  }
}

TEST_CASE("elastic net warns when it runs out of sweeps") {
  WarningCapture capture;
  auto d = friedman(30, 2);
  ElasticNetTrace trace;
  fit_elastic_net(d, {1e-4, 0.5, 2, 1e-15}, &trace);
  CHECK_FALSE(trace.converged);
  CHECK(capture.count() == 1);
}

TEST_CASE("random tree basics") {
  const auto d = friedman(60, 4);
  TreeParams stump;
  stump.max_depth = 0;
  const auto leaf = fit_random_tree(d, stump);
  const double mean = std::accumulate(d.y.begin(), d.y.end(), 0.0) / d.rows;
  CHECK(leaf.predict(d.row(3)) == doctest::Approx(mean));

  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  for (int i = -10; i < 10; ++i) {
    rows.push_back({i + 0.5});
    y.push_back(i + 0.5 < 0 ? 0.0 : 10.0);
  }
  TreeParams one;
  one.max_depth = 1;
  one.feature_subsample = 1;
  CHECK(training_mae(fit_random_tree(make(rows, y), one), make(rows, y)) == 0.0);

  TreeParams p;
  p.seed = 9;
  CHECK(fit_random_tree(d, p) == fit_random_tree(d, p));
}

TEST_CASE("forest of one unbootstrapped tree is that tree") {
  const auto d = friedman(80, 5);
  ForestParams fp;
  fp.n_trees = 1;
  fp.bootstrap = false;
  fp.seed = 13;
  TreeParams tp;
  tp.seed = 13;
  const auto forest = fit_random_forest(d, fp);
  const auto tree = fit_random_tree(d, tp);
  for (std::size_t i = 0; i < d.rows; ++i) CHECK(forest.predict(d.row(i)) == tree.predict(d.row(i)));
}

TEST_CASE("forest on a constant target") {
  auto d = friedman(30, 6);
  std::fill(d.y.begin(), d.y.end(), 42.0);
  ForestParams fp;
  fp.n_trees = 10;
  CHECK(training_mae(fit_random_forest(d, fp), d) == 0.0);
}

TEST_CASE("forest fits at least as well as a single tree on average") {
  double forest_total = 0, tree_total = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto d = friedman(200, 100 + seed);
    ForestParams fp;
    fp.n_trees = 50;
    fp.seed = seed;
    TreeParams tp;
    tp.seed = seed;
    forest_total += training_mae(fit_random_forest(d, fp), d);
    tree_total += training_mae(fit_random_tree(d, tp), d);
  }
  CHECK(forest_total <= tree_total);
}

TEST_CASE("predictions ignore training row order") {
  const auto d = friedman(40, 7);
  std::vector<std::size_t> rev(d.rows);
  std::iota(rev.rbegin(), rev.rend(), std::size_t{0});
  const auto r = d.subset(rev);
  const auto probe = friedman(5, 99);
  for (std::size_t i = 0; i < probe.rows; ++i) {
    CHECK(fit_zeror(d).predict(probe.row(i)) == doctest::Approx(fit_zeror(r).predict(probe.row(i))));
    CHECK(fit_simple_linear(d).predict(probe.row(i)) ==
          doctest::Approx(fit_simple_linear(r).predict(probe.row(i))));
    CHECK(fit_elastic_net(d).predict(probe.row(i)) ==
          doctest::Approx(fit_elastic_net(r).predict(probe.row(i))).epsilon(1e-6));
  }
}

TEST_CASE("models survive serialization") {
  const auto d = friedman(50, 8);
  ForestParams fp;
  fp.n_trees = 5;
  for (const Model& m : {fit_zeror(d), fit_simple_linear(d), fit_elastic_net(d), fit_random_tree(d),
                         fit_random_forest(d, fp)}) {
    std::stringstream buf;
    m.save(buf);
    CHECK(Model::load(buf) == m);
  }
  std::stringstream junk("MCM2garbage");
  CHECK_THROWS_AS(Model::load(junk), Error);
}

TEST_CASE("non-finite features are rejected") {
  auto d = friedman(10, 1);
  d.at(3, 2) = std::nan("");
  CHECK_THROWS_AS(fit_zeror(d), Error);
}
