#include <doctest.h>

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <set>
#include <sstream>

#include "motility/error.hpp"
#include "motility/eval.hpp"
#include "motility/rng.hpp"

using namespace motility;
using namespace motility::eval;

namespace {

std::vector<std::string> make_ids(int n) {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back("p" + std::to_string(i));
  return ids;
}

double boost_two_sided(double t, double df) {
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

// Paired t statistic written out directly.
double classical_paired_t(const std::vector<double>& d) {
  double mean = 0;
  for (double x : d) mean += x;
  mean /= static_cast<double>(d.size());
  double ss = 0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(d.size() - 1));
  return mean / (sd / std::sqrt(static_cast<double>(d.size())));
}

FoldResult fold_with(int f, double avg) {
  FoldResult r;
  r.fold = f;
  r.n_train = 20;
  r.n_test = 10;
  r.video.per_target = {avg, avg, avg};
  r.video.average = avg;
  r.sample = r.video;
  return r;
}

}  // namespace

TEST_CASE("folds: 85 participants deal into 29, 28, 28") {
  const auto plan = make_folds(make_ids(85), 3, 4);
  REQUIRE(plan.folds.size() == 3);
  CHECK(plan.folds[0].size() == 29);
  CHECK(plan.folds[1].size() == 28);
  CHECK(plan.folds[2].size() == 28);
  plan.check_partition(make_ids(85));
}

TEST_CASE("folds: partition, balance and determinism over random sizes") {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(4));
    const int n = k + static_cast<int>(rng.below(60));
    const auto ids = make_ids(n);
    const auto seed = rng.below(1000);
    const auto plan = make_folds(ids, k, seed);
    CHECK(plan == make_folds(ids, k, seed));
    std::set<std::string> seen;
    std::size_t lo = ids.size(), hi = 0;
    for (const auto& f : plan.folds) {
      lo = std::min(lo, f.size());
      hi = std::max(hi, f.size());
      for (const auto& id : f) CHECK(seen.insert(id).second);
    }
    CHECK(seen.size() == ids.size());
    CHECK(hi - lo <= 1);
    for (int f = 0; f < k; ++f) {
      const auto train = plan.train_ids(f);
      const auto test = plan.test_ids(f);
      CHECK(train.size() + test.size() == ids.size());
      for (const auto& id : test) CHECK(std::find(train.begin(), train.end(), id) == train.end());
    }
  }
}

TEST_CASE("folds: three ids give singletons, too few ids fail") {
  const auto plan = make_folds(make_ids(3), 3, 0);
  for (const auto& f : plan.folds) CHECK(f.size() == 1);
  try {
    make_folds(make_ids(2), 3, 0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::TooFewParticipants);
  }
  CHECK(plan.fold_of(plan.folds[2][0]) == 2);
  CHECK_THROWS_AS(plan.fold_of("nobody"), Error);
  CHECK_THROWS_AS(plan.check_partition(make_ids(4)), Error);
}

TEST_CASE("mae: worked examples and duplication invariance") {
  const auto zero = mae({{1, 2, 3}}, {{1, 2, 3}});
  CHECK(zero.average == 0.0);
  const auto r = mae({{10, 10, 10}}, {{20, 5, 15}});
  CHECK(r.per_target[0] == doctest::Approx(10));
  CHECK(r.per_target[1] == doctest::Approx(5));
  CHECK(r.per_target[2] == doctest::Approx(5));
  CHECK(r.average == doctest::Approx(20.0 / 3.0));

  Rng rng(3);
  std::vector<Triple> p, t;
  for (int i = 0; i < 17; ++i) {
    p.push_back({rng.uniform(0, 100), rng.uniform(0, 100), rng.uniform(0, 100)});
    t.push_back({rng.uniform(0, 100), rng.uniform(0, 100), rng.uniform(0, 100)});
  }
  auto p2 = p, t2 = t;
  p2.insert(p2.end(), p.begin(), p.end());
  t2.insert(t2.end(), t.begin(), t.end());
  const auto a = mae(p, t), b = mae(p2, t2);
  for (std::size_t k = 0; k < 3; ++k) CHECK(a.per_target[k] == doctest::Approx(b.per_target[k]).epsilon(1e-12));
  CHECK_THROWS_AS(mae(p, t2), Error);
  CHECK_THROWS_AS(mae({}, {}), Error);
}

TEST_CASE("aggregation: per-video means in first-seen order") {
  const auto v = aggregate_per_video({{10, 0, 0}, {20, 0, 0}, {5, 5, 5}}, {"a", "a", "b"});
  REQUIRE(v.size() == 2);
  CHECK(v[0].id == "a");
  CHECK(v[0].value[0] == doctest::Approx(15));
  CHECK(v[0].samples == 2);
  CHECK(v[1].value == Triple{5, 5, 5});

  std::vector<Triple> same(250, Triple{1, 2, 3});
  std::vector<Triple> preds;
  std::vector<std::string> ids;
  for (int video = 0; video < 85; ++video)
    for (int s = 0; s < 250; ++s) {
      preds.push_back({1, 2, 3});
      ids.push_back("v" + std::to_string(video));
    }
  const auto agg = aggregate_per_video(preds, ids);
  CHECK(agg.size() == 85);
  for (const auto& a : agg) CHECK(a.value == Triple{1, 2, 3});
  CHECK_THROWS_AS(aggregate_per_video({{1, 2, 3}}, {"x"}, {"a", "b"}), Error);
  CHECK_THROWS_AS(aggregate_per_video({{1, 2, 3}}, {""}), Error);
}

TEST_CASE("t-test: hand-derived statistic") {
  const auto r = corrected_t_test({2, 1, 3}, 2, 1);
  CHECK(std::abs(r.t - 2.0 / std::sqrt(1.0 / 3.0 + 0.5)) < 1e-12);
  CHECK(std::abs(r.t - 2.1909) < 1e-4);
  CHECK(r.p == doctest::Approx(boost_two_sided(r.t, 2)).epsilon(1e-10));
}

TEST_CASE("t-test: zero ratio reduces to the classical paired statistic") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> d(2 + rng.below(8));
    for (auto& x : d) x = rng.normal() + 0.3;
    const auto r = corrected_t_test(d, 10, 0);
    CHECK(r.t == doctest::Approx(classical_paired_t(d)).epsilon(1e-12));
  }
}

TEST_CASE("t-test: p-values agree with Boost across t and df") {
  for (double df : {1.0, 2.0, 4.0, 9.0, 30.0}) {
    for (double t : {0.0, 0.1, 0.7, 1.5, 2.1909, 4.302653, 10.0, 50.0}) {
      INFO("t=" << t << " df=" << df);
      const double expected = boost_two_sided(t, df);
      CHECK(std::abs(student_t_two_sided(t, df) - expected) < 1e-12 + 1e-10 * expected);
      CHECK(student_t_two_sided(-t, df) == doctest::Approx(student_t_two_sided(t, df)).epsilon(1e-14));
    }
  }
  CHECK(incomplete_beta(2, 3, 0) == 0.0);
  CHECK(incomplete_beta(2, 3, 1) == 1.0);
  // I_x(1, 1) = x and I_x(a, b) = 1 - I_{1-x}(b, a).
  CHECK(incomplete_beta(1, 1, 0.37) == doctest::Approx(0.37).epsilon(1e-14));
  CHECK(incomplete_beta(2.5, 4, 0.3) == doctest::Approx(1 - incomplete_beta(4, 2.5, 0.7)).epsilon(1e-12));
}

TEST_CASE("t-test: scale invariance and the zero variance branch") {
  const std::vector<double> d{0.4, -0.1, 1.3};
  const auto base = corrected_t_test(d, 20, 10);
  for (double c : {0.01, 3.0, 1e4}) {
    std::vector<double> s;
    for (double x : d) s.push_back(c * x);
    CHECK(corrected_t_test(s, 20, 10).t == doctest::Approx(base.t).epsilon(1e-12));
  }
  const auto zero = corrected_t_test({0, 0, 0}, 2, 1);
  CHECK(zero.zero_variance);
  CHECK(zero.p == 1.0);
  const auto constant = corrected_t_test({2, 2, 2}, 2, 1);
  CHECK(constant.zero_variance);
  CHECK(std::isinf(constant.t));
  CHECK(constant.t > 0);
  CHECK(constant.p == 0.0);
  CHECK_THROWS_AS(corrected_t_test({1}, 2, 1), Error);
}

TEST_CASE("significance: p <= 0.05 with a lower MAE") {
  CHECK(significant(0.05, 9.0, 10.0));
  CHECK_FALSE(significant(std::nextafter(0.05, 1.0), 9.0, 10.0));
  CHECK_FALSE(significant(0.01, 10.0, 10.0));
  CHECK_FALSE(significant(0.01, 11.0, 10.0));
}

TEST_CASE("compare to zeror: identical methods are not significant") {
  MethodReport z{"zeror", {fold_with(0, 12), fold_with(1, 13), fold_with(2, 11)}};
  MethodReport same = z;
  same.method = "same";
  const auto v = compare_to_zeror(same, z);
  CHECK(v.test.p == 1.0);
  CHECK_FALSE(v.significant);
}

TEST_CASE("compare to zeror: verdict follows the t threshold") {
  MethodReport z{"zeror", {fold_with(0, 12), fold_with(1, 13), fold_with(2, 11)}};
  // Differences 3, 3.2, 2.8: mean 3, variance 0.04; the ratio is 10/20.
  MethodReport good{"good", {fold_with(0, 9), fold_with(1, 9.8), fold_with(2, 8.2)}};
  const auto v = compare_to_zeror(good, z);
  const double t = 3.0 / std::sqrt((1.0 / 3 + 0.5) * 0.04);
  CHECK(v.test.t == doctest::Approx(t).epsilon(1e-9));
  CHECK(v.test.p == doctest::Approx(boost_two_sided(t, 2)).epsilon(1e-9));
  CHECK(v.significant == (boost_two_sided(t, 2) <= 0.05));
  CHECK(v.significant);

  // Noisy differences 3, -1, 4 stay below the threshold.
  MethodReport noisy{"noisy", {fold_with(0, 9), fold_with(1, 14), fold_with(2, 7)}};
  const auto w = compare_to_zeror(noisy, z);
  CHECK(w.test.p > 0.05);
  CHECK_FALSE(w.significant);

  MethodReport short_report{"short", {fold_with(0, 9), fold_with(1, 9)}};
  CHECK_THROWS_AS(compare_to_zeror(short_report, z), Error);
  MethodReport other = good;
  other.folds[1].n_test = 11;
  CHECK_THROWS_AS(compare_to_zeror(other, z), Error);
}

TEST_CASE("report: csv rows recompute the average from per-fold numbers") {
  MethodReport z{"zeror", {fold_with(0, 12), fold_with(1, 13), fold_with(2, 11)}};
  z.folds[1].video.per_target = {10, 20, 9};
  z.folds[1].video.average = 13;
  MethodReport m{"dense", {fold_with(0, 9), fold_with(1, 9.8), fold_with(2, 8.2)}};
  std::ostringstream csv;
  write_report_csv(csv, {m, z});
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "method,fold,target,mae");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 2 * 4 * 4);
  double recomputed = 0;
  for (const auto& f : z.folds) recomputed += (f.video.per_target[0] + f.video.per_target[1] + f.video.per_target[2]) / 3;
  CHECK(std::abs(z.average() - recomputed / 3) < 1e-12);
  CHECK(csv.str().find("zeror,mean,average,12.000000") != std::string::npos);

  std::ostringstream table;
  write_report_table(table, {m, z});
  CHECK(table.str().find("dense") != std::string::npos);
  CHECK(table.str().find(" *") != std::string::npos);
  std::ostringstream plot;
  write_plot_csv(plot, {m, z});
  CHECK(plot.str().rfind("method,target,mae\n", 0) == 0);
}
