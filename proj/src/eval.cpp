#include "motility/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "motility/dataio.hpp"
#include "motility/error.hpp"
#include "motility/rng.hpp"

namespace motility::eval {

int FoldPlan::fold_of(const std::string& id) const {
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (std::find(folds[f].begin(), folds[f].end(), id) != folds[f].end()) return static_cast<int>(f);
  }
  throw Error(Errc::UnknownId, "participant " + id + " is in no fold");
}

std::vector<std::string> FoldPlan::train_ids(int fold) const {
  std::vector<std::string> out;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (static_cast<int>(f) == fold) continue;
    out.insert(out.end(), folds[f].begin(), folds[f].end());
  }
  return out;
}

void FoldPlan::check_partition(const std::vector<std::string>& ids) const {
  std::multiset<std::string> in_folds;
  for (const auto& f : folds) in_folds.insert(f.begin(), f.end());
  const std::multiset<std::string> expected(ids.begin(), ids.end());
  if (in_folds != expected) throw Error(Errc::FoldPlanMismatch, "folds do not partition the participant set");
}

FoldPlan make_folds(const std::vector<std::string>& ids, int k, std::uint64_t seed) {
  if (k < 2) throw Error(Errc::Usage, "fold count must be at least 2");
  if (ids.size() < static_cast<std::size_t>(k)) {
    throw Error(Errc::TooFewParticipants,
                std::to_string(ids.size()) + " participants cannot fill " + std::to_string(k) + " folds");
  }
  if (std::set<std::string>(ids.begin(), ids.end()).size() != ids.size()) {
    throw Error(Errc::BadFormat, "duplicate participant ids");
  }
  std::vector<std::string> order = ids;
  Rng rng(seed);
  rng.shuffle(std::span<std::string>(order));
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.folds.resize(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < order.size(); ++i) plan.folds[i % static_cast<std::size_t>(k)].push_back(order[i]);
  return plan;
}

MaeResult mae(const std::vector<Triple>& pred, const std::vector<Triple>& truth) {
  if (pred.size() != truth.size() || pred.empty()) {
    throw Error(Errc::ShapeMismatch, "mae over " + std::to_string(pred.size()) + " predictions and " +
                                         std::to_string(truth.size()) + " targets");
  }
  MaeResult r;
  for (std::size_t i = 0; i < pred.size(); ++i)
    for (std::size_t k = 0; k < 3; ++k) r.per_target[k] += std::abs(pred[i][k] - truth[i][k]);
  for (double& v : r.per_target) v /= static_cast<double>(pred.size());
  r.average = (r.per_target[0] + r.per_target[1] + r.per_target[2]) / 3.0;
  return r;
}

std::vector<VideoPrediction> aggregate_per_video(const std::vector<Triple>& predictions,
                                                 const std::vector<std::string>& ids) {
  if (predictions.size() != ids.size()) {
    throw Error(Errc::ShapeMismatch, std::to_string(predictions.size()) + " predictions for " +
                                         std::to_string(ids.size()) + " ids");
  }
  std::vector<VideoPrediction> out;
  std::unordered_map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i].empty()) throw Error(Errc::UnknownId, "sample " + std::to_string(i) + " has no participant id");
    auto [it, fresh] = slot.try_emplace(ids[i], out.size());
    if (fresh) out.push_back({ids[i], {}, 0});
    auto& v = out[it->second];
    for (std::size_t k = 0; k < 3; ++k) v.value[k] += predictions[i][k];
    ++v.samples;
  }
  for (auto& v : out)
    for (double& x : v.value) x /= v.samples;
  return out;
}

std::vector<VideoPrediction> aggregate_per_video(const std::vector<Triple>& predictions,
                                                 const std::vector<std::string>& ids,
                                                 const std::vector<std::string>& known) {
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& id : ids) {
    if (!allowed.count(id)) throw Error(Errc::UnknownId, "unknown participant " + id);
  }
  return aggregate_per_video(predictions, ids);
}

namespace {

// Continued fraction for the incomplete beta (modified Lentz).
double beta_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-15;
  const double qab = a + b, qap = a + 1, qam = a - 1;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0) || !(b > 0)) throw Error(Errc::BadNumeric, "incomplete beta needs positive shape parameters");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1) / (a + b + 2)) return front * beta_fraction(a, b, x) / a;
  return 1.0 - front * beta_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided(double t, double df) {
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

TTest corrected_t_test(const std::vector<double>& diffs, double n_train, double n_test) {
  if (diffs.size() < 2) throw Error(Errc::Usage, "corrected t-test needs at least two folds");
  if (!(n_train > 0) || !(n_test >= 0)) throw Error(Errc::Usage, "corrected t-test needs positive set sizes");
  const double k = static_cast<double>(diffs.size());
  TTest r;
  for (double d : diffs) r.mean += d;
  r.mean /= k;
  for (double d : diffs) r.variance += (d - r.mean) * (d - r.mean);
  r.variance /= k - 1;
  if (r.variance <= 0.0) {
    r.zero_variance = true;
    if (r.mean == 0.0) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = std::copysign(std::numeric_limits<double>::infinity(), r.mean);
      r.p = 0.0;
    }
    return r;
  }
  r.t = r.mean / std::sqrt((1.0 / k + n_test / n_train) * r.variance);
  r.p = student_t_two_sided(r.t, k - 1);
  return r;
}

bool significant(double p, double method_mae, double baseline_mae) { return p <= 0.05 && method_mae < baseline_mae; }

namespace {

Triple mean_over(const std::vector<FoldResult>& folds, bool sample) {
  Triple t{};
  if (folds.empty()) return t;
  for (const auto& f : folds)
    for (std::size_t k = 0; k < 3; ++k) t[k] += (sample ? f.sample : f.video).per_target[k];
  for (double& v : t) v /= static_cast<double>(folds.size());
  return t;
}

}  // namespace

Triple MethodReport::mean_per_target() const { return mean_over(folds, false); }
double MethodReport::average() const {
  const auto t = mean_per_target();
  return (t[0] + t[1] + t[2]) / 3.0;
}
Triple MethodReport::sample_mean_per_target() const { return mean_over(folds, true); }
double MethodReport::sample_average() const {
  const auto t = sample_mean_per_target();
  return (t[0] + t[1] + t[2]) / 3.0;
}

Verdict compare_to_zeror(const MethodReport& method, const MethodReport& zeror) {
  if (method.folds.size() != zeror.folds.size()) {
    throw Error(Errc::FoldPlanMismatch, method.method + " has " + std::to_string(method.folds.size()) +
                                            " folds, the baseline " + std::to_string(zeror.folds.size()));
  }
  Verdict v;
  double n_train = 0, n_test = 0;
  for (std::size_t f = 0; f < method.folds.size(); ++f) {
    const auto& a = method.folds[f];
    const auto& b = zeror.folds[f];
    if (a.fold != b.fold || a.n_train != b.n_train || a.n_test != b.n_test) {
      throw Error(Errc::FoldPlanMismatch, "fold " + std::to_string(f) + " differs between " + method.method +
                                              " and the baseline");
    }
    v.diffs.push_back(b.video.average - a.video.average);
    n_train += a.n_train;
    n_test += a.n_test;
  }
  v.test = corrected_t_test(v.diffs, n_train, n_test);
  v.significant = significant(v.test.p, method.average(), zeror.average());
  return v;
}

namespace {

std::string fmt(double v, int precision = 6) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

}  // namespace

void write_report_csv(std::ostream& out, const std::vector<MethodReport>& reports, bool sample_level) {
  out << "method,fold,target,mae\n";
  for (const auto& r : reports) {
    auto row = [&](const std::string& fold, const MaeResult& m) {
      for (int k = 0; k < kTargetCount; ++k) {
        out << r.method << ',' << fold << ',' << kTargetNames[k] << ',' << fmt(m.per_target[static_cast<std::size_t>(k)])
            << '\n';
      }
      out << r.method << ',' << fold << ",average," << fmt(m.average) << '\n';
    };
    for (const auto& f : r.folds) row(std::to_string(f.fold), sample_level ? f.sample : f.video);
    MaeResult mean;
    mean.per_target = sample_level ? r.sample_mean_per_target() : r.mean_per_target();
    mean.average = sample_level ? r.sample_average() : r.average();
    row("mean", mean);
  }
}

void write_report_table(std::ostream& out, const std::vector<MethodReport>& reports) {
  const MethodReport* baseline = nullptr;
  for (const auto& r : reports)
    if (r.method == "zeror") baseline = &r;
  std::size_t width = 6;
  for (const auto& r : reports) width = std::max(width, r.method.size());
  out << std::left << std::setw(static_cast<int>(width)) << "Method" << std::right;
  for (const char* h : {"Prog.", "Non-prog.", "Immotile", "Average", "p"}) out << std::setw(11) << h;
  out << '\n';
  for (const auto& r : reports) {
    const auto t = r.mean_per_target();
    out << std::left << std::setw(static_cast<int>(width)) << r.method << std::right;
    for (double v : t) out << std::setw(11) << fmt(v, 3);
    out << std::setw(11) << fmt(r.average(), 3);
    if (baseline && &r != baseline && r.folds.size() == baseline->folds.size()) {
      const auto v = compare_to_zeror(r, *baseline);
      out << std::setw(11) << fmt(v.test.p, 4) << (v.significant ? " *" : "");
    } else {
      out << std::setw(11) << "-";
    }
    out << '\n';
  }
  if (!reports.empty() && !reports.front().folds.empty()) {
    out << "\nfolds:";
    for (const auto& f : reports.front().folds) {
      out << " [" << f.fold << ": " << f.n_train << " train / " << f.n_test << " test participants, "
          << f.train_samples << " / " << f.test_samples << " samples]";
    }
    out << "\nMAE per video (mean of sample predictions); * marks p <= 0.05 against zeror.\n";
  }
}

void write_plot_csv(std::ostream& out, const std::vector<MethodReport>& reports) {
  out << "method,target,mae\n";
  for (const auto& r : reports) {
    const auto t = r.mean_per_target();
    for (int k = 0; k < kTargetCount; ++k) out << r.method << ',' << kTargetNames[k] << ',' << fmt(t[static_cast<std::size_t>(k)]) << '\n';
    out << r.method << ",average," << fmt(r.average()) << '\n';
  }
}

}  // namespace motility::eval
