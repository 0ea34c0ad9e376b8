#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace motility::eval {

using Triple = std::array<double, 3>;  // progressive, nonprogressive, immotile

// Participant-level folds.
struct FoldPlan {
  int k = 3;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::string>> folds;

  // Index of the fold holding `id`; UnknownId otherwise.
  int fold_of(const std::string& id) const;
  std::vector<std::string> test_ids(int fold) const { return folds.at(static_cast<std::size_t>(fold)); }
  std::vector<std::string> train_ids(int fold) const;
  // Throws FoldPlanMismatch unless the folds partition `ids` exactly.
  void check_partition(const std::vector<std::string>& ids) const;
  friend bool operator==(const FoldPlan&, const FoldPlan&) = default;
};

// Seeded shuffle, then round-robin dealing. TooFewParticipants if ids < k.
FoldPlan make_folds(const std::vector<std::string>& ids, int k = 3, std::uint64_t seed = 0);

struct MaeResult {
  Triple per_target{};
  double average = 0.0;
};
// ShapeMismatch on size disagreement or empty input.
MaeResult mae(const std::vector<Triple>& pred, const std::vector<Triple>& truth);

struct VideoPrediction {
  std::string id;
  Triple value{};
  int samples = 0;
};
// Mean prediction per id, in order of first appearance.
std::vector<VideoPrediction> aggregate_per_video(const std::vector<Triple>& predictions,
                                                 const std::vector<std::string>& ids);
// As above; UnknownId when a sample carries an id outside `known`.
std::vector<VideoPrediction> aggregate_per_video(const std::vector<Triple>& predictions,
                                                 const std::vector<std::string>& ids,
                                                 const std::vector<std::string>& known);

// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);
// Two-sided p-value of Student's t with `df` degrees of freedom.
double student_t_two_sided(double t, double df);

struct TTest {
  double t = 0.0;
  double p = 1.0;
  double mean = 0.0;
  double variance = 0.0;
  bool zero_variance = false;
};
// Variance-corrected resampled t-test. With zero variance, t is +-inf (p = 0)
// for a nonzero mean and 0 (p = 1) otherwise.
TTest corrected_t_test(const std::vector<double>& diffs, double n_train, double n_test);

// Significance rule against the baseline.
bool significant(double p, double method_mae, double baseline_mae);

struct FoldResult {
  int fold = 0;
  int n_train = 0;  // participants
  int n_test = 0;
  MaeResult video;   // per-video aggregated
  MaeResult sample;  // per-sample
  int train_samples = 0;
  int test_samples = 0;
};

struct MethodReport {
  std::string method;
  std::vector<FoldResult> folds;

  Triple mean_per_target() const;  // over folds, per-video MAE
  double average() const;          // mean of mean_per_target
  Triple sample_mean_per_target() const;
  double sample_average() const;
};

struct Verdict {
  std::vector<double> diffs;  // baseline - method, per fold
  TTest test;
  bool significant = false;
};
// FoldPlanMismatch when the two reports disagree on folds or sizes.
Verdict compare_to_zeror(const MethodReport& method, const MethodReport& zeror);

// `method,fold,target,mae` rows; `fold` is the fold index or "mean".
void write_report_csv(std::ostream& out, const std::vector<MethodReport>& reports, bool sample_level = false);
// Table with one row per method, the last method treated as the baseline
// when named "zeror".
void write_report_table(std::ostream& out, const std::vector<MethodReport>& reports);
// Per-method, per-target mean MAE for bar charts.
void write_plot_csv(std::ostream& out, const std::vector<MethodReport>& reports);

}  // namespace motility::eval
