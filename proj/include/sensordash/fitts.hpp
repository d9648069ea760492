#pragma once

#include <array>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sensordash/stats.hpp"

namespace sensordash::fitts {

using stats::DomainError;

class EmptyGroupError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DegenerateFitError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InsufficientDataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

enum class Feedback { none, visual, haptic, multimodal };

inline constexpr std::array<Feedback, 4> kAllFeedback = {Feedback::none, Feedback::visual,
                                                         Feedback::haptic, Feedback::multimodal};

[[nodiscard]] std::string_view to_string(Feedback f) noexcept;
[[nodiscard]] std::optional<Feedback> parse_feedback(std::string_view name) noexcept;
/// Row label used in the results table, e.g. "Multimodal (Visual and Haptic)".
[[nodiscard]] std::string_view display_name(Feedback f) noexcept;

struct TrialRecord {
  std::string participant_id;
  Feedback feedback = Feedback::none;
  double amplitude = 0.0;
  double width = 0.0;
  int rep = 1;
  double movement_time_ms = 0.0;
  double error_distance = 0.0;

  void validate() const;
};

struct SubjectiveScore {
  std::string participant_id;
  Feedback feedback = Feedback::none;
  double sus = 0.0;
  double tlx = 0.0;
};

/// log2(A / W + 1). Throws DomainError unless A > 0 and W > 0.
[[nodiscard]] double index_of_difficulty(double amplitude, double width);

/// Bits per second: id_bits / (mean_mt_ms / 1000).
[[nodiscard]] double throughput(double id_bits, double mean_mt_ms);

enum class ThroughputMode {
  /// Mean over distinct IDs of ID / mean MT at that ID.
  per_id,
  /// Mean over trials of ID / MT.
  per_trial,
};

struct SummaryOptions {
  ThroughputMode throughput_mode = ThroughputMode::per_id;
  bool exclude_error_trials = false;
  int expected_reps = 25;
};

struct ConditionSummary {
  Feedback feedback = Feedback::none;
  double mean_mt_ms = 0.0;
  double sd_mt_ms = 0.0;
  double mean_throughput_bits_per_s = 0.0;
  double sd_throughput_bits_per_s = 0.0;
  double mean_error = 0.0;
  double sd_error = 0.0;
  double mean_sus = 0.0;
  double sd_sus = 0.0;
  double mean_tlx = 0.0;
  double sd_tlx = 0.0;
  std::size_t participants = 0;
  std::size_t trials = 0;
};

/// Mean movement time per distinct ID for one feedback condition, ID-ascending.
/// Cells sharing an A/W ratio pool their trials.
[[nodiscard]] std::vector<std::pair<double, double>> id_mean_mt(std::span<const TrialRecord> trials,
                                                                Feedback feedback,
                                                                const SummaryOptions& options = {});

/// Per-feedback aggregates in Feedback order. Throws EmptyGroupError when a
/// feedback has subjective scores but no trials, or nothing at all is given.
/// `warnings` collects incomplete-cell notices when non-null.
[[nodiscard]] std::vector<ConditionSummary> condition_summary(
    std::span<const TrialRecord> trials, std::span<const SubjectiveScore> subjective,
    const SummaryOptions& options = {}, std::vector<std::string>* warnings = nullptr);

/// Per-participant values of one metric for one feedback, in participant-id order.
/// Metrics: "mt", "throughput", "error", "sus", "tlx".
[[nodiscard]] std::vector<double> participant_values(std::span<const TrialRecord> trials,
                                                     std::span<const SubjectiveScore> subjective,
                                                     Feedback feedback, const std::string& metric,
                                                     const SummaryOptions& options = {});

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y = intercept + slope * x, R^2 = 1 - SS_res / SS_tot
/// (0 when y is constant). Throws DegenerateFitError when all x are equal.
[[nodiscard]] FitResult ls_fit(std::span<const std::pair<double, double>> points);

struct AnovaResult {
  double f = 0.0;
  double df_between = 0.0;
  double df_within = 0.0;
  double p = 1.0;
  double eta_squared = 0.0;
  double ss_between = 0.0;
  double ss_within = 0.0;
  double ss_total = 0.0;
};

/// Independent-groups one-way ANOVA. Needs >= 2 groups of >= 2 values.
[[nodiscard]] AnovaResult one_way_anova(std::span<const std::vector<double>> groups);

enum class TTestMode { independent, paired };

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

/// Student's t with pooled variance (independent) or on differences (paired);
/// two-tailed p. Zero variance with equal means gives t = 0, p = 1.
[[nodiscard]] TTestResult t_test(std::span<const double> a, std::span<const double> b,
                                 TTestMode mode = TTestMode::independent);

struct PairwiseTest {
  std::string metric;
  Feedback a = Feedback::none;
  Feedback b = Feedback::none;
  TTestResult result;
};

struct MetricAnova {
  std::string metric;
  AnovaResult result;
};

struct FeedbackFit {
  Feedback feedback = Feedback::none;
  std::vector<std::pair<double, double>> points;
  FitResult fit;
};

/// Table-shaped JSON report: formatted "mean (sd)" cells, fit lines for the
/// MT-vs-ID plot, ANOVA and t-test blocks, and per-cell flags marking a
/// significant improvement over the no-feedback baseline at `alpha`.
[[nodiscard]] nlohmann::json render_report(std::span<const ConditionSummary> summaries,
                                           std::span<const FeedbackFit> fits,
                                           std::span<const MetricAnova> anovas,
                                           std::span<const PairwiseTest> ttests,
                                           double alpha = 0.05);

struct AnalysisOptions {
  SummaryOptions summary;
  TTestMode ttest_mode = TTestMode::independent;
  double alpha = 0.05;
};

/// Full pipeline: summaries, fits, ANOVA per metric, six pairwise tests per metric.
[[nodiscard]] nlohmann::json analyze(std::span<const TrialRecord> trials,
                                     std::span<const SubjectiveScore> subjective,
                                     const AnalysisOptions& options = {});

/// `participant_id,feedback,A,W,rep,movement_time_ms,error_distance`
[[nodiscard]] std::vector<TrialRecord> read_trials_csv(std::istream& in);
/// `participant_id,feedback,sus,tlx`
[[nodiscard]] std::vector<SubjectiveScore> read_subjective_csv(std::istream& in);

}  // namespace sensordash::fitts
