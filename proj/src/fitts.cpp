#include "sensordash/fitts.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "sensordash/csv.hpp"
#include "sensordash/format.hpp"

namespace sensordash::fitts {
namespace {

constexpr std::array<const char*, 5> kMetrics = {"mt", "throughput", "error", "sus", "tlx"};

using CellKey = std::tuple<std::string, double, double>;

std::vector<const TrialRecord*> select_trials(std::span<const TrialRecord> trials, Feedback f,
                                              const SummaryOptions& options, bool for_mt) {
  std::vector<const TrialRecord*> out;
  for (const auto& t : trials) {
    if (t.feedback != f) continue;
    if (for_mt && options.exclude_error_trials && t.error_distance > 0.0) continue;
    out.push_back(&t);
  }
  return out;
}

// Mean over distinct IDs of ID / mean MT, pooling trials that share an ID.
double per_id_throughput(const std::vector<const TrialRecord*>& trials) {
  std::map<double, std::pair<double, std::size_t>> by_id;
  for (const auto* t : trials) {
    auto& acc = by_id[index_of_difficulty(t->amplitude, t->width)];
    acc.first += t->movement_time_ms;
    ++acc.second;
  }
  double sum = 0.0;
  for (const auto& [id, acc] : by_id) sum += throughput(id, acc.first / static_cast<double>(acc.second));
  return sum / static_cast<double>(by_id.size());
}

double per_trial_throughput(const std::vector<const TrialRecord*>& trials) {
  double sum = 0.0;
  for (const auto* t : trials) {
    sum += throughput(index_of_difficulty(t->amplitude, t->width), t->movement_time_ms);
  }
  return sum / static_cast<double>(trials.size());
}

double group_throughput(const std::vector<const TrialRecord*>& trials, ThroughputMode mode) {
  return mode == ThroughputMode::per_id ? per_id_throughput(trials) : per_trial_throughput(trials);
}

std::map<std::string, std::vector<const TrialRecord*>> by_participant(
    const std::vector<const TrialRecord*>& trials) {
  std::map<std::string, std::vector<const TrialRecord*>> out;
  for (const auto* t : trials) out[t->participant_id].push_back(t);
  return out;
}

std::map<CellKey, std::vector<const TrialRecord*>> by_cell(
    const std::vector<const TrialRecord*>& trials) {
  std::map<CellKey, std::vector<const TrialRecord*>> out;
  for (const auto* t : trials) out[{t->participant_id, t->amplitude, t->width}].push_back(t);
  return out;
}

double mean_of(const std::vector<const TrialRecord*>& trials, double TrialRecord::*field) {
  double sum = 0.0;
  for (const auto* t : trials) sum += t->*field;
  return sum / static_cast<double>(trials.size());
}

bool higher_is_better(const std::string& metric) {
  return metric == "throughput" || metric == "sus";
}

double summary_mean(const ConditionSummary& s, const std::string& metric) {
  if (metric == "mt") return s.mean_mt_ms;
  if (metric == "throughput") return s.mean_throughput_bits_per_s;
  if (metric == "error") return s.mean_error;
  if (metric == "sus") return s.mean_sus;
  return s.mean_tlx;
}

nlohmann::json to_json(const AnovaResult& r) {
  return {{"F", r.f},
          {"df_between", r.df_between},
          {"df_within", r.df_within},
          {"p", r.p},
          {"eta_squared", r.eta_squared},
          {"ss_between", r.ss_between},
          {"ss_within", r.ss_within},
          {"ss_total", r.ss_total}};
}

}  // namespace

std::string_view to_string(Feedback f) noexcept {
  switch (f) {
    case Feedback::none: return "none";
    case Feedback::visual: return "visual";
    case Feedback::haptic: return "haptic";
    case Feedback::multimodal: return "multimodal";
  }
  return "unknown";
}

std::optional<Feedback> parse_feedback(std::string_view name) noexcept {
  for (auto f : kAllFeedback) {
    if (to_string(f) == name) return f;
  }
  return std::nullopt;
}

std::string_view display_name(Feedback f) noexcept {
  switch (f) {
    case Feedback::none: return "No Feedback";
    case Feedback::visual: return "Visual";
    case Feedback::haptic: return "Haptic";
    case Feedback::multimodal: return "Multimodal (Visual and Haptic)";
  }
  return "Unknown";
}

void TrialRecord::validate() const {
  if (!(amplitude > 0.0) || !(width > 0.0)) throw DomainError("trial needs A > 0 and W > 0");
  if (!(movement_time_ms > 0.0)) throw DomainError("trial needs movement_time_ms > 0");
  if (!(error_distance >= 0.0)) throw DomainError("trial error_distance must be >= 0");
}

double index_of_difficulty(double amplitude, double width) {
  if (!(amplitude > 0.0) || !(width > 0.0) || !std::isfinite(amplitude) || !std::isfinite(width)) {
    throw DomainError("index of difficulty needs A > 0 and W > 0");
  }
  return std::log2(amplitude / width + 1.0);
}

double throughput(double id_bits, double mean_mt_ms) {
  if (!(mean_mt_ms > 0.0)) throw DomainError("throughput needs a positive movement time");
  return id_bits / (mean_mt_ms / 1000.0);
}

std::vector<std::pair<double, double>> id_mean_mt(std::span<const TrialRecord> trials,
                                                  Feedback feedback, const SummaryOptions& options) {
  std::map<double, std::pair<double, std::size_t>> by_id;
  for (const auto* t : select_trials(trials, feedback, options, true)) {
    auto& acc = by_id[index_of_difficulty(t->amplitude, t->width)];
    acc.first += t->movement_time_ms;
    ++acc.second;
  }
  std::vector<std::pair<double, double>> out;
  for (const auto& [id, acc] : by_id) out.emplace_back(id, acc.first / static_cast<double>(acc.second));
  return out;
}

std::vector<ConditionSummary> condition_summary(std::span<const TrialRecord> trials,
                                                std::span<const SubjectiveScore> subjective,
                                                const SummaryOptions& options,
                                                std::vector<std::string>* warnings) {
  for (const auto& t : trials) t.validate();
  std::vector<ConditionSummary> out;
  for (auto f : kAllFeedback) {
    const auto mt_trials = select_trials(trials, f, options, true);
    const auto all_trials = select_trials(trials, f, options, false);
    std::vector<double> sus, tlx;
    for (const auto& s : subjective) {
      if (s.feedback != f) continue;
      sus.push_back(s.sus);
      tlx.push_back(s.tlx);
    }
    if (all_trials.empty()) {
      if (!sus.empty()) {
        throw EmptyGroupError("feedback '" + std::string(to_string(f)) + "' has no trials");
      }
      continue;
    }
    if (mt_trials.empty()) {
      throw EmptyGroupError("feedback '" + std::string(to_string(f)) + "' has no usable trials");
    }

    ConditionSummary s;
    s.feedback = f;
    s.trials = mt_trials.size();

    std::vector<double> cell_mt, cell_err;
    for (const auto& [key, cell] : by_cell(mt_trials)) {
      if (warnings && options.expected_reps > 0 &&
          cell.size() != static_cast<std::size_t>(options.expected_reps)) {
        warnings->push_back(std::string(to_string(f)) + " participant " + std::get<0>(key) + " A=" +
                            format_decimal(std::get<1>(key), 6) + " W=" +
                            format_decimal(std::get<2>(key), 6) + ": " +
                            std::to_string(cell.size()) + " of " +
                            std::to_string(options.expected_reps) + " reps");
      }
      cell_mt.push_back(mean_of(cell, &TrialRecord::movement_time_ms));
    }
    for (const auto& [key, cell] : by_cell(all_trials)) {
      cell_err.push_back(mean_of(cell, &TrialRecord::error_distance));
    }
    s.mean_mt_ms = stats::mean(cell_mt);
    s.sd_mt_ms = stats::sample_sd(cell_mt);
    s.mean_error = mean_of(all_trials, &TrialRecord::error_distance);
    s.sd_error = stats::sample_sd(cell_err);

    s.mean_throughput_bits_per_s = group_throughput(mt_trials, options.throughput_mode);
    std::vector<double> tp;
    const auto participants = by_participant(mt_trials);
    for (const auto& [pid, pt] : participants) tp.push_back(group_throughput(pt, options.throughput_mode));
    s.sd_throughput_bits_per_s = stats::sample_sd(tp);
    s.participants = participants.size();

    if (!sus.empty()) {
      s.mean_sus = stats::mean(sus);
      s.sd_sus = stats::sample_sd(sus);
      s.mean_tlx = stats::mean(tlx);
      s.sd_tlx = stats::sample_sd(tlx);
    }
    out.push_back(s);
  }
  if (out.empty()) throw EmptyGroupError("no trials");
  return out;
}

std::vector<double> participant_values(std::span<const TrialRecord> trials,
                                       std::span<const SubjectiveScore> subjective,
                                       Feedback feedback, const std::string& metric,
                                       const SummaryOptions& options) {
  std::vector<double> out;
  if (metric == "sus" || metric == "tlx") {
    std::map<std::string, std::vector<double>> per;
    for (const auto& s : subjective) {
      if (s.feedback == feedback) per[s.participant_id].push_back(metric == "sus" ? s.sus : s.tlx);
    }
    for (const auto& [_, v] : per) out.push_back(stats::mean(v));
    return out;
  }
  const auto selected = select_trials(trials, feedback, options, metric != "error");
  for (const auto& [pid, pt] : by_participant(selected)) {
    if (metric == "mt") {
      std::vector<double> cells;
      for (const auto& [_, cell] : by_cell(pt)) cells.push_back(mean_of(cell, &TrialRecord::movement_time_ms));
      out.push_back(stats::mean(cells));
    } else if (metric == "throughput") {
      out.push_back(group_throughput(pt, options.throughput_mode));
    } else if (metric == "error") {
      out.push_back(mean_of(pt, &TrialRecord::error_distance));
    } else {
      throw std::invalid_argument("unknown metric '" + metric + "'");
    }
  }
  return out;
}

FitResult ls_fit(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2) throw DegenerateFitError("least squares needs at least two points");
  const double n = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : points) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (sxx == 0.0) throw DegenerateFitError("all x values are identical");

  FitResult r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  if (syy > 0.0) {
    double ss_res = 0.0;
    for (const auto& [x, y] : points) {
      const double e = y - (r.intercept + r.slope * x);
      ss_res += e * e;
    }
    r.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  }
  return r;
}

AnovaResult one_way_anova(std::span<const std::vector<double>> groups) {
  if (groups.size() < 2) throw InsufficientDataError("ANOVA needs at least two groups");
  std::size_t total = 0;
  double grand = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw InsufficientDataError("every ANOVA group needs at least two values");
    total += g.size();
    for (double v : g) grand += v;
  }
  grand /= static_cast<double>(total);

  AnovaResult r;
  for (const auto& g : groups) {
    const double m = stats::mean(g);
    r.ss_between += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (double v : g) {
      r.ss_within += (v - m) * (v - m);
      r.ss_total += (v - grand) * (v - grand);
    }
  }
  r.df_between = static_cast<double>(groups.size() - 1);
  r.df_within = static_cast<double>(total - groups.size());
  if (r.ss_within > 0.0) {
    r.f = (r.ss_between / r.df_between) / (r.ss_within / r.df_within);
    r.p = stats::f_survival(r.f, r.df_between, r.df_within);
  } else if (r.ss_between > 0.0) {
    r.f = std::numeric_limits<double>::infinity();
    r.p = 0.0;
  }
  r.eta_squared = r.ss_total > 0.0 ? std::clamp(r.ss_between / r.ss_total, 0.0, 1.0) : 0.0;
  return r;
}

TTestResult t_test(std::span<const double> a, std::span<const double> b, TTestMode mode) {
  TTestResult r;
  double diff = 0.0;
  double se2 = 0.0;
  if (mode == TTestMode::paired) {
    if (a.size() != b.size()) throw ShapeError("paired t-test needs equal-length samples");
    if (a.size() < 2) throw InsufficientDataError("paired t-test needs at least two pairs");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    diff = stats::mean(d);
    se2 = stats::sample_variance(d) / static_cast<double>(d.size());
    r.df = static_cast<double>(d.size() - 1);
  } else {
    if (a.size() < 2 || b.size() < 2) throw InsufficientDataError("t-test needs two values per group");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    r.df = na + nb - 2.0;
    const double pooled =
        ((na - 1.0) * stats::sample_variance(a) + (nb - 1.0) * stats::sample_variance(b)) / r.df;
    diff = stats::mean(a) - stats::mean(b);
    se2 = pooled * (1.0 / na + 1.0 / nb);
  }
  if (se2 > 0.0) {
    r.t = diff / std::sqrt(se2);
    r.p = stats::t_two_tailed_p(r.t, r.df);
  } else if (diff != 0.0) {
    r.t = std::copysign(std::numeric_limits<double>::infinity(), diff);
    r.p = 0.0;
  }
  return r;
}

nlohmann::json render_report(std::span<const ConditionSummary> summaries,
                             std::span<const FeedbackFit> fits, std::span<const MetricAnova> anovas,
                             std::span<const PairwiseTest> ttests, double alpha) {
  const ConditionSummary* baseline = nullptr;
  for (const auto& s : summaries) {
    if (s.feedback == Feedback::none) baseline = &s;
  }

  auto find_test = [&](const std::string& metric, Feedback f) -> const PairwiseTest* {
    for (const auto& t : ttests) {
      if (t.metric != metric) continue;
      if ((t.a == f && t.b == Feedback::none) || (t.a == Feedback::none && t.b == f)) return &t;
    }
    return nullptr;
  };

  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : summaries) {
    const std::array<std::string, 5> cells = {
        format_mean_sd(s.mean_mt_ms, s.sd_mt_ms, 2),
        format_mean_sd(s.mean_throughput_bits_per_s, s.sd_throughput_bits_per_s, 3),
        format_mean_sd(s.mean_error, s.sd_error, 2),
        format_mean_sd(s.mean_sus, s.sd_sus, 2),
        format_mean_sd(s.mean_tlx, s.sd_tlx, 2)};
    std::array<bool, 5> flags{};
    if (baseline && s.feedback != Feedback::none) {
      for (std::size_t m = 0; m < kMetrics.size(); ++m) {
        const std::string metric = kMetrics[m];
        const auto* test = find_test(metric, s.feedback);
        if (!test || !(test->result.p < alpha)) continue;
        const double mine = summary_mean(s, metric);
        const double base = summary_mean(*baseline, metric);
        flags[m] = higher_is_better(metric) ? mine > base : mine < base;
      }
    }
    rows.push_back({{"feedback", to_string(s.feedback)},
                    {"label", display_name(s.feedback)},
                    {"cells", cells},
                    {"significant_vs_baseline", flags},
                    {"values",
                     {{"mean_mt_ms", s.mean_mt_ms},
                      {"sd_mt_ms", s.sd_mt_ms},
                      {"mean_throughput_bits_per_s", s.mean_throughput_bits_per_s},
                      {"sd_throughput_bits_per_s", s.sd_throughput_bits_per_s},
                      {"mean_error", s.mean_error},
                      {"sd_error", s.sd_error},
                      {"mean_sus", s.mean_sus},
                      {"sd_sus", s.sd_sus},
                      {"mean_tlx", s.mean_tlx},
                      {"sd_tlx", s.sd_tlx},
                      {"participants", s.participants},
                      {"trials", s.trials}}}});
  }

  nlohmann::json fit_json = nlohmann::json::array();
  for (const auto& f : fits) {
    auto pts = nlohmann::json::array();
    for (const auto& [x, y] : f.points) pts.push_back({x, y});
    fit_json.push_back({{"feedback", to_string(f.feedback)},
                        {"slope", f.fit.slope},
                        {"intercept", f.fit.intercept},
                        {"r_squared", f.fit.r_squared},
                        {"points", pts}});
  }

  nlohmann::json anova_json = nlohmann::json::array();
  for (const auto& a : anovas) {
    auto j = to_json(a.result);
    j["metric"] = a.metric;
    j["significant"] = a.result.p < alpha;
    anova_json.push_back(j);
  }

  nlohmann::json ttest_json = nlohmann::json::array();
  for (const auto& t : ttests) {
    ttest_json.push_back({{"metric", t.metric},
                          {"a", to_string(t.a)},
                          {"b", to_string(t.b)},
                          {"t", t.result.t},
                          {"df", t.result.df},
                          {"p", t.result.p},
                          {"significant", t.result.p < alpha}});
  }

  return {{"alpha", alpha},
          {"baseline", to_string(Feedback::none)},
          {"table",
           {{"columns",
             {"Mean Movement Time (ms)", "Mean Throughput (bits/sec)", "Mean Error", "Mean SUS",
              "Mean TLX"}},
            {"rows", rows}}},
          {"fits", fit_json},
          {"anova", anova_json},
          {"ttests", ttest_json}};
}

nlohmann::json analyze(std::span<const TrialRecord> trials,
                       std::span<const SubjectiveScore> subjective, const AnalysisOptions& options) {
  std::vector<std::string> warnings;
  const auto summaries = condition_summary(trials, subjective, options.summary, &warnings);

  std::vector<FeedbackFit> fits;
  for (const auto& s : summaries) {
    auto points = id_mean_mt(trials, s.feedback, options.summary);
    if (points.size() < 2) continue;
    fits.push_back({s.feedback, points, ls_fit(points)});
  }

  std::vector<MetricAnova> anovas;
  std::vector<PairwiseTest> tests;
  for (const std::string metric : kMetrics) {
    std::vector<std::pair<Feedback, std::vector<double>>> groups;
    for (const auto& s : summaries) {
      auto values = participant_values(trials, subjective, s.feedback, metric, options.summary);
      if (values.size() >= 2) groups.emplace_back(s.feedback, std::move(values));
    }
    if (groups.size() >= 2) {
      std::vector<std::vector<double>> data;
      for (const auto& [_, v] : groups) data.push_back(v);
      anovas.push_back({metric, one_way_anova(data)});
    }
    for (std::size_t i = 0; i < groups.size(); ++i) {
      for (std::size_t j = i + 1; j < groups.size(); ++j) {
        const auto& [fa, va] = groups[i];
        const auto& [fb, vb] = groups[j];
        if (options.ttest_mode == TTestMode::paired && va.size() != vb.size()) continue;
        tests.push_back({metric, fa, fb, t_test(va, vb, options.ttest_mode)});
      }
    }
  }

  auto report = render_report(summaries, fits, anovas, tests, options.alpha);
  report["warnings"] = warnings;
  report["options"] = {
      {"throughput_mode", options.summary.throughput_mode == ThroughputMode::per_id ? "per_id" : "per_trial"},
      {"exclude_error_trials", options.summary.exclude_error_trials},
      {"ttest_mode", options.ttest_mode == TTestMode::paired ? "paired" : "independent"}};
  return report;
}

std::vector<TrialRecord> read_trials_csv(std::istream& in) {
  std::vector<TrialRecord> out;
  for (const auto& row : csv::read(in, "participant_id")) {
    csv::expect_columns(row, 7);
    TrialRecord t;
    t.participant_id = row.fields[0];
    const auto f = parse_feedback(row.fields[1]);
    if (!f) throw csv::ParseError(row.line, "unknown feedback '" + row.fields[1] + "'");
    t.feedback = *f;
    t.amplitude = csv::to_double(row, 2);
    t.width = csv::to_double(row, 3);
    t.rep = static_cast<int>(csv::to_int(row, 4));
    t.movement_time_ms = csv::to_double(row, 5);
    t.error_distance = csv::to_double(row, 6);
    try {
      t.validate();
    } catch (const std::exception& e) {
      throw csv::ParseError(row.line, e.what());
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<SubjectiveScore> read_subjective_csv(std::istream& in) {
  std::vector<SubjectiveScore> out;
  for (const auto& row : csv::read(in, "participant_id")) {
    csv::expect_columns(row, 4);
    SubjectiveScore s;
    s.participant_id = row.fields[0];
    const auto f = parse_feedback(row.fields[1]);
    if (!f) throw csv::ParseError(row.line, "unknown feedback '" + row.fields[1] + "'");
    s.feedback = *f;
    s.sus = csv::to_double(row, 2);
    s.tlx = csv::to_double(row, 3);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace sensordash::fitts
