#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "sensordash/csv.hpp"
#include "sensordash/fitts.hpp"
#include "sensordash/format.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace sensordash;
using namespace sensordash::fitts;

TEST_CASE("index of difficulty") {
  CHECK(index_of_difficulty(1, 1) == 1.0);
  CHECK(std::fabs(index_of_difficulty(1, 0.05) - 4.392317422778760) < 1e-14);
  CHECK_THROWS_AS((void)index_of_difficulty(0, 1), DomainError);
  CHECK_THROWS_AS((void)index_of_difficulty(1, -1), DomainError);

  std::set<double> ids;
  for (double a : fixture::kAmplitudes) {
    for (double w : fixture::kWidths) ids.insert(index_of_difficulty(a, w));
  }
  CHECK(ids.size() == 7);
}

TEST_CASE("throughput") {
  CHECK(throughput(4.0, 1000) == 4.0);
  CHECK(throughput(4.392317, 665.01) == doctest::Approx(4.392317 / 0.66501).epsilon(1e-14));
  CHECK(std::fabs(throughput(4.392317, 665.01) - 6.6049) < 1e-4);
  CHECK(throughput(1.0, 2000) == 0.5);
  CHECK_THROWS_AS((void)throughput(1.0, 0), DomainError);
}

TEST_CASE("summary of constant trials") {
  // A = 15, W = 1 gives ID = 4 exactly.
  std::vector<TrialRecord> trials;
  for (int p = 0; p < 3; ++p) {
    for (int rep = 1; rep <= 25; ++rep) trials.push_back({"P" + std::to_string(p), Feedback::visual, 15, 1, rep, 1000, 0});
  }
  const auto s = condition_summary(trials, {});
  REQUIRE(s.size() == 1);
  CHECK(s[0].feedback == Feedback::visual);
  CHECK(s[0].mean_mt_ms == 1000);
  CHECK(s[0].sd_mt_ms == 0);
  CHECK(s[0].mean_throughput_bits_per_s == 4.0);
  CHECK(s[0].participants == 3);
  CHECK(s[0].trials == 75);
}

namespace {

struct Brute {
  double mean_mt = 0, mean_err = 0, tp_per_id = 0, tp_per_trial = 0;
};

Brute brute(const std::vector<TrialRecord>& trials, Feedback f) {
  std::map<std::tuple<std::string, double, double>, std::vector<double>> cells;
  std::map<double, std::vector<double>> ids;
  double err = 0, tpt = 0;
  std::size_t n = 0;
  for (const auto& t : trials) {
    if (t.feedback != f) continue;
    cells[{t.participant_id, t.amplitude, t.width}].push_back(t.movement_time_ms);
    const double id = std::log2(t.amplitude / t.width + 1.0);
    ids[id].push_back(t.movement_time_ms);
    err += t.error_distance;
    tpt += id / (t.movement_time_ms / 1000.0);
    ++n;
  }
  Brute b;
  for (const auto& [_, v] : cells) b.mean_mt += oracle::mean(v) / static_cast<double>(cells.size());
  for (const auto& [id, v] : ids) b.tp_per_id += id / (oracle::mean(v) / 1000.0) / static_cast<double>(ids.size());
  b.mean_err = err / static_cast<double>(n);
  b.tp_per_trial = tpt / static_cast<double>(n);
  return b;
}

}  // namespace

TEST_CASE("summaries match brute-force recomputation") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> mt(300, 1200), err(0, 2);
  std::vector<TrialRecord> trials;
  std::vector<SubjectiveScore> subj;
  for (auto f : kAllFeedback) {
    for (int p = 0; p < 5; ++p) {
      const auto pid = "P" + std::to_string(p);
      for (double a : fixture::kAmplitudes) {
        for (double w : fixture::kWidths) {
          const int reps = 1 + static_cast<int>(rng() % 6);
          for (int r = 1; r <= reps; ++r) trials.push_back({pid, f, a, w, r, mt(rng), rng() % 3 == 0 ? 0.0 : err(rng)});
        }
      }
      subj.push_back({pid, f, 50.0 + p, 40.0 - p});
    }
  }
  std::vector<std::string> warnings;
  const auto s = condition_summary(trials, subj, {}, &warnings);
  CHECK_FALSE(warnings.empty());
  SummaryOptions per_trial;
  per_trial.throughput_mode = ThroughputMode::per_trial;
  const auto s2 = condition_summary(trials, subj, per_trial);
  REQUIRE(s.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto b = brute(trials, s[i].feedback);
    CHECK(std::fabs(s[i].mean_mt_ms - b.mean_mt) < 1e-9);
    CHECK(std::fabs(s[i].mean_error - b.mean_err) < 1e-9);
    CHECK(std::fabs(s[i].mean_throughput_bits_per_s - b.tp_per_id) < 1e-9);
    CHECK(std::fabs(s2[i].mean_throughput_bits_per_s - b.tp_per_trial) < 1e-9);
    CHECK(s[i].mean_sus == 52.0);
    CHECK(std::fabs(s[i].sd_sus - std::sqrt(oracle::var({50, 51, 52, 53, 54}))) < 1e-12);
    CHECK(s[i].sd_mt_ms >= 0);
  }
}

TEST_CASE("error trials can be excluded from movement time") {
  std::vector<TrialRecord> trials{{"P1", Feedback::none, 1, 1, 1, 100, 0}, {"P1", Feedback::none, 1, 1, 2, 900, 0.5}};
  SummaryOptions opt;
  opt.exclude_error_trials = true;
  CHECK(condition_summary(trials, {}, opt)[0].mean_mt_ms == 100);
  CHECK(condition_summary(trials, {}, opt)[0].mean_error == 0.25);
  CHECK(condition_summary(trials, {})[0].mean_mt_ms == 500);
}

TEST_CASE("empty groups are rejected") {
  CHECK_THROWS_AS((void)condition_summary({}, {}), EmptyGroupError);
  const std::vector<SubjectiveScore> subj{{"P1", Feedback::haptic, 50, 50}};
  const std::vector<TrialRecord> trials{{"P1", Feedback::none, 1, 1, 1, 100, 0}};
  CHECK_THROWS_AS((void)condition_summary(trials, subj), EmptyGroupError);
  const std::vector<TrialRecord> bad{{"P1", Feedback::none, 1, 1, 1, 0, 0}};
  CHECK_THROWS_AS((void)condition_summary(bad, {}), DomainError);
}

TEST_CASE("least squares") {
  std::vector<std::pair<double, double>> line;
  for (double x : {1.0, 2.0, 3.5, 4.0}) line.emplace_back(x, 2 * x + 1);
  const auto f = ls_fit(line);
  CHECK(f.slope == doctest::Approx(2).epsilon(1e-14));
  CHECK(f.intercept == doctest::Approx(1).epsilon(1e-14));
  CHECK(f.r_squared == doctest::Approx(1).epsilon(1e-14));

  const std::vector<std::pair<double, double>> flat{{1, 5}, {2, 5}, {3, 5}};
  CHECK(ls_fit(flat).slope == 0);
  CHECK(ls_fit(flat).r_squared == 0);
  const std::vector<std::pair<double, double>> vertical{{1, 5}, {1, 6}};
  CHECK_THROWS_AS((void)ls_fit(vertical), DegenerateFitError);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 10);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < 7; ++i) pts.emplace_back(u(rng), u(rng) * 100);
    const auto [slope, intercept] = oracle::ls_normal_equations(pts);
    const auto r = ls_fit(pts);
    CHECK(std::fabs(r.slope - slope) < 1e-9);
    CHECK(std::fabs(r.intercept - intercept) < 1e-9);
    CHECK(r.r_squared >= 0);
    CHECK(r.r_squared <= 1);
  }
}

TEST_CASE("one-way anova") {
  const std::vector<std::vector<double>> constant(4, std::vector<double>{3, 3, 3});
  const auto z = one_way_anova(constant);
  CHECK(z.f == 0);
  CHECK(z.eta_squared == 0);
  CHECK(z.p == 1);

  const std::vector<std::vector<double>> g{{1, 2, 3}, {2, 3, 4}, {3, 4, 5}};
  const auto r = one_way_anova(g);
  const auto o = oracle::anova(g);
  CHECK(std::fabs(r.f - o.f) < 1e-9);
  CHECK(r.f == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(std::fabs(r.p - oracle::f_survival(o.f, o.df1, o.df2)) < 1e-9);
  CHECK(std::fabs(r.eta_squared - o.eta2) < 1e-12);
  CHECK(r.df_between == 2);
  CHECK(r.df_within == 6);
  CHECK(std::fabs(r.ss_between + r.ss_within - r.ss_total) < 1e-9);

  std::vector<std::vector<double>> twelve(4);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(60, 15);
  for (std::size_t i = 0; i < 4; ++i) {
    for (int j = 0; j < 12; ++j) twelve[i].push_back(n(rng) + 5.0 * static_cast<double>(i));
  }
  const auto big = one_way_anova(twelve);
  CHECK(big.df_between == 3);
  CHECK(big.df_within == 44);
  CHECK(std::fabs(big.p - oracle::f_survival(big.f, 3, 44)) < 1e-9);

  const std::vector<std::vector<double>> tiny{{1, 2}, {3}};
  CHECK_THROWS_AS((void)one_way_anova(tiny), InsufficientDataError);
}

TEST_CASE("t tests") {
  const std::vector<double> a{1, 2, 3, 4}, b{1, 2, 3, 4};
  auto r = t_test(a, b);
  CHECK(r.t == 0);
  CHECK(r.p == 1);
  r = t_test(a, b, TTestMode::paired);
  CHECK(r.t == 0);
  CHECK(r.df == 3);

  const std::vector<double> x{5.1, 4.9, 6.2, 5.8, 6.0, 5.5}, y{4.1, 4.4, 5.0, 4.6, 5.2, 4.3};
  const auto [ti, dfi] = oracle::t_independent(x, y);
  const auto ind = t_test(x, y);
  CHECK(std::fabs(ind.t - ti) < 1e-12);
  CHECK(ind.df == dfi);
  CHECK(std::fabs(ind.p - oracle::t_two_tailed(ti, dfi)) < 1e-6);

  const auto [tp, dfp] = oracle::t_paired(x, y);
  const auto pr = t_test(x, y, TTestMode::paired);
  CHECK(std::fabs(pr.t - tp) < 1e-12);
  CHECK(std::fabs(pr.p - oracle::t_two_tailed(tp, dfp)) < 1e-6);

  const std::vector<double> three{1, 2, 3};
  CHECK_THROWS_AS((void)t_test(a, three, TTestMode::paired), ShapeError);
  const std::vector<double> c1{2, 2, 2}, c2{3, 3, 3};
  CHECK(t_test(c1, c2).p == 0);
}

TEST_CASE("mean and sd formatting") {
  CHECK(format_decimal(3.0, 2) == "3");
  CHECK(format_decimal(24.60, 2) == "24.6");
  CHECK(format_decimal(-0.001, 2) == "0");
  CHECK(format_mean_sd(78.33, 13.0, 2) == "78.33 (13)");
}

TEST_CASE("report reproduces the reference table from its aggregates") {
  struct Row {
    Feedback f;
    double mt, mt_sd, tp, tp_sd, err, err_sd, sus, sus_sd, tlx, tlx_sd;
    std::array<const char*, 5> cells;
  };
  const std::array<Row, 4> rows = {{
      {Feedback::none, 665.01, 94.52, 6.107, 0.48, 1.07, 0.28, 58.13, 12.9, 49.41, 18.1,
       {"665.01 (94.52)", "6.107 (0.48)", "1.07 (0.28)", "58.13 (12.9)", "49.41 (18.1)"}},
      {Feedback::visual, 670.39, 96.74, 6.05, 0.53, 1.09, 0.28, 75.42, 14.7, 36.94, 18.1,
       {"670.39 (96.74)", "6.05 (0.53)", "1.09 (0.28)", "75.42 (14.7)", "36.94 (18.1)"}},
      {Feedback::haptic, 613.23, 86.67, 6.64, 0.44, 1.06, 0.29, 65.41, 14.6, 43.26, 16.2,
       {"613.23 (86.67)", "6.64 (0.44)", "1.06 (0.29)", "65.41 (14.6)", "43.26 (16.2)"}},
      {Feedback::multimodal, 641.65, 87.02, 6.33, 0.52, 1.06, 0.28, 78.33, 13.0, 30.11, 16.6,
       {"641.65 (87.02)", "6.33 (0.52)", "1.06 (0.28)", "78.33 (13)", "30.11 (16.6)"}},
  }};
  std::vector<ConditionSummary> summaries;
  for (const auto& r : rows) {
    ConditionSummary s;
    s.feedback = r.f;
    s.mean_mt_ms = r.mt;
    s.sd_mt_ms = r.mt_sd;
    s.mean_throughput_bits_per_s = r.tp;
    s.sd_throughput_bits_per_s = r.tp_sd;
    s.mean_error = r.err;
    s.sd_error = r.err_sd;
    s.mean_sus = r.sus;
    s.sd_sus = r.sus_sd;
    s.mean_tlx = r.tlx;
    s.sd_tlx = r.tlx_sd;
    summaries.push_back(s);
  }
  // Significant pairs against the baseline as reported: SUS and TLX for
  // visual and multimodal, movement time for haptic and multimodal.
  const std::vector<PairwiseTest> tests{
      {"sus", Feedback::visual, Feedback::none, {3, 22, 0.01}},
      {"sus", Feedback::none, Feedback::multimodal, {-3, 22, 0.01}},
      {"tlx", Feedback::visual, Feedback::none, {-2.5, 22, 0.02}},
      {"tlx", Feedback::multimodal, Feedback::none, {-3, 22, 0.01}},
      {"tlx", Feedback::haptic, Feedback::none, {-1, 22, 0.3}},
      {"mt", Feedback::haptic, Feedback::none, {-2.2, 22, 0.04}},
      {"mt", Feedback::multimodal, Feedback::none, {-2.1, 22, 0.045}},
      {"mt", Feedback::visual, Feedback::none, {2.1, 22, 0.045}},
  };
  const auto report = render_report(summaries, {}, {}, tests);
  const auto& table = report.at("table").at("rows");
  REQUIRE(table.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t c = 0; c < 5; ++c) CHECK(table[i]["cells"][c] == rows[i].cells[c]);
  }
  CHECK(table[3]["label"] == "Multimodal (Visual and Haptic)");
  using Flags = std::vector<bool>;
  CHECK(table[0]["significant_vs_baseline"].get<Flags>() == Flags{false, false, false, false, false});
  CHECK(table[1]["significant_vs_baseline"].get<Flags>() == Flags{false, false, false, true, true});
  CHECK(table[2]["significant_vs_baseline"].get<Flags>() == Flags{true, false, false, false, false});
  CHECK(table[3]["significant_vs_baseline"].get<Flags>() == Flags{true, false, false, true, true});
}

TEST_CASE("full analysis of the fixture trials") {
  std::vector<TrialRecord> trials;
  std::vector<SubjectiveScore> subj;
  fixture::table2(trials, subj);
  const auto report = analyze(trials, subj);
  const auto& rows = report.at("table").at("rows");
  REQUIRE(rows.size() == 4);
  CHECK(rows[0]["cells"][0] == "665.01 (94.52)");
  CHECK(rows[0]["cells"][3] == "58.13 (12.9)");
  CHECK(report.at("fits").size() == 4);
  CHECK(report.at("fits")[0]["points"].size() == 7);
  CHECK(report.at("anova").size() == 5);
  CHECK(report.at("ttests").size() == 30);
  for (const auto& a : report.at("anova")) {
    if (a["metric"] == "sus") {
      CHECK(a["df_between"] == 3);
      CHECK(a["df_within"] == 44);
    }
  }
  CHECK(report.at("warnings").empty());

  // All conditions identical: nothing flagged.
  std::vector<TrialRecord> same;
  std::vector<SubjectiveScore> same_subj;
  for (auto f : kAllFeedback) {
    for (int p = 0; p < 4; ++p) {
      for (int r = 1; r <= 3; ++r) same.push_back({"P" + std::to_string(p), f, 1, 0.1, r, 500.0 + p, 0.1});
      same_subj.push_back({"P" + std::to_string(p), f, 60.0 + p, 40.0 + p});
    }
  }
  AnalysisOptions opt;
  opt.ttest_mode = TTestMode::paired;
  opt.summary.expected_reps = 3;
  for (const auto& row : analyze(same, same_subj, opt).at("table").at("rows")) {
    for (bool flag : row["significant_vs_baseline"].get<std::vector<bool>>()) CHECK_FALSE(flag);
  }
}

TEST_CASE("participant values") {
  std::vector<TrialRecord> trials{{"B", Feedback::none, 1, 1, 1, 200, 1}, {"A", Feedback::none, 1, 1, 1, 100, 0},
                                  {"A", Feedback::none, 2, 1, 1, 300, 0}};
  CHECK(participant_values(trials, {}, Feedback::none, "mt") == std::vector<double>{200, 200});
  CHECK(participant_values(trials, {}, Feedback::none, "error") == std::vector<double>{0, 1});
  CHECK_THROWS_AS((void)participant_values(trials, {}, Feedback::none, "speed"), std::invalid_argument);
}

TEST_CASE("trial and subjective csv") {
  std::istringstream in(
      "participant_id,feedback,A,W,rep,movement_time_ms,error_distance\n"
      "P1,haptic,1,0.05,1,612.5,0\n"
      "# comment\n"
      "\n"
      "P2,none,1.5,0.1,2,700,0.02\n");
  const auto trials = read_trials_csv(in);
  REQUIRE(trials.size() == 2);
  CHECK(trials[0].feedback == Feedback::haptic);
  CHECK(trials[1].error_distance == 0.02);

  std::istringstream bad("P1,telepathy,1,1,1,1,0\n");
  CHECK_THROWS_AS((void)read_trials_csv(bad), csv::ParseError);
  std::istringstream neg("P1,none,1,1,1,-5,0\n");
  CHECK_THROWS_AS((void)read_trials_csv(neg), csv::ParseError);
  std::istringstream short_row("P1,none,1\n");
  CHECK_THROWS_AS((void)read_trials_csv(short_row), csv::ParseError);

  std::istringstream s("participant_id,feedback,sus,tlx\nP1,visual,75,30\n\"P,2\",none,50,50\n");
  const auto subj = read_subjective_csv(s);
  REQUIRE(subj.size() == 2);
  CHECK(subj[1].participant_id == "P,2");
}
