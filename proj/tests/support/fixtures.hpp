#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sensordash/fitts.hpp"
#include "sensordash/gaze.hpp"

namespace fixture {

namespace fitts = sensordash::fitts;
namespace gaze = sensordash::gaze;

inline constexpr std::array<double, 3> kAmplitudes = {0.5, 1.0, 1.5};
inline constexpr std::array<double, 3> kWidths = {0.05, 0.1, 0.15};

/// n values whose mean is `m` and whose sample sd is `s`: half at m + d, half
/// at m - d (n even), d = s * sqrt((n - 1) / n).
inline std::vector<double> spread(double m, double s, std::size_t n) {
  const double d = s * std::sqrt(static_cast<double>(n - 1) / static_cast<double>(n));
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(i % 2 == 0 ? m + d : m - d);
  return out;
}

struct FittsCondition {
  fitts::Feedback feedback;
  double mt, mt_sd;
  double err, err_sd;
  double sus, sus_sd;
  double tlx, tlx_sd;
};

inline const std::array<FittsCondition, 4> kTable2 = {{
    {fitts::Feedback::none, 665.01, 94.52, 1.07, 0.28, 58.13, 12.9, 49.41, 18.1},
    {fitts::Feedback::visual, 670.39, 96.74, 1.09, 0.28, 75.42, 14.7, 36.94, 18.1},
    {fitts::Feedback::haptic, 613.23, 86.67, 1.06, 0.29, 65.41, 14.6, 43.26, 16.2},
    {fitts::Feedback::multimodal, 641.65, 87.02, 1.06, 0.28, 78.33, 13.0, 30.11, 16.6},
}};

/// 12 participants x 9 (A, W) cells x 25 reps per feedback. Every trial in a
/// cell repeats the cell's value, so cell means hit the targets exactly.
inline void table2(std::vector<fitts::TrialRecord>& trials, std::vector<fitts::SubjectiveScore>& subjective) {
  constexpr std::size_t participants = 12;
  for (const auto& c : kTable2) {
    const auto mt = spread(c.mt, c.mt_sd, participants * 9);
    const auto err = spread(c.err, c.err_sd, participants * 9);
    const auto sus = spread(c.sus, c.sus_sd, participants);
    const auto tlx = spread(c.tlx, c.tlx_sd, participants);
    std::size_t cell = 0;
    for (std::size_t p = 0; p < participants; ++p) {
      const std::string pid = "P" + std::to_string(p + 1);
      for (double a : kAmplitudes) {
        for (double w : kWidths) {
          for (int rep = 1; rep <= 25; ++rep) {
            trials.push_back({pid, c.feedback, a, w, rep, mt[cell], err[cell]});
          }
          ++cell;
        }
      }
      subjective.push_back({pid, c.feedback, sus[p], tlx[p]});
    }
  }
}

struct GazeCondition {
  gaze::GraphType graph;
  std::array<int, 9> correct;  // per participant
  std::uint64_t art_ms;
  std::uint64_t trt_ms;
};

inline const std::array<GazeCondition, 4> kTable1 = {{
    {gaze::GraphType::bar, {3, 3, 3, 3, 3, 3, 3, 3, 3}, 37330, 196770},
    {gaze::GraphType::line, {3, 3, 2, 2, 2, 2, 2, 2, 2}, 30350, 166350},
    {gaze::GraphType::radar, {3, 2, 2, 2, 2, 2, 2, 2, 2}, 39450, 212830},
    {gaze::GraphType::area, {3, 3, 3, 3, 3, 3, 2, 2, 2}, 24600, 155860},
}};

/// Nine session logs: each correct answer takes exactly the target ART and
/// the wrong answers split the rest of the target TRT.
inline std::vector<gaze::SessionLog> table1_sessions() {
  std::vector<gaze::SessionLog> logs(9);
  for (std::size_t p = 0; p < logs.size(); ++p) {
    logs[p].participant_id = "P" + std::to_string(p + 1);
    std::uint64_t clock = 0;
    for (const auto& c : kTable1) {
      const int correct = c.correct[p];
      const std::uint64_t rest = c.trt_ms - static_cast<std::uint64_t>(correct) * c.art_ms;
      const int wrong = 5 - correct;
      for (int q = 0; q < 5; ++q) {
        std::uint64_t dur = c.art_ms;
        if (q >= correct) {
          const int w = q - correct;
          dur = rest / wrong + (static_cast<std::uint64_t>(w) < rest % wrong ? 1 : 0);
        }
        logs[p].questions.push_back({c.graph, q + 1, "a", q < correct, clock, clock + dur});
        clock += dur + 1000;
      }
    }
  }
  return logs;
}

/// `k` isotropic Gaussian clusters, `per_cluster` points each, centers drawn
/// on the 1366x768 screen at least `min_sep` px apart.
struct Mixture {
  std::vector<gaze::Vec2> points;
  std::vector<gaze::Vec2> centers;
};

inline Mixture mixture(int k, std::size_t per_cluster, double sd, double min_sep, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(60.0, 1306.0), uy(60.0, 708.0);
  Mixture m;
  int attempts = 0;
  while (static_cast<int>(m.centers.size()) < k) {
    if (++attempts % 1000 == 0) m.centers.clear();
    gaze::Vec2 c{ux(rng), uy(rng)};
    bool ok = true;
    for (const auto& o : m.centers) ok = ok && std::hypot(c.x - o.x, c.y - o.y) >= min_sep;
    if (ok) m.centers.push_back(c);
  }
  std::normal_distribution<double> n(0.0, sd);
  for (const auto& c : m.centers) {
    for (std::size_t i = 0; i < per_cluster; ++i) m.points.push_back({c.x + n(rng), c.y + n(rng)});
  }
  return m;
}

}  // namespace fixture
