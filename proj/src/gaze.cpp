#include "sensordash/gaze.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "sensordash/csv.hpp"
#include "sensordash/format.hpp"

namespace sensordash::gaze {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2*pi)

// Covariance held as rotation (c, s) and principal variances, so tiny
// eigenvalues survive exactly instead of being lost to cancellation.
struct Shape {
  double major = 1.0;
  double minor = 1.0;
  double c = 1.0;
  double s = 0.0;

  [[nodiscard]] Cov2 matrix() const noexcept {
    return {major * c * c + minor * s * s, (major - minor) * c * s, major * s * s + minor * c * c};
  }
};

// Eigen-decomposes a scatter matrix and raises both variances to `floor`.
// Clipping is the exact constrained maximizer, which keeps EM monotone.
Shape clipped_shape(const Cov2& m, double floor) {
  const double theta = 0.5 * std::atan2(2.0 * m.xy, m.xx - m.yy);
  Shape sh;
  sh.c = std::cos(theta);
  sh.s = std::sin(theta);
  const double cs = sh.c * sh.s;
  sh.major = m.xx * sh.c * sh.c + 2.0 * m.xy * cs + m.yy * sh.s * sh.s;
  sh.minor = m.xx * sh.s * sh.s - 2.0 * m.xy * cs + m.yy * sh.c * sh.c;
  sh.major = std::max(sh.major, floor);
  sh.minor = std::max(sh.minor, floor);
  return sh;
}

struct Params {
  std::vector<double> weights;
  std::vector<Vec2> means;
  std::vector<Shape> shapes;
};

struct EmRun {
  Params params;
  MembershipMatrix resp;
  std::vector<double> history;
  int iterations = 0;
  bool converged = false;
};

Cov2 sample_covariance(std::span<const Vec2> points) {
  Vec2 m;
  for (const auto& p : points) {
    m.x += p.x;
    m.y += p.y;
  }
  const double n = static_cast<double>(points.size());
  m.x /= n;
  m.y /= n;
  Cov2 c;
  for (const auto& p : points) {
    const double dx = p.x - m.x;
    const double dy = p.y - m.y;
    c.xx += dx * dx;
    c.xy += dx * dy;
    c.yy += dy * dy;
  }
  c.xx /= n;
  c.xy /= n;
  c.yy /= n;
  return c;
}

std::vector<Vec2> kmeanspp_seeds(std::span<const Vec2> points, int k, std::mt19937_64& rng) {
  std::vector<Vec2> centers;
  centers.reserve(static_cast<std::size_t>(k));
  std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
  centers.push_back(points[pick(rng)]);
  std::vector<double> d2(points.size());
  for (std::size_t j = 0; j < points.size(); ++j) d2[j] = squared_distance(points[j], centers[0]);
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (double d : d2) total += d;
    std::size_t chosen = 0;
    if (total > 0.0) {
      double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      chosen = points.size() - 1;
      for (std::size_t j = 0; j < points.size(); ++j) {
        r -= d2[j];
        if (r < 0.0 && d2[j] > 0.0) {
          chosen = j;
          break;
        }
      }
    } else {
      chosen = pick(rng);
    }
    centers.push_back(points[chosen]);
    for (std::size_t j = 0; j < points.size(); ++j) {
      d2[j] = std::min(d2[j], squared_distance(points[j], centers.back()));
    }
  }
  return centers;
}

// Fills responsibilities for `params` and returns the data log-likelihood.
double e_step(std::span<const Vec2> points, const Params& params, MembershipMatrix& resp) {
  const std::size_t k = params.means.size();
  std::vector<double> log_norm(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto& sh = params.shapes[i];
    log_norm[i] = std::log(params.weights[i]) - kLog2Pi - 0.5 * (std::log(sh.major) + std::log(sh.minor));
  }

  double ll = 0.0;
  std::vector<double> lp(k);
  for (std::size_t j = 0; j < points.size(); ++j) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) {
      const auto& sh = params.shapes[i];
      const double dx = points[j].x - params.means[i].x;
      const double dy = points[j].y - params.means[i].y;
      const double u = sh.c * dx + sh.s * dy;
      const double v = -sh.s * dx + sh.c * dy;
      const double q = u * u / sh.major + v * v / sh.minor;
      lp[i] = log_norm[i] - 0.5 * q;
      best = std::max(best, lp[i]);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      lp[i] = std::exp(lp[i] - best);
      sum += lp[i];
    }
    for (std::size_t i = 0; i < k; ++i) resp(j, i) = lp[i] / sum;
    ll += best + std::log(sum);
  }
  return ll;
}

void m_step(std::span<const Vec2> points, const MembershipMatrix& resp, double regularization,
            Params& params) {
  const std::size_t k = params.means.size();
  const double n = static_cast<double>(points.size());
  for (std::size_t i = 0; i < k; ++i) {
    double nk = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t j = 0; j < points.size(); ++j) {
      const double r = resp(j, i);
      nk += r;
      sx += r * points[j].x;
      sy += r * points[j].y;
    }
    params.weights[i] = std::max(nk / n, std::numeric_limits<double>::min());
    // A component that lost all its points keeps its previous shape.
    if (nk <= std::numeric_limits<double>::min()) continue;
    const Vec2 mu{sx / nk, sy / nk};
    Cov2 c;
    for (std::size_t j = 0; j < points.size(); ++j) {
      const double r = resp(j, i);
      const double dx = points[j].x - mu.x;
      const double dy = points[j].y - mu.y;
      c.xx += r * dx * dx;
      c.xy += r * dx * dy;
      c.yy += r * dy * dy;
    }
    c.xx /= nk;
    c.xy /= nk;
    c.yy /= nk;
    params.means[i] = mu;
    params.shapes[i] = clipped_shape(c, regularization);
  }
  double total = 0.0;
  for (double w : params.weights) total += w;
  for (double& w : params.weights) w /= total;
}

EmRun run_em(std::span<const Vec2> points, int k, std::mt19937_64& rng, const GmmOptions& options) {
  EmRun run;
  const auto kk = static_cast<std::size_t>(k);
  run.params.means = kmeanspp_seeds(points, k, rng);
  run.params.shapes.assign(kk, clipped_shape(sample_covariance(points), options.regularization));
  run.params.weights.assign(kk, 1.0 / static_cast<double>(k));
  run.resp = MembershipMatrix(points.size(), kk);

  for (int it = 0; it < options.max_iterations; ++it) {
    const double ll = e_step(points, run.params, run.resp);
    run.history.push_back(ll);
    run.iterations = it + 1;
    if (it > 0 && std::fabs(ll - run.history[run.history.size() - 2]) < options.tolerance) {
      run.converged = true;
      break;
    }
    if (it + 1 == options.max_iterations) break;
    m_step(points, run.resp, options.regularization, run.params);
  }
  return run;
}

std::string_view region_name(Region r) noexcept {
  static constexpr std::array<std::string_view, 9> names = {
      "top-left",    "top-centre",    "top-right",    "middle-left", "middle-centre",
      "middle-right", "bottom-left", "bottom-centre", "bottom-right"};
  return names[static_cast<std::size_t>(r)];
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::string optional_cell(const std::optional<double>& v) {
  return v ? format_decimal(*v, 2) : std::string("n/a");
}

}  // namespace

std::array<double, 2> Cov2::eigenvalues() const noexcept {
  const double half_trace = 0.5 * (xx + yy);
  const double disc = std::sqrt(0.25 * (xx - yy) * (xx - yy) + xy * xy);
  return {half_trace - disc, half_trace + disc};
}

ScreenSize parse_screen(std::string_view text) {
  const auto x = text.find_first_of("xX");
  ScreenSize s{0, 0};
  if (x != std::string_view::npos) {
    const auto w = text.substr(0, x);
    const auto h = text.substr(x + 1);
    auto r1 = std::from_chars(w.data(), w.data() + w.size(), s.width);
    auto r2 = std::from_chars(h.data(), h.data() + h.size(), s.height);
    if (r1.ec == std::errc{} && r1.ptr == w.data() + w.size() && r2.ec == std::errc{} &&
        r2.ptr == h.data() + h.size() && s.width > 0 && s.height > 0) {
      return s;
    }
  }
  throw std::invalid_argument("screen must look like 1366x768, got '" + std::string(text) + "'");
}

GmmFit fit_gmm(std::span<const Vec2> points, int k, std::uint64_t seed, const GmmOptions& options) {
  if (k < 1) throw InsufficientDataError("k must be at least 1");
  if (points.size() < static_cast<std::size_t>(k)) {
    throw InsufficientDataError("need at least k points (n=" + std::to_string(points.size()) +
                                ", k=" + std::to_string(k) + ")");
  }
  if (options.restarts < 1 || options.max_iterations < 1 || !(options.regularization > 0.0)) {
    throw std::invalid_argument("restarts, max_iterations and regularization must be positive");
  }

  std::mt19937_64 rng(seed);
  std::optional<EmRun> best;
  for (int r = 0; r < options.restarts; ++r) {
    auto run = run_em(points, k, rng, options);
    if (!best || run.history.back() > best->history.back()) best = std::move(run);
  }

  GmmFit fit;
  fit.model.k = k;
  fit.model.weights = std::move(best->params.weights);
  fit.model.means = std::move(best->params.means);
  for (const auto& sh : best->params.shapes) fit.model.covariances.push_back(sh.matrix());
  fit.model.log_likelihood = best->history.back();
  fit.memberships = std::move(best->resp);
  fit.log_likelihood_history = std::move(best->history);
  fit.iterations = best->iterations;
  fit.converged = best->converged;
  return fit;
}

double xie_beni(std::span<const Vec2> points, const ClusterModel& model,
                const MembershipMatrix& memberships) {
  const auto k = model.means.size();
  if (k < 2) throw SeparationUndefinedError("Xie-Beni index needs at least two clusters");
  if (points.empty()) throw InsufficientDataError("Xie-Beni index needs points");
  if (memberships.rows() != points.size() || memberships.cols() != k) {
    throw std::invalid_argument("membership matrix shape does not match points x clusters");
  }

  double min_sep = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t q = p + 1; q < k; ++q) {
      min_sep = std::min(min_sep, squared_distance(model.means[p], model.means[q]));
    }
  }
  if (!(min_sep > 0.0)) throw DegenerateSeparationError("two cluster centers coincide");

  double compactness = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < points.size(); ++j) {
      const double u = memberships(j, i);
      compactness += u * u * squared_distance(points[j], model.means[i]);
    }
  }
  return compactness / (static_cast<double>(points.size()) * min_sep);
}

ClusterSweep optimal_clusters(std::span<const Vec2> points, KRange range, std::uint64_t seed,
                              const GmmOptions& options) {
  if (range.min_k < 2 || range.max_k < range.min_k) {
    throw std::invalid_argument("k range must satisfy 2 <= min_k <= max_k");
  }
  if (points.size() < static_cast<std::size_t>(range.max_k)) {
    throw InsufficientDataError("need at least max_k points");
  }

  ClusterSweep sweep;
  double best = std::numeric_limits<double>::infinity();
  for (int k = range.min_k; k <= range.max_k; ++k) {
    const auto fit = fit_gmm(points, k, seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(k),
                             options);
    double score = std::numeric_limits<double>::infinity();
    try {
      score = xie_beni(points, fit.model, fit.memberships);
    } catch (const DegenerateSeparationError&) {
    }
    sweep.scores.emplace_back(k, score);
    if (score < best) {
      best = score;
      sweep.k_star = k;
      sweep.best_model = fit.model;
    }
  }
  if (sweep.k_star == 0) throw DegenerateSeparationError("every fit had coincident centers");
  return sweep;
}

std::vector<Fixation> detect_fixations(std::span<const GazePoint> samples, const IdtOptions& options) {
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].timestamp_ms < samples[i - 1].timestamp_ms) {
      throw std::invalid_argument("gaze samples must be timestamp-ascending");
    }
  }

  struct Box {
    double min_x, max_x, min_y, max_y;
    void add(const GazePoint& p) {
      min_x = std::min(min_x, p.x);
      max_x = std::max(max_x, p.x);
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
    }
    [[nodiscard]] double dispersion() const { return (max_x - min_x) + (max_y - min_y); }
  };

  std::vector<Fixation> out;
  const auto n = samples.size();
  std::size_t start = 0;
  while (start < n) {
    // Smallest window starting here that spans the minimum duration.
    std::size_t end = start;
    while (end < n && samples[end].timestamp_ms - samples[start].timestamp_ms < options.min_duration_ms) {
      ++end;
    }
    if (end >= n) break;

    Box box{samples[start].x, samples[start].x, samples[start].y, samples[start].y};
    for (std::size_t i = start + 1; i <= end; ++i) box.add(samples[i]);
    if (box.dispersion() > options.dispersion_px) {
      ++start;
      continue;
    }
    while (end + 1 < n) {
      Box grown = box;
      grown.add(samples[end + 1]);
      if (grown.dispersion() > options.dispersion_px) break;
      box = grown;
      ++end;
    }

    Fixation f;
    for (std::size_t i = start; i <= end; ++i) {
      f.centroid.x += samples[i].x;
      f.centroid.y += samples[i].y;
    }
    f.samples = end - start + 1;
    f.centroid.x /= static_cast<double>(f.samples);
    f.centroid.y /= static_cast<double>(f.samples);
    f.start_ms = samples[start].timestamp_ms;
    f.duration_ms = samples[end].timestamp_ms - samples[start].timestamp_ms;
    out.push_back(f);
    start = end + 1;
  }
  return out;
}

std::string_view to_string(Region r) noexcept { return region_name(r); }

Region map_region(Vec2 point, ScreenSize screen) {
  if (!(point.x >= 0.0 && point.x < screen.width && point.y >= 0.0 && point.y < screen.height)) {
    throw OutOfBoundsError("gaze point outside the screen");
  }
  const int col = std::min(static_cast<int>(std::floor(3.0 * point.x / screen.width)), 2);
  const int row = std::min(static_cast<int>(std::floor(3.0 * point.y / screen.height)), 2);
  return static_cast<Region>(row * 3 + col);
}

std::vector<Transition> mine_transitions(std::span<const std::string> labels) {
  std::vector<std::string_view> collapsed;
  for (const auto& l : labels) {
    if (collapsed.empty() || collapsed.back() != l) collapsed.push_back(l);
  }
  std::map<std::pair<std::string_view, std::string_view>, std::size_t> counts;
  for (std::size_t i = 1; i < collapsed.size(); ++i) ++counts[{collapsed[i - 1], collapsed[i]}];

  std::vector<Transition> out;
  out.reserve(counts.size());
  for (const auto& [pair, count] : counts) {
    out.push_back({std::string(pair.first), std::string(pair.second), count});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Transition& a, const Transition& b) { return a.count > b.count; });
  return out;
}

std::vector<Transition> mine_transitions(std::span<const Region> regions) {
  std::vector<std::string> labels;
  labels.reserve(regions.size());
  for (auto r : regions) labels.emplace_back(to_string(r));
  return mine_transitions(labels);
}

std::string_view to_string(GraphType g) noexcept {
  switch (g) {
    case GraphType::bar: return "bar";
    case GraphType::line: return "line";
    case GraphType::radar: return "radar";
    case GraphType::area: return "area";
  }
  return "unknown";
}

std::optional<GraphType> parse_graph_type(std::string_view name) noexcept {
  for (auto g : kAllGraphTypes) {
    if (to_string(g) == name) return g;
  }
  return std::nullopt;
}

void SessionLog::validate() const {
  for (auto g : kAllGraphTypes) {
    const auto n = std::count_if(questions.begin(), questions.end(),
                                 [g](const QuestionEvent& q) { return q.graph_type == g; });
    if (n != 5) {
      throw std::invalid_argument("participant " + participant_id + ": expected 5 questions for " +
                                  std::string(to_string(g)) + ", got " + std::to_string(n));
    }
  }
  for (const auto& q : questions) {
    if (q.end_ms <= q.start_ms) {
      throw std::invalid_argument("participant " + participant_id +
                                  ": response time must be positive");
    }
  }
}

StudyResult study_metrics(std::span<const SessionLog> logs, const StudyOptions& options) {
  if (logs.empty()) throw InsufficientDataError("no session logs");
  StudyResult result;
  for (const auto& log : logs) {
    log.validate();
    ParticipantMetrics pm;
    pm.participant_id = log.participant_id;
    for (auto g : kAllGraphTypes) {
      GraphMetrics gm;
      std::uint64_t window_start = std::numeric_limits<std::uint64_t>::max();
      std::uint64_t window_end = 0;
      double correct_time = 0.0;
      for (const auto& q : log.questions) {
        if (q.graph_type != g) continue;
        gm.trt_s += q.response_time_s();
        if (q.correct) {
          ++gm.correct;
          correct_time += q.response_time_s();
        }
        window_start = std::min(window_start, q.start_ms);
        window_end = std::max(window_end, q.end_ms);
      }
      if (gm.correct > 0) gm.art_s = correct_time / gm.correct;

      std::vector<GazePoint> samples;
      for (const auto& p : log.gaze) {
        if (p.timestamp_ms < window_start || p.timestamp_ms > window_end) continue;
        if (!(p.x >= 0.0 && p.x < options.screen.width && p.y >= 0.0 && p.y < options.screen.height)) {
          continue;
        }
        samples.push_back(p);
      }
      std::sort(samples.begin(), samples.end(),
                [](const GazePoint& a, const GazePoint& b) { return a.timestamp_ms < b.timestamp_ms; });
      const auto fixations = detect_fixations(samples, options.idt);

      std::vector<Region> regions;
      for (const auto& f : fixations) regions.push_back(map_region(f.centroid, options.screen));
      gm.transitions = mine_transitions(regions);

      std::vector<Vec2> points;
      if (options.cluster_fixations) {
        for (const auto& f : fixations) points.push_back(f.centroid);
      } else {
        for (const auto& s : samples) points.push_back({s.x, s.y});
      }
      KRange range = options.k_range;
      range.max_k = std::min<int>(range.max_k, static_cast<int>(points.size()));
      if (options.compute_onc && range.max_k >= range.min_k) {
        try {
          const auto sweep = optimal_clusters(points, range, options.seed);
          gm.onc = sweep.k_star;
          gm.xb_curve = sweep.scores;
          gm.aoi_centers = sweep.best_model.means;
        } catch (const DegenerateSeparationError&) {
        }
      }
      pm.graphs[g] = std::move(gm);
    }
    result.participants.push_back(std::move(pm));
  }

  for (auto g : kAllGraphTypes) {
    CohortMetrics c;
    double art_sum = 0.0, onc_sum = 0.0;
    int art_n = 0, onc_n = 0;
    for (const auto& pm : result.participants) {
      const auto& gm = pm.graphs.at(g);
      c.ca += gm.correct;
      c.trt_s += gm.trt_s;
      if (gm.art_s) {
        art_sum += *gm.art_s;
        ++art_n;
      }
      if (gm.onc) {
        onc_sum += *gm.onc;
        ++onc_n;
      }
    }
    const auto n = static_cast<double>(result.participants.size());
    c.ca /= n;
    c.trt_s /= n;
    if (art_n > 0) c.art_s = art_sum / art_n;
    if (onc_n > 0) c.onc = onc_sum / onc_n;
    result.cohort[g] = c;
  }
  return result;
}

nlohmann::json render_table(const std::map<GraphType, CohortMetrics>& cohort) {
  nlohmann::json columns = nlohmann::json::array();
  nlohmann::json ca = nlohmann::json::array(), art = nlohmann::json::array(),
                 trt = nlohmann::json::array(), onc = nlohmann::json::array();
  nlohmann::json values = nlohmann::json::object();
  for (auto g : kAllGraphTypes) {
    auto name = std::string(to_string(g));
    name.front() = static_cast<char>(std::toupper(static_cast<unsigned char>(name.front())));
    columns.push_back(name);
    const auto it = cohort.find(g);
    const CohortMetrics c = it == cohort.end() ? CohortMetrics{} : it->second;
    ca.push_back(format_decimal(c.ca, 2));
    art.push_back(optional_cell(c.art_s));
    trt.push_back(format_decimal(c.trt_s, 2));
    onc.push_back(optional_cell(c.onc));
    values[std::string(to_string(g))] = {{"CA", c.ca},
                                         {"ART", optional_json(c.art_s)},
                                         {"TRT", c.trt_s},
                                         {"ONC", optional_json(c.onc)}};
  }
  return {{"columns", columns},
          {"rows",
           {{{"metric", "CA"}, {"cells", ca}},
            {{"metric", "ART (secs)"}, {"cells", art}},
            {{"metric", "TRT (secs)"}, {"cells", trt}},
            {{"metric", "ONC"}, {"cells", onc}}}},
          {"values", values}};
}

nlohmann::json render_report(const StudyResult& result, std::size_t top_transitions) {
  nlohmann::json participants = nlohmann::json::array();
  std::map<std::pair<std::string, std::string>, std::size_t> pooled;
  for (const auto& pm : result.participants) {
    nlohmann::json graphs = nlohmann::json::object();
    for (const auto& [g, gm] : pm.graphs) {
      auto curve = nlohmann::json::array();
      for (const auto& [k, score] : gm.xb_curve) {
        curve.push_back({{"k", k}, {"xb", std::isfinite(score) ? nlohmann::json(score) : nlohmann::json(nullptr)}});
      }
      auto centers = nlohmann::json::array();
      for (const auto& c : gm.aoi_centers) centers.push_back({c.x, c.y});
      auto transitions = nlohmann::json::array();
      for (std::size_t i = 0; i < gm.transitions.size() && i < top_transitions; ++i) {
        const auto& t = gm.transitions[i];
        transitions.push_back({{"from", t.from}, {"to", t.to}, {"count", t.count}});
      }
      for (const auto& t : gm.transitions) pooled[{t.from, t.to}] += t.count;
      graphs[std::string(to_string(g))] = {
          {"CA", gm.correct},
          {"ART", gm.art_s ? nlohmann::json(*gm.art_s) : nlohmann::json(nullptr)},
          {"TRT", gm.trt_s},
          {"ONC", gm.onc ? nlohmann::json(*gm.onc) : nlohmann::json(nullptr)},
          {"xb_curve", curve},
          {"aoi_centers", centers},
          {"top_transitions", transitions}};
    }
    participants.push_back({{"participant_id", pm.participant_id}, {"graphs", graphs}});
  }

  std::vector<Transition> all;
  for (const auto& [pair, count] : pooled) all.push_back({pair.first, pair.second, count});
  std::stable_sort(all.begin(), all.end(),
                   [](const Transition& a, const Transition& b) { return a.count > b.count; });
  auto top = nlohmann::json::array();
  for (std::size_t i = 0; i < all.size() && i < top_transitions; ++i) {
    top.push_back({{"from", all[i].from}, {"to", all[i].to}, {"count", all[i].count}});
  }

  return {{"table", render_table(result.cohort)},
          {"participants", participants},
          {"top_transitions", top}};
}

std::vector<GazePoint> read_gaze_csv(std::istream& in) {
  std::vector<GazePoint> out;
  for (const auto& row : csv::read(in, "timestamp_ms")) {
    csv::expect_columns(row, 3);
    const auto ts = csv::to_int(row, 0);
    if (ts < 0) throw csv::ParseError(row.line, "negative timestamp");
    out.push_back({csv::to_double(row, 1), csv::to_double(row, 2), static_cast<std::uint64_t>(ts)});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const GazePoint& a, const GazePoint& b) { return a.timestamp_ms < b.timestamp_ms; });
  return out;
}

std::vector<QuestionEvent> read_events_csv(std::istream& in) {
  std::vector<QuestionEvent> out;
  for (const auto& row : csv::read(in, "graph_type")) {
    csv::expect_columns(row, 6);
    QuestionEvent q;
    const auto g = parse_graph_type(row.fields[0]);
    if (!g) throw csv::ParseError(row.line, "unknown graph type '" + row.fields[0] + "'");
    q.graph_type = *g;
    q.question_id = static_cast<int>(csv::to_int(row, 1));
    q.answer = row.fields[2];
    q.correct = csv::to_bool(row, 3);
    const auto start = csv::to_int(row, 4);
    const auto end = csv::to_int(row, 5);
    if (start < 0 || end <= start) throw csv::ParseError(row.line, "end_ms must be after start_ms");
    q.start_ms = static_cast<std::uint64_t>(start);
    q.end_ms = static_cast<std::uint64_t>(end);
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace sensordash::gaze
