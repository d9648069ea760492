#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace sensordash::gaze {

class InsufficientDataError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class SeparationUndefinedError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class DegenerateSeparationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class OutOfBoundsError : public std::out_of_range {
public:
  using std::out_of_range::out_of_range;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

[[nodiscard]] inline double squared_distance(Vec2 a, Vec2 b) noexcept {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

/// Symmetric 2x2 matrix [[xx, xy], [xy, yy]].
struct Cov2 {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  [[nodiscard]] double determinant() const noexcept { return xx * yy - xy * xy; }
  /// Eigenvalues, smaller first.
  [[nodiscard]] std::array<double, 2> eigenvalues() const noexcept;
};

struct GazePoint {
  double x = 0.0;
  double y = 0.0;
  std::uint64_t timestamp_ms = 0;
};

struct ScreenSize {
  int width = 1366;
  int height = 768;
};

/// Parses "1366x768".
[[nodiscard]] ScreenSize parse_screen(std::string_view text);

struct ClusterModel {
  int k = 0;
  std::vector<double> weights;
  std::vector<Vec2> means;
  std::vector<Cov2> covariances;
  double log_likelihood = 0.0;
};

/// n x k responsibilities, row-major: row j holds point j's weights over clusters.
class MembershipMatrix {
public:
  MembershipMatrix() = default;
  MembershipMatrix(std::size_t n, std::size_t k) : n_(n), k_(k), u_(n * k, 0.0) {}

  [[nodiscard]] std::size_t rows() const noexcept { return n_; }
  [[nodiscard]] std::size_t cols() const noexcept { return k_; }
  [[nodiscard]] double operator()(std::size_t j, std::size_t i) const { return u_[j * k_ + i]; }
  double& operator()(std::size_t j, std::size_t i) { return u_[j * k_ + i]; }

private:
  std::size_t n_ = 0;
  std::size_t k_ = 0;
  std::vector<double> u_;
};

struct GmmOptions {
  int restarts = 5;
  int max_iterations = 200;
  double tolerance = 1e-6;
  /// Floor on covariance eigenvalues, applied on every M-step.
  double regularization = 1e-6;
};

struct GmmFit {
  ClusterModel model;
  MembershipMatrix memberships;
  /// Log-likelihood of the parameters entering each E-step of the winning restart.
  std::vector<double> log_likelihood_history;
  int iterations = 0;
  bool converged = false;
};

/// Gaussian mixture by EM with k-means++ seeding; best of `restarts` runs by
/// final log-likelihood. Throws InsufficientDataError when n < k or k < 1.
[[nodiscard]] GmmFit fit_gmm(std::span<const Vec2> points, int k, std::uint64_t seed,
                             const GmmOptions& options = {});

/// sum_i sum_j u_ji^2 |x_j - v_i|^2 / (n * min_{p != q} |v_p - v_q|^2) with v_i
/// the model means.
[[nodiscard]] double xie_beni(std::span<const Vec2> points, const ClusterModel& model,
                              const MembershipMatrix& memberships);

struct KRange {
  int min_k = 2;
  int max_k = 10;
};

struct ClusterSweep {
  int k_star = 0;
  /// XB per k, k ascending; +inf where the centers coincide.
  std::vector<std::pair<int, double>> scores;
  ClusterModel best_model;
};

/// Fits every k in range and returns the XB minimizer, smaller k on ties.
[[nodiscard]] ClusterSweep optimal_clusters(std::span<const Vec2> points, KRange range,
                                            std::uint64_t seed, const GmmOptions& options = {});

struct Fixation {
  Vec2 centroid;
  std::uint64_t start_ms = 0;
  std::uint64_t duration_ms = 0;
  std::size_t samples = 0;
};

struct IdtOptions {
  double dispersion_px = 50.0;
  std::uint64_t min_duration_ms = 100;
};

/// Dispersion-threshold (I-DT) fixation detection; dispersion is bounding-box
/// width + height. Samples must be timestamp-ascending.
[[nodiscard]] std::vector<Fixation> detect_fixations(std::span<const GazePoint> samples,
                                                     const IdtOptions& options = {});

/// 3x3 screen grid, row-major.
enum class Region {
  top_left,
  top_centre,
  top_right,
  middle_left,
  middle_centre,
  middle_right,
  bottom_left,
  bottom_centre,
  bottom_right,
};

[[nodiscard]] std::string_view to_string(Region r) noexcept;
[[nodiscard]] Region map_region(Vec2 point, ScreenSize screen = {});

struct Transition {
  std::string from;
  std::string to;
  std::size_t count = 0;

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Collapses consecutive repeats, counts ordered adjacent pairs, sorts by
/// count descending then (from, to) ascending.
[[nodiscard]] std::vector<Transition> mine_transitions(std::span<const std::string> labels);
[[nodiscard]] std::vector<Transition> mine_transitions(std::span<const Region> regions);

enum class GraphType { bar, line, radar, area };

inline constexpr std::array<GraphType, 4> kAllGraphTypes = {GraphType::bar, GraphType::line,
                                                            GraphType::radar, GraphType::area};

[[nodiscard]] std::string_view to_string(GraphType g) noexcept;
[[nodiscard]] std::optional<GraphType> parse_graph_type(std::string_view name) noexcept;

struct QuestionEvent {
  GraphType graph_type = GraphType::bar;
  int question_id = 1;
  std::string answer;
  bool correct = false;
  std::uint64_t start_ms = 0;
  std::uint64_t end_ms = 0;

  [[nodiscard]] double response_time_s() const noexcept {
    return static_cast<double>(end_ms - start_ms) / 1000.0;
  }
};

struct SessionLog {
  std::string participant_id;
  std::vector<QuestionEvent> questions;
  std::vector<GazePoint> gaze;

  /// Exactly five questions per graph type, each with a positive response time.
  void validate() const;
};

struct GraphMetrics {
  int correct = 0;
  /// Mean response time over correct answers; absent when nothing was correct.
  std::optional<double> art_s;
  double trt_s = 0.0;
  std::optional<int> onc;
  std::vector<std::pair<int, double>> xb_curve;
  std::vector<Vec2> aoi_centers;
  std::vector<Transition> transitions;
};

struct ParticipantMetrics {
  std::string participant_id;
  std::map<GraphType, GraphMetrics> graphs;
};

struct CohortMetrics {
  double ca = 0.0;
  std::optional<double> art_s;
  double trt_s = 0.0;
  std::optional<double> onc;
};

struct StudyResult {
  std::vector<ParticipantMetrics> participants;
  std::map<GraphType, CohortMetrics> cohort;
};

struct StudyOptions {
  ScreenSize screen;
  /// Cluster detected fixation centroids instead of raw gaze samples.
  bool cluster_fixations = false;
  bool compute_onc = true;
  IdtOptions idt;
  KRange k_range;
  std::uint64_t seed = 42;
};

/// CA / ART / TRT / ONC per graph for each participant plus cohort means.
[[nodiscard]] StudyResult study_metrics(std::span<const SessionLog> logs,
                                        const StudyOptions& options = {});

/// Table with CA, ART, TRT, ONC rows over Bar, Line, Radar, Area columns,
/// values formatted to two decimals with trailing zeros dropped.
[[nodiscard]] nlohmann::json render_table(const std::map<GraphType, CohortMetrics>& cohort);

[[nodiscard]] nlohmann::json render_report(const StudyResult& result, std::size_t top_transitions = 10);

/// `timestamp_ms,x,y`
[[nodiscard]] std::vector<GazePoint> read_gaze_csv(std::istream& in);
/// `graph_type,question_id,answer,correct,start_ms,end_ms`
[[nodiscard]] std::vector<QuestionEvent> read_events_csv(std::istream& in);

}  // namespace sensordash::gaze
