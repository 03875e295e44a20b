#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "jitkit/task_model.hpp"

namespace jitkit {

struct PartPlacement {
  PartId part;
  double x = 0.0;      // mm, tray frame (origin at a tray corner)
  double y = 0.0;      // mm
  double theta = 0.0;  // radians in [0, 2*pi)
};

struct KitLayout {
  std::vector<PartPlacement> placements;
  Tray tray;
};

/// Wraps an angle into [0, 2*pi).
double normalize_angle(double theta);

struct CEParams {
  int sample_count = 200;
  int elite_count = 30;
  int max_iterations = 100;
  double convergence_std_tol = 1.0;  // mm
  double cov_jitter = 1e-6;          // mm^2, added to the covariance diagonal on every refit
  double smoothing = 0.7;            // weight of the elite mean in each update
  /// Covariance weight at iteration t: covariance_smoothing * (1 - (1 - 1/t)^power).
  /// A power of 0 uses `smoothing` for the covariance as well.
  double covariance_smoothing = 0.95;
  double covariance_decay_power = 10.0;
  double covariance_shrinkage = 1.0;  // 0 keeps the full elite covariance, 1 keeps its diagonal
  double containment_penalty_weight = 1e3;
  int starts = 3;       // independent runs; the best feasible layout is kept
  int retry_limit = 2;  // extra runs allowed while no feasible layout has been found
  std::uint64_t seed = 0;
};

/// How the overlap area enters the arrangement cost.
enum class OverlapTerm {
  penalize,    // D_same - D_diff + W6*Z: overlapping boxes raise the cost
  as_written,  // D_same - D_diff - W6*Z: overlapping boxes lower the cost
};

struct FitnessWeights {
  double w6_overlap = 10.0;
  OverlapTerm overlap_term = OverlapTerm::penalize;
};

/// Overlap area accepted as zero when validating a layout (mm^2).
inline constexpr double kOverlapTolerance = 1e-3;

struct Rect {
  double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  double area() const { return width() * height(); }
};

/// Axis-aligned envelope of a w x h rectangle centred at (x, y) and rotated by theta.
Rect bounding_box(double width, double height, double x, double y, double theta);
Rect bounding_box(const PartPlacement& placement, const PartCatalog& catalog);

double intersection_area(const Rect& a, const Rect& b);

struct DistanceSums {
  double same = 0.0;  // mm, unordered pairs of equal part type
  double diff = 0.0;  // mm, unordered pairs of different part type
};

DistanceSums pair_distance_sums(const KitLayout& layout, const PartCatalog& catalog);
double overlap_area(const KitLayout& layout, const PartCatalog& catalog);
/// Cost minimized by arrange_kit; kit fitness ("larger is better") is its negation.
double kit_fitness_cost(const KitLayout& layout, const PartCatalog& catalog,
                        const FitnessWeights& weights);
double containment_violation(const KitLayout& layout, const PartCatalog& catalog);

struct CostBreakdown {
  double d_same = 0.0;
  double d_diff = 0.0;
  double overlap = 0.0;
  double containment = 0.0;
  double cost = 0.0;
};

CostBreakdown evaluate_layout(const KitLayout& layout, const PartCatalog& catalog,
                              const FitnessWeights& weights);

struct ArrangeResult {
  KitLayout layout;
  double cost = 0.0;
  int iterations = 0;  // CE iterations of the attempt that produced the layout
  int best_start = 0;  // index of the run that produced the layout
  bool converged = false;
  /// Best penalized sample score after each iteration, across all attempts.
  std::vector<double> best_score_history;
};

/// The parts cannot fit on the tray even in principle.
class KitPreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// No sampled layout satisfied containment and overlap limits within the retry budget.
class KitInfeasibleError : public std::runtime_error {
 public:
  KitInfeasibleError(const std::string& what, KitLayout best, double best_score)
      : std::runtime_error(what), best_layout(std::move(best)), best_score(best_score) {}

  KitLayout best_layout;
  double best_score;
};

/// Cross-entropy search over (x, y, theta) for every part. Returns the best feasible
/// sample ever drawn, not the final sampling mean.
ArrangeResult arrange_kit(const std::vector<PartId>& parts, const PartCatalog& catalog,
                          const Tray& tray, const FitnessWeights& weights,
                          const CEParams& params);

/// [{part_id, x_mm, y_mm, theta_rad}, ...]
nlohmann::json layout_to_json(const KitLayout& layout);
KitLayout layout_from_json(const nlohmann::json& doc, const Tray& tray);
std::string layout_to_svg(const KitLayout& layout, const PartCatalog& catalog);

}  // namespace jitkit
