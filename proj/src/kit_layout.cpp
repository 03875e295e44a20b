#include "jitkit/kit_layout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "jitkit/rng.hpp"

namespace jitkit {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Packed {
  double width;
  double height;
  int type;
};

// Resolves part ids to dimensions and dense type indices.
std::vector<Packed> pack(const std::vector<PartId>& ids, const PartCatalog& catalog) {
  std::vector<PartTypeId> type_ids;
  std::vector<Packed> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const auto& e = catalog.at(id);
    auto it = std::find(type_ids.begin(), type_ids.end(), e.type);
    int type = static_cast<int>(it - type_ids.begin());
    if (it == type_ids.end()) type_ids.push_back(e.type);
    out.push_back(Packed{e.width, e.height, type});
  }
  return out;
}

std::vector<PartId> ids_of(const KitLayout& layout) {
  std::vector<PartId> ids;
  ids.reserve(layout.placements.size());
  for (const auto& p : layout.placements) ids.push_back(p.part);
  return ids;
}

double outside_area(const Rect& box, const Tray& tray) {
  const Rect inner{std::max(box.min_x, 0.0), std::max(box.min_y, 0.0),
                   std::min(box.max_x, tray.width), std::min(box.max_y, tray.height)};
  const double inside =
      std::max(0.0, inner.width()) * std::max(0.0, inner.height());
  return std::max(0.0, box.area() - inside);
}

constexpr double kWallMargin = 1e-9;  // mm

double clip_axis(double c, double half, double extent) {
  const double lo = half + kWallMargin;
  const double hi = extent - half - kWallMargin;
  if (lo > hi) return std::clamp(c, 0.0, extent);
  return std::clamp(c, lo, hi);
}

struct Terms {
  double d_same = 0.0;
  double d_diff = 0.0;
  double overlap = 0.0;
  double containment = 0.0;
};

// Scores a flat (x, y, theta) vector; the hot path of the CE loop.
Terms score_terms(const double* v, const std::vector<Packed>& parts, const Tray& tray,
                  std::vector<Rect>& boxes) {
  const std::size_t n = parts.size();
  boxes.resize(n);
  Terms t;
  for (std::size_t k = 0; k < n; ++k) {
    boxes[k] = bounding_box(parts[k].width, parts[k].height, v[3 * k], v[3 * k + 1],
                            v[3 * k + 2]);
    t.containment += outside_area(boxes[k], tray);
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = k + 1; j < n; ++j) {
      const double dist = std::hypot(v[3 * k] - v[3 * j], v[3 * k + 1] - v[3 * j + 1]);
      if (parts[k].type == parts[j].type) {
        t.d_same += dist;
      } else {
        t.d_diff += dist;
      }
      t.overlap += intersection_area(boxes[k], boxes[j]);
    }
  }
  return t;
}

double fitness_cost(const Terms& t, const FitnessWeights& w) {
  const double sign = w.overlap_term == OverlapTerm::penalize ? 1.0 : -1.0;
  return t.d_same - t.d_diff + sign * w.w6_overlap * t.overlap;
}

std::vector<double> flatten(const KitLayout& layout) {
  std::vector<double> v;
  v.reserve(3 * layout.placements.size());
  for (const auto& p : layout.placements) {
    v.push_back(p.x);
    v.push_back(p.y);
    v.push_back(p.theta);
  }
  return v;
}

Terms layout_terms(const KitLayout& layout, const PartCatalog& catalog) {
  std::vector<Rect> boxes;
  const auto v = flatten(layout);
  return score_terms(v.data(), pack(ids_of(layout), catalog), layout.tray, boxes);
}

KitLayout unflatten(const double* v, const std::vector<PartId>& ids, const Tray& tray) {
  KitLayout layout;
  layout.tray = tray;
  layout.placements.reserve(ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    layout.placements.push_back(
        PartPlacement{ids[k], v[3 * k], v[3 * k + 1], normalize_angle(v[3 * k + 2])});
  }
  return layout;
}

}  // namespace

double normalize_angle(double theta) {
  double r = std::fmod(theta, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

Rect bounding_box(double width, double height, double x, double y, double theta) {
  const double c = std::abs(std::cos(theta));
  const double s = std::abs(std::sin(theta));
  const double hx = 0.5 * (width * c + height * s);
  const double hy = 0.5 * (width * s + height * c);
  return Rect{x - hx, y - hy, x + hx, y + hy};
}

Rect bounding_box(const PartPlacement& placement, const PartCatalog& catalog) {
  const auto& e = catalog.at(placement.part);
  return bounding_box(e.width, e.height, placement.x, placement.y, placement.theta);
}

double intersection_area(const Rect& a, const Rect& b) {
  const double w = std::min(a.max_x, b.max_x) - std::max(a.min_x, b.min_x);
  if (w <= 0.0) return 0.0;
  const double h = std::min(a.max_y, b.max_y) - std::max(a.min_y, b.min_y);
  if (h <= 0.0) return 0.0;
  return w * h;
}

DistanceSums pair_distance_sums(const KitLayout& layout, const PartCatalog& catalog) {
  const Terms t = layout_terms(layout, catalog);
  return DistanceSums{t.d_same, t.d_diff};
}

double overlap_area(const KitLayout& layout, const PartCatalog& catalog) {
  return layout_terms(layout, catalog).overlap;
}

double kit_fitness_cost(const KitLayout& layout, const PartCatalog& catalog,
                        const FitnessWeights& weights) {
  return fitness_cost(layout_terms(layout, catalog), weights);
}

double containment_violation(const KitLayout& layout, const PartCatalog& catalog) {
  return layout_terms(layout, catalog).containment;
}

CostBreakdown evaluate_layout(const KitLayout& layout, const PartCatalog& catalog,
                              const FitnessWeights& weights) {
  const Terms t = layout_terms(layout, catalog);
  return CostBreakdown{t.d_same, t.d_diff, t.overlap, t.containment, fitness_cost(t, weights)};
}

ArrangeResult arrange_kit(const std::vector<PartId>& ids, const PartCatalog& catalog,
                          const Tray& tray, const FitnessWeights& weights,
                          const CEParams& params) {
  if (ids.empty()) throw KitPreconditionError("arrange_kit: no parts to arrange");
  if (params.elite_count <= 0 || params.elite_count > params.sample_count ||
      params.max_iterations < 1 || params.starts < 1 || params.retry_limit < 0 ||
      !(params.covariance_shrinkage >= 0.0 && params.covariance_shrinkage <= 1.0) ||
      !(params.covariance_smoothing > 0.0 && params.covariance_smoothing <= 1.0) ||
      params.covariance_decay_power < 0.0 || !(params.smoothing > 0.0 && params.smoothing <= 1.0)) {
    throw std::invalid_argument("arrange_kit: invalid CE parameters");
  }
  {
    std::set<PartId> unique(ids.begin(), ids.end());
    if (unique.size() != ids.size()) throw std::invalid_argument("arrange_kit: duplicate part ids");
  }
  const auto parts = pack(ids, catalog);
  double total_area = 0.0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& p = parts[k];
    total_area += p.width * p.height;
    const bool fits_upright = p.width <= tray.width && p.height <= tray.height;
    const bool fits_turned = p.height <= tray.width && p.width <= tray.height;
    if (!fits_upright && !fits_turned) {
      throw KitPreconditionError("arrange_kit: part " + ids[k] + " does not fit on the tray");
    }
  }
  if (total_area > tray.area()) {
    throw KitPreconditionError("arrange_kit: total part area exceeds tray area");
  }

  const int dims = static_cast<int>(3 * parts.size());
  const int samples = params.sample_count;
  const int elites = params.elite_count;

  ArrangeResult result;
  std::vector<double> best_overall;
  double best_overall_score = std::numeric_limits<double>::infinity();
  std::vector<Rect> boxes;

  result.cost = std::numeric_limits<double>::infinity();
  bool found = false;
  for (int attempt = 0; attempt < params.starts + params.retry_limit; ++attempt) {
    std::mt19937_64 rng(derive_seed(params.seed, static_cast<std::uint64_t>(attempt)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    Eigen::VectorXd mean(dims);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dims, dims);
    for (std::size_t k = 0; k < parts.size(); ++k) {
      mean[3 * k] = unit(rng) * tray.width;
      mean[3 * k + 1] = unit(rng) * tray.height;
      mean[3 * k + 2] = unit(rng) * kTwoPi;
      cov(3 * k, 3 * k) = std::pow(tray.width / 2.0, 2);
      cov(3 * k + 1, 3 * k + 1) = std::pow(tray.height / 2.0, 2);
      cov(3 * k + 2, 3 * k + 2) = std::pow(std::numbers::pi / 2.0, 2);
    }

    Eigen::MatrixXd pop(dims, samples);
    std::vector<double> scores(samples);
    std::vector<int> order(samples);
    std::vector<double> best_feasible;
    double best_feasible_cost = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;

    for (int it = 0; it < params.max_iterations; ++it) {
      ++iterations;
      Eigen::MatrixXd lower;
      double extra = 0.0;
      for (;;) {
        Eigen::LLT<Eigen::MatrixXd> llt(cov + extra * Eigen::MatrixXd::Identity(dims, dims));
        if (llt.info() == Eigen::Success) {
          lower = llt.matrixL();
          break;
        }
        extra = extra == 0.0 ? std::max(params.cov_jitter, 1e-12) : extra * 10.0;
      }

      // All draws happen up front in one stream so scoring order cannot affect results.
      Eigen::MatrixXd z(dims, samples);
      for (int s = 0; s < samples; ++s) {
        for (int d = 0; d < dims; ++d) z(d, s) = normal(rng);
      }
      pop.noalias() = lower.triangularView<Eigen::Lower>() * z;
      pop.colwise() += mean;

      for (int s = 0; s < samples; ++s) {
        double* v = pop.col(s).data();
        // Clip centroids so the rotated envelope stays on the tray where it can.
        for (std::size_t k = 0; k < parts.size(); ++k) {
          const Rect box = bounding_box(parts[k].width, parts[k].height, 0.0, 0.0, v[3 * k + 2]);
          v[3 * k] = clip_axis(v[3 * k], box.max_x, tray.width);
          v[3 * k + 1] = clip_axis(v[3 * k + 1], box.max_y, tray.height);
        }
        const Terms t = score_terms(v, parts, tray, boxes);
        const double cost = fitness_cost(t, weights);
        scores[s] = cost + params.containment_penalty_weight * t.containment;
        if (t.containment <= 0.0 && t.overlap <= kOverlapTolerance && cost < best_feasible_cost) {
          // Re-check with the angles as they will be reported.
          std::vector<double> reported(v, v + dims);
          for (std::size_t k = 0; k < parts.size(); ++k) {
            reported[3 * k + 2] = normalize_angle(reported[3 * k + 2]);
          }
          const Terms rt = score_terms(reported.data(), parts, tray, boxes);
          if (rt.containment <= 0.0 && rt.overlap <= kOverlapTolerance) {
            best_feasible_cost = fitness_cost(rt, weights);
            best_feasible = std::move(reported);
          }
        }
        if (scores[s] < best_overall_score) {
          best_overall_score = scores[s];
          best_overall.assign(v, v + dims);
        }
      }
      result.best_score_history.push_back(best_overall_score);

      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return scores[a] < scores[b]; });

      Eigen::MatrixXd elite(dims, elites);
      for (int e = 0; e < elites; ++e) elite.col(e) = pop.col(order[e]);
      const Eigen::VectorXd elite_mean = elite.rowwise().mean();
      const Eigen::MatrixXd centered = elite.colwise() - elite_mean;
      Eigen::MatrixXd elite_cov = (centered * centered.transpose()) / static_cast<double>(elites);
      if (params.covariance_shrinkage > 0.0) {
        const Eigen::VectorXd diag = elite_cov.diagonal();
        elite_cov *= 1.0 - params.covariance_shrinkage;
        elite_cov.diagonal() = diag;
      }
      const double a = params.smoothing;
      const double q = params.covariance_decay_power;
      const double b = q > 0.0 ? params.covariance_smoothing *
                                     (1.0 - std::pow(1.0 - 1.0 / (it + 1), q))
                               : a;
      mean = a * elite_mean + (1.0 - a) * mean;
      cov = b * elite_cov + (1.0 - b) * cov;
      cov.diagonal().array() += params.cov_jitter;

      double max_std = 0.0;
      for (std::size_t k = 0; k < parts.size(); ++k) {
        // Angular spread as displacement at the part's half-diagonal.
        const double reach = 0.5 * std::hypot(parts[k].width, parts[k].height);
        max_std = std::max({max_std, std::sqrt(cov(3 * k, 3 * k)),
                            std::sqrt(cov(3 * k + 1, 3 * k + 1)),
                            reach * std::sqrt(cov(3 * k + 2, 3 * k + 2))});
      }
      if (max_std < params.convergence_std_tol) {
        converged = true;
        break;
      }
    }

    if (!best_feasible.empty() && best_feasible_cost < result.cost) {
      result.layout = unflatten(best_feasible.data(), ids, tray);
      result.cost = best_feasible_cost;
      result.iterations = iterations;
      result.best_start = attempt;
      result.converged = converged;
      found = true;
    }
    if (found && attempt + 1 >= params.starts) return result;
  }

  std::ostringstream msg;
  msg << "arrange_kit: no layout without overlap inside the tray after "
      << params.starts + params.retry_limit << " attempts (best penalized score " << best_overall_score
      << ")";
  throw KitInfeasibleError(msg.str(), unflatten(best_overall.data(), ids, tray),
                           best_overall_score);
}

nlohmann::json layout_to_json(const KitLayout& layout) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : layout.placements) {
    out.push_back({{"part_id", p.part}, {"x_mm", p.x}, {"y_mm", p.y}, {"theta_rad", p.theta}});
  }
  return out;
}

KitLayout layout_from_json(const nlohmann::json& doc, const Tray& tray) {
  if (!doc.is_array()) throw std::invalid_argument("layout: expected array");
  KitLayout layout;
  layout.tray = tray;
  for (const auto& p : doc) {
    layout.placements.push_back(PartPlacement{p.at("part_id").get<std::string>(),
                                              p.at("x_mm").get<double>(),
                                              p.at("y_mm").get<double>(),
                                              normalize_angle(p.at("theta_rad").get<double>())});
  }
  return layout;
}

std::string layout_to_svg(const KitLayout& layout, const PartCatalog& catalog) {
  static constexpr const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2",
                                             "#59a14f", "#edc948", "#b07aa1", "#ff9da7"};
  std::vector<PartTypeId> types;
  std::ostringstream svg;
  const double margin = 10.0;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << -margin << ' ' << -margin
      << ' ' << layout.tray.width + 2 * margin << ' ' << layout.tray.height + 2 * margin
      << "\">\n";
  svg << "  <rect x=\"0\" y=\"0\" width=\"" << layout.tray.width << "\" height=\""
      << layout.tray.height << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (const auto& p : layout.placements) {
    const auto& e = catalog.at(p.part);
    auto it = std::find(types.begin(), types.end(), e.type);
    const std::size_t colour = static_cast<std::size_t>(it - types.begin());
    if (it == types.end()) types.push_back(e.type);
    const double deg = p.theta * 180.0 / std::numbers::pi;
    svg << "  <g transform=\"translate(" << p.x << ' ' << p.y << ") rotate(" << deg << ")\">"
        << "<rect x=\"" << -e.width / 2 << "\" y=\"" << -e.height / 2 << "\" width=\"" << e.width
        << "\" height=\"" << e.height << "\" fill=\"" << kPalette[colour % 8]
        << "\" fill-opacity=\"0.6\" stroke=\"black\"/><title>" << p.part << " (" << e.type
        << ")</title></g>\n";
    const Rect box = bounding_box(p, catalog);
    svg << "  <rect x=\"" << box.min_x << "\" y=\"" << box.min_y << "\" width=\"" << box.width()
        << "\" height=\"" << box.height()
        << "\" fill=\"none\" stroke=\"grey\" stroke-dasharray=\"2,2\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace jitkit
