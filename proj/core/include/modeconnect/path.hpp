#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "modeconnect/dataset.hpp"
#include "modeconnect/mlp.hpp"

namespace mc {

/// One parametric segment of a connection path, mapping t in [0,1] to a
/// weight vector. Either a closed-form evaluator or a polyline over
/// breakpoints. Evaluation at t = 0 and t = 1 yields the leg endpoints
/// exactly (bitwise).
class PathLeg {
 public:
  static PathLeg closed_form(std::string method, std::vector<int> layers_touched,
                             std::function<WeightVector(double)> eval);
  /// Closed-form leg whose interior evaluator may carry round-trip error
  /// at the ends; t = 0 / t = 1 return the stored endpoints instead.
  static PathLeg forced_endpoints(std::string method, std::vector<int> layers_touched, WeightVector start,
                                  WeightVector end, std::function<WeightVector(double)> eval);
  static PathLeg polyline(std::string method, std::vector<int> layers_touched, std::vector<WeightVector> breakpoints);

  /// Weights at parameter t in [0,1]; throws InvalidArgument outside.
  WeightVector at(double t) const;
  WeightVector start() const { return at(0.0); }
  WeightVector end() const { return at(1.0); }

  const std::string& method() const { return method_; }
  const std::vector<int>& layers_touched() const { return layers_touched_; }
  bool is_polyline() const { return !breakpoints_.empty(); }
  const std::vector<WeightVector>& breakpoints() const { return breakpoints_; }

 private:
  PathLeg() = default;
  std::string method_;
  std::vector<int> layers_touched_;
  std::function<WeightVector(double)> eval_;
  std::vector<WeightVector> breakpoints_;
};

/// A chain of legs from theta_a to theta_b. Consecutive legs join
/// exactly: leg i at t=1 equals leg i+1 at t=0.
struct ConnectionPath {
  std::string method;
  std::vector<PathLeg> legs;
  std::shared_ptr<const WeightVector> theta_a;
  std::shared_ptr<const WeightVector> theta_b;

  int num_legs() const { return static_cast<int>(legs.size()); }
};

/// Weights at (leg index, local t).
WeightVector eval_point(const ConnectionPath& path, int leg, double t);

struct PathReportRow {
  int leg = 0;
  double t = 0.0;
  double global_t = 0.0;
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Loss/accuracy along a path on a uniform per-leg grid, plus the
/// worst-point summary used as the figure of merit.
struct PathReport {
  std::string method;
  std::vector<PathReportRow> rows;
  double worst_accuracy = 0.0;
  double worst_loss = 0.0;
  double argworst_global_t = 0.0;  // location of the accuracy minimum
  double endpoint_accuracy_a = 0.0;
  double endpoint_accuracy_b = 0.0;

  /// CSV with a versioned header comment and columns
  /// leg,t,global_t,loss,accuracy.
  std::string to_csv() const;
  /// JSON summary {method, worst_accuracy, worst_loss, argworst_global_t,
  /// endpoints_accuracy}.
  std::string summary_json() const;
};

/// Evaluates the path on points_per_leg uniform t values per leg
/// (shared boundaries reported once). Grid size is
/// legs * points_per_leg - (legs - 1).
PathReport evaluate(const ConnectionPath& path, const MlpSpec& spec, const Dataset& data, int points_per_leg = 25);

}  // namespace mc
