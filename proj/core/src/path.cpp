#include "modeconnect/path.hpp"

#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <sstream>

#include "modeconnect/errors.hpp"

namespace mc {

PathLeg PathLeg::closed_form(std::string method, std::vector<int> layers_touched,
                             std::function<WeightVector(double)> eval) {
  PathLeg leg;
  leg.method_ = std::move(method);
  leg.layers_touched_ = std::move(layers_touched);
  leg.eval_ = std::move(eval);
  return leg;
}

PathLeg PathLeg::forced_endpoints(std::string method, std::vector<int> layers_touched, WeightVector start,
                                  WeightVector end, std::function<WeightVector(double)> eval) {
  auto s = std::make_shared<const WeightVector>(std::move(start));
  auto e = std::make_shared<const WeightVector>(std::move(end));
  auto inner = std::move(eval);
  return closed_form(std::move(method), std::move(layers_touched),
                     [s, e, inner = std::move(inner)](double t) -> WeightVector {
                       if (t == 0.0) return *s;
                       if (t == 1.0) return *e;
                       return inner(t);
                     });
}

PathLeg PathLeg::polyline(std::string method, std::vector<int> layers_touched,
                          std::vector<WeightVector> breakpoints) {
  if (breakpoints.size() < 2) throw InvalidArgument("polyline leg needs at least 2 breakpoints");
  PathLeg leg;
  leg.method_ = std::move(method);
  leg.layers_touched_ = std::move(layers_touched);
  leg.breakpoints_ = std::move(breakpoints);
  return leg;
}

namespace {

WeightVector lerp_weights(const WeightVector& a, const WeightVector& b, double t) {
  WeightVector out = a;
  for (std::size_t k = 0; k < a.layers.size(); ++k) {
    const double* pa = a.layers[k].data();
    const double* pb = b.layers[k].data();
    double* po = out.layers[k].data();
    const double u = 1.0 - t;
    for (std::size_t i = 0; i < a.layers[k].size(); ++i) po[i] = u * pa[i] + t * pb[i];
  }
  return out;
}

}  // namespace

WeightVector PathLeg::at(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("PathLeg::at: t = " + std::to_string(t) + " outside [0,1]");
  if (!breakpoints_.empty()) {
    const int segments = static_cast<int>(breakpoints_.size()) - 1;
    if (t == 0.0) return breakpoints_.front();
    if (t == 1.0) return breakpoints_.back();
    const double scaled = t * segments;
    int seg = static_cast<int>(scaled);
    if (seg >= segments) seg = segments - 1;
    const double local = scaled - seg;
    return lerp_weights(breakpoints_[static_cast<std::size_t>(seg)], breakpoints_[static_cast<std::size_t>(seg) + 1],
                        local);
  }
  return eval_(t);
}

WeightVector eval_point(const ConnectionPath& path, int leg, double t) {
  if (leg < 0 || leg >= path.num_legs()) throw InvalidArgument("eval_point: leg index out of range");
  return path.legs[static_cast<std::size_t>(leg)].at(t);
}

PathReport evaluate(const ConnectionPath& path, const MlpSpec& spec, const Dataset& data, int points_per_leg) {
  if (points_per_leg < 2) throw InvalidArgument("evaluate: points_per_leg must be >= 2");
  if (path.legs.empty()) throw InvalidArgument("evaluate: path has no legs");
  data.validate();

  PathReport report;
  report.method = path.method;
  const int legs = path.num_legs();
  for (int leg = 0; leg < legs; ++leg) {
    const int first = (leg == 0) ? 0 : 1;  // shared boundary reported once
    for (int i = first; i < points_per_leg; ++i) {
      const double t = static_cast<double>(i) / (points_per_leg - 1);
      const WeightVector w = path.legs[static_cast<std::size_t>(leg)].at(t);
      const Matrix logits = forward(spec, w, data.features);
      PathReportRow row;
      row.leg = leg;
      row.t = t;
      row.global_t = (leg + t) / legs;
      row.loss = cross_entropy(logits, data.labels);
      row.accuracy = accuracy(logits, data.labels);
      report.rows.push_back(row);
    }
  }

  report.worst_accuracy = report.rows.front().accuracy;
  report.worst_loss = report.rows.front().loss;
  report.argworst_global_t = report.rows.front().global_t;
  for (const PathReportRow& row : report.rows) {
    if (row.accuracy < report.worst_accuracy) {
      report.worst_accuracy = row.accuracy;
      report.argworst_global_t = row.global_t;
    }
    report.worst_loss = std::max(report.worst_loss, row.loss);
  }
  report.endpoint_accuracy_a = report.rows.front().accuracy;
  report.endpoint_accuracy_b = report.rows.back().accuracy;
  return report;
}

std::string PathReport::to_csv() const {
  std::ostringstream out;
  out << "# modeconnect path-report csv v1\n";
  out << "leg,t,global_t,loss,accuracy\n";
  char buf[160];
  for (const PathReportRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.17g,%.17g\n", r.leg, r.t, r.global_t, r.loss, r.accuracy);
    out << buf;
  }
  return out.str();
}

std::string PathReport::summary_json() const {
  nlohmann::json j;
  j["method"] = method;
  j["worst_accuracy"] = worst_accuracy;
  j["worst_loss"] = worst_loss;
  j["argworst_global_t"] = argworst_global_t;
  j["endpoints_accuracy"] = {endpoint_accuracy_a, endpoint_accuracy_b};
  return j.dump(2);
}

}  // namespace mc
