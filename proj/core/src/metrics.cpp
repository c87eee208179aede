#include "nmguard/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "nmguard/csv.hpp"
#include "nmguard/error.hpp"

namespace nmguard {

namespace {

std::optional<double> ratio(double num, double den) {
  if (den == 0.0) return std::nullopt;
  return 100.0 * num / den;
}

void check_lengths(std::span<const Label> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) {
    throw UsageError("labels (" + std::to_string(labels.size()) + ") and scores (" +
                     std::to_string(scores.size()) + ") differ in length");
  }
}

// Cumulative (tp, fp) after admitting each block of equal scores, high to low.
struct Sweep {
  std::vector<double> thresholds;
  std::vector<double> tp, fp;
  double positives = 0.0, negatives = 0.0;
};

Sweep sweep(std::span<const Label> labels, std::span<const double> scores) {
  check_lengths(labels, scores);
  Sweep s;
  for (auto l : labels) (l == Label::Malicious ? s.positives : s.negatives) += 1.0;
  if (s.positives == 0.0 || s.negatives == 0.0) throw DataError("curve needs both classes in the label set");
  for (double v : scores) {
    if (std::isnan(v)) throw DataError("curve scores must not be NaN");
  }
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double tp = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    const double value = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == value; ++i) {
      (labels[order[i]] == Label::Malicious ? tp : fp) += 1.0;
    }
    s.thresholds.push_back(value);
    s.tp.push_back(tp);
    s.fp.push_back(fp);
  }
  return s;
}

double trapezoid(const std::vector<CurvePoint>& pts) {
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    area += (pts[i].x - pts[i - 1].x) * (pts[i].y + pts[i - 1].y) / 2.0;
  }
  return area;
}

nlohmann::ordered_json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json("undefined");
}

void write_curves(const std::filesystem::path& path, std::span<const NamedCurve> curves, const char* header) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << header << '\n';
  for (const auto& c : curves) {
    for (const auto& p : c.curve.points) {
      out << c.name << ',' << (std::isinf(p.threshold) ? std::string("inf") : csv::format_exact(p.threshold))
          << ',' << csv::format_exact(p.x) << ',' << csv::format_exact(p.y) << '\n';
    }
  }
}

}  // namespace

ConfusionCounts confusion(std::span<const Label> labels, std::span<const double> scores, double threshold) {
  check_lengths(labels, scores);
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == Label::Malicious) {
      ++(predicted ? c.tp : c.fn);
    } else {
      ++(predicted ? c.fp : c.tn);
    }
  }
  return c;
}

ScalarMetrics scalar_metrics(const ConfusionCounts& c) {
  const auto tp = double(c.tp), tn = double(c.tn), fp = double(c.fp), fn = double(c.fn);
  ScalarMetrics m;
  m.acc = ratio(tp + tn, tp + tn + fp + fn);
  m.pr = ratio(tp, tp + fp);
  m.dr = ratio(tp, tp + fn);
  m.fa = ratio(fp, fp + tn);
  if (m.dr && m.fa) m.hd = *m.dr - *m.fa;
  if (m.pr && m.dr && *m.pr + *m.dr > 0.0) m.f1 = 2.0 * *m.pr * *m.dr / (*m.pr + *m.dr);
  return m;
}

std::optional<double> hd_discrepancy(double dr, double fa, double printed_hd, double tolerance) {
  const double diff = (dr - fa) - printed_hd;
  if (std::abs(diff) > tolerance) return diff;
  return std::nullopt;
}

Curve roc_curve(std::span<const Label> labels, std::span<const double> scores) {
  const Sweep s = sweep(labels, scores);
  Curve c;
  c.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  for (std::size_t i = 0; i < s.thresholds.size(); ++i) {
    c.points.push_back({s.thresholds[i], s.fp[i] / s.negatives, s.tp[i] / s.positives});
  }
  c.auc = trapezoid(c.points);
  return c;
}

Curve pr_curve(std::span<const Label> labels, std::span<const double> scores) {
  const Sweep s = sweep(labels, scores);
  Curve c;
  c.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 1.0});
  for (std::size_t i = 0; i < s.thresholds.size(); ++i) {
    c.points.push_back({s.thresholds[i], s.tp[i] / s.positives, s.tp[i] / (s.tp[i] + s.fp[i])});
  }
  c.auc = trapezoid(c.points);
  return c;
}

MetricReport evaluate_scores(std::string name, std::span<const Label> labels, std::span<const double> scores,
                             double threshold) {
  MetricReport r;
  r.name = std::move(name);
  r.threshold = threshold;
  r.counts = confusion(labels, scores, threshold);
  r.scalars = scalar_metrics(r.counts);
  r.auc_roc = roc_curve(labels, scores).auc;
  r.auc_pr = pr_curve(labels, scores).auc;
  return r;
}

std::string metrics_json(std::span<const MetricReport> reports) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    nlohmann::ordered_json j;
    j["model"] = r.name;
    j["threshold"] = r.threshold;
    j["acc"] = opt_json(r.scalars.acc);
    j["pr"] = opt_json(r.scalars.pr);
    j["dr"] = opt_json(r.scalars.dr);
    j["fa"] = opt_json(r.scalars.fa);
    j["hd"] = opt_json(r.scalars.hd);
    j["f1"] = opt_json(r.scalars.f1);
    j["auc_roc"] = r.auc_roc;
    j["auc_pr"] = r.auc_pr;
    j["confusion"] = {{"tp", r.counts.tp}, {"tn", r.counts.tn}, {"fp", r.counts.fp}, {"fn", r.counts.fn}};
    arr.push_back(std::move(j));
  }
  nlohmann::ordered_json doc;
  doc["format"] = "nmguard-metrics/1";
  doc["positive_class"] = "malicious";
  doc["reports"] = std::move(arr);
  return doc.dump(2);
}

void write_metrics_json(const std::filesystem::path& path, std::span<const MetricReport> reports) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << metrics_json(reports) << '\n';
}

void write_roc_csv(const std::filesystem::path& path, std::span<const NamedCurve> curves) {
  write_curves(path, curves, "model,threshold,fpr,tpr");
}

void write_pr_csv(const std::filesystem::path& path, std::span<const NamedCurve> curves) {
  write_curves(path, curves, "model,threshold,recall,precision");
}

std::string format_metric(const std::optional<double>& value, int decimals) {
  if (!value) return "undefined";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, *value);
  return buf;
}

}  // namespace nmguard
