#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nmguard/types.hpp"

namespace nmguard {

/// Counts at threshold theta: a sample is predicted malicious when score >= theta.
/// Malicious is the positive class.
ConfusionCounts confusion(std::span<const Label> labels, std::span<const double> scores, double threshold = 0.5);

/// Percentages; std::nullopt marks a ratio whose denominator is zero.
struct ScalarMetrics {
  std::optional<double> acc, pr, dr, fa, hd, f1;
};

ScalarMetrics scalar_metrics(const ConfusionCounts& counts);

/// Recomputes HD from printed DR and FA; returns the discrepancy when it
/// exceeds `tolerance` percentage points.
std::optional<double> hd_discrepancy(double dr, double fa, double printed_hd, double tolerance = 0.005);

struct CurvePoint {
  double threshold = 0.0;  // +inf for the leading sentinel
  double x = 0.0;          // fpr (ROC) or recall (P-R)
  double y = 0.0;          // tpr (ROC) or precision (P-R)
};

struct Curve {
  std::vector<CurvePoint> points;
  double auc = 0.0;
};

/// Thresholds sweep the sorted unique scores from high to low; equal scores
/// move together. Both classes must be present.
Curve roc_curve(std::span<const Label> labels, std::span<const double> scores);
Curve pr_curve(std::span<const Label> labels, std::span<const double> scores);

struct MetricReport {
  std::string name;
  ScalarMetrics scalars;
  double auc_roc = 0.0;
  double auc_pr = 0.0;
  ConfusionCounts counts;
  double threshold = 0.5;
};

MetricReport evaluate_scores(std::string name, std::span<const Label> labels, std::span<const double> scores,
                             double threshold = 0.5);

/// Deterministic JSON rendering of a list of reports (`null` for undefined).
std::string metrics_json(std::span<const MetricReport> reports);
void write_metrics_json(const std::filesystem::path& path, std::span<const MetricReport> reports);

struct NamedCurve {
  std::string name;
  Curve curve;
};

/// `model,threshold,fpr,tpr`
void write_roc_csv(const std::filesystem::path& path, std::span<const NamedCurve> curves);
/// `model,threshold,recall,precision`
void write_pr_csv(const std::filesystem::path& path, std::span<const NamedCurve> curves);

/// "81.25" or "undefined".
std::string format_metric(const std::optional<double>& value, int decimals = 2);

}  // namespace nmguard
