#include "crloc/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace crloc::metrics {

void GazeRecord::validate() const {
  if (t.size() != s.size()) throw std::invalid_argument("GazeRecord: t/s length mismatch");
  for (size_t i = 1; i < t.size(); ++i)
    if (t[i] <= t[i - 1])
      throw std::invalid_argument("GazeRecord: timestamps must be strictly increasing");
  if (t.size() >= 2 && rate > 0.0) {
    const double implied = (t.size() - 1) / (t.back() - t.front());
    if (std::abs(implied - rate) > 0.01 * rate)
      throw std::invalid_argument("GazeRecord: rate inconsistent with timestamps");
  }
}

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty set");
  std::sort(v.begin(), v.end());
  const size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

int window_samples(const GazeRecord& rec, double window_s) {
  rec.validate();
  if (rec.rate <= 0.0) throw std::invalid_argument("precision: sampling rate not set");
  const int n = static_cast<int>(std::lround(window_s * rec.rate));
  if (n < 2) throw std::invalid_argument("precision: window shorter than 2 samples");
  if (static_cast<size_t>(n) > rec.s.size())
    throw std::invalid_argument("precision: fewer samples than one window");
  return n;
}

}  // namespace

double rms_s2s(const GazeRecord& rec, double window_s) {
  const int n = window_samples(rec, window_s);
  const size_t positions = rec.s.size() - n + 1;
  std::vector<double> window_rms;
  window_rms.reserve(positions);
  for (size_t w = 0; w < positions; ++w) {
    double sum = 0.0;
    for (int i = 0; i < n - 1; ++i) sum += (rec.s[w + i + 1] - rec.s[w + i]).squaredNorm();
    window_rms.push_back(std::sqrt(sum / (n - 1)));
  }
  return median_of(std::move(window_rms));
}

double std_precision(const GazeRecord& rec, double window_s) {
  const int n = window_samples(rec, window_s);
  const size_t positions = rec.s.size() - n + 1;
  std::vector<double> window_std;
  window_std.reserve(positions);
  for (size_t w = 0; w < positions; ++w) {
    Vec2 mean = Vec2::Zero();
    for (int i = 0; i < n; ++i) mean += rec.s[w + i];
    mean /= n;
    double var = 0.0;
    for (int i = 0; i < n; ++i) var += (rec.s[w + i] - mean).squaredNorm();
    window_std.push_back(std::sqrt(var / n));  // population variance, both axes summed
  }
  return median_of(std::move(window_std));
}

namespace {

Eigen::Matrix<double, 1, 6> poly_row(const Vec2& p) {
  Eigen::Matrix<double, 1, 6> row;
  row << 1.0, p.x(), p.y(), p.x() * p.x(), p.y() * p.y(), p.x() * p.y();
  return row;
}

}  // namespace

Calibration fit_calibration(std::span<const Vec2> pcr, std::span<const Vec2> target_pos) {
  if (pcr.size() != target_pos.size())
    throw std::invalid_argument("fit_calibration: point count mismatch");
  if (pcr.size() < 6)
    throw std::invalid_argument("fit_calibration: need at least 6 points, got " +
                                std::to_string(pcr.size()));
  const auto n = static_cast<Eigen::Index>(pcr.size());
  Eigen::MatrixXd design(n, 6);
  Eigen::VectorXd tx(n), ty(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design.row(i) = poly_row(pcr[i]);
    tx(i) = target_pos[i].x();
    ty(i) = target_pos[i].y();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < 6)
    throw std::runtime_error("fit_calibration: design matrix rank " +
                             std::to_string(qr.rank()) + " of 6 (degenerate grid)");
  Calibration cal;
  cal.coeff_x = qr.solve(tx);
  cal.coeff_y = qr.solve(ty);
  const double rx = (design * cal.coeff_x - tx).squaredNorm();
  const double ry = (design * cal.coeff_y - ty).squaredNorm();
  cal.residual_rms = std::sqrt((rx + ry) / (2.0 * static_cast<double>(n)));
  return cal;
}

Calibration fit_calibration(const GazeRecord& pcr, std::span<const FixationTarget> targets) {
  pcr.validate();
  std::vector<Vec2> points, positions;
  for (const FixationTarget& ft : targets) {
    if (ft.offset <= ft.onset) throw std::invalid_argument("FixationTarget: offset <= onset");
    std::vector<Vec2> in_window;
    for (size_t i = 0; i < pcr.t.size(); ++i)
      if (pcr.t[i] >= ft.onset && pcr.t[i] < ft.offset) in_window.push_back(pcr.s[i]);
    if (in_window.empty()) continue;
    points.push_back(median2(in_window));
    positions.push_back(ft.position);
  }
  return fit_calibration(points, positions);
}

Vec2 apply_calibration(const Calibration& cal, const Vec2& pcr) {
  const auto row = poly_row(pcr);
  return Vec2(row * cal.coeff_x, row * cal.coeff_y);
}

std::vector<Vec2> apply_calibration(const Calibration& cal, std::span<const Vec2> pcr) {
  std::vector<Vec2> out;
  out.reserve(pcr.size());
  for (const Vec2& p : pcr) out.push_back(apply_calibration(cal, p));
  return out;
}

Vec2 median2(std::span<const Vec2> samples) {
  std::vector<double> xs, ys;
  xs.reserve(samples.size());
  ys.reserve(samples.size());
  for (const Vec2& p : samples) {
    xs.push_back(p.x());
    ys.push_back(p.y());
  }
  return Vec2(median_of(std::move(xs)), median_of(std::move(ys)));
}

AccuracyResult accuracy(const GazeRecord& gaze, std::span<const FixationTarget> targets) {
  gaze.validate();
  if (targets.empty()) throw std::invalid_argument("accuracy: no targets");
  // Group repeated fixations of the same on-screen position.
  std::map<std::pair<double, double>, std::vector<double>> per_position;
  AccuracyResult res;
  for (const FixationTarget& ft : targets) {
    std::vector<Vec2> in_window;
    for (size_t i = 0; i < gaze.t.size(); ++i)
      if (gaze.t[i] >= ft.onset && gaze.t[i] < ft.offset) in_window.push_back(gaze.s[i]);
    if (in_window.empty()) {
      ++res.excluded_targets;
      continue;
    }
    const double offset = (median2(in_window) - ft.position).norm();
    per_position[{ft.position.x(), ft.position.y()}].push_back(offset);
  }
  if (per_position.empty()) throw std::runtime_error("accuracy: no target interval had samples");
  double sum = 0.0;
  for (const auto& [pos, offsets] : per_position) {
    double group = 0.0;
    for (double o : offsets) group += o;
    sum += group / static_cast<double>(offsets.size());
  }
  res.mean_offset = sum / static_cast<double>(per_position.size());
  return res;
}

}  // namespace crloc::metrics
