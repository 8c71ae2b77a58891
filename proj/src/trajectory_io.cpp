#include "tobit/trajectory_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include "tobit/savitzky_golay.hpp"

namespace tobit {

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    cells.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_number(std::string_view text, double& value) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::vector<std::string> canonical_header() {
  std::vector<std::string> header{"t"};
  for (auto joint : kKinectJoints) {
    for (auto axis : kAxisNames) header.push_back(std::string(joint) + "_" + std::string(axis));
  }
  return header;
}

}  // namespace

void TrajectorySeries::validate() const {
  if (channels.rows() == 0) throw EmptyFile("trajectory has no frames");
  if (timestamps.size() != channels.rows()) {
    throw InvalidArgument("timestamps and channels disagree on the frame count");
  }
  if (!channel_names.empty() && static_cast<Eigen::Index>(channel_names.size()) != channels.cols()) {
    throw InvalidArgument("channel names and channels disagree");
  }
  for (Eigen::Index k = 1; k < timestamps.size(); ++k) {
    if (!(timestamps(k) > timestamps(k - 1))) {
      throw NonMonotoneTimestamps("timestamps must increase strictly");
    }
  }
}

void SkeletonFrameSet::validate() const {
  if (frames() == 0) throw EmptyFile("skeleton has no frames");
  if (joints.size() != joint_names.size()) throw InvalidArgument("joint names and joints disagree");
  for (const auto& j : joints) {
    if (j.channels.rows() != frames() || j.channels.cols() != 3) {
      throw InvalidArgument("every joint needs frames x 3 channels");
    }
  }
}

Eigen::MatrixXd SkeletonFrameSet::stacked() const {
  Eigen::MatrixXd out(frames(), static_cast<Eigen::Index>(3 * joints.size()));
  for (std::size_t j = 0; j < joints.size(); ++j) {
    out.middleCols(static_cast<Eigen::Index>(3 * j), 3) = joints[j].channels;
  }
  return out;
}

SkeletonFrameSet SkeletonFrameSet::from_stacked(const Eigen::VectorXd& timestamps,
                                                const Eigen::MatrixXd& stacked) {
  if (stacked.cols() != static_cast<Eigen::Index>(3 * kKinectJoints.size()) ||
      stacked.rows() != timestamps.size()) {
    throw SchemaMismatch("stacked skeleton must be frames x 75");
  }
  SkeletonFrameSet set;
  set.timestamps = timestamps;
  for (std::size_t j = 0; j < kKinectJoints.size(); ++j) {
    TrajectorySeries s;
    s.timestamps = timestamps;
    s.channels = stacked.middleCols(static_cast<Eigen::Index>(3 * j), 3);
    s.channel_names = {"x", "y", "z"};
    set.joint_names.emplace_back(kKinectJoints[j]);
    set.joints.push_back(std::move(s));
  }
  return set;
}

ParseReport parse_skeleton_csv(std::istream& in) {
  const auto expected = canonical_header();
  ParseReport report;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<double> times;
  std::vector<double> values;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto cells = split_commas(view);
    if (!have_header) {
      if (cells.size() != expected.size()) {
        throw SchemaMismatch("header has " + std::to_string(cells.size()) + " columns, expected " +
                             std::to_string(expected.size()));
      }
      for (std::size_t c = 0; c < cells.size(); ++c) {
        if (trim(cells[c]) != expected[c]) {
          throw SchemaMismatch("header column " + std::to_string(c + 1) + " is '" +
                               std::string(trim(cells[c])) + "', expected '" + expected[c] + "'");
        }
      }
      have_header = true;
      continue;
    }
    if (cells.size() != expected.size()) {
      throw SchemaMismatch("line " + std::to_string(line_no) + " has " +
                           std::to_string(cells.size()) + " cells");
    }
    std::vector<double> row(cells.size());
    bool finite = true;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!parse_number(cells[c], row[c])) {
        throw SchemaMismatch("line " + std::to_string(line_no) + " column " +
                             std::to_string(c + 1) + " is not a number");
      }
      finite = finite && std::isfinite(row[c]);
    }
    if (!finite) {
      report.rejected_lines.push_back(line_no);
      continue;
    }
    if (!times.empty() && !(row[0] > times.back())) {
      throw NonMonotoneTimestamps("timestamp on line " + std::to_string(line_no) +
                                  " does not increase");
    }
    times.push_back(row[0]);
    values.insert(values.end(), row.begin() + 1, row.end());
  }
  if (!have_header) throw EmptyFile("no header line found");
  if (times.empty()) throw EmptyFile("no usable frames");

  const auto n = static_cast<Eigen::Index>(times.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(expected.size()) - 1;
  const Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(times.data(), n);
  const Eigen::MatrixXd stacked =
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          values.data(), n, cols);
  report.frames = SkeletonFrameSet::from_stacked(t, stacked);

  if (n >= 3) {
    std::vector<double> dt(times.size() - 1);
    for (std::size_t k = 1; k < times.size(); ++k) dt[k - 1] = times[k] - times[k - 1];
    std::vector<double> sorted = dt;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2),
                     sorted.end());
    const double median = sorted[sorted.size() / 2];
    std::size_t irregular = 0;
    for (double d : dt) irregular += std::abs(d - median) > 0.2 * median ? 1 : 0;
    if (irregular > 0) {
      report.warnings.push_back(std::to_string(irregular) +
                                " frame intervals deviate more than 20% from the median " +
                                format_double(median) + " s");
    }
    for (auto& joint : report.frames.joints) joint.frame_rate_hint = 1.0 / median;
  }
  if (!report.rejected_lines.empty()) {
    report.warnings.push_back(std::to_string(report.rejected_lines.size()) +
                              " rows with non-finite values were dropped");
  }
  return report;
}

ParseReport parse_skeleton_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw EmptyFile("cannot open " + path);
  return parse_skeleton_csv(in);
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

void write_skeleton_csv(std::ostream& out, const SkeletonFrameSet& frames,
                        const std::vector<std::string>& comments) {
  frames.validate();
  for (const auto& c : comments) out << "# " << c << '\n';
  const auto header = canonical_header();
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  const Eigen::MatrixXd stacked = frames.stacked();
  for (Eigen::Index k = 0; k < frames.frames(); ++k) {
    out << format_double(frames.timestamps(k));
    for (Eigen::Index c = 0; c < stacked.cols(); ++c) out << ',' << format_double(stacked(k, c));
    out << '\n';
  }
}

void write_skeleton_csv(const std::string& path, const SkeletonFrameSet& frames,
                        const std::vector<std::string>& comments) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  write_skeleton_csv(out, frames, comments);
}

SkeletonMethod parse_method(std::string_view name) {
  for (auto m : {SkeletonMethod::Raw, SkeletonMethod::SGF, SkeletonMethod::KF, SkeletonMethod::TKF,
                 SkeletonMethod::TKFc, SkeletonMethod::ATKF}) {
    if (method_name(m) == name) return m;
  }
  throw InvalidArgument("unknown method '" + std::string(name) + "'");
}

std::string_view method_name(SkeletonMethod method) {
  switch (method) {
    case SkeletonMethod::Raw: return "raw";
    case SkeletonMethod::SGF: return "sgf";
    case SkeletonMethod::KF: return "kf";
    case SkeletonMethod::TKF: return "tkf";
    case SkeletonMethod::TKFc: return "tkfc";
    case SkeletonMethod::ATKF: return "atkf";
  }
  return "";
}

StateSpaceModel<double> SkeletonFilterParams::model() const {
  StateSpaceModel<double> m;
  m.A = Eigen::Matrix3d::Identity();
  m.H = Eigen::Matrix3d::Identity();
  m.Q = Eigen::Matrix3d::Identity() * q;
  m.R = Eigen::Matrix3d::Identity() * r;
  return m;
}

CensorBounds<double> SkeletonFilterParams::device_bounds() const { return {lower, upper}; }

Eigen::MatrixXd filter_series(const Eigen::MatrixXd& channels, SkeletonMethod method,
                              const SkeletonFilterParams& params, const StepObserver& observer) {
  if (channels.cols() != 3) throw InvalidArgument("skeleton joints have three channels");
  if (channels.rows() == 0) throw EmptyFile("series has no frames");
  switch (method) {
    case SkeletonMethod::Raw:
      return channels;
    case SkeletonMethod::SGF:
      return savitzky_golay<double>(channels, params.window, params.order);
    default:
      break;
  }

  FilterKind kind = FilterKind::KF;
  if (method == SkeletonMethod::TKF) kind = FilterKind::TKF;
  if (method == SkeletonMethod::TKFc) kind = FilterKind::TKFc;
  if (method == SkeletonMethod::ATKF) kind = FilterKind::ATKF;

  const GaussianBelief<double> initial{channels.row(0).transpose(),
                                       Eigen::Matrix3d::Identity() * params.p0};
  TobitFilter<double> filter(kind, params.model(), initial, params.device_bounds(),
                             kind == FilterKind::ATKF ? Eigen::VectorXd(params.c)
                                                      : Eigen::VectorXd());
  Eigen::MatrixXd out(channels.rows(), 3);
  out.row(0) = channels.row(0);
  for (Eigen::Index k = 1; k < channels.rows(); ++k) {
    FilterStepReport<double> report;
    try {
      report = filter.step(channels.row(k).transpose());
    } catch (const Error& e) {
      throw Error("frame " + std::to_string(k) + ": " + e.what());
    }
    if (observer) observer(k, report);
    out.row(k) = report.posterior.mean.transpose();
  }
  return out;
}

SkeletonFrameSet filter_skeleton(const SkeletonFrameSet& frames, SkeletonMethod method,
                                 const SkeletonFilterParams& params) {
  frames.validate();
  SkeletonFrameSet out = frames;
  const std::size_t n = frames.joints.size();
  std::vector<std::string> errors(n);
  {
    const unsigned threads =
        std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()), static_cast<unsigned>(n));
    std::vector<std::jthread> workers;
    for (unsigned t = 0; t < threads; ++t) {
      workers.emplace_back([&, t] {
        for (std::size_t j = t; j < n; j += threads) {
          try {
            out.joints[j].channels = filter_series(frames.joints[j].channels, method, params);
          } catch (const std::exception& e) {
            errors[j] = e.what();
          }
        }
      });
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!errors[j].empty()) throw Error("joint " + frames.joint_names[j] + ", " + errors[j]);
  }
  return out;
}

std::vector<RmseRow> rmse_at_lag(const SkeletonFrameSet& test, const SkeletonFrameSet& reference,
                                 int lag) {
  test.validate();
  reference.validate();
  if (test.joint_names != reference.joint_names) {
    throw SchemaMismatch("test and reference have different joints");
  }
  const Eigen::Index first = std::max<Eigen::Index>(0, -lag);
  const Eigen::Index last = std::min<Eigen::Index>(test.frames(), reference.frames() - lag);
  if (last <= first) throw NoOverlap("no overlapping frames at lag " + std::to_string(lag));
  const Eigen::Index len = last - first;

  std::vector<RmseRow> rows;
  for (std::size_t j = 0; j < test.joints.size(); ++j) {
    const Eigen::MatrixXd diff = test.joints[j].channels.middleRows(first, len) -
                                 reference.joints[j].channels.middleRows(first + lag, len);
    const Eigen::VectorXd per_channel = diff.array().square().colwise().mean().sqrt().transpose();
    for (Eigen::Index c = 0; c < 3; ++c) {
      rows.push_back({test.joint_names[j], std::string(kAxisNames[static_cast<std::size_t>(c)]),
                      per_channel(c), lag});
    }
  }
  return rows;
}

LagEvaluation evaluate_against_reference(const SkeletonFrameSet& test,
                                         const SkeletonFrameSet& reference, int lag_min,
                                         int lag_max) {
  if (lag_min > lag_max) throw InvalidArgument("lag range needs lag_min <= lag_max");
  LagEvaluation result;
  double best = std::numeric_limits<double>::infinity();
  for (int lag = lag_min; lag <= lag_max; ++lag) {
    std::vector<RmseRow> rows;
    try {
      rows = rmse_at_lag(test, reference, lag);
    } catch (const NoOverlap&) {
      continue;
    }
    double sum = 0.0;
    for (const auto& r : rows) sum += r.rmse;
    const double mean = sum / static_cast<double>(rows.size());
    result.mean_rmse_by_lag.emplace_back(lag, mean);
    if (mean < best) {
      best = mean;
      result.best_lag = lag;
      result.rows = std::move(rows);
    }
  }
  if (result.mean_rmse_by_lag.empty()) throw NoOverlap("no lag in range yields overlapping frames");
  return result;
}

}  // namespace tobit
