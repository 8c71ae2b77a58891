#pragma once

// Skeleton trajectory streams: CSV ingestion/emission, per-joint filtering
// and positional comparison against a reference recording.
//
// CSV layout: header `t,<joint>_x,<joint>_y,<joint>_z` for the 25 Kinect V2
// joints in kKinectJoints order, one row per frame, meters and seconds.
// Lines starting with '#' are comments.

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "tobit/filters.hpp"

namespace tobit {

inline constexpr std::array<std::string_view, 25> kKinectJoints = {
    "spine_base",    "spine_mid",      "neck",          "head",
    "shoulder_left", "elbow_left",     "wrist_left",    "hand_left",
    "shoulder_right", "elbow_right",   "wrist_right",   "hand_right",
    "hip_left",      "knee_left",      "ankle_left",    "foot_left",
    "hip_right",     "knee_right",     "ankle_right",   "foot_right",
    "spine_shoulder", "hand_tip_left", "thumb_left",    "hand_tip_right",
    "thumb_right"};

inline constexpr std::array<std::string_view, 3> kAxisNames = {"x", "y", "z"};

struct TrajectorySeries {
  Eigen::VectorXd timestamps;
  Eigen::MatrixXd channels;  ///< frames x channels
  std::vector<std::string> channel_names;
  double frame_rate_hint = 30.0;

  Eigen::Index frames() const { return channels.rows(); }
  void validate() const;
};

/// 25 joints of three channels each, sharing one time axis.
struct SkeletonFrameSet {
  Eigen::VectorXd timestamps;
  std::vector<std::string> joint_names;
  std::vector<TrajectorySeries> joints;

  Eigen::Index frames() const { return timestamps.size(); }
  void validate() const;

  /// Frames x (3 * joints) matrix in CSV column order.
  Eigen::MatrixXd stacked() const;
  static SkeletonFrameSet from_stacked(const Eigen::VectorXd& timestamps,
                                       const Eigen::MatrixXd& stacked);
};

struct ParseReport {
  SkeletonFrameSet frames;
  std::vector<std::size_t> rejected_lines;  ///< 1-based line numbers with non-finite values
  std::vector<std::string> warnings;
};

ParseReport parse_skeleton_csv(std::istream& in);
ParseReport parse_skeleton_csv(const std::string& path);

/// Writes the canonical CSV form; each comment line is emitted as "# <line>".
void write_skeleton_csv(std::ostream& out, const SkeletonFrameSet& frames,
                        const std::vector<std::string>& comments = {});
void write_skeleton_csv(const std::string& path, const SkeletonFrameSet& frames,
                        const std::vector<std::string>& comments = {});

/// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

enum class SkeletonMethod { Raw, SGF, KF, TKF, TKFc, ATKF };

SkeletonMethod parse_method(std::string_view name);
std::string_view method_name(SkeletonMethod method);

/// Per-joint model: A = H = I3, R = r*I, Q = q*I, initial belief at the first
/// frame with covariance p0*I.
struct SkeletonFilterParams {
  double q = 0.0025;
  double r = 0.01;
  double p0 = 0.01;
  Eigen::Vector3d c = Eigen::Vector3d(0.34, 0.18, 0.34);     ///< ATKF offsets
  Eigen::Vector3d lower = Eigen::Vector3d(-3.0, -1.5, 0.5);  ///< device limits
  Eigen::Vector3d upper = Eigen::Vector3d(3.0, 3.0, 5.0);
  int window = 9;
  int order = 3;

  StateSpaceModel<double> model() const;
  CensorBounds<double> device_bounds() const;
};

using StepObserver = std::function<void(Eigen::Index frame, const FilterStepReport<double>&)>;

/// Filters one three-channel series. Frame 0 is passed through and seeds the
/// belief; Kalman-type methods report every later step to `observer`.
Eigen::MatrixXd filter_series(const Eigen::MatrixXd& channels, SkeletonMethod method,
                              const SkeletonFilterParams& params,
                              const StepObserver& observer = {});

/// Filters every joint independently (in parallel).
SkeletonFrameSet filter_skeleton(const SkeletonFrameSet& frames, SkeletonMethod method,
                                 const SkeletonFilterParams& params);

struct RmseRow {
  std::string joint;
  std::string channel;
  double rmse = 0.0;
  int lag = 0;
};

/// Per-joint, per-channel RMSE between test frame t and reference frame
/// t + lag over the overlapping frames.
std::vector<RmseRow> rmse_at_lag(const SkeletonFrameSet& test, const SkeletonFrameSet& reference,
                                 int lag);

struct LagEvaluation {
  int best_lag = 0;
  std::vector<RmseRow> rows;                        ///< at best_lag
  std::vector<std::pair<int, double>> mean_rmse_by_lag;
};

/// Scans lags in [lag_min, lag_max] and keeps the one with the smallest mean
/// RMSE over all joints and channels.
LagEvaluation evaluate_against_reference(const SkeletonFrameSet& test,
                                         const SkeletonFrameSet& reference, int lag_min,
                                         int lag_max);

}  // namespace tobit
