#pragma once

#include <Eigen/Dense>
#include <vector>

#include "tobit/errors.hpp"
#include "tobit/types.hpp"

namespace tobit {

/// Weights w such that w . window evaluates, at offset `target` inside the
/// window, the least-squares polynomial of degree `order` fitted to it.
template <typename Scalar>
Vector<Scalar> savitzky_golay_weights(int window, int order, int target) {
  Matrix<Scalar> vander(window, order + 1);
  for (int r = 0; r < window; ++r) {
    const Scalar t = Scalar(r - target);
    Scalar p = 1;
    for (int c = 0; c <= order; ++c) {
      vander(r, c) = p;
      p *= t;
    }
  }
  // Row 0 of the pseudo-inverse gives the constant coefficient, which is the
  // fitted value at t = 0.
  const Matrix<Scalar> pinv =
      vander.colPivHouseholderQr().solve(Matrix<Scalar>::Identity(window, window));
  return pinv.row(0).transpose();
}

/// Savitzky-Golay smoothing of every column of `series` (frames x channels).
/// Interior frames use the centred window; the first and last window/2
/// frames evaluate the fit of the first/last full window at their own offset.
template <typename Scalar>
Matrix<Scalar> savitzky_golay(const Matrix<Scalar>& series, int window, int order) {
  if (window < 1 || window % 2 == 0) throw InvalidWindow("window must be a positive odd integer");
  if (order < 0 || order >= window) throw InvalidWindow("order must satisfy 0 <= order < window");
  const Index frames = series.rows();
  if (frames < window) throw InvalidWindow("series is shorter than the window");

  const int half = window / 2;
  std::vector<Vector<Scalar>> weights;
  weights.reserve(static_cast<std::size_t>(window));
  for (int target = 0; target < window; ++target) {
    weights.push_back(savitzky_golay_weights<Scalar>(window, order, target));
  }

  Matrix<Scalar> out(frames, series.cols());
  for (Index k = 0; k < frames; ++k) {
    Index start = k - half;
    if (start < 0) start = 0;
    if (start + window > frames) start = frames - window;
    const auto& w = weights[static_cast<std::size_t>(k - start)];
    out.row(k) = w.transpose() * series.middleRows(start, window);
  }
  return out;
}

}  // namespace tobit
