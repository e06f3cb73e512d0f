#pragma once

#include "afop/types.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace afop {

/// Orthonormal wavelet given by its lowpass decomposition filter; the
/// highpass is the alternating flip g[m] = (-1)^m h[L-1-m].
struct WaveletSpec {
  std::string name;
  std::vector<double> lowpass;
};

/// Daubechies-4 (8 taps, 4 vanishing moments).
const WaveletSpec& db4();

struct Dwt3Result {
  Eigen::VectorXd a3, d3, d2, d1;
};

/// One periodized analysis step on an even-length signal:
///   a[k] = sum_m h[m] x[(2k+m) mod n],  d[k] = sum_m g[m] x[(2k+m) mod n].
void dwt_step(const Eigen::VectorXd& x, const WaveletSpec& w,
              Eigen::VectorXd& approx, Eigen::VectorXd& detail);

/// Adjoint of dwt_step; exact inverse for orthonormal filters.
Eigen::VectorXd idwt_step(const Eigen::VectorXd& approx, const Eigen::VectorXd& detail,
                          const WaveletSpec& w);

/// 3-level Mallat cascade with periodization. Requires length >= 8 and
/// divisible by 8 (throws ShapeError otherwise). Orthonormal: total
/// coefficient energy equals signal energy.
Dwt3Result dwt3(const Eigen::VectorXd& signal, const WaveletSpec& w = db4());

Eigen::VectorXd idwt3(const Dwt3Result& coeffs, const WaveletSpec& w = db4());

}  // namespace afop
