#include "afop/dwt.hpp"

namespace afop {

const WaveletSpec& db4() {
  static const WaveletSpec spec{
      "db4",
      {0.23037781330885523, 0.71484657055254153, 0.63088076792959036,
       -0.02798376941698385, -0.18703481171888114, 0.03084138183598697,
       0.03288301166698295, -0.01059740178499728}};
  return spec;
}

namespace {

std::vector<double> highpass_of(const WaveletSpec& w) {
  const std::size_t L = w.lowpass.size();
  std::vector<double> g(L);
  for (std::size_t m = 0; m < L; ++m)
    g[m] = (m % 2 == 0 ? 1.0 : -1.0) * w.lowpass[L - 1 - m];
  return g;
}

}  // namespace

void dwt_step(const Eigen::VectorXd& x, const WaveletSpec& w,
              Eigen::VectorXd& approx, Eigen::VectorXd& detail) {
  const int n = static_cast<int>(x.size());
  if (n < 2 || n % 2 != 0)
    throw ShapeError("dwt_step requires an even-length signal, got " + std::to_string(n));
  const auto& h = w.lowpass;
  const auto g = highpass_of(w);
  const int L = static_cast<int>(h.size());
  const int half = n / 2;
  approx.resize(half);
  detail.resize(half);
  for (int k = 0; k < half; ++k) {
    double a = 0.0, d = 0.0;
    for (int m = 0; m < L; ++m) {
      const double v = x[(2 * k + m) % n];
      a += h[m] * v;
      d += g[m] * v;
    }
    approx[k] = a;
    detail[k] = d;
  }
}

Eigen::VectorXd idwt_step(const Eigen::VectorXd& approx, const Eigen::VectorXd& detail,
                          const WaveletSpec& w) {
  const int half = static_cast<int>(approx.size());
  if (detail.size() != half)
    throw ShapeError("idwt_step: approx/detail length mismatch");
  const auto& h = w.lowpass;
  const auto g = highpass_of(w);
  const int L = static_cast<int>(h.size());
  const int n = 2 * half;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < half; ++k) {
    for (int m = 0; m < L; ++m) {
      const int i = (2 * k + m) % n;
      x[i] += h[m] * approx[k] + g[m] * detail[k];
    }
  }
  return x;
}

Dwt3Result dwt3(const Eigen::VectorXd& signal, const WaveletSpec& w) {
  const int n = static_cast<int>(signal.size());
  if (n < 8 || n % 8 != 0)
    throw ShapeError("dwt3 requires length >= 8 and divisible by 8, got " +
                     std::to_string(n));
  Dwt3Result out;
  Eigen::VectorXd a1, a2;
  dwt_step(signal, w, a1, out.d1);
  dwt_step(a1, w, a2, out.d2);
  dwt_step(a2, w, out.a3, out.d3);
  return out;
}

Eigen::VectorXd idwt3(const Dwt3Result& coeffs, const WaveletSpec& w) {
  const Eigen::VectorXd a2 = idwt_step(coeffs.a3, coeffs.d3, w);
  const Eigen::VectorXd a1 = idwt_step(a2, coeffs.d2, w);
  return idwt_step(a1, coeffs.d1, w);
}

}  // namespace afop
