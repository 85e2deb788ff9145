#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "ringkit/error.hpp"

namespace ringkit::dsp {

/// Direct-form II transposed biquad coefficients (a0 normalised to 1).
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;

  /// Runs the section over x in place, starting from the steady state for x[0].
  void run(std::vector<double>& x) const {
    if (x.empty()) return;
    const double dc = (b0 + b1 + b2) / (1.0 + a1 + a2);
    const double y0 = dc * x[0];
    double s2 = b2 * x[0] - a2 * y0;
    double s1 = y0 - b0 * x[0];
    for (auto& v : x) {
      const double in = v;
      const double out = b0 * in + s1;
      s1 = b1 * in - a1 * out + s2;
      s2 = b2 * in - a2 * out;
      v = out;
    }
  }

  /// |H(e^{jw})| at frequency f for sample rate fs.
  double gain(double f, double fs) const {
    const double w = 2 * std::numbers::pi * f / fs;
    const std::complex<double> z1 = std::polar(1.0, -w), z2 = std::polar(1.0, -2 * w);
    return std::abs((b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2));
  }
};

inline constexpr double kButterworthQ = std::numbers::sqrt2 / 2;

// Bilinear-transform Butterworth sections with frequency prewarping.
inline Biquad butter_lowpass(double fc, double fs) {
  if (!(fc > 0 && fc < fs / 2)) throw Error(Errc::BadArgument, "cutoff must lie in (0, fs/2)");
  const double k = std::tan(std::numbers::pi * fc / fs);
  const double norm = 1.0 / (1.0 + k / kButterworthQ + k * k);
  Biquad q;
  q.b0 = k * k * norm;
  q.b1 = 2 * q.b0;
  q.b2 = q.b0;
  q.a1 = 2 * (k * k - 1) * norm;
  q.a2 = (1 - k / kButterworthQ + k * k) * norm;
  return q;
}

inline Biquad butter_highpass(double fc, double fs) {
  if (!(fc > 0 && fc < fs / 2)) throw Error(Errc::BadArgument, "cutoff must lie in (0, fs/2)");
  const double k = std::tan(std::numbers::pi * fc / fs);
  const double norm = 1.0 / (1.0 + k / kButterworthQ + k * k);
  Biquad q;
  q.b0 = norm;
  q.b1 = -2 * norm;
  q.b2 = norm;
  q.a1 = 2 * (k * k - 1) * norm;
  q.a2 = (1 - k / kButterworthQ + k * k) * norm;
  return q;
}

/// Second-order high-pass followed by second-order low-pass.
struct BandPass {
  Biquad high;
  Biquad low;

  BandPass(double f_lo, double f_hi, double fs) : high(butter_highpass(f_lo, fs)), low(butter_lowpass(f_hi, fs)) {
    if (f_lo >= f_hi) throw Error(Errc::BadArgument, "band edges out of order");
  }

  /// Magnitude of one pass; filtfilt squares it.
  double gain(double f, double fs) const { return high.gain(f, fs) * low.gain(f, fs); }

  void run(std::vector<double>& x) const {
    high.run(x);
    low.run(x);
  }
};

/// Zero-phase forward-backward filtering with odd-reflection padding.
/// Output length equals input length.
inline std::vector<double> filtfilt(const BandPass& f, std::span<const double> x, std::size_t pad) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  pad = std::min(pad, n - 1);
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2 * x[n - 1] - x[n - 1 - i]);
  f.run(ext);
  std::reverse(ext.begin(), ext.end());
  f.run(ext);
  std::reverse(ext.begin(), ext.end());
  return std::vector<double>(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                             ext.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

inline constexpr double kPpgBandLowHz = 0.5;   // 30 BPM
inline constexpr double kPpgBandHighHz = 4.0;  // 240 BPM

/// PPG pre-filter: 0.5-4 Hz, zero phase.
inline std::vector<double> bandpass(std::span<const double> signal, double fs) {
  return filtfilt(BandPass(kPpgBandLowHz, kPpgBandHighHz, fs), signal, static_cast<std::size_t>(2 * fs));
}

}  // namespace ringkit::dsp
