#ifndef KNOCK_TESTS_SUPPORT_HPP_
#define KNOCK_TESTS_SUPPORT_HPP_

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include <unistd.h>

#include "knock/trace.hpp"

namespace knock::testing {

// Synthetic cycle: base + compression bump + optional Gaussian-envelope tone
// peaking (phase aligned to a sample) at `burst_center` deg.
struct TraceRecipe {
  double rpm = 1500.0;
  double resolution = 0.1;  // deg
  double from = -180.0;
  double to = 180.0;
  double spark = 20.0;  // deg BTDC
  double base = 1.0;    // bar
  double peak = 40.0;   // bar, compression bump height
  double bump_width = 25.0;  // deg
  double burst_amplitude = 0.0;
  double burst_frequency = 10000.0;  // Hz
  double burst_center = 45.0;        // deg ATDC
  double burst_width = 10.0;         // deg, envelope sigma
};

inline PressureTrace make_trace(const TraceRecipe &r, std::int64_t cycle = 0) {
  PressureTrace t;
  t.cycle_id = cycle;
  t.rpm = r.rpm;
  t.spark_timing = r.spark;
  const auto n = static_cast<Eigen::Index>(std::llround((r.to - r.from) / r.resolution)) + 1;
  t.crank_angle.resize(n);
  t.pressure.resize(n);
  const double deg_per_s = r.rpm / 60.0 * 360.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double th = r.from + static_cast<double>(i) * r.resolution;
    t.crank_angle[i] = th;
    double p = r.base + r.peak * std::exp(-0.5 * th * th / (r.bump_width * r.bump_width));
    if (r.burst_amplitude != 0.0) {
      const double d = th - r.burst_center;
      const double env = std::exp(-0.5 * d * d / (r.burst_width * r.burst_width));
      p += r.burst_amplitude * env *
           std::cos(2.0 * std::numbers::pi * r.burst_frequency * d / deg_per_s);
    }
    t.pressure[i] = p;
  }
  return t;
}

inline void write_traces(const std::filesystem::path &path,
                         const std::vector<PressureTrace> &traces,
                         bool with_resolution = true) {
  std::ofstream out(path);
  out.precision(17);
  out << "# rpm=" << traces.front().rpm << '\n';
  out << "# spark_btdc=" << traces.front().spark_timing << '\n';
  if (with_resolution) out << "# resolution_deg=" << traces.front().resolution() << '\n';
  out << "cycle_id,crank_angle_deg,pressure_bar\n";
  for (const auto &t : traces) {
    for (Eigen::Index i = 0; i < t.crank_angle.size(); ++i) {
      out << t.cycle_id << ',' << t.crank_angle[i] << ',' << t.pressure[i] << '\n';
    }
  }
}

// |sum_k h_k exp(-j w k)| at frequency f for sample rate fs.
inline double fir_gain(const Eigen::VectorXd &h, double f, double fs) {
  const double w = 2.0 * std::numbers::pi * f / fs;
  std::complex<double> acc = 0.0;
  for (Eigen::Index k = 0; k < h.size(); ++k) {
    acc += h[k] * std::polar(1.0, -w * static_cast<double>(k));
  }
  return std::abs(acc);
}

inline double db(double gain) { return 20.0 * std::log10(gain); }

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("knock_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  std::filesystem::path operator/(const std::string &name) const { return path_ / name; }
  const std::filesystem::path &path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace knock::testing

#endif  // KNOCK_TESTS_SUPPORT_HPP_
