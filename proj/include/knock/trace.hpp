#ifndef KNOCK_TRACE_HPP_
#define KNOCK_TRACE_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "knock/dataset.hpp"

namespace knock {

// One combustion cycle's pressure record. Crank angle is in degrees
// relative to firing TDC (negative before TDC); spark timing is in degrees
// before TDC.
struct PressureTrace {
  std::int64_t cycle_id = 0;
  Eigen::VectorXd crank_angle;
  Eigen::VectorXd pressure;
  double rpm = 0.0;
  double spark_timing = 0.0;

  double resolution() const;
  // Throws FormatError on a malformed record.
  void validate() const;
};

struct FilterSpec {
  double low_cut = 3000.0;          // Hz
  double high_cut = 25000.0;        // Hz
  double attenuation_floor = 40.0;  // dB, minimum stop-band attenuation
  double transition_fraction = 0.15;

  void validate() const;
};

struct TimeSeries {
  Eigen::VectorXd samples;
  double sample_rate = 0.0;  // Hz
};

struct KnockWindow {
  double start_offset = 20.0;  // deg after spark
  double end_offset = 110.0;
};

enum class TraceFormat { Csv };

std::vector<PressureTrace> load_traces(const std::filesystem::path &path,
                                       TraceFormat format = TraceFormat::Csv);
std::vector<PressureTrace> parse_traces(std::istream &in);

// Relabels crank-angle samples as time samples at constant engine speed:
// rate = rpm / 60 * 360 / resolution.
TimeSeries resample_to_time(const PressureTrace &trace);

// Linear-phase Kaiser-window band-pass taps (odd length, symmetric, zero DC
// gain). The transition width is set by the narrower of the two edges.
Eigen::VectorXd design_bandpass(const FilterSpec &spec, double sample_rate);

// Zero-phase band-pass: odd-reflection padding by one filter length, centred
// convolution, trim. Output has the input's length. Throws
// PreconditionError unless sample_rate / 2 > high_cut.
Eigen::VectorXd bandpass_filter(const Eigen::Ref<const Eigen::VectorXd> &samples,
                                double sample_rate, const FilterSpec &spec);

// Centred FIR application with the same padding as bandpass_filter.
Eigen::VectorXd apply_fir(const Eigen::Ref<const Eigen::VectorXd> &samples,
                          const Eigen::Ref<const Eigen::VectorXd> &taps);

// Crank-angle interval [spark + start, spark + end] in TDC-relative degrees.
std::pair<double, double> knock_window_angles(const PressureTrace &trace,
                                              const KnockWindow &window);

// Maximum |band-passed pressure| inside the knock window, floored at
// kPositivityFloor. Throws RangeError when the window leaves the record.
double extract_ki(const PressureTrace &trace, const FilterSpec &spec = {},
                  const KnockWindow &window = {});

KIDataset extract_dataset(const std::vector<PressureTrace> &traces,
                          const FilterSpec &spec = {},
                          const KnockWindow &window = {});

}  // namespace knock

#endif  // KNOCK_TRACE_HPP_
