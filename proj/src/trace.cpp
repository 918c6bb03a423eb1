#include "knock/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include "knock/error.hpp"

namespace knock {

namespace {

constexpr double kAngleTolerance = 1e-9;  // deg
// Kaiser's order estimate undershoots the requested attenuation slightly.
constexpr double kDesignMarginDb = 3.0;

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string &text, int line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v)) {
    throw FormatError("line " + std::to_string(line) + ": bad number '" + text + "'");
  }
  return v;
}

double kaiser_beta(double attenuation) {
  if (attenuation > 50.0) return 0.1102 * (attenuation - 8.7);
  if (attenuation >= 21.0) {
    return 0.5842 * std::pow(attenuation - 21.0, 0.4) +
           0.07886 * (attenuation - 21.0);
  }
  return 0.0;
}

}  // namespace

double PressureTrace::resolution() const {
  return (crank_angle[crank_angle.size() - 1] - crank_angle[0]) /
         static_cast<double>(crank_angle.size() - 1);
}

void PressureTrace::validate() const {
  const std::string id = "cycle " + std::to_string(cycle_id) + ": ";
  if (crank_angle.size() != pressure.size()) {
    throw FormatError(id + "angle and pressure lengths differ");
  }
  if (crank_angle.size() < 2) throw FormatError(id + "fewer than 2 samples");
  if (!(rpm > 0.0)) throw FormatError(id + "rpm must be > 0");
  for (Eigen::Index i = 1; i < crank_angle.size(); ++i) {
    if (crank_angle[i] == crank_angle[i - 1]) {
      throw FormatError(id + "duplicate crank angle " + std::to_string(crank_angle[i]));
    }
    if (crank_angle[i] < crank_angle[i - 1]) {
      throw FormatError(id + "crank angle decreases at " + std::to_string(crank_angle[i]));
    }
  }
  const double step = resolution();
  for (Eigen::Index i = 1; i < crank_angle.size(); ++i) {
    if (std::abs(crank_angle[i] - crank_angle[i - 1] - step) > kAngleTolerance) {
      throw FormatError(id + "non-uniform crank angle spacing at " +
                        std::to_string(crank_angle[i]));
    }
  }
  if (!pressure.allFinite()) throw FormatError(id + "non-finite pressure");
}

void FilterSpec::validate() const {
  if (!(low_cut > 0.0 && low_cut < high_cut)) {
    throw PreconditionError("filter band needs 0 < low_cut < high_cut");
  }
  if (!(attenuation_floor > 0.0)) {
    throw PreconditionError("attenuation floor must be > 0 dB");
  }
  if (!(transition_fraction > 0.0 && transition_fraction < 1.0)) {
    throw PreconditionError("transition fraction must lie in (0, 1)");
  }
}

std::vector<PressureTrace> parse_traces(std::istream &in) {
  std::map<std::string, double> header;
  struct Block {
    std::int64_t id;
    std::vector<double> angle, pressure;
  };
  std::vector<Block> blocks;
  std::map<std::int64_t, std::size_t> seen;

  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty()) continue;
    if (s[0] == '#') {
      const std::string body = trim(s.substr(1));
      const auto eq = body.find('=');
      if (eq != std::string::npos) {
        header[trim(body.substr(0, eq))] = parse_number(trim(body.substr(eq + 1)), line);
      }
      continue;
    }
    if (s.rfind("cycle", 0) == 0) continue;  // column header

    std::stringstream ss(s);
    std::string f[3], extra;
    if (!std::getline(ss, f[0], ',') || !std::getline(ss, f[1], ',') ||
        !std::getline(ss, f[2], ',') || std::getline(ss, extra, ',')) {
      throw FormatError("line " + std::to_string(line) + ": expected 3 fields");
    }
    const double idv = parse_number(trim(f[0]), line);
    const auto id = static_cast<std::int64_t>(idv);
    if (static_cast<double>(id) != idv) {
      throw FormatError("line " + std::to_string(line) + ": cycle id is not an integer");
    }
    if (blocks.empty() || blocks.back().id != id) {
      if (seen.count(id)) {
        throw FormatError("line " + std::to_string(line) + ": cycle " +
                          std::to_string(id) + " is not contiguous");
      }
      seen[id] = blocks.size();
      blocks.push_back({id, {}, {}});
    }
    blocks.back().angle.push_back(parse_number(trim(f[1]), line));
    blocks.back().pressure.push_back(parse_number(trim(f[2]), line));
  }

  for (const char *key : {"rpm", "spark_btdc"}) {
    if (!header.count(key)) {
      throw FormatError(std::string("missing header '# ") + key + "=<value>'");
    }
  }
  if (blocks.empty()) throw FormatError("no data rows");

  std::vector<PressureTrace> out;
  out.reserve(blocks.size());
  for (const auto &b : blocks) {
    PressureTrace t;
    t.cycle_id = b.id;
    t.crank_angle = Eigen::Map<const Eigen::VectorXd>(
        b.angle.data(), static_cast<Eigen::Index>(b.angle.size()));
    t.pressure = Eigen::Map<const Eigen::VectorXd>(
        b.pressure.data(), static_cast<Eigen::Index>(b.pressure.size()));
    t.rpm = header["rpm"];
    t.spark_timing = header["spark_btdc"];
    t.validate();
    if (header.count("resolution_deg") &&
        std::abs(t.resolution() - header["resolution_deg"]) > kAngleTolerance) {
      throw FormatError("cycle " + std::to_string(b.id) +
                        ": spacing disagrees with resolution_deg header");
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<PressureTrace> load_traces(const std::filesystem::path &path,
                                       TraceFormat format) {
  if (format != TraceFormat::Csv) throw UsageError("unsupported trace format");
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open trace file " + path.string());
  return parse_traces(in);
}

TimeSeries resample_to_time(const PressureTrace &trace) {
  if (!(trace.rpm > 0.0)) throw PreconditionError("rpm must be > 0");
  return {trace.pressure, trace.rpm / 60.0 * 360.0 / trace.resolution()};
}

Eigen::VectorXd design_bandpass(const FilterSpec &spec, double sample_rate) {
  spec.validate();
  if (!(sample_rate / 2.0 > spec.high_cut)) {
    throw PreconditionError("Nyquist frequency " + std::to_string(sample_rate / 2.0) +
                            " Hz does not exceed high cut " +
                            std::to_string(spec.high_cut) + " Hz");
  }
  const double attenuation = spec.attenuation_floor + kDesignMarginDb;
  const double width = 2.0 * spec.transition_fraction * spec.low_cut;
  const double dw = 2.0 * std::numbers::pi * width / sample_rate;
  auto taps = static_cast<Eigen::Index>(
      std::ceil((attenuation - 7.95) / (2.285 * dw))) + 1;
  taps = std::max<Eigen::Index>(taps, 3);
  if (taps % 2 == 0) ++taps;

  const double beta = kaiser_beta(attenuation);
  const double i0_beta = std::cyl_bessel_i(0.0, beta);
  const double wl = 2.0 * std::numbers::pi * spec.low_cut / sample_rate;
  const double wh = 2.0 * std::numbers::pi * spec.high_cut / sample_rate;
  const Eigen::Index centre = taps / 2;

  Eigen::VectorXd h(taps), w(taps);
  for (Eigen::Index k = 0; k < taps; ++k) {
    const double m = static_cast<double>(k - centre);
    const double ratio = m / static_cast<double>(centre);
    w[k] = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - ratio * ratio))) /
           i0_beta;
    const double ideal = k == centre
                             ? (wh - wl) / std::numbers::pi
                             : (std::sin(wh * m) - std::sin(wl * m)) / (std::numbers::pi * m);
    h[k] = ideal * w[k];
  }
  // Force an exact zero at DC without breaking symmetry.
  h -= (h.sum() / w.sum()) * w;
  return h;
}

Eigen::VectorXd apply_fir(const Eigen::Ref<const Eigen::VectorXd> &samples,
                          const Eigen::Ref<const Eigen::VectorXd> &taps) {
  const Eigen::Index n = samples.size();
  const Eigen::Index len = taps.size();
  const Eigen::Index pad = len;
  Eigen::VectorXd padded(n + 2 * pad);
  padded.segment(pad, n) = samples;
  // Odd reflection about each end sample keeps value and slope continuous.
  // Past one reflection the edge value is held.
  for (Eigen::Index j = 1; j <= pad; ++j) {
    const Eigen::Index lo = std::min(j, n - 1);
    padded[pad - j] = 2.0 * samples[0] - samples[lo];
    padded[pad + n - 1 + j] = 2.0 * samples[n - 1] - samples[n - 1 - lo];
  }
  const Eigen::Index centre = len / 2;
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out[i] = taps.dot(padded.segment(pad + i - centre, len));
  }
  return out;
}

Eigen::VectorXd bandpass_filter(const Eigen::Ref<const Eigen::VectorXd> &samples,
                                double sample_rate, const FilterSpec &spec) {
  const Eigen::VectorXd taps = design_bandpass(spec, sample_rate);
  if (samples.size() == 0) return {};
  return apply_fir(samples, taps);
}

std::pair<double, double> knock_window_angles(const PressureTrace &trace,
                                              const KnockWindow &window) {
  const double spark_angle = -trace.spark_timing;
  return {spark_angle + window.start_offset, spark_angle + window.end_offset};
}

double extract_ki(const PressureTrace &trace, const FilterSpec &spec,
                  const KnockWindow &window) {
  trace.validate();
  const auto [lo, hi] = knock_window_angles(trace, window);
  const double first = trace.crank_angle[0];
  const double last = trace.crank_angle[trace.crank_angle.size() - 1];
  if (!(lo <= hi) || lo < first - kAngleTolerance || hi > last + kAngleTolerance) {
    throw RangeError("cycle " + std::to_string(trace.cycle_id) + ": knock window [" +
                     std::to_string(lo) + ", " + std::to_string(hi) +
                     "] deg lies outside the record [" + std::to_string(first) +
                     ", " + std::to_string(last) + "]");
  }
  const TimeSeries ts = resample_to_time(trace);
  const Eigen::VectorXd filtered = bandpass_filter(ts.samples, ts.sample_rate, spec);
  double peak = 0.0;
  for (Eigen::Index i = 0; i < filtered.size(); ++i) {
    const double theta = trace.crank_angle[i];
    if (theta >= lo - kAngleTolerance && theta <= hi + kAngleTolerance) {
      peak = std::max(peak, std::abs(filtered[i]));
    }
  }
  return std::max(peak, kPositivityFloor);
}

KIDataset extract_dataset(const std::vector<PressureTrace> &traces,
                          const FilterSpec &spec, const KnockWindow &window) {
  KIDataset out;
  out.ki.resize(static_cast<Eigen::Index>(traces.size()));
  for (std::size_t i = 0; i < traces.size(); ++i) {
    out.ki[static_cast<Eigen::Index>(i)] = extract_ki(traces[i], spec, window);
  }
  return out;
}

}  // namespace knock
