#include "knock/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "knock/distributions.hpp"
#include "knock/em.hpp"
#include "knock/error.hpp"
#include "knock/gof.hpp"
#include "knock/io.hpp"
#include "knock/knockctl.hpp"
#include "knock/rng.hpp"
#include "knock/simloop.hpp"
#include "knock/trace.hpp"

namespace knock::cli {

namespace {

using io::format_double;

std::pair<double, double> parse_pair(const std::string &text, const char *what) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw UsageError(std::string(what) + " must look like <low>:<high>, got '" + text + "'");
  }
  try {
    std::size_t u1 = 0, u2 = 0;
    const std::string a = text.substr(0, colon), b = text.substr(colon + 1);
    const double lo = std::stod(a, &u1);
    const double hi = std::stod(b, &u2);
    if (u1 != a.size() || u2 != b.size()) throw std::invalid_argument(text);
    return {lo, hi};
  } catch (const std::logic_error &) {
    throw UsageError(std::string(what) + " must look like <low>:<high>, got '" + text + "'");
  }
}

// Writes to `path`, or to `fallback` when path is empty.
class Sink {
 public:
  Sink(const std::string &path, std::ostream &fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(io::open_output(path));
      stream_ = file_.get();
    } else {
      stream_ = &fallback;
    }
  }
  std::ostream &get() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream *stream_;
};

struct EmOptions {
  int max_iters = 500;
  double rel_tol = 1e-8;
  int restarts = 5;
  double variance_floor = 1e-6;

  void add_to(CLI::App *app) {
    app->add_option("--em-max-iters", max_iters, "EM iteration cap")->capture_default_str();
    app->add_option("--em-tol", rel_tol, "EM relative log-likelihood tolerance")
        ->capture_default_str();
    app->add_option("--em-restarts", restarts, "EM restarts")->capture_default_str();
    app->add_option("--em-var-floor", variance_floor, "EM log-space variance floor")
        ->capture_default_str();
  }
  EMConfig config(std::uint64_t seed) const {
    return {max_iters, rel_tol, restarts, variance_floor, seed};
  }
};

std::vector<KIDataset> load_all(const std::vector<std::string> &paths) {
  std::vector<KIDataset> out;
  out.reserve(paths.size());
  for (const auto &p : paths) out.push_back(io::load_ki_csv(p));
  return out;
}

// ---------------------------------------------------------------- extract

struct ExtractCmd {
  std::string in, out, band = "3000:25000", window = "20:110";
  double floor_db = 40.0, transition = 0.15;

  void run(std::ostream &stdout_) const {
    FilterSpec spec;
    std::tie(spec.low_cut, spec.high_cut) = parse_pair(band, "--band");
    spec.attenuation_floor = floor_db;
    spec.transition_fraction = transition;
    KnockWindow win;
    std::tie(win.start_offset, win.end_offset) = parse_pair(window, "--window");

    const auto traces = load_traces(in);
    KIDataset ds = extract_dataset(traces, spec, win);
    ds.metadata["rpm"] = format_double(traces.front().rpm);
    ds.metadata["spark_btdc"] = format_double(traces.front().spark_timing);
    Sink sink(out, stdout_);
    io::write_ki_csv(sink.get(), ds);
  }
};

// ---------------------------------------------------------------- acf

struct AcfCmd {
  std::string in, out;
  int max_lag = 20;
  double alpha = 0.05;

  void run(std::ostream &stdout_, std::ostream &err) const {
    const KIDataset ds = io::load_ki_csv(in);
    const Eigen::VectorXd r = acf(ds.ki, max_lag);
    const double bound = acf_bounds(ds.size(), alpha);
    Sink sink(out, stdout_);
    auto &o = sink.get();
    o << "lag,r,lower,upper,outside\n";
    int outside = 0;
    for (Eigen::Index k = 0; k < r.size(); ++k) {
      const bool off = k > 0 && std::abs(r[k]) > bound;
      outside += off;
      o << k << ',' << format_double(r[k]) << ',' << format_double(-bound) << ','
        << format_double(bound) << ',' << (off ? 1 : 0) << '\n';
    }
    err << "knock: " << outside << " of " << max_lag << " lags outside +/-"
        << format_double(bound) << '\n';
  }
};

// ---------------------------------------------------------------- fit

struct FitCmd {
  std::vector<std::string> in;
  std::string family = "mixture", thresholds, out, csv, model_out;
  std::uint64_t seed = 0;
  EmOptions em;

  void run(std::ostream &stdout_, std::ostream &err) const {
    const Family fam = parse_family(family);
    std::optional<Thresholds> th;
    if (!thresholds.empty()) th = io::thresholds_from_json(io::read_json(thresholds));
    if (th && th->family != fam) {
      throw UsageError("thresholds file is for the " + to_string(th->family) +
                       " family but --family is " + family);
    }
    if (!model_out.empty() && in.size() != 1) {
      throw UsageError("--model-out needs exactly one --in file");
    }
    err << "knock: seed=" << seed << '\n';

    io::json reports = io::json::array();
    std::ostringstream table;
    table << "label,family,r2,ks,r2_threshold,ks_threshold,r2_pass,ks_pass,accept\n";
    for (const auto &ds : load_all(in)) {
      const EMConfig cfg = em.config(seed);
      FitReport rep;
      if (th) {
        rep = fit_report(ds.ki, fam, *th, cfg);
      } else {
        rep.model = fit_model(ds.ki, fam, cfg);
        rep.scores = score_fit(ds.ki, rep.model);
        rep.log_likelihood = log_likelihood(ds.ki, rep.model);
      }
      io::json j = io::to_json(rep, th ? &*th : nullptr);
      j["label"] = ds.label;
      j["n"] = ds.size();
      reports.push_back(std::move(j));
      table << ds.label << ',' << family << ',' << format_double(rep.scores.r2) << ','
            << format_double(rep.scores.ks) << ','
            << (th ? format_double(th->r2_5th) : "") << ','
            << (th ? format_double(th->ks_95th) : "") << ',';
      if (th) {
        table << rep.r2_pass << ',' << rep.ks_pass << ',' << rep.accept << '\n';
      } else {
        table << ",,\n";
      }
      if (!model_out.empty()) io::write_json(model_out, io::to_json(rep.model));
    }
    Sink sink(out, stdout_);
    sink.get() << io::json{{"reports", reports}}.dump(2) << '\n';
    if (!csv.empty()) io::open_output(csv) << table.str();
  }
};

// ---------------------------------------------------------------- thresholds

struct ThresholdsCmd {
  std::string family = "lognormal", out, truth, from_data;
  Eigen::Index n = 1116, reps = 10000;
  std::uint64_t seed = 1;
  EmOptions em;

  void run(std::ostream &stdout_, std::ostream &err) const {
    const Family fam = parse_family(family);
    if (!truth.empty() && !from_data.empty()) {
      throw UsageError("--truth and --from-data are mutually exclusive");
    }
    Model model = fam == Family::Lognormal ? Model{canonical_lognormal()}
                                           : Model{canonical_mixture()};
    if (!truth.empty()) {
      model = io::model_from_json(io::read_json(truth));
      if (family_of(model) != fam) throw UsageError("--truth model family differs from --family");
    } else if (!from_data.empty()) {
      model = fit_model(io::load_ki_csv(from_data).ki, fam, em.config(seed));
    }
    err << "knock: seed=" << seed << '\n';
    const Thresholds th = mc_thresholds(model, n, reps, seed, em.config(seed));
    if (th.redraws > 0) {
      err << "knock: " << th.redraws << " replicate(s) re-drawn after EM degeneracy\n";
    }
    Sink sink(out, stdout_);
    sink.get() << io::to_json(th).dump(2) << '\n';
  }
};

// ---------------------------------------------------------------- classify

struct ClassifyCmd {
  std::string in, bank, out;
  Eigen::Index window = 1;
  double lambda = 0.9;

  void run(std::ostream &stdout_, std::ostream &err) const {
    const StateBank b = io::bank_from_json(io::read_json(bank));
    const KIDataset ds = io::load_ki_csv(in);
    ControllerState st = ControllerState::initial(b, 0.0, window, lambda,
                                                  {-1e9, 1e9});
    Sink sink(out, stdout_);
    auto &o = sink.get();
    o << "cycle,ki_bar,delta_deg";
    for (const auto &s : b.states) o << ",p_" << s.label;
    o << '\n';
    int fallbacks = 0;
    for (Eigen::Index i = 0; i < ds.size(); ++i) {
      ControllerStep step = controller_step(st, b, ds.ki[i]);
      fallbacks += step.fallback;
      o << i << ',' << format_double(ds.ki[i]) << ','
        << format_double(step.requested_delta);
      for (Eigen::Index j = 0; j < step.posterior.size(); ++j) {
        o << ',' << format_double(step.posterior.probs[j]);
      }
      o << '\n';
      st = std::move(step.state);
    }
    if (fallbacks) err << "knock: warning: " << fallbacks << " posterior underflow fallback(s)\n";
  }
};

// ---------------------------------------------------------------- simulate

struct SimulateCmd {
  std::string engine, bank, out, emit_engine, emit_bank;
  std::size_t cycles = 2000;
  std::optional<std::uint64_t> seed;
  std::optional<double> start_spark;
  Eigen::Index window = 1;
  double lambda = 0.9, spark_min = 0.0, spark_max = 40.0;

  void run(std::ostream &stdout_, std::ostream &err) const {
    EngineModel eng = engine.empty() ? demo_engine()
                                     : io::engine_from_json(io::read_json(engine));
    if (seed) eng.seed = *seed;
    const StateBank b = bank.empty() ? matched_bank(eng)
                                     : io::bank_from_json(io::read_json(bank));
    const double borderline = b.states[b.states.size() / 2].spark_anchor;
    const double start = start_spark.value_or(borderline - 10.0);
    err << "knock: seed=" << eng.seed << " start_spark=" << format_double(start) << '\n';

    const ControllerState init =
        ControllerState::initial(b, start, window, lambda, {spark_min, spark_max});
    const Trajectory t = run_closed_loop(eng, b, init, cycles);
    if (!emit_engine.empty()) io::write_json(emit_engine, io::to_json(eng));
    if (!emit_bank.empty()) io::write_json(emit_bank, io::to_json(b));
    Sink sink(out, stdout_);
    io::write_trajectory_csv(sink.get(), t);
    if (!t.empty()) {
      const std::size_t tail = std::min<std::size_t>(500, t.size());
      const auto s = trajectory_summary(std::span(t).last(tail), b.size() - 1, 0.5);
      err << "knock: last " << tail << " cycles: mean_spark=" << format_double(s.mean_spark)
          << " spark_std=" << format_double(s.spark_std)
          << " severe_fraction=" << format_double(s.severe_fraction)
          << " mean_ki=" << format_double(s.mean_ki) << '\n';
    }
  }
};

// ---------------------------------------------------------------- plotdata

struct PlotCmd {
  std::string kind, out, engine, bank, traces, lognormal_th, mixture_th;
  std::vector<std::string> in;
  std::uint64_t seed = 0;
  double from = 10.0, to = 23.0, step = 1.0;
  Eigen::Index samples = 1116;
  int max_lag = 20;
  double alpha = 0.05;
  std::int64_t cycle = -1;
  std::string band = "3000:25000", window = "20:110";
  int grid = 200;

  void run(std::ostream &stdout_) const {
    Sink sink(out, stdout_);
    auto &o = sink.get();
    if (kind == "sweep") return sweep(o);
    if (kind == "acf") return acf_series(o);
    if (kind == "ecdf") return ecdf_overlay(o);
    if (kind == "density") return density_overlay(o);
    if (kind == "scores") return scores(o);
    if (kind == "states") return states(o);
    if (kind == "trace") return trace(o);
    throw UsageError("unknown --kind '" + kind +
                     "' (sweep|acf|ecdf|density|scores|states|trace)");
  }

  void require_in(std::size_t at_least = 1) const {
    if (in.size() < at_least) throw UsageError("--kind " + kind + " needs --in");
  }

  // Mean KI against spark with 5th/95th percentiles.
  void sweep(std::ostream &o) const {
    o << "spark_btdc,mean_ki,p5_ki,p95_ki,n\n";
    auto row = [&o](double spark, const Eigen::VectorXd &ki) {
      o << format_double(spark) << ',' << format_double(ki.mean()) << ','
        << format_double(nearest_rank_percentile(ki, 5.0)) << ','
        << format_double(nearest_rank_percentile(ki, 95.0)) << ',' << ki.size() << '\n';
    };
    if (!in.empty()) {
      std::vector<std::pair<double, Eigen::VectorXd>> rows;
      for (const auto &ds : load_all(in)) {
        const auto it = ds.metadata.find("spark_btdc");
        if (it == ds.metadata.end()) {
          throw FormatError(ds.label + ": no spark_btdc metadata line");
        }
        rows.emplace_back(std::stod(it->second), ds.ki);
      }
      std::stable_sort(rows.begin(), rows.end(),
                       [](const auto &a, const auto &b) { return a.first < b.first; });
      for (const auto &[s, ki] : rows) row(s, ki);
      return;
    }
    if (!(step > 0.0)) throw UsageError("--step must be > 0");
    EngineModel eng = engine.empty() ? demo_engine(seed)
                                     : io::engine_from_json(io::read_json(engine));
    const auto count = static_cast<int>(std::floor((to - from) / step + 1e-9)) + 1;
    for (int i = 0; i < count; ++i) {
      const double s = from + i * step;
      row(s, sample_mixture(engine_response(eng, s), samples,
                            derive_seed(eng.seed, static_cast<std::uint64_t>(i))));
    }
  }

  // Per-lag ACF spread across operating points with the white-noise band.
  void acf_series(std::ostream &o) const {
    require_in();
    const auto sets = load_all(in);
    Eigen::MatrixXd r(max_lag + 1, static_cast<Eigen::Index>(sets.size()));
    Eigen::Index min_n = sets.front().size();
    for (std::size_t i = 0; i < sets.size(); ++i) {
      r.col(static_cast<Eigen::Index>(i)) = acf(sets[i].ki, max_lag);
      min_n = std::min(min_n, sets[i].size());
    }
    const double bound = acf_bounds(min_n, alpha);
    o << "lag,mean,p5,p95,lower,upper\n";
    for (Eigen::Index k = 0; k <= max_lag; ++k) {
      const Eigen::VectorXd row = r.row(k).transpose();
      o << k << ',' << format_double(row.mean()) << ','
        << format_double(nearest_rank_percentile(row, 5.0)) << ','
        << format_double(nearest_rank_percentile(row, 95.0)) << ','
        << format_double(-bound) << ',' << format_double(bound) << '\n';
    }
  }

  // ECDF against fitted lognormal and mixture CDFs.
  void ecdf_overlay(std::ostream &o) const {
    require_in();
    const KIDataset ds = io::load_ki_csv(in.front());
    const EmpiricalCDF e = empirical_cdf(ds.ki);
    const LognormalParams ln = lognormal_mle(ds.ki);
    const MixtureParams mx = mixture_em(ds.ki, EMConfig{.seed = seed}).params;
    o << "ki_bar,ln_ki,ecdf,lognormal_cdf,mixture_cdf\n";
    for (Eigen::Index i = 0; i < e.size(); ++i) {
      const double x = e.points[i];
      o << format_double(x) << ',' << format_double(std::log(x)) << ','
        << format_double(e.steps[i]) << ',' << format_double(lognormal_cdf(x, ln)) << ','
        << format_double(mixture_cdf(x, mx)) << '\n';
    }
  }

  // Histogram of ln KI against fitted model densities of ln KI.
  void density_overlay(std::ostream &o) const {
    require_in();
    const KIDataset ds = io::load_ki_csv(in.front());
    const Eigen::ArrayXd y = ds.ki.array().log();
    const LognormalParams ln = lognormal_mle(ds.ki);
    const MixtureParams mx = mixture_em(ds.ki, EMConfig{.seed = seed}).params;
    const int bins = std::max(grid / 4, 5);
    const double lo = y.minCoeff(), hi = y.maxCoeff();
    const double width = (hi - lo) / bins;
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(bins);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const int b = std::min(bins - 1, static_cast<int>((y[i] - lo) / width));
      counts[b] += 1.0;
    }
    o << "ln_ki,empirical_density,lognormal_density,mixture_density\n";
    for (int b = 0; b < bins; ++b) {
      const double c = lo + (b + 0.5) * width;
      const double x = std::exp(c);
      // density of ln X is x * f_X(x)
      o << format_double(c) << ','
        << format_double(counts[b] / (static_cast<double>(y.size()) * width)) << ','
        << format_double(x * lognormal_pdf(x, ln)) << ','
        << format_double(x * mixture_pdf(x, mx)) << '\n';
    }
  }

  // Per-dataset fit scores against threshold lines.
  void scores(std::ostream &o) const {
    require_in();
    std::vector<Thresholds> ths;
    if (!lognormal_th.empty()) ths.push_back(io::thresholds_from_json(io::read_json(lognormal_th)));
    if (!mixture_th.empty()) ths.push_back(io::thresholds_from_json(io::read_json(mixture_th)));
    if (ths.empty()) throw UsageError("--kind scores needs --lognormal-thresholds and/or --mixture-thresholds");
    o << "label,family,r2,ks,r2_threshold,ks_threshold,r2_pass,ks_pass,accept\n";
    for (const auto &ds : load_all(in)) {
      for (const auto &th : ths) {
        const FitReport rep = fit_report(ds.ki, th.family, th, EMConfig{.seed = seed});
        o << ds.label << ',' << to_string(th.family) << ',' << format_double(rep.scores.r2)
          << ',' << format_double(rep.scores.ks) << ',' << format_double(th.r2_5th) << ','
          << format_double(th.ks_95th) << ',' << rep.r2_pass << ',' << rep.ks_pass << ','
          << rep.accept << '\n';
      }
    }
  }

  // Density of ln KI for each bank state.
  void states(std::ostream &o) const {
    EngineModel eng = engine.empty() ? demo_engine() : io::engine_from_json(io::read_json(engine));
    const StateBank b = bank.empty() ? matched_bank(eng) : io::bank_from_json(io::read_json(bank));
    double lo = 1e300, hi = -1e300;
    for (const auto &s : b.states) {
      lo = std::min({lo, s.model.comp1.mu - 4 * s.model.comp1.sigma,
                     s.model.comp2.mu - 4 * s.model.comp2.sigma});
      hi = std::max({hi, s.model.comp1.mu + 4 * s.model.comp1.sigma,
                     s.model.comp2.mu + 4 * s.model.comp2.sigma});
    }
    o << "ln_ki";
    for (const auto &s : b.states) o << ',' << s.label;
    o << '\n';
    for (int i = 0; i < grid; ++i) {
      const double c = lo + (hi - lo) * i / (grid - 1);
      const double x = std::exp(c);
      o << format_double(c);
      for (const auto &s : b.states) o << ',' << format_double(x * mixture_pdf(x, s.model));
      o << '\n';
    }
  }

  // Raw and band-passed pressure of one cycle with the knock window marked.
  void trace(std::ostream &o) const {
    if (traces.empty()) throw UsageError("--kind trace needs --traces");
    FilterSpec spec;
    std::tie(spec.low_cut, spec.high_cut) = parse_pair(band, "--band");
    KnockWindow win;
    std::tie(win.start_offset, win.end_offset) = parse_pair(window, "--window");
    const auto all = load_traces(traces);
    const auto it = cycle < 0 ? all.begin()
                              : std::find_if(all.begin(), all.end(), [this](const auto &t) {
                                  return t.cycle_id == cycle;
                                });
    if (it == all.end()) throw UsageError("no cycle " + std::to_string(cycle) + " in trace file");
    const TimeSeries ts = resample_to_time(*it);
    const Eigen::VectorXd f = bandpass_filter(ts.samples, ts.sample_rate, spec);
    const auto [lo, hi] = knock_window_angles(*it, win);
    o << "crank_angle_deg,pressure_bar,filtered_bar,in_window\n";
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      const double th = it->crank_angle[i];
      o << format_double(th) << ',' << format_double(it->pressure[i]) << ','
        << format_double(f[i]) << ',' << (th >= lo && th <= hi ? 1 : 0) << '\n';
    }
  }
};

}  // namespace

int dispatch(const std::vector<std::string> &args, std::ostream &out,
             std::ostream &err) {
  CLI::App app{"Knock-intensity statistics and stochastic spark control", "knock"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  ExtractCmd extract;
  auto *c_extract = app.add_subcommand("extract", "Knock intensity per cycle from pressure traces");
  c_extract->add_option("--in", extract.in, "Trace CSV")->required();
  c_extract->add_option("--out", extract.out, "KI CSV (default stdout)");
  c_extract->add_option("--band", extract.band, "Pass band low:high in Hz")->capture_default_str();
  c_extract->add_option("--window", extract.window, "Knock window offsets after spark, deg")
      ->capture_default_str();
  c_extract->add_option("--floor-db", extract.floor_db, "Minimum stop-band attenuation, dB")
      ->capture_default_str();
  c_extract->add_option("--transition", extract.transition, "Transition width fraction")
      ->capture_default_str();

  AcfCmd acf_cmd;
  auto *c_acf = app.add_subcommand("acf", "Autocorrelation of a KI sequence");
  c_acf->add_option("--in", acf_cmd.in, "KI CSV")->required();
  c_acf->add_option("--out", acf_cmd.out, "ACF CSV (default stdout)");
  c_acf->add_option("--max-lag", acf_cmd.max_lag)->capture_default_str();
  c_acf->add_option("--alpha", acf_cmd.alpha)->capture_default_str();

  FitCmd fit;
  auto *c_fit = app.add_subcommand("fit", "Fit lognormal or mixture models and score them");
  c_fit->add_option("--in", fit.in, "KI CSV file(s)")->required();
  c_fit->add_option("--family", fit.family, "lognormal|mixture")->capture_default_str();
  c_fit->add_option("--thresholds", fit.thresholds, "Thresholds JSON for the verdict");
  c_fit->add_option("--out", fit.out, "Report JSON (default stdout)");
  c_fit->add_option("--csv", fit.csv, "Per-dataset score table");
  c_fit->add_option("--model-out", fit.model_out, "Fitted model JSON (single input)");
  c_fit->add_option("--seed", fit.seed, "EM restart seed")->capture_default_str();
  fit.em.add_to(c_fit);

  ThresholdsCmd thr;
  auto *c_thr = app.add_subcommand("thresholds", "Monte Carlo acceptance thresholds");
  c_thr->add_option("--family", thr.family, "lognormal|mixture")->capture_default_str();
  c_thr->add_option("--n", thr.n, "Samples per replicate")->capture_default_str();
  c_thr->add_option("--reps", thr.reps, "Replicates")->capture_default_str();
  c_thr->add_option("--seed", thr.seed)->capture_default_str();
  c_thr->add_option("--truth", thr.truth, "Model JSON used as the generating law");
  c_thr->add_option("--from-data", thr.from_data, "KI CSV whose fit is the generating law");
  c_thr->add_option("--out", thr.out, "Thresholds JSON (default stdout)");
  thr.em.add_to(c_thr);

  ClassifyCmd cls;
  auto *c_cls = app.add_subcommand("classify", "Knock-state posterior over a KI sequence");
  c_cls->add_option("--in", cls.in, "KI CSV")->required();
  c_cls->add_option("--bank", cls.bank, "State bank JSON")->required();
  c_cls->add_option("--out", cls.out, "Posterior CSV (default stdout)");
  c_cls->add_option("--window", cls.window, "Measurement window size")->capture_default_str();
  c_cls->add_option("--lambda", cls.lambda, "Forgetting factor")->capture_default_str();

  SimulateCmd sim;
  auto *c_sim = app.add_subcommand("simulate", "Closed-loop run against a synthetic engine");
  c_sim->add_option("--engine", sim.engine, "Engine model JSON (default demo engine)");
  c_sim->add_option("--bank", sim.bank, "State bank JSON (default matched to engine)");
  c_sim->add_option("--cycles", sim.cycles)->capture_default_str();
  c_sim->add_option("--seed", sim.seed, "Overrides the engine seed");
  c_sim->add_option("--start-spark", sim.start_spark, "deg BTDC (default borderline - 10)");
  c_sim->add_option("--window", sim.window)->capture_default_str();
  c_sim->add_option("--lambda", sim.lambda)->capture_default_str();
  c_sim->add_option("--spark-min", sim.spark_min)->capture_default_str();
  c_sim->add_option("--spark-max", sim.spark_max)->capture_default_str();
  c_sim->add_option("--out", sim.out, "Trajectory CSV (default stdout)");
  c_sim->add_option("--emit-engine", sim.emit_engine, "Write the engine model used");
  c_sim->add_option("--emit-bank", sim.emit_bank, "Write the state bank used");

  PlotCmd plot;
  auto *c_plot = app.add_subcommand("plotdata", "CSV series for external plotting");
  c_plot->add_option("--kind", plot.kind, "sweep|acf|ecdf|density|scores|states|trace")
      ->required();
  c_plot->add_option("--in", plot.in, "KI CSV file(s)");
  c_plot->add_option("--out", plot.out, "CSV (default stdout)");
  c_plot->add_option("--engine", plot.engine, "Engine model JSON");
  c_plot->add_option("--bank", plot.bank, "State bank JSON");
  c_plot->add_option("--traces", plot.traces, "Trace CSV");
  c_plot->add_option("--cycle", plot.cycle, "Cycle id for --kind trace");
  c_plot->add_option("--lognormal-thresholds", plot.lognormal_th);
  c_plot->add_option("--mixture-thresholds", plot.mixture_th);
  c_plot->add_option("--seed", plot.seed)->capture_default_str();
  c_plot->add_option("--from", plot.from)->capture_default_str();
  c_plot->add_option("--to", plot.to)->capture_default_str();
  c_plot->add_option("--step", plot.step)->capture_default_str();
  c_plot->add_option("--samples", plot.samples)->capture_default_str();
  c_plot->add_option("--max-lag", plot.max_lag)->capture_default_str();
  c_plot->add_option("--alpha", plot.alpha)->capture_default_str();
  c_plot->add_option("--band", plot.band)->capture_default_str();
  c_plot->add_option("--window", plot.window)->capture_default_str();
  c_plot->add_option("--grid", plot.grid)->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError &e) {
    err << "knock: error[usage]: " << e.what() << '\n';
    return exit_code(ErrorKind::Usage);
  }

  try {
    if (c_extract->parsed()) extract.run(out);
    else if (c_acf->parsed()) acf_cmd.run(out, err);
    else if (c_fit->parsed()) fit.run(out, err);
    else if (c_thr->parsed()) thr.run(out, err);
    else if (c_cls->parsed()) cls.run(out, err);
    else if (c_sim->parsed()) sim.run(out, err);
    else if (c_plot->parsed()) plot.run(out);
  } catch (const Error &e) {
    err << "knock: error[" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const io::json::exception &e) {
    err << "knock: error[format]: " << e.what() << '\n';
    return exit_code(ErrorKind::Format);
  } catch (const std::exception &e) {
    err << "knock: error[numeric]: " << e.what() << '\n';
    return 4;
  }
  return 0;
}

}  // namespace knock::cli
