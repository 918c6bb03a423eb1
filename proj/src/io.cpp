#include "knock/io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "knock/error.hpp"

namespace knock::io {

namespace {

double number(const json &j, const char *key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw FormatError(std::string("missing numeric field '") + key + "'");
  }
  return j.at(key).get<double>();
}

json mixture_fields(const MixtureParams &p) {
  return {{"a", p.a},
          {"mu1", p.comp1.mu},
          {"sigma1", p.comp1.sigma},
          {"mu2", p.comp2.mu},
          {"sigma2", p.comp2.sigma}};
}

MixtureParams mixture_from_fields(const json &j) {
  return {number(j, "a"),
          {number(j, "mu1"), number(j, "sigma1")},
          {number(j, "mu2"), number(j, "sigma2")}};
}

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

json to_json(const Model &m) {
  return std::visit(
      [](const auto &p) -> json {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, LognormalParams>) {
          return {{"family", "lognormal"}, {"mu1", p.mu}, {"sigma1", p.sigma}};
        } else {
          json j = mixture_fields(p);
          j["family"] = "mixture";
          return j;
        }
      },
      m);
}

Model model_from_json(const json &j) {
  if (!j.is_object() || !j.contains("family") || !j.at("family").is_string()) {
    throw FormatError("model JSON needs a \"family\" string");
  }
  const std::string fam = j.at("family").get<std::string>();
  Model m;
  if (fam == "lognormal") {
    m = LognormalParams{number(j, "mu1"), number(j, "sigma1")};
  } else if (fam == "mixture") {
    m = mixture_from_fields(j);
  } else {
    throw FormatError("unknown model family '" + fam + "'");
  }
  try {
    validate(m);
  } catch (const DomainError &e) {
    throw FormatError(std::string("invalid model: ") + e.what());
  }
  return m;
}

json to_json(const Thresholds &t) {
  return {{"family", to_string(t.family)},
          {"n", t.n},
          {"reps", t.reps},
          {"r2_5th", t.r2_5th},
          {"ks_95th", t.ks_95th},
          {"seed", t.seed},
          {"redraws", t.redraws},
          {"truth", to_json(t.truth)}};
}

Thresholds thresholds_from_json(const json &j) {
  if (!j.is_object()) throw FormatError("thresholds JSON must be an object");
  Thresholds t;
  try {
    t.family = parse_family(j.at("family").get<std::string>());
    t.n = j.at("n").get<Eigen::Index>();
    t.reps = j.at("reps").get<Eigen::Index>();
    t.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception &e) {
    throw FormatError(std::string("thresholds JSON: ") + e.what());
  } catch (const UsageError &e) {
    throw FormatError(e.what());
  }
  t.r2_5th = number(j, "r2_5th");
  t.ks_95th = number(j, "ks_95th");
  if (j.contains("redraws")) t.redraws = j.at("redraws").get<Eigen::Index>();
  if (j.contains("truth")) t.truth = model_from_json(j.at("truth"));
  if (!(t.r2_5th > 0.0 && t.r2_5th <= 1.0) || !(t.ks_95th > 0.0 && t.ks_95th < 1.0)) {
    throw FormatError("thresholds out of range");
  }
  return t;
}

json to_json(const StateBank &bank) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < bank.size(); ++i) {
    const auto &s = bank.states[static_cast<std::size_t>(i)];
    json j = mixture_fields(s.model);
    j["label"] = s.label;
    j["spark_anchor_btdc"] = s.spark_anchor;
    j["weight_deg"] = bank.action_weights[i];
    arr.push_back(std::move(j));
  }
  return arr;
}

StateBank bank_from_json(const json &j) {
  if (!j.is_array()) throw FormatError("state bank JSON must be an array");
  StateBank bank;
  bank.action_weights.resize(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const auto &e : j) {
    if (!e.contains("label") || !e.at("label").is_string()) {
      throw FormatError("state bank entry needs a \"label\" string");
    }
    bank.states.push_back({e.at("label").get<std::string>(), mixture_from_fields(e),
                           number(e, "spark_anchor_btdc")});
    bank.action_weights[i++] = number(e, "weight_deg");
  }
  try {
    bank.validate();
  } catch (const Error &err) {
    throw FormatError(std::string("invalid state bank: ") + err.what());
  }
  return bank;
}

json to_json(const EngineModel &engine) {
  json anchors = json::array();
  for (const auto &a : engine.anchors) {
    json j = mixture_fields(a.model);
    j["spark_btdc"] = a.spark;
    anchors.push_back(std::move(j));
  }
  return {{"seed", engine.seed}, {"anchors", anchors}};
}

EngineModel engine_from_json(const json &j) {
  if (!j.is_object() || !j.contains("anchors") || !j.at("anchors").is_array()) {
    throw FormatError("engine JSON needs an \"anchors\" array");
  }
  EngineModel m;
  if (j.contains("seed")) m.seed = j.at("seed").get<std::uint64_t>();
  for (const auto &e : j.at("anchors")) {
    m.anchors.push_back({number(e, "spark_btdc"), mixture_from_fields(e)});
  }
  try {
    m.validate();
  } catch (const Error &err) {
    throw FormatError(std::string("invalid engine model: ") + err.what());
  }
  return m;
}

json to_json(const FitReport &r, const Thresholds *thresholds) {
  json j = {{"family", to_string(family_of(r.model))},
            {"model", to_json(r.model)},
            {"log_likelihood", r.log_likelihood},
            {"scores", {{"r2", r.scores.r2}, {"ks", r.scores.ks}}}};
  if (thresholds) {
    j["thresholds"] = to_json(*thresholds);
    j["verdict"] = {{"r2_pass", r.r2_pass},
                    {"ks_pass", r.ks_pass},
                    {"accept", r.accept}};
  }
  return j;
}

json read_json(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error &e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::ofstream open_output(const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  return out;
}

void write_json(const std::filesystem::path &path, const json &j) {
  auto out = open_output(path);
  out << j.dump(2) << '\n';
}

void write_ki_csv(std::ostream &out, const KIDataset &data) {
  for (const auto &[k, v] : data.metadata) out << "# " << k << '=' << v << '\n';
  out << "cycle,ki_bar\n";
  for (Eigen::Index i = 0; i < data.ki.size(); ++i) {
    out << i << ',' << format_double(data.ki[i]) << '\n';
  }
}

KIDataset read_ki_csv(std::istream &in, const std::string &label) {
  KIDataset d;
  d.label = label;
  std::vector<double> values;
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
        d.metadata[trim(body.substr(0, eq))] = trim(body.substr(eq + 1));
      }
      continue;
    }
    if (s.rfind("cycle", 0) == 0) continue;
    const auto comma = s.find(',');
    if (comma == std::string::npos) {
      throw FormatError("KI CSV line " + std::to_string(line) + ": expected cycle,ki_bar");
    }
    const std::string field = trim(s.substr(comma + 1));
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
      throw FormatError("KI CSV line " + std::to_string(line) + ": bad value '" +
                        field + "'");
    }
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw FormatError("KI CSV line " + std::to_string(line) +
                        ": knock intensity must be positive");
    }
    values.push_back(v);
  }
  d.ki = Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<Eigen::Index>(values.size()));
  return d;
}

KIDataset load_ki_csv(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  KIDataset d = read_ki_csv(in, path.stem().string());
  if (d.ki.size() == 0) throw FormatError(path.string() + ": no KI rows");
  return d;
}

void write_trajectory_csv(std::ostream &out, const Trajectory &t) {
  const Eigen::Index k = t.empty() ? 0 : t.front().posterior.size();
  out << "cycle,ki_bar,spark_btdc,delta_deg";
  for (Eigen::Index j = 1; j <= k; ++j) out << ",p" << j;
  out << '\n';
  for (const auto &r : t) {
    out << r.cycle << ',' << format_double(r.ki) << ',' << format_double(r.spark) << ','
        << format_double(r.applied_delta);
    for (Eigen::Index j = 0; j < r.posterior.size(); ++j) {
      out << ',' << format_double(r.posterior[j]);
    }
    out << '\n';
  }
}

}  // namespace knock::io
