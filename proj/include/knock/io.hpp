#ifndef KNOCK_IO_HPP_
#define KNOCK_IO_HPP_

#include <filesystem>
#include <iosfwd>
#include <string>

#include "json.hpp"

#include "knock/dataset.hpp"
#include "knock/distributions.hpp"
#include "knock/gof.hpp"
#include "knock/knockctl.hpp"
#include "knock/simloop.hpp"

namespace knock::io {

using nlohmann::json;

// Shortest text that reads back to the same double.
std::string format_double(double v);

json to_json(const Model &m);
Model model_from_json(const json &j);

json to_json(const Thresholds &t);
Thresholds thresholds_from_json(const json &j);

json to_json(const StateBank &bank);
StateBank bank_from_json(const json &j);

json to_json(const EngineModel &engine);
EngineModel engine_from_json(const json &j);

json to_json(const FitReport &r, const Thresholds *thresholds);

// Reads a JSON document; FormatError on missing file or bad syntax.
json read_json(const std::filesystem::path &path);
void write_json(const std::filesystem::path &path, const json &j);

// KI CSV: optional "# key=value" metadata lines, header "cycle,ki_bar", rows.
void write_ki_csv(std::ostream &out, const KIDataset &data);
KIDataset read_ki_csv(std::istream &in, const std::string &label = {});
KIDataset load_ki_csv(const std::filesystem::path &path);

// Trajectory CSV: cycle,ki_bar,spark_btdc,delta_deg,p1..pK.
void write_trajectory_csv(std::ostream &out, const Trajectory &t);

// Opens for writing; "-" is not special. Throws FormatError on failure.
std::ofstream open_output(const std::filesystem::path &path);

}  // namespace knock::io

#endif  // KNOCK_IO_HPP_
