#ifndef KNOCK_CLI_HPP_
#define KNOCK_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace knock::cli {

// Runs one subcommand (extract, acf, fit, thresholds, classify, simulate,
// plotdata). args excludes the program name. Returns the process exit
// status: 0 ok, 2 usage, 3 format, 4 numeric/degeneracy. Failures print a
// single "knock: error[<kind>]: <message>" line on `err`.
int dispatch(const std::vector<std::string> &args, std::ostream &out,
             std::ostream &err);

}  // namespace knock::cli

#endif  // KNOCK_CLI_HPP_
