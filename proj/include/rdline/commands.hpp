#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "rdline/config.hpp"

namespace rdline {

struct CommandOptions {
  int jobs = 1;
  bool verify = false;
};

/// Names accepted by run_command.
const std::vector<std::string>& command_names();

/// Writes the CSV for one subcommand: a `#` block echoing the resolved
/// config, a header row, then data rows. Throws Error on numerical failure
/// and InvalidArgument for an unknown command.
void run_command(std::string_view name, const RunConfig& config, const CommandOptions& options, std::ostream& out);

}  // namespace rdline
