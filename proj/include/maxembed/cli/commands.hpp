#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "maxembed/cli/config.hpp"

namespace maxembed::cli {

/// Each command validates, computes, writes its files under config.out_dir and returns an exit code.
int cmd_cost(const RunConfig& config, std::ostream& log);
int cmd_bound(const RunConfig& config, std::ostream& log);
int cmd_simulate(const RunConfig& config, std::ostream& log);
int cmd_verify(const RunConfig& config, std::ostream& log);
int cmd_gap(const RunConfig& config, std::ostream& log);
int cmd_check_family(const RunConfig& config, std::ostream& log);

/// Full command line entry point: `maxembed <subcommand> [--config PATH] [--out DIR] ...`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace maxembed::cli
