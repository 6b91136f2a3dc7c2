#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "run_config.hpp"

namespace gdfm::cli {

/// Checksums of the files a run reads, keyed by setting name.
std::map<std::string, std::string> input_checksums(const RunConfig& config);

void run_estimate(const RunConfig& config, std::ostream& log);
void run_calibrate(const RunConfig& config, std::ostream& log);
void run_simulate(const RunConfig& config, std::ostream& log);
void run_montecarlo(const RunConfig& config, std::ostream& log);
void run_decompose(const RunConfig& config, std::ostream& log);
void run_report(const RunConfig& config, std::ostream& log);

}  // namespace gdfm::cli
