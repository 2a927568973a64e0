#pragma once

#include <iosfwd>
#include <vector>

#include "magflow/anosov.hpp"
#include "magflow/config.hpp"

namespace magflow {

// 0 for NumericallyAnosov and NotAnosov, 2 for Inconclusive.
int exit_code_for(Verdict v);

// Classifies the configured model and writes report.json, summary.txt and
// orbit_<id>.csv into the output directory.  Returns the exit status.
int run(const RunConfig& cfg, std::ostream& log, int verbosity = 0);

struct SweepPoint {
  double parameter = 0.0;
  AnosovReport report;
};

// Classifies the model with its magnetic intensity scaled by each grid value.
std::vector<SweepPoint> run_sweep(const RunConfig& cfg);

// Runs the sweep and writes sweep.csv, report.json and summary.txt.  Returns 2
// if any grid point is Inconclusive, 0 otherwise.
int sweep(const RunConfig& cfg, std::ostream& log, int verbosity = 0);

}  // namespace magflow
