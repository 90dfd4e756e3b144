#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "perfopt/environment.hpp"
#include "perfopt/run.hpp"

namespace perfopt {

struct TraceRecord {
  std::size_t step = 0;  // 1-based
  Point theta;
  double pr = 0.0;
  double inst_regret = 0.0;
  double cum_regret = 0.0;
  long depth = -1;
  std::string index;
  std::size_t samples = 0;
};

// Ground-truth view of a run. Built after the optimizer has finished so the
// oracle never runs inside the timed region.
struct RunTrace {
  std::string algorithm;
  std::vector<TraceRecord> records;
  Point theta;  // returned decision
  double final_pr = 0.0;
  double simple_regret = 0.0;
  double cumulative_regret = 0.0;
  double seconds = 0.0;
  double optimum_value = 0.0;
  bool optimum_exact = true;
  std::size_t oracle_resolution = 0;

  std::size_t deployments() const { return records.size(); }
};

RunTrace start_trace(const std::string& algorithm, const GroundTruth& oracle);

// Appends one record priced against oracle.optimum().
void record_deploy(RunTrace& trace, const Deployment& deployment,
                   const GroundTruth& oracle);

RunTrace build_trace(const RunResult& run, const GroundTruth& oracle);

// step,theta_0,theta_1,...,pr,inst_regret,cum_regret,depth,cell_index,samples
void write_trace_csv(std::ostream& out, const RunTrace& trace);
std::string trace_csv(const RunTrace& trace);

// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace perfopt
