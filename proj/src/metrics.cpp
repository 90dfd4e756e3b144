#include "perfopt/metrics.hpp"

#include <charconv>
#include <ostream>
#include <sstream>

namespace perfopt {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

RunTrace start_trace(const std::string& algorithm, const GroundTruth& oracle) {
  RunTrace trace;
  trace.algorithm = algorithm;
  const Optimum& opt = oracle.optimum();
  trace.optimum_value = opt.value;
  trace.optimum_exact = opt.exact;
  trace.oracle_resolution = opt.grid_resolution;
  return trace;
}

void record_deploy(RunTrace& trace, const Deployment& deployment,
                   const GroundTruth& oracle) {
  TraceRecord rec;
  rec.step = trace.records.size() + 1;
  rec.theta = deployment.theta;
  rec.pr = oracle.performative_risk(deployment.theta);
  rec.inst_regret = rec.pr - trace.optimum_value;
  rec.cum_regret =
      (trace.records.empty() ? 0.0 : trace.records.back().cum_regret) + rec.inst_regret;
  rec.depth = deployment.depth;
  rec.index = deployment.index;
  rec.samples = deployment.samples;
  trace.records.push_back(std::move(rec));
  trace.cumulative_regret = trace.records.back().cum_regret;
}

RunTrace build_trace(const RunResult& run, const GroundTruth& oracle) {
  RunTrace trace = start_trace(run.algorithm, oracle);
  trace.records.reserve(run.deployments.size());
  for (const auto& d : run.deployments) record_deploy(trace, d, oracle);
  trace.theta = run.theta;
  trace.seconds = run.seconds;
  if (!run.theta.empty()) {
    trace.final_pr = oracle.performative_risk(run.theta);
    trace.simple_regret = trace.final_pr - trace.optimum_value;
  }
  return trace;
}

void write_trace_csv(std::ostream& out, const RunTrace& trace) {
  const std::size_t dim = trace.records.empty() ? trace.theta.size()
                                                : trace.records.front().theta.size();
  out << "step";
  for (std::size_t k = 0; k < dim; ++k) out << ",theta_" << k;
  out << ",pr,inst_regret,cum_regret,depth,cell_index,samples\n";
  for (const auto& r : trace.records) {
    out << r.step;
    for (double v : r.theta) out << ',' << format_double(v);
    out << ',' << format_double(r.pr) << ',' << format_double(r.inst_regret) << ','
        << format_double(r.cum_regret) << ',' << r.depth << ',' << r.index << ','
        << r.samples << '\n';
  }
}

std::string trace_csv(const RunTrace& trace) {
  std::ostringstream os;
  write_trace_csv(os, trace);
  return os.str();
}

}  // namespace perfopt
