#pragma once

#include <chrono>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "perfopt/partition.hpp"

namespace perfopt {

// Budget formula yields no usable depth (h_max = 0).
class BudgetTooSmall : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One deployment as seen by the optimizer. Tree algorithms fill depth/index
// with the cell whose representative was deployed; grid algorithms use
// depth = -1 and the arm number as index.
struct Deployment {
  Point theta;
  long depth = -1;
  std::string index;
  std::size_t samples = 0;
};

struct RunResult {
  std::string algorithm;
  Point theta;            // returned decision, domain coordinates
  double estimate = 0.0;  // the optimizer's own value for theta
  std::vector<Deployment> deployments;
  std::size_t budget = 0;
  double seconds = 0.0;
};

// Hard cap on deployments.
class Budget {
 public:
  explicit Budget(std::size_t total) : total_(total) {}

  bool exhausted() const { return used_ >= total_; }
  std::size_t used() const { return used_; }
  std::size_t total() const { return total_; }
  std::size_t remaining() const { return total_ - used_; }
  // Takes one deployment if available.
  bool take() {
    if (exhausted()) return false;
    ++used_;
    return true;
  }

 private:
  std::size_t total_;
  std::size_t used_ = 0;
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace perfopt
